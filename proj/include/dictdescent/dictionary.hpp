#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dictdescent/space.hpp"

namespace dictdescent {

enum class DictionaryKind { finite_atoms, coordinate_cone, subspace_union, full_space };
enum class Provenance { formula, certified, unknown };
enum class Activation { tanh, sigmoid };

const char* to_string(DictionaryKind kind);
const char* to_string(Provenance p);

struct NormingConstant {
  double value = 0.0;
  Provenance provenance = Provenance::unknown;
};

struct FiniteAtomData {
  std::vector<SpaceVector> atoms;     // unit norm
  Eigen::MatrixXd atom_matrix;        // n x m, columns are atom coefficients
  double sigma_min = 0.0;             // of W^(1/2) K
  std::vector<std::size_t> dropped;   // input indices removed as near-duplicates
  bool axes = false;                  // atoms are the scaled coordinate vectors
};

struct ConeData {
  double c = 0.5;
  double q = 2.0;
};

struct Subspace {
  // coordinate block (any q) when `coords` is non-empty; otherwise a basis
  // orthonormal in the weighted inner product (q = 2 only)
  std::vector<std::size_t> coords;
  Eigen::MatrixXd basis;
  std::size_t dim() const { return coords.empty() ? static_cast<std::size_t>(basis.cols()) : coords.size(); }
};

struct SubspaceUnionData {
  std::vector<Subspace> subspaces;
  bool direct_sum = false;  // mutually orthogonal (or disjoint blocks) and spanning
};

struct FullSpaceData {};

class Dictionary {
 public:
  using Data = std::variant<FiniteAtomData, ConeData, SubspaceUnionData, FullSpaceData>;

  static Dictionary finite_atoms(SpacePtr space, FiniteAtomData data);
  static Dictionary cone(SpacePtr space, double c);
  static Dictionary subspaces(SpacePtr space, SubspaceUnionData data, int trials = 10000,
                              std::uint64_t seed = 0);
  static Dictionary full_space(SpacePtr space);

  DictionaryKind kind() const;
  const SpacePtr& space() const { return space_; }
  const Data& data() const { return data_; }
  const NormingConstant& norming() const { return norming_; }

 private:
  Dictionary(SpacePtr space, Data data, NormingConstant c)
      : space_(std::move(space)), data_(std::move(data)), norming_(c) {}

  SpacePtr space_;
  Data data_;
  NormingConstant norming_;
};

// normalizes the given coefficient vectors, drops near-duplicates and
// checks linear independence
FiniteAtomData make_finite_atoms(const SpacePtr& space, const std::vector<std::vector<double>>& raw);
// e_i / w_i^(1/q)
FiniteAtomData axis_atoms(const SpacePtr& space);
// feature vectors sigma(<w, x_i> + b) over the points x_i, one atom per (w, b)
FiniteAtomData build_neural_atoms(const SpacePtr& space,
                                  const std::vector<std::vector<double>>& points,
                                  const std::vector<std::pair<std::vector<double>, double>>& params,
                                  Activation activation);

double norming_constant_finite(const FiniteAtomData& data);
// 1 / min{c, (1 - c^q)^(1/q)}
double cone_constant(double c, double q);

SubspaceUnionData coordinate_blocks(const SpacePtr& space,
                                    const std::vector<std::vector<std::size_t>>& blocks);
// columns of each matrix span one subspace; requires q = 2
SubspaceUnionData subspace_bases(const SpacePtr& space, const std::vector<Eigen::MatrixXd>& bases);
NormingConstant subspace_norming_constant(const SpacePtr& space, const SubspaceUnionData& data,
                                          int trials = 10000, std::uint64_t seed = 0);

struct Witness {
  double sigma = 0.0;
  SpaceVector w;  // unit, in the dictionary, pair(g, w) = -sigma
};

Witness sigma_witness(const Dictionary& dict, const SpaceVector& g);
bool membership(const Dictionary& dict, const SpaceVector& x);

struct SliceSearch {
  double best = 0.0;    // max |pair(phi, z)| found
  SpaceVector point;    // where
};

// Best |pair(phi, z)| over random points z of the unit slice, polished by a
// local random search; the finite atom slice is enumerated exactly.
SliceSearch brute_force_sup(const Dictionary& dict, const SpaceVector& phi, int samples,
                            std::uint64_t seed, bool refine = true);

struct NormingReport {
  double constant = 0.0;
  int trials = 0;
  int violations = 0;
  double worst_ratio = 0.0;
  int brute_checked = 0;             // functionals cross-checked by slice sampling
  double brute_max_excess = 0.0;     // max(brute / sigma - 1), must stay ~0
  double brute_max_shortfall = 0.0;  // max(1 - brute / sigma)
  bool passed = false;
};

NormingReport verify_norming(const Dictionary& dict, double c, int trials, std::uint64_t seed,
                             int n_small = 6);

}  // namespace dictdescent
