#include "dictdescent/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "dictdescent/errors.hpp"
#include "dictdescent/rng.hpp"

namespace dictdescent {

const char* to_string(DictionaryKind kind) {
  switch (kind) {
    case DictionaryKind::finite_atoms: return "finite-atoms";
    case DictionaryKind::coordinate_cone: return "coordinate-cone";
    case DictionaryKind::subspace_union: return "subspace-union";
    case DictionaryKind::full_space: return "full-space";
  }
  return "?";
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::formula: return "formula";
    case Provenance::certified: return "certified";
    case Provenance::unknown: return "unknown";
  }
  return "?";
}

namespace {

Eigen::VectorXd sqrt_weights(const Space& space) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(space.dim()));
  for (std::size_t i = 0; i < space.dim(); ++i)
    w[static_cast<Eigen::Index>(i)] = std::sqrt(space.weight(i));
  return w;
}

double weighted_dot(const Space& sp, std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += sp.weight(i) * a[i] * b[i];
  return acc;
}

NormingConstant certify(const Dictionary& dict, int trials, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const SpaceVector phi(dict.space(), rng.normals(dict.space()->dim()));
    const double sig = sigma_witness(dict, phi).sigma;
    const double dn = dual_norm(phi);
    if (!(sig > 0.0)) return {std::numeric_limits<double>::infinity(), Provenance::unknown};
    worst = std::max(worst, dn / sig);
  }
  return {1.05 * worst, Provenance::certified};
}

}  // namespace

// ------------------------------------------------------------ construction

FiniteAtomData make_finite_atoms(const SpacePtr& space, const std::vector<std::vector<double>>& raw) {
  if (raw.empty()) throw ParameterError("a finite dictionary needs at least one atom");
  const std::size_t n = space->dim();
  FiniteAtomData out;
  std::vector<std::size_t> kept_index;
  for (std::size_t j = 0; j < raw.size(); ++j) {
    if (raw[j].size() != n)
      throw DimensionMismatch("atom " + std::to_string(j) + " has wrong length");
    SpaceVector v(space, raw[j]);
    const double nv = norm(v);
    if (!(nv > 0.0)) throw DictionaryDegenerate("atom " + std::to_string(j) + " is zero", {j});
    v = (1.0 / nv) * v;
    bool dup = false;
    for (const auto& k : out.atoms) {
      const double cosv = weighted_dot(*space, v.coeffs(), k.coeffs()) /
                          std::sqrt(weighted_dot(*space, v.coeffs(), v.coeffs()) *
                                    weighted_dot(*space, k.coeffs(), k.coeffs()));
      if (std::abs(cosv) > 1.0 - 1e-8) {
        dup = true;
        break;
      }
    }
    if (dup) {
      out.dropped.push_back(j);
      continue;
    }
    out.atoms.push_back(std::move(v));
    kept_index.push_back(j);
  }
  const std::size_t m = out.atoms.size();
  if (m > n)
    throw ParameterError("more independent atoms (" + std::to_string(m) + ") than dimensions (" +
                         std::to_string(n) + ")");
  out.atom_matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < n; ++i)
      out.atom_matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = out.atoms[j][i];

  const Eigen::MatrixXd kw = sqrt_weights(*space).asDiagonal() * out.atom_matrix;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(kw, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  out.sigma_min = sv[sv.size() - 1];
  if (out.sigma_min < 1e-10) {
    const Eigen::VectorXd v = svd.matrixV().col(sv.size() - 1);
    std::vector<std::size_t> bad;
    for (Eigen::Index j = 0; j < v.size(); ++j)
      if (std::abs(v[j]) > 1e-3) bad.push_back(kept_index[static_cast<std::size_t>(j)]);
    std::string names;
    for (auto b : bad) names += (names.empty() ? "" : ", ") + std::to_string(b);
    throw DictionaryDegenerate("atoms are linearly dependent (sigma_min = " +
                                   std::to_string(out.sigma_min) + "); involved atoms: " + names,
                               bad);
  }
  return out;
}

FiniteAtomData axis_atoms(const SpacePtr& space) {
  std::vector<std::vector<double>> raw(space->dim(), std::vector<double>(space->dim(), 0.0));
  for (std::size_t i = 0; i < space->dim(); ++i) raw[i][i] = 1.0;
  FiniteAtomData d = make_finite_atoms(space, raw);
  d.axes = true;
  return d;
}

FiniteAtomData build_neural_atoms(const SpacePtr& space,
                                  const std::vector<std::vector<double>>& points,
                                  const std::vector<std::pair<std::vector<double>, double>>& params,
                                  Activation activation) {
  if (params.empty()) throw ParameterError("at least one feature parameter is required");
  if (points.size() != space->dim())
    throw DimensionMismatch("number of points must equal the space dimension");
  if (params.size() > points.size())
    throw ParameterError("more features than points");
  std::vector<std::vector<double>> raw;
  for (const auto& [w, b] : params) {
    std::vector<double> f(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].size() != w.size()) throw DimensionMismatch("feature weight length mismatch");
      const double z = std::inner_product(w.begin(), w.end(), points[i].begin(), b);
      f[i] = activation == Activation::tanh ? std::tanh(z) : 1.0 / (1.0 + std::exp(-z));
    }
    raw.push_back(std::move(f));
  }
  return make_finite_atoms(space, raw);
}

double norming_constant_finite(const FiniteAtomData& data) {
  if (!(data.sigma_min > 0.0)) throw ParameterError("sigma_min must be positive");
  return std::sqrt(static_cast<double>(data.atoms.size())) / data.sigma_min;
}

double cone_constant(double c, double q) {
  if (!(c > 0.0 && c < 1.0)) throw ParameterError("cone parameter c must lie in (0, 1)");
  return 1.0 / std::min(c, std::pow(1.0 - std::pow(c, q), 1.0 / q));
}

SubspaceUnionData coordinate_blocks(const SpacePtr& space,
                                    const std::vector<std::vector<std::size_t>>& blocks) {
  if (blocks.empty()) throw ParameterError("subspace union needs at least one subspace");
  SubspaceUnionData out;
  std::vector<int> hits(space->dim(), 0);
  for (const auto& b : blocks) {
    if (b.empty()) throw ParameterError("empty coordinate block");
    std::vector<std::size_t> sorted(b);
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ParameterError("coordinate block lists an index twice");
    for (auto i : sorted) {
      if (i >= space->dim()) throw DimensionMismatch("coordinate block index out of range");
      ++hits[i];
    }
    Subspace s;
    s.coords = std::move(sorted);
    out.subspaces.push_back(std::move(s));
  }
  out.direct_sum = std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });
  return out;
}

SubspaceUnionData subspace_bases(const SpacePtr& space, const std::vector<Eigen::MatrixXd>& bases) {
  if (std::abs(space->q() - 2.0) > 1e-12)
    throw ParameterError("general subspace bases need q = 2; use coordinate blocks otherwise");
  if (bases.empty()) throw ParameterError("subspace union needs at least one subspace");
  const auto n = static_cast<Eigen::Index>(space->dim());
  const Eigen::VectorXd sw = sqrt_weights(*space);
  SubspaceUnionData out;
  Eigen::Index total = 0;
  for (const auto& b : bases) {
    if (b.rows() != n || b.cols() < 1) throw DimensionMismatch("subspace basis has wrong shape");
    const Eigen::MatrixXd scaled = sw.asDiagonal() * b;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_qr(scaled);
    rank_qr.setThreshold(1e-10);
    if (rank_qr.rank() < b.cols()) throw ParameterError("subspace basis is rank deficient");
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(scaled);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, b.cols());
    Subspace s;
    s.basis = sw.cwiseInverse().asDiagonal() * q;
    total += b.cols();
    out.subspaces.push_back(std::move(s));
  }
  bool orthogonal = true;
  for (std::size_t i = 0; i < out.subspaces.size() && orthogonal; ++i)
    for (std::size_t j = i + 1; j < out.subspaces.size(); ++j) {
      const Eigen::MatrixXd& bi = out.subspaces[i].basis;
      const Eigen::MatrixXd& bj = out.subspaces[j].basis;
      const Eigen::MatrixXd cross = bi.transpose() * (sw.cwiseAbs2().asDiagonal() * bj);
      if (cross.cwiseAbs().maxCoeff() > 1e-10) {
        orthogonal = false;
        break;
      }
    }
  out.direct_sum = orthogonal && total == n;
  return out;
}

NormingConstant subspace_norming_constant(const SpacePtr& space, const SubspaceUnionData& data,
                                          int trials, std::uint64_t seed) {
  if (data.direct_sum)
    return {static_cast<double>(data.subspaces.size()), Provenance::formula};
  const auto n = static_cast<Eigen::Index>(space->dim());
  Eigen::Index cols = 0;
  for (const auto& s : data.subspaces) cols += static_cast<Eigen::Index>(s.dim());
  Eigen::MatrixXd all = Eigen::MatrixXd::Zero(n, cols);
  Eigen::Index at = 0;
  for (const auto& s : data.subspaces) {
    if (s.coords.empty()) {
      all.middleCols(at, s.basis.cols()) = s.basis;
      at += s.basis.cols();
    } else {
      for (auto i : s.coords) all(static_cast<Eigen::Index>(i), at++) = 1.0;
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(all);
  qr.setThreshold(1e-10);
  if (qr.rank() < n)
    throw NormingImpossible("subspaces span only a " + std::to_string(qr.rank()) +
                            "-dimensional part of the space; no norming constant exists");
  const Dictionary probe = Dictionary::subspaces(space, data, 0);
  return certify(probe, trials, seed);
}

Dictionary Dictionary::finite_atoms(SpacePtr space, FiniteAtomData data) {
  const std::size_t n = space->dim();
  const std::size_t m = data.atoms.size();
  NormingConstant c;
  if (data.axes) {
    // |phi|_{q'} <= n^(1/q') max_i w_i^(1/q') |phi_i| by Hoelder
    c = {std::pow(static_cast<double>(n), 1.0 / space->conjugate()), Provenance::formula};
  } else if (m == n && std::abs(space->q() - 2.0) <= 1e-12) {
    c = {norming_constant_finite(data), Provenance::formula};
  } else if (m == n) {
    Dictionary probe(space, std::move(data), {});
    c = certify(probe, 10000, 0);
    return Dictionary(std::move(space), std::move(probe.data_), c);
  } else {
    c = {std::numeric_limits<double>::infinity(), Provenance::unknown};
  }
  return Dictionary(std::move(space), std::move(data), c);
}

Dictionary Dictionary::cone(SpacePtr space, double c) {
  const double q = space->q();
  if (space->dim() < 2) throw ParameterError("coordinate cone needs dimension >= 2");
  return Dictionary(std::move(space), ConeData{c, q}, {cone_constant(c, q), Provenance::formula});
}

Dictionary Dictionary::subspaces(SpacePtr space, SubspaceUnionData data, int trials,
                                 std::uint64_t seed) {
  for (const auto& s : data.subspaces)
    if (s.coords.empty() && s.basis.rows() != static_cast<Eigen::Index>(space->dim()))
      throw DimensionMismatch("subspace basis has wrong row count");
  if (trials <= 0) return Dictionary(std::move(space), std::move(data), {});
  const NormingConstant c = subspace_norming_constant(space, data, trials, seed);
  return Dictionary(std::move(space), std::move(data), c);
}

Dictionary Dictionary::full_space(SpacePtr space) {
  return Dictionary(std::move(space), FullSpaceData{}, {1.0, Provenance::formula});
}

DictionaryKind Dictionary::kind() const {
  return std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, FiniteAtomData>) return DictionaryKind::finite_atoms;
        else if constexpr (std::is_same_v<T, ConeData>) return DictionaryKind::coordinate_cone;
        else if constexpr (std::is_same_v<T, SubspaceUnionData>) return DictionaryKind::subspace_union;
        else return DictionaryKind::full_space;
      },
      data_);
}

// ---------------------------------------------------------------- queries

namespace {

struct Candidate {
  double sigma;
  std::vector<double> w;  // oriented so that pair(g, w) = sigma
};

Candidate subspace_candidate(const Space& sp, const Subspace& s, const SpaceVector& g) {
  const std::size_t n = sp.dim();
  std::vector<double> w(n, 0.0);
  if (!s.coords.empty()) {
    std::vector<double> gb, wb;
    for (auto i : s.coords) {
      gb.push_back(g[i]);
      wb.push_back(sp.weight(i));
    }
    const double sig = lq::norm(gb, wb, sp.conjugate());
    if (sig > 0.0) {
      const auto u = lq::maximizer(gb, wb, sp.q());
      for (std::size_t k = 0; k < s.coords.size(); ++k) w[s.coords[k]] = u[k];
    } else {
      w[s.coords.front()] = 1.0 / std::pow(sp.weight(s.coords.front()), 1.0 / sp.q());
    }
    return {sig, std::move(w)};
  }
  Eigen::VectorXd wg(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) wg[static_cast<Eigen::Index>(i)] = sp.weight(i) * g[i];
  const Eigen::VectorXd c = s.basis.transpose() * wg;
  const double sig = c.norm();
  const Eigen::VectorXd v = sig > 0.0 ? Eigen::VectorXd(s.basis * (c / sig))
                                      : Eigen::VectorXd(s.basis.col(0));
  return {sig, std::vector<double>(v.data(), v.data() + v.size())};
}

Candidate cone_candidate(const Space& sp, const ConeData& cd, const SpaceVector& g) {
  const std::size_t n = sp.dim();
  const double q = sp.q(), qd = sp.conjugate();
  const double w1 = sp.weight(0);
  const double a_head = std::pow(w1, 1.0 / qd) * std::abs(g[0]);
  std::span<const double> gt = g.coeffs().subspan(1);
  std::span<const double> wt = sp.weights().subspan(1);
  const double b_tail = lq::norm(gt, wt, qd);

  double a = 1.0;
  if (b_tail > 0.0) {
    const double denom = std::pow(std::pow(a_head, qd) + std::pow(b_tail, qd), 1.0 / q);
    a = std::clamp(std::pow(a_head, qd - 1.0) / denom, cd.c, 1.0);
  }
  const double tail_mass = std::pow(std::max(0.0, 1.0 - std::pow(a, q)), 1.0 / q);
  std::vector<double> w(n, 0.0);
  w[0] = (g[0] < 0.0 ? -1.0 : 1.0) * a / std::pow(w1, 1.0 / q);
  if (tail_mass > 0.0) {
    if (b_tail > 0.0) {
      const auto u = lq::maximizer(gt, wt, q);
      for (std::size_t i = 1; i < n; ++i) w[i] = tail_mass * u[i - 1];
    } else {
      w[1] = tail_mass / std::pow(sp.weight(1), 1.0 / q);
    }
  }
  return {a_head * a + b_tail * tail_mass, std::move(w)};
}

}  // namespace

Witness sigma_witness(const Dictionary& dict, const SpaceVector& g) {
  const Space& sp = *dict.space();
  if (!sp.compatible(g.space())) throw DimensionMismatch("functional and dictionary spaces differ");
  if (!g.all_finite()) throw InvalidInput("non-finite functional");
  Candidate best = std::visit(
      [&](const auto& d) -> Candidate {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, FiniteAtomData>) {
          std::size_t arg = 0;
          double val = -1.0;
          for (std::size_t j = 0; j < d.atoms.size(); ++j) {
            const double v = std::abs(pair(g, d.atoms[j]));
            if (v > val) {
              val = v;
              arg = j;
            }
          }
          const double sgn = pair(g, d.atoms[arg]) < 0.0 ? -1.0 : 1.0;
          return {val, (sgn * d.atoms[arg]).data()};
        } else if constexpr (std::is_same_v<T, ConeData>) {
          return cone_candidate(sp, d, g);
        } else if constexpr (std::is_same_v<T, SubspaceUnionData>) {
          Candidate out{-1.0, {}};
          for (const auto& s : d.subspaces) {
            Candidate c = subspace_candidate(sp, s, g);
            if (c.sigma > out.sigma) out = std::move(c);
          }
          return out;
        } else {
          const double dn = dual_norm(g);
          if (dn == 0.0) {
            std::vector<double> w(sp.dim(), 0.0);
            w[0] = 1.0 / std::pow(sp.weight(0), 1.0 / sp.q());
            return {0.0, std::move(w)};
          }
          return {dn, dual_maximizer(g).data()};
        }
      },
      dict.data());
  // descent orientation
  for (auto& x : best.w) x = -x;
  return {best.sigma, SpaceVector(dict.space(), std::move(best.w))};
}

bool membership(const Dictionary& dict, const SpaceVector& x) {
  const Space& sp = *dict.space();
  if (!sp.compatible(x.space())) throw DimensionMismatch("vector and dictionary spaces differ");
  const double nx = norm(x);
  if (nx == 0.0) return true;
  constexpr double tol = 1e-10;
  return std::visit(
      [&](const auto& d) -> bool {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, FiniteAtomData>) {
          for (const auto& k : d.atoms) {
            const double t = weighted_dot(sp, x.coeffs(), k.coeffs()) /
                             weighted_dot(sp, k.coeffs(), k.coeffs());
            if (norm(x.axpy(-t, k)) <= tol * nx) return true;
          }
          return false;
        } else if constexpr (std::is_same_v<T, ConeData>) {
          return std::pow(sp.weight(0), 1.0 / sp.q()) * std::abs(x[0]) >= (d.c - tol) * nx;
        } else if constexpr (std::is_same_v<T, SubspaceUnionData>) {
          for (const auto& s : d.subspaces) {
            std::vector<double> r(x.data());
            if (!s.coords.empty()) {
              for (auto i : s.coords) r[i] = 0.0;
            } else {
              Eigen::VectorXd wx(static_cast<Eigen::Index>(sp.dim()));
              for (std::size_t i = 0; i < sp.dim(); ++i)
                wx[static_cast<Eigen::Index>(i)] = sp.weight(i) * x[i];
              const Eigen::VectorXd proj = s.basis * (s.basis.transpose() * wx);
              for (std::size_t i = 0; i < sp.dim(); ++i) r[i] -= proj[static_cast<Eigen::Index>(i)];
            }
            if (lq::norm(r, sp.weights(), sp.q()) <= tol * nx) return true;
          }
          return false;
        } else {
          return true;
        }
      },
      dict.data());
}

// ------------------------------------------------------------ brute force

namespace {

// parametrization of (a piece of) the unit slice
struct SlicePiece {
  std::size_t dim;
  std::function<SpaceVector(const std::vector<double>&)> embed;
  std::function<std::vector<double>(Rng&)> sample;
};

std::vector<SlicePiece> slice_pieces(const Dictionary& dict) {
  const SpacePtr& sp = dict.space();
  const std::size_t n = sp->dim();
  std::vector<SlicePiece> out;
  auto normalized = [sp](std::vector<double> v) {
    SpaceVector x(sp, std::move(v));
    const double nx = norm(x);
    return nx > 0.0 ? (1.0 / nx) * x : SpaceVector::basis(sp, 0);
  };
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ConeData>) {
          const double c = d.c, q = sp->q();
          SlicePiece p;
          p.dim = n;
          p.embed = [sp, c, q, n](const std::vector<double>& par) {
            const double a = std::clamp(par[0], c, 1.0);
            std::vector<double> x(n, 0.0);
            x[0] = a / std::pow(sp->weight(0), 1.0 / q);
            std::span<const double> tail(par.data() + 1, n - 1);
            const double tn = lq::norm(tail, sp->weights().subspan(1), q);
            const double mass = std::pow(std::max(0.0, 1.0 - std::pow(a, q)), 1.0 / q);
            for (std::size_t i = 1; i < n; ++i)
              x[i] = tn > 0.0 ? mass * par[i] / tn : 0.0;
            return SpaceVector(sp, std::move(x));
          };
          p.sample = [c, n](Rng& rng) {
            std::vector<double> par = rng.normals(n);
            par[0] = rng.uniform(c, 1.0);
            return par;
          };
          out.push_back(std::move(p));
        } else if constexpr (std::is_same_v<T, SubspaceUnionData>) {
          for (const auto& s : d.subspaces) {
            SlicePiece p;
            p.dim = s.dim();
            p.embed = [s, n, normalized](const std::vector<double>& par) {
              std::vector<double> x(n, 0.0);
              if (!s.coords.empty()) {
                for (std::size_t k = 0; k < s.coords.size(); ++k) x[s.coords[k]] = par[k];
              } else {
                const Eigen::VectorXd v =
                    s.basis * Eigen::Map<const Eigen::VectorXd>(par.data(), s.basis.cols());
                x.assign(v.data(), v.data() + v.size());
              }
              return normalized(std::move(x));
            };
            const std::size_t dim = s.dim();
            p.sample = [dim](Rng& rng) { return rng.normals(dim); };
            out.push_back(std::move(p));
          }
        } else if constexpr (std::is_same_v<T, FullSpaceData>) {
          SlicePiece p;
          p.dim = n;
          p.embed = [normalized](const std::vector<double>& par) { return normalized(par); };
          p.sample = [n](Rng& rng) { return rng.normals(n); };
          out.push_back(std::move(p));
        }
      },
      dict.data());
  return out;
}

}  // namespace

SliceSearch brute_force_sup(const Dictionary& dict, const SpaceVector& phi, int samples,
                            std::uint64_t seed, bool refine) {
  if (const auto* fa = std::get_if<FiniteAtomData>(&dict.data())) {
    SliceSearch out{-1.0, fa->atoms.front()};
    for (const auto& k : fa->atoms) {
      const double v = std::abs(pair(phi, k));
      if (v > out.best) out = {v, k};
    }
    return out;
  }
  Rng rng(seed);
  const auto pieces = slice_pieces(dict);
  SliceSearch out{-1.0, SpaceVector::zeros(dict.space())};
  const int per_piece = std::max(1, samples / static_cast<int>(pieces.size()));
  for (const auto& piece : pieces) {
    std::vector<double> best_par;
    double best = -1.0;
    for (int k = 0; k < per_piece; ++k) {
      auto par = piece.sample(rng);
      const double v = std::abs(pair(phi, piece.embed(par)));
      if (v > best) {
        best = v;
        best_par = std::move(par);
      }
    }
    if (refine) {
      double step = 0.1;
      for (int it = 0; it < 4000 && step > 1e-13; ++it) {
        std::vector<double> cand(best_par);
        for (auto& x : cand) x += step * rng.normal();
        const double v = std::abs(pair(phi, piece.embed(cand)));
        if (v > best) {
          best = v;
          best_par = std::move(cand);
          step = std::min(step * 1.5, 1.0);
        } else {
          step *= 0.98;
        }
      }
    }
    if (best > out.best) out = {best, piece.embed(best_par)};
  }
  return out;
}

NormingReport verify_norming(const Dictionary& dict, double c, int trials, std::uint64_t seed,
                             int n_small) {
  if (trials < 100) throw ParameterError("norming verification needs at least 100 trials");
  NormingReport r;
  r.constant = c;
  r.trials = trials;
  Rng rng(seed);
  const SpacePtr& sp = dict.space();
  for (int t = 0; t < trials; ++t) {
    const SpaceVector phi(sp, rng.normals(sp->dim()));
    const double sig = sigma_witness(dict, phi).sigma;
    const double dn = dual_norm(phi);
    const double ratio = sig > 0.0 ? dn / sig : std::numeric_limits<double>::infinity();
    r.worst_ratio = std::max(r.worst_ratio, ratio);
    if (dn > c * sig * (1.0 + 1e-12)) ++r.violations;
  }
  bool brute_ok = true;
  if (static_cast<int>(sp->dim()) <= n_small) {
    for (int k = 0; k < 10; ++k) {
      const SpaceVector phi(sp, rng.normals(sp->dim()));
      const double sig = sigma_witness(dict, phi).sigma;
      const auto found = brute_force_sup(dict, phi, 20000, rng.next());
      ++r.brute_checked;
      r.brute_max_excess = std::max(r.brute_max_excess, found.best / sig - 1.0);
      r.brute_max_shortfall = std::max(r.brute_max_shortfall, 1.0 - found.best / sig);
    }
    brute_ok = r.brute_max_excess <= 1e-9 && r.brute_max_shortfall <= 0.01;
  }
  r.passed = r.violations == 0 && brute_ok;
  return r;
}

}  // namespace dictdescent
