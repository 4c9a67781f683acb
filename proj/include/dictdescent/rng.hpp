#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dictdescent {

// Seeded generator with a fixed, documented algorithm:
//   engine  : std::mt19937_64 (sequence fixed by the C++ standard)
//   uniform : (x >> 11) * 2^-53, in [0, 1)
//   normal  : Box-Muller on two uniforms, cosine branch only
// std::*_distribution is avoided because its output differs between
// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::size_t index(std::size_t n);  // uniform in [0, n)
  std::vector<double> normals(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace dictdescent
