#pragma once

#include <cstdint>
#include <vector>

#include "optocav/hilbert.hpp"

namespace optocav::testing {

// splitmix64; fixed seeds keep every property run reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }
  Complex complex(double scale = 1.0) { return {uniform(-scale, scale), uniform(-scale, scale)}; }

 private:
  std::uint64_t state_;
};

inline Matrix random_matrix(Rng& rng, Eigen::Index n, double scale = 1.0) {
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rng.complex(scale);
  return m;
}

inline Matrix random_hermitian(Rng& rng, Eigen::Index n, double scale = 1.0) {
  const Matrix m = random_matrix(rng, n, scale);
  return 0.5 * (m + m.adjoint());
}

inline Vector random_unit_vector(Rng& rng, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.complex();
  return v / v.norm();
}

inline Matrix random_density(Rng& rng, Eigen::Index n) {
  const Matrix a = random_matrix(rng, n);
  Matrix rho = a * a.adjoint();
  rho /= rho.trace().real();
  return 0.5 * (rho + rho.adjoint());
}

inline std::vector<std::size_t> random_factors(Rng& rng, std::size_t count, std::size_t max_dim) {
  std::vector<std::size_t> f(count);
  for (auto& x : f) x = 2 + rng.index(max_dim - 1);
  return f;
}

}  // namespace optocav::testing
