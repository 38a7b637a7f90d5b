#pragma once

// Time propagation under e^{-iHt}, observables and entropy trajectories.
//
// Hermitian operators go through one spectral decomposition and every grid
// time is evaluated from it. Non-Hermitian operators (decay shifts) are
// stepped with a single exp(-iH dt) applied repeatedly.

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "optocav/hilbert.hpp"
#include "optocav/operators.hpp"

namespace optocav {

struct TimeGrid {
  double t_start = 0.0;
  double t_end = 1.0;
  std::size_t n_steps = 2;

  void validate() const {
    if (!std::isfinite(t_start) || !std::isfinite(t_end) || !(t_end > t_start)) {
      throw InvalidArgument("TimeGrid: t_end must exceed t_start");
    }
    if (n_steps < 2) throw InvalidArgument("TimeGrid: n_steps must be >= 2");
  }
  double step() const { return (t_end - t_start) / static_cast<double>(n_steps - 1); }
  double time(std::size_t i) const {
    return i + 1 == n_steps ? t_end : t_start + static_cast<double>(i) * step();
  }
  std::vector<double> times() const {
    std::vector<double> t(n_steps);
    for (std::size_t i = 0; i < n_steps; ++i) t[i] = time(i);
    return t;
  }
};

struct Trajectory {
  TimeGrid grid;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::map<std::string, std::string> metadata;
  std::vector<std::string> warnings;

  void add_column(std::string name, std::vector<double> values) {
    if (values.size() != grid.n_steps) {
      throw InvalidArgument("Trajectory: column " + name + " has " + std::to_string(values.size()) +
                            " entries, expected " + std::to_string(grid.n_steps));
    }
    names.push_back(std::move(name));
    columns.push_back(std::move(values));
  }

  const std::vector<double>& column(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return columns[i];
    throw InvalidArgument("Trajectory: no column " + name);
  }
};

// Relative single-step norm growth that counts as numerical breakdown.
inline constexpr double kNormJumpLimit = 0.10;

// Spectral propagator for a Hermitian operator.
class SpectralPropagator {
 public:
  explicit SpectralPropagator(const OperatorMatrix& h) : dims_(h.dims()), eig_(eig_hermitian(h)) {}

  QuantumState evolve(const QuantumState& s0, double t) const {
    if (!(s0.dims() == dims_)) throw InvalidArgument("evolve: dimension mismatch");
    const Vector phase = phases(t);
    if (s0.is_pure()) {
      Vector c = eig_.vectors.adjoint() * s0.vector();
      return QuantumState::pure(dims_, eig_.vectors * phase.cwiseProduct(c), QuantumState::Check::relaxed);
    }
    const Matrix r = eig_.vectors.adjoint() * s0.matrix() * eig_.vectors;
    const Matrix rt = phase.asDiagonal() * r * phase.conjugate().asDiagonal();
    return QuantumState::mixed(dims_, eig_.vectors * rt * eig_.vectors.adjoint(),
                               QuantumState::Check::relaxed);
  }

  // Same as evolve() at each time. A mixed state is factored once as
  // rho = X X^dag over its positive eigenvalues and X is propagated.
  std::vector<QuantumState> evolve_many(const QuantumState& s0, const std::vector<double>& times) const {
    if (!(s0.dims() == dims_)) throw InvalidArgument("evolve: dimension mismatch");
    std::vector<QuantumState> out;
    out.reserve(times.size());
    if (s0.is_pure()) {
      for (double t : times) out.push_back(evolve(s0, t));
      return out;
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> es(s0.matrix());
    if (es.info() != Eigen::Success) throw NumericalError("evolve: density matrix factorization failed");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()(i) > 0.0) keep.push_back(i);
    Matrix x(s0.matrix().rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      x.col(static_cast<Eigen::Index>(k)) = std::sqrt(es.eigenvalues()(keep[k])) * es.eigenvectors().col(keep[k]);
    }
    const Matrix c = eig_.vectors.adjoint() * x;
    for (double t : times) {
      const Matrix y = eig_.vectors * (phases(t).asDiagonal() * c);
      out.push_back(QuantumState::mixed(dims_, y * y.adjoint(), QuantumState::Check::relaxed));
    }
    return out;
  }

  const EigenSystem& eigensystem() const noexcept { return eig_; }

 private:
  Vector phases(double t) const {
    Vector ph(eig_.values.size());
    for (Eigen::Index i = 0; i < ph.size(); ++i) ph(i) = std::polar(1.0, -eig_.values(i) * t);
    return ph;
  }

  SpaceDims dims_;
  EigenSystem eig_;
};

namespace detail {

inline QuantumState apply(const Matrix& u, const QuantumState& s) {
  if (s.is_pure()) return QuantumState::pure(s.dims(), u * s.vector(), QuantumState::Check::relaxed);
  return QuantumState::mixed(s.dims(), u * s.matrix() * u.adjoint(), QuantumState::Check::relaxed);
}

inline Matrix step_propagator(const OperatorMatrix& h, double dt) {
  return expm(OperatorMatrix(h.dims(), Complex(0.0, -dt) * h.entries())).entries();
}

}  // namespace detail

// Snapshots at every grid time; `initial` is the state at t = 0.
inline std::vector<QuantumState> evolve(const OperatorMatrix& h, const QuantumState& initial,
                                        const TimeGrid& grid) {
  grid.validate();
  if (!(h.dims() == initial.dims())) throw InvalidArgument("evolve: dimension mismatch");
  std::vector<QuantumState> out;
  out.reserve(grid.n_steps);
  if (h.hermitian_hint()) {
    return SpectralPropagator(h).evolve_many(initial, grid.times());
  }
  QuantumState s = grid.t_start == 0.0 ? initial
                                       : detail::apply(detail::step_propagator(h, grid.t_start), initial);
  const Matrix u = detail::step_propagator(h, grid.step());
  out.push_back(s);
  for (std::size_t i = 1; i < grid.n_steps; ++i) {
    const double before = s.norm();
    s = detail::apply(u, s);
    const double after = s.norm();
    if (!std::isfinite(after) || after > before * (1.0 + kNormJumpLimit)) {
      throw NumericalError("evolve: norm jumped from " + std::to_string(before) + " to " +
                           std::to_string(after) + " at step " + std::to_string(i));
    }
    out.push_back(s);
  }
  return out;
}

// <|e><e|> on the atom factor; not renormalized.
inline double excited_population(const QuantumState& s, std::size_t atom_slot) {
  if (atom_slot >= s.dims().count() || s.dims().factor(atom_slot) != 2) {
    throw InvalidArgument("excited_population: factor " + std::to_string(atom_slot) + " is not a two-level atom");
  }
  double pe = 0.0;
  for (std::size_t i = 0; i < s.dims().total(); ++i) {
    if (s.dims().digits(i)[atom_slot] == static_cast<std::size_t>(AtomLevel::excited)) pe += s.population(i);
  }
  return pe;
}

// Population in basis states where any of `mode_slots` sits within
// `boundary_band` of its truncation edge.
inline double leakage(const QuantumState& s, std::size_t boundary_band,
                      const std::vector<std::size_t>& mode_slots) {
  double w = 0.0;
  for (std::size_t i = 0; i < s.dims().total(); ++i) {
    const auto dg = s.dims().digits(i);
    bool edge = false;
    for (std::size_t k : mode_slots) {
      if (k >= s.dims().count()) throw InvalidArgument("leakage: slot out of range");
      if (dg[k] + boundary_band >= s.dims().factor(k)) edge = true;
    }
    if (edge) w += s.population(i);
  }
  return w;
}

// Every factor treated as a truncated mode.
inline double leakage(const QuantumState& s, std::size_t boundary_band) {
  std::vector<std::size_t> all(s.dims().count());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  return leakage(s, boundary_band, all);
}

inline constexpr std::size_t kDefaultBoundaryBand = 2;
inline constexpr double kLeakageWarning = 1e-4;

// S(t) of the reduced state on `keep`, plus leakage and norm per grid time.
inline Trajectory entropy_trajectory(const OperatorMatrix& h, const QuantumState& initial,
                                     const TimeGrid& grid, const std::vector<std::size_t>& keep,
                                     std::size_t boundary_band = kDefaultBoundaryBand) {
  const auto states = evolve(h, initial, grid);
  Trajectory tr;
  tr.grid = grid;
  std::vector<double> s(grid.n_steps), leak(grid.n_steps), norm(grid.n_steps);
  double leak_max = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    s[i] = von_neumann_entropy(partial_trace(states[i], std::span<const std::size_t>(keep)));
    leak[i] = leakage(states[i], boundary_band);
    norm[i] = states[i].norm();
    leak_max = std::max(leak_max, leak[i]);
  }
  tr.add_column("t", grid.times());
  tr.add_column("S", std::move(s));
  tr.add_column("leakage", std::move(leak));
  tr.add_column("norm", std::move(norm));
  if (leak_max > kLeakageWarning) {
    tr.warnings.push_back("truncation leakage " + std::to_string(leak_max) + " exceeds " +
                          std::to_string(kLeakageWarning));
  }
  return tr;
}

}  // namespace optocav
