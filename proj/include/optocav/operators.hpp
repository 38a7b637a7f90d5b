#pragma once

// Ladder and Pauli operators, embedding into composite spaces, and the
// initial states used by the scenarios (Fock, coherent, thermal, products).
//
// Basis conventions:
//   atom:   index 0 = |e>, index 1 = |g>, so sigma_z|e> = +|e>
//   bosons: index n = |n>, n = 0 .. truncation-1
//   composite ordering: atom, photon, then motional modes.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "optocav/hilbert.hpp"

namespace optocav {

enum class ModeLabel { photon, mirror_phonon, atom_com, mirror_mode };

inline const char* to_string(ModeLabel l) {
  switch (l) {
    case ModeLabel::photon: return "photon";
    case ModeLabel::mirror_phonon: return "mirror_phonon";
    case ModeLabel::atom_com: return "atom_com";
    case ModeLabel::mirror_mode: return "mirror_mode";
  }
  return "?";
}

struct ModeSpec {
  ModeLabel label = ModeLabel::photon;
  std::size_t truncation = 2;
};

enum class AtomLevel { excited = 0, ground = 1 };

inline constexpr double kTruncationTolerance = 1e-8;

namespace detail {

inline void require_dynamic_mode(const ModeSpec& spec) {
  if (spec.truncation < 2) {
    throw InvalidArgument(std::string("mode ") + to_string(spec.label) +
                          ": truncation must be >= 2");
  }
}

}  // namespace detail

inline OperatorMatrix annihilation(const ModeSpec& spec) {
  detail::require_dynamic_mode(spec);
  const auto d = static_cast<Eigen::Index>(spec.truncation);
  Matrix a = Matrix::Zero(d, d);
  for (Eigen::Index n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return OperatorMatrix(SpaceDims({spec.truncation}), std::move(a));
}

inline OperatorMatrix creation(const ModeSpec& spec) { return annihilation(spec).adjoint(); }

inline OperatorMatrix number_operator(const ModeSpec& spec) {
  detail::require_dynamic_mode(spec);
  const auto d = static_cast<Eigen::Index>(spec.truncation);
  Matrix n = Matrix::Zero(d, d);
  for (Eigen::Index k = 0; k < d; ++k) n(k, k) = static_cast<double>(k);
  return OperatorMatrix(SpaceDims({spec.truncation}), std::move(n), true);
}

enum class Pauli { z, plus, minus, x };

inline OperatorMatrix pauli(Pauli which) {
  Matrix m = Matrix::Zero(2, 2);
  bool herm = true;
  switch (which) {
    case Pauli::z: m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    case Pauli::x: m(0, 1) = 1.0; m(1, 0) = 1.0; break;
    case Pauli::plus: m(0, 1) = 1.0; herm = false; break;   // |e><g|
    case Pauli::minus: m(1, 0) = 1.0; herm = false; break;  // |g><e|
  }
  return OperatorMatrix(SpaceDims({2}), std::move(m), herm);
}

// |e><e| on the bare atom.
inline OperatorMatrix excited_projector() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  return OperatorMatrix(SpaceDims({2}), std::move(m), true);
}

// Identity on every factor except `slot`, where `op` acts.
inline OperatorMatrix embed(const OperatorMatrix& op, std::size_t slot, const SpaceDims& dims) {
  if (slot >= dims.count()) {
    throw InvalidArgument("embed: slot " + std::to_string(slot) + " out of range");
  }
  if (op.dims().total() != dims.factor(slot) || op.dims().count() != 1) {
    throw InvalidArgument("embed: operator dimension does not match factor " + std::to_string(slot));
  }
  std::size_t before = 1;
  std::size_t after = 1;
  for (std::size_t k = 0; k < slot; ++k) before *= dims.factor(k);
  for (std::size_t k = slot + 1; k < dims.count(); ++k) after *= dims.factor(k);

  const auto nb = static_cast<Eigen::Index>(before);
  const auto na = static_cast<Eigen::Index>(after);
  const auto d = op.dim();
  const auto n = static_cast<Eigen::Index>(dims.total());
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index b = 0; b < nb; ++b) {
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const Complex v = op(i, j);
        if (v == Complex(0.0, 0.0)) continue;
        const Eigen::Index r0 = (b * d + i) * na;
        const Eigen::Index c0 = (b * d + j) * na;
        for (Eigen::Index a = 0; a < na; ++a) out(r0 + a, c0 + a) = v;
      }
    }
  }
  return OperatorMatrix(dims, std::move(out), op.hermitian_hint());
}

inline QuantumState fock_state(std::size_t n, const ModeSpec& spec) {
  if (n >= spec.truncation) {
    throw InvalidArgument("fock_state: |" + std::to_string(n) + "> outside truncation " +
                          std::to_string(spec.truncation));
  }
  Vector v = Vector::Zero(static_cast<Eigen::Index>(spec.truncation));
  v(static_cast<Eigen::Index>(n)) = 1.0;
  return QuantumState::pure(SpaceDims({spec.truncation}), std::move(v));
}

inline QuantumState atom_state(AtomLevel level) {
  Vector v = Vector::Zero(2);
  v(static_cast<Eigen::Index>(level)) = 1.0;
  return QuantumState::pure(SpaceDims({2}), std::move(v));
}

// d = ceil(|alpha|^2 + 8|alpha| + 10)
inline std::size_t coherent_truncation(Complex alpha) {
  const double r = std::abs(alpha);
  return static_cast<std::size_t>(std::ceil(r * r + 8.0 * r + 10.0));
}

// Poisson weight beyond the truncation, summed directly (no 1 - sum cancellation).
inline double coherent_tail_weight(Complex alpha, std::size_t truncation) {
  const double mean = std::norm(alpha);
  if (mean == 0.0) return 0.0;
  // log p_n = -mean + n ln(mean) - ln n!
  double n = static_cast<double>(truncation);
  double logp = -mean + n * std::log(mean) - std::lgamma(n + 1.0);
  double tail = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const double p = std::exp(logp);
    tail += p;
    if (n > mean && p < 1e-18 * std::max(tail, 1e-300)) break;
    n += 1.0;
    logp += std::log(mean) - std::log(n);
  }
  return tail;
}

struct CoherentState {
  QuantumState state;
  double norm_deficit;  // 1 - sum_{n<d} |c_n|^2 before renormalization
};

inline CoherentState coherent_state(Complex alpha, const ModeSpec& spec,
                                    double tolerance = kTruncationTolerance) {
  detail::require_dynamic_mode(spec);
  const double tail = coherent_tail_weight(alpha, spec.truncation);
  if (tail > tolerance) {
    throw InvalidArgument("coherent_state: truncation " + std::to_string(spec.truncation) +
                          " leaves tail weight " + std::to_string(tail) + " above tolerance");
  }
  const auto d = static_cast<Eigen::Index>(spec.truncation);
  Vector c = Vector::Zero(d);
  c(0) = std::exp(-0.5 * std::norm(alpha));
  for (Eigen::Index n = 1; n < d; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  c /= c.norm();
  return {QuantumState::pure(SpaceDims({spec.truncation}), std::move(c)), tail};
}

// rho_T = sum_n exp(-beta*mode_freq*n)|n><n| / Z over the truncated basis.
// beta and mode_freq must use reciprocal units (beta*mode_freq dimensionless).
inline QuantumState thermal_state(double beta, double mode_freq, const ModeSpec& spec) {
  detail::require_dynamic_mode(spec);
  if (!(beta > 0.0)) throw InvalidArgument("thermal_state: beta must be positive");
  if (!(mode_freq > 0.0)) throw InvalidArgument("thermal_state: mode frequency must be positive");
  const double x = beta * mode_freq;
  const auto d = static_cast<Eigen::Index>(spec.truncation);
  Eigen::VectorXd w(d);
  for (Eigen::Index n = 0; n < d; ++n) w(n) = std::exp(-x * static_cast<double>(n));
  w /= w.sum();
  Matrix rho = Matrix::Zero(d, d);
  rho.diagonal() = w.cast<Complex>();
  return QuantumState::mixed(SpaceDims({spec.truncation}), std::move(rho));
}

// Tensor product in list order. Any mixed part promotes the result to mixed.
inline QuantumState product_state(const std::vector<QuantumState>& parts,
                                  std::size_t max_total = kDefaultMaxDimension) {
  if (parts.empty()) throw InvalidArgument("product_state: no parts");
  std::vector<std::size_t> factors;
  bool all_pure = true;
  for (const auto& p : parts) {
    factors.insert(factors.end(), p.dims().factors().begin(), p.dims().factors().end());
    all_pure = all_pure && p.is_pure();
  }
  SpaceDims dims(std::move(factors), max_total);
  if (all_pure) {
    Vector v = parts.front().vector();
    for (std::size_t i = 1; i < parts.size(); ++i) {
      const Vector& w = parts[i].vector();
      Vector next(v.size() * w.size());
      for (Eigen::Index k = 0; k < v.size(); ++k) next.segment(k * w.size(), w.size()) = v(k) * w;
      v = std::move(next);
    }
    return QuantumState::pure(std::move(dims), std::move(v));
  }
  Matrix rho = parts.front().density_matrix();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const Matrix r = parts[i].density_matrix();
    Matrix next(rho.rows() * r.rows(), rho.cols() * r.cols());
    for (Eigen::Index a = 0; a < rho.rows(); ++a)
      for (Eigen::Index b = 0; b < rho.cols(); ++b)
        next.block(a * r.rows(), b * r.cols(), r.rows(), r.cols()) = rho(a, b) * r;
    rho = std::move(next);
  }
  return QuantumState::mixed(std::move(dims), std::move(rho));
}

}  // namespace optocav
