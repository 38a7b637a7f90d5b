#pragma once

// Dense complex linear algebra over composite, finite-dimensional Hilbert
// spaces. Tensor factors are ordered; the first factor is the most
// significant digit of the flattened basis index.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "optocav/errors.hpp"

namespace optocav {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr std::size_t kDefaultMaxDimension = 16384;

// Entropy ignores eigenvalues below this floor (0 ln 0 = 0).
inline constexpr double kEigenvalueFloor = 1e-12;

namespace detail {

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_defect(const Matrix& m) {
  return max_abs(m - m.adjoint());
}

inline bool all_finite(const Matrix& m) {
  return m.allFinite();
}

}  // namespace detail

class SpaceDims {
 public:
  explicit SpaceDims(std::vector<std::size_t> factors,
                     std::size_t max_total = kDefaultMaxDimension)
      : factors_(std::move(factors)) {
    if (factors_.empty()) throw InvalidArgument("SpaceDims: factor list is empty");
    total_ = 1;
    for (std::size_t f : factors_) {
      if (f == 0) throw InvalidArgument("SpaceDims: factor dimension must be >= 1");
      if (total_ > max_total / f) {
        throw CapacityError("total Hilbert-space dimension exceeds the cap of " +
                            std::to_string(max_total) + " (truncations too large)");
      }
      total_ *= f;
    }
    if (total_ > max_total) {
      throw CapacityError("total Hilbert-space dimension " + std::to_string(total_) +
                          " exceeds the cap of " + std::to_string(max_total));
    }
  }

  const std::vector<std::size_t>& factors() const noexcept { return factors_; }
  std::size_t factor(std::size_t i) const { return factors_.at(i); }
  std::size_t count() const noexcept { return factors_.size(); }
  std::size_t total() const noexcept { return total_; }

  SpaceDims concat(const SpaceDims& other,
                   std::size_t max_total = kDefaultMaxDimension) const {
    std::vector<std::size_t> f = factors_;
    f.insert(f.end(), other.factors_.begin(), other.factors_.end());
    return SpaceDims(std::move(f), max_total);
  }

  // Per-factor digits of a flattened index.
  std::vector<std::size_t> digits(std::size_t index) const {
    std::vector<std::size_t> d(factors_.size());
    for (std::size_t k = factors_.size(); k-- > 0;) {
      d[k] = index % factors_[k];
      index /= factors_[k];
    }
    return d;
  }

  std::size_t flatten(std::span<const std::size_t> digits) const {
    if (digits.size() != factors_.size()) throw InvalidArgument("SpaceDims: digit count mismatch");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < factors_.size(); ++k) {
      if (digits[k] >= factors_[k]) throw InvalidArgument("SpaceDims: digit out of range");
      idx = idx * factors_[k] + digits[k];
    }
    return idx;
  }
  std::size_t flatten(std::initializer_list<std::size_t> digits) const {
    return flatten(std::span<const std::size_t>(digits.begin(), digits.size()));
  }

  friend bool operator==(const SpaceDims& a, const SpaceDims& b) {
    return a.factors_ == b.factors_;
  }

 private:
  std::vector<std::size_t> factors_;
  std::size_t total_ = 1;
};

class OperatorMatrix {
 public:
  OperatorMatrix(SpaceDims dims, Matrix entries, bool hermitian_hint = false)
      : dims_(std::move(dims)), entries_(std::move(entries)), hermitian_(hermitian_hint) {
    const auto n = static_cast<Eigen::Index>(dims_.total());
    if (entries_.rows() != n || entries_.cols() != n) {
      throw InvalidArgument("OperatorMatrix: entries are " + std::to_string(entries_.rows()) +
                            "x" + std::to_string(entries_.cols()) + ", expected " +
                            std::to_string(n) + "x" + std::to_string(n));
    }
    if (hermitian_) {
      const double scale = detail::max_abs(entries_);
      if (detail::hermiticity_defect(entries_) > 1e-12 * scale) {
        throw InvalidArgument("OperatorMatrix: hermitian_hint set on a non-Hermitian matrix");
      }
    }
  }

  static OperatorMatrix identity(const SpaceDims& dims) {
    const auto n = static_cast<Eigen::Index>(dims.total());
    return OperatorMatrix(dims, Matrix::Identity(n, n), true);
  }

  static OperatorMatrix zero(const SpaceDims& dims) {
    const auto n = static_cast<Eigen::Index>(dims.total());
    return OperatorMatrix(dims, Matrix::Zero(n, n), true);
  }

  const SpaceDims& dims() const noexcept { return dims_; }
  const Matrix& entries() const noexcept { return entries_; }
  bool hermitian_hint() const noexcept { return hermitian_; }
  Eigen::Index dim() const noexcept { return entries_.rows(); }
  Complex operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

  OperatorMatrix adjoint() const { return OperatorMatrix(dims_, entries_.adjoint(), hermitian_); }

  OperatorMatrix operator+(const OperatorMatrix& o) const {
    require_same_dims(o);
    return OperatorMatrix(dims_, entries_ + o.entries_, hermitian_ && o.hermitian_);
  }
  OperatorMatrix operator-(const OperatorMatrix& o) const {
    require_same_dims(o);
    return OperatorMatrix(dims_, entries_ - o.entries_, hermitian_ && o.hermitian_);
  }
  // Matrix product. The hint is dropped; products of Hermitian operators
  // generally are not Hermitian.
  OperatorMatrix operator*(const OperatorMatrix& o) const {
    require_same_dims(o);
    return OperatorMatrix(dims_, entries_ * o.entries_, false);
  }
  OperatorMatrix scaled(Complex s) const {
    return OperatorMatrix(dims_, s * entries_, hermitian_ && s.imag() == 0.0);
  }
  OperatorMatrix with_hint(bool hermitian) const { return OperatorMatrix(dims_, entries_, hermitian); }

 private:
  void require_same_dims(const OperatorMatrix& o) const {
    if (!(dims_ == o.dims_)) throw InvalidArgument("OperatorMatrix: dimension mismatch");
  }

  SpaceDims dims_;
  Matrix entries_;
  bool hermitian_;
};

inline OperatorMatrix operator*(Complex s, const OperatorMatrix& a) { return a.scaled(s); }
inline OperatorMatrix operator*(double s, const OperatorMatrix& a) { return a.scaled(Complex(s, 0.0)); }

// Commutator [a, b].
inline OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b) {
  return OperatorMatrix(a.dims(), a.entries() * b.entries() - b.entries() * a.entries());
}

class QuantumState {
 public:
  enum class Kind { pure, mixed };

  // Relaxed construction is for states produced by non-unitary evolution or
  // partial traces of them: norm/trace may sit below one.
  enum class Check { strict, relaxed };

  static QuantumState pure(SpaceDims dims, Vector v, Check check = Check::strict) {
    if (v.size() != static_cast<Eigen::Index>(dims.total())) {
      throw InvalidArgument("QuantumState: vector length does not match dims");
    }
    const double n = v.squaredNorm();
    if (!std::isfinite(n)) throw NumericalError("QuantumState: non-finite amplitudes");
    if (check == Check::strict && std::abs(n - 1.0) > 1e-9) {
      throw InvalidArgument("QuantumState: pure state not normalized (norm^2 = " +
                            std::to_string(n) + ")");
    }
    if (check == Check::relaxed && n > 1.0 + 1e-9) {
      throw NumericalError("QuantumState: norm exceeds one (" + std::to_string(n) + ")");
    }
    return QuantumState(std::move(dims), Kind::pure, std::move(v), Matrix());
  }

  static QuantumState mixed(SpaceDims dims, Matrix rho, Check check = Check::strict) {
    const auto n = static_cast<Eigen::Index>(dims.total());
    if (rho.rows() != n || rho.cols() != n) {
      throw InvalidArgument("QuantumState: density matrix shape does not match dims");
    }
    if (!rho.allFinite()) throw NumericalError("QuantumState: non-finite density matrix");
    const double scale = std::max(1.0, detail::max_abs(rho));
    if (detail::hermiticity_defect(rho) > 1e-12 * scale) {
      throw InvalidArgument("QuantumState: density matrix is not Hermitian");
    }
    // Store the exactly Hermitian part.
    Matrix herm = 0.5 * (rho + rho.adjoint());
    const double tr = herm.trace().real();
    if (check == Check::strict) {
      if (std::abs(tr - 1.0) > 1e-9) {
        throw InvalidArgument("QuantumState: density matrix trace is " + std::to_string(tr));
      }
      Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success) throw NumericalError("QuantumState: eigensolver failed");
      if (es.eigenvalues().minCoeff() < -1e-10) {
        throw InvalidArgument("QuantumState: density matrix has a negative eigenvalue");
      }
    } else if (tr > 1.0 + 1e-9) {
      throw NumericalError("QuantumState: trace exceeds one (" + std::to_string(tr) + ")");
    }
    return QuantumState(std::move(dims), Kind::mixed, Vector(), std::move(herm));
  }

  Kind kind() const noexcept { return kind_; }
  bool is_pure() const noexcept { return kind_ == Kind::pure; }
  const SpaceDims& dims() const noexcept { return dims_; }

  const Vector& vector() const {
    if (kind_ != Kind::pure) throw InvalidArgument("QuantumState: not a pure state");
    return vec_;
  }
  const Matrix& matrix() const {
    if (kind_ != Kind::mixed) throw InvalidArgument("QuantumState: not a mixed state");
    return rho_;
  }

  // <psi|psi> for pure states, Tr(rho) for mixed ones.
  double norm() const { return is_pure() ? vec_.squaredNorm() : rho_.trace().real(); }

  Matrix density_matrix() const { return is_pure() ? Matrix(vec_ * vec_.adjoint()) : rho_; }

  QuantumState to_mixed() const {
    if (!is_pure()) return *this;
    return QuantumState(dims_, Kind::mixed, Vector(), vec_ * vec_.adjoint());
  }

  Complex expectation(const OperatorMatrix& op) const {
    if (!(op.dims() == dims_)) throw InvalidArgument("expectation: dimension mismatch");
    if (is_pure()) return vec_.dot(op.entries() * vec_);
    return (op.entries() * rho_).trace();
  }

  // Population of a single basis state.
  double population(std::size_t index) const {
    const auto i = static_cast<Eigen::Index>(index);
    return is_pure() ? std::norm(vec_(i)) : rho_(i, i).real();
  }

 private:
  QuantumState(SpaceDims dims, Kind kind, Vector v, Matrix rho)
      : dims_(std::move(dims)), kind_(kind), vec_(std::move(v)), rho_(std::move(rho)) {}

  SpaceDims dims_;
  Kind kind_;
  Vector vec_;
  Matrix rho_;
};

// Kronecker product; factor lists concatenate in argument order.
inline OperatorMatrix kron(const OperatorMatrix& a, const OperatorMatrix& b,
                           std::size_t max_total = kDefaultMaxDimension) {
  SpaceDims dims = a.dims().concat(b.dims(), max_total);
  const Eigen::Index ra = a.dim();
  const Eigen::Index rb = b.dim();
  Matrix out(ra * rb, ra * rb);
  for (Eigen::Index i = 0; i < ra; ++i) {
    for (Eigen::Index j = 0; j < ra; ++j) {
      out.block(i * rb, j * rb, rb, rb) = a(i, j) * b.entries();
    }
  }
  return OperatorMatrix(std::move(dims), std::move(out), a.hermitian_hint() && b.hermitian_hint());
}

struct EigenSystem {
  Eigen::VectorXd values;  // ascending
  Matrix vectors;          // columns are eigenvectors
};

inline EigenSystem eig_hermitian(const OperatorMatrix& h) {
  if (!h.hermitian_hint()) throw InvalidArgument("eig_hermitian: operator is not flagged Hermitian");
  if (!h.entries().allFinite()) throw InvalidArgument("eig_hermitian: non-finite entries");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.entries());
  if (es.info() != Eigen::Success) throw NumericalError("eig_hermitian: eigensolver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

// Matrix exponential (Pade scaling and squaring).
inline OperatorMatrix expm(const OperatorMatrix& a) {
  if (!a.entries().allFinite()) throw InvalidArgument("expm: non-finite entries");
  Matrix e = a.entries().exp();
  if (!e.allFinite()) throw NumericalError("expm: overflow");
  return OperatorMatrix(a.dims(), std::move(e));
}

namespace detail {

struct TraceSplit {
  std::vector<std::size_t> kept_factors;
  // rows: traced-out multi-index, columns: kept multi-index -> flattened full index
  std::vector<std::vector<int>> groups;
};

inline TraceSplit split_for_trace(const SpaceDims& dims, std::span<const std::size_t> keep_in) {
  std::vector<std::size_t> keep(keep_in.begin(), keep_in.end());
  std::sort(keep.begin(), keep.end());
  if (keep.empty()) throw InvalidArgument("partial_trace: keep set is empty");
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end()) {
    throw InvalidArgument("partial_trace: keep set has duplicates");
  }
  if (keep.back() >= dims.count()) throw InvalidArgument("partial_trace: factor index out of range");
  if (keep.size() == dims.count()) throw InvalidArgument("partial_trace: keep set covers every factor");

  std::vector<bool> kept(dims.count(), false);
  for (std::size_t k : keep) kept[k] = true;

  std::size_t n_keep = 1;
  std::size_t n_trace = 1;
  TraceSplit split;
  for (std::size_t k = 0; k < dims.count(); ++k) {
    if (kept[k]) {
      n_keep *= dims.factor(k);
      split.kept_factors.push_back(dims.factor(k));
    } else {
      n_trace *= dims.factor(k);
    }
  }
  split.groups.assign(n_trace, std::vector<int>(n_keep, 0));
  for (std::size_t full = 0; full < dims.total(); ++full) {
    const auto dg = dims.digits(full);
    std::size_t ki = 0;
    std::size_t ti = 0;
    for (std::size_t k = 0; k < dims.count(); ++k) {
      if (kept[k]) ki = ki * dims.factor(k) + dg[k];
      else ti = ti * dims.factor(k) + dg[k];
    }
    split.groups[ti][ki] = static_cast<int>(full);
  }
  return split;
}

}  // namespace detail

// Reduced state on the `keep` factors (kept in ascending index order).
inline QuantumState partial_trace(const QuantumState& s, std::span<const std::size_t> keep) {
  const auto split = detail::split_for_trace(s.dims(), keep);
  SpaceDims out_dims(split.kept_factors);
  const auto n_keep = static_cast<Eigen::Index>(out_dims.total());
  Matrix rho = Matrix::Zero(n_keep, n_keep);
  if (s.is_pure()) {
    const Vector& v = s.vector();
    Matrix psi(n_keep, static_cast<Eigen::Index>(split.groups.size()));
    for (std::size_t t = 0; t < split.groups.size(); ++t) {
      psi.col(static_cast<Eigen::Index>(t)) = v(split.groups[t]);
    }
    rho = psi * psi.adjoint();
  } else {
    const Matrix& full = s.matrix();
    for (const auto& g : split.groups) rho += full(g, g);
  }
  return QuantumState::mixed(std::move(out_dims), std::move(rho), QuantumState::Check::relaxed);
}

inline QuantumState partial_trace(const QuantumState& s, std::initializer_list<std::size_t> keep) {
  std::vector<std::size_t> k(keep);
  return partial_trace(s, std::span<const std::size_t>(k));
}

// S = -sum lambda ln lambda (natural log), eigenvalues below kEigenvalueFloor dropped.
inline double von_neumann_entropy(const QuantumState& rho) {
  if (rho.is_pure()) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("von_neumann_entropy: eigensolver failed");
  const Eigen::VectorXd& lam = es.eigenvalues();
  if (lam.minCoeff() < -1e-8) {
    throw NumericalError("von_neumann_entropy: negative eigenvalue " +
                         std::to_string(lam.minCoeff()) + " (corrupted state)");
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) > kEigenvalueFloor) s -= lam(i) * std::log(lam(i));
  }
  return std::max(s, 0.0);
}

}  // namespace optocav
