#pragma once

// Physical parameters, derived couplings and the regime-specific effective
// Hamiltonians of an atom inside a cavity whose end mirror vibrates.
//
// Unit system: hbar = 1 and every frequency is divided by the reference
// frequency omega0, so energies are in units of hbar*omega0 and times in
// units of 1/omega0. Lengths stay in meters and masses in kilograms.
// PhysicalParams itself is always SI (rad/s, kg, m).

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>

#include "optocav/hilbert.hpp"
#include "optocav/operators.hpp"

namespace optocav {

inline constexpr double kHbar = 1.054571817e-34;      // J s
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct PhysicalParams {
  double omega = 0.0;    // cavity angular frequency
  double Omega = 0.0;    // atomic transition frequency
  double g = 0.0;        // atom-field coupling
  double omega_m = 0.0;  // mirror vibration frequency
  double m = 0.0;        // mirror mass
  double M = 0.0;        // atom mass
  double L = 0.0;        // cavity length
  double c_light = kSpeedOfLight;
  double Gamma = 0.0;  // atomic spontaneous emission rate
  double kappa = 0.0;  // cavity decay rate
  double omega0 = 1e12;

  double Delta() const { return omega - Omega; }
  double rescale(double angular) const { return angular / omega0; }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidArgument(std::string("PhysicalParams: ") + name + " must be positive and finite");
      }
    };
    positive(omega, "omega");
    positive(Omega, "Omega");
    if (!(g >= 0.0) || !std::isfinite(g)) throw InvalidArgument("PhysicalParams: g must be >= 0 and finite");
    positive(omega_m, "omega_m");
    positive(m, "m");
    positive(M, "M");
    positive(L, "L");
    positive(c_light, "c_light");
    positive(omega0, "omega0");
    if (!(Gamma >= 0.0) || !std::isfinite(Gamma)) throw InvalidArgument("PhysicalParams: Gamma must be >= 0");
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InvalidArgument("PhysicalParams: kappa must be >= 0");
  }

  // Population-dynamics parameter set: m = 1e-9 kg, L = 5 mm,
  // omega_m = 2pi*2.5 kHz, g = omega = Omega = 2pi*4.5 MHz, omega0 = 1e12.
  static PhysicalParams population_defaults() {
    PhysicalParams p;
    p.omega = kTwoPi * 4.5e6;
    p.Omega = kTwoPi * 4.5e6;
    p.g = kTwoPi * 4.5e6;
    p.omega_m = kTwoPi * 2.5e3;
    p.m = 1e-9;
    p.M = 1e-26;
    p.L = 5e-3;
    return p;
  }

  // Entanglement parameter set: omega = 2pi*6e13, M = 1e-26 kg, Delta = 1e3,
  // omega_m = 2pi*8e7, m = 5e-9 kg, L = 1e-4 m. g is not part of that set and
  // keeps the population value.
  static PhysicalParams entanglement_defaults() {
    PhysicalParams p;
    p.omega = kTwoPi * 6e13;
    p.Omega = p.omega - 1e3;
    p.g = kTwoPi * 4.5e6;
    p.omega_m = kTwoPi * 8e7;
    p.m = 5e-9;
    p.M = 1e-26;
    p.L = 1e-4;
    return p;
  }
};

// Which frequency sits under the square root of the G derivation.
enum class OmegaChoice { cavity, mirror };

// Frequency-like fields are rescaled by omega0; k0 stays in 1/m.
struct DerivedCouplings {
  double xi = 0.0;         // omega/L              [omega0 / m]
  double k0 = 0.0;         // omega/c              [1/m]
  double g_pi = 0.0;       // g*pi/L               [omega0 / m]
  double g_pi_half = 0.0;  // pi^2 g/(8L)          [omega0 / m^2]
  double pi_sq = 0.0;      // hbar*omega0/(2 m omega_m^2), multiplies (pi/hbar omega0)^2  [m^2]
  double chi = 0.0;        // hbar xi^2/(2 m omega_m^2)   [omega0]
  std::optional<double> omega_prime;  // g k0 sqrt(2 hbar/(M Delta))   [omega0]
  std::optional<double> G_derived;    // hbar xi g k0/(4 sqrt(m M w Delta^3))   [omega0]

  double require_omega_prime() const {
    if (!omega_prime) throw InvalidArgument("omega' requires Delta = omega - Omega > 0");
    return *omega_prime;
  }
  double require_G() const {
    if (!G_derived) throw InvalidArgument("G requires Delta = omega - Omega > 0");
    return *G_derived;
  }
};

inline DerivedCouplings derive_couplings(const PhysicalParams& p,
                                         OmegaChoice choice = OmegaChoice::cavity) {
  p.validate();
  const double pi = std::numbers::pi;
  DerivedCouplings c;
  const double xi = p.omega / p.L;
  const double g_pi = p.g * pi / p.L;
  const double K = kHbar / (2.0 * p.m * p.omega_m * p.omega_m);
  c.xi = p.rescale(xi);
  c.k0 = p.omega / p.c_light;
  c.g_pi = p.rescale(g_pi);
  c.g_pi_half = p.rescale(pi * pi * p.g / (8.0 * p.L));
  c.pi_sq = K * p.omega0;
  c.chi = p.rescale(K * xi * xi);
  const double delta = p.Delta();
  if (delta > 0.0) {
    c.omega_prime = p.rescale(p.g * c.k0 * std::sqrt(2.0 * kHbar / (p.M * delta)));
    const double w = choice == OmegaChoice::cavity ? p.omega : p.omega_m;
    c.G_derived = p.rescale(kHbar * xi * p.g * c.k0 /
                            (4.0 * std::sqrt(p.m * p.M * w * delta * delta * delta)));
  }
  return c;
}

// Reference frame for the atom-photon Hamiltonians. The total excitation
// number N = a^dag a + |e><e| commutes with every atom-photon Hamiltonian
// built here, so removing omega*N - Omega/2 changes no population.
// `rotating` builds H - omega*N + Omega/2 directly (never by subtraction), which
// keeps the tiny mirror-induced terms resolvable next to omega.
enum class Frame { lab, rotating };

inline const char* to_string(Frame f) { return f == Frame::lab ? "lab" : "rotating"; }

namespace detail {

struct AtomPhotonOps {
  SpaceDims dims;
  OperatorMatrix n_photon;  // a^dag a
  OperatorMatrix exchange;  // a^dag sigma^- + a sigma^+
  OperatorMatrix p_excited; // |e><e|
  OperatorMatrix sigma_z;
};

inline AtomPhotonOps atom_photon_ops(std::size_t d) {
  if (d < 2) throw InvalidArgument("photon truncation must be >= 2");
  SpaceDims dims({2, d});
  const ModeSpec photon{ModeLabel::photon, d};
  const auto a = embed(annihilation(photon), 1, dims);
  const auto ad = a.adjoint();
  const auto sm = embed(pauli(Pauli::minus), 0, dims);
  const auto sp = embed(pauli(Pauli::plus), 0, dims);
  OperatorMatrix x = ad * sm + a * sp;
  return {dims, embed(number_operator(photon), 1, dims), x.with_hint(true),
          embed(excited_projector(), 0, dims), embed(pauli(Pauli::z), 0, dims)};
}

// omega a^dag a + Omega/2 sigma_z (lab) or -Delta |e><e| (rotating), rescaled.
inline Matrix bare_part(const PhysicalParams& p, const AtomPhotonOps& ops, Frame frame) {
  if (frame == Frame::lab) {
    return p.rescale(p.omega) * ops.n_photon.entries() +
           (0.5 * p.rescale(p.Omega)) * ops.sigma_z.entries();
  }
  return -p.rescale(p.Delta()) * ops.p_excited.entries();
}

}  // namespace detail

// pi/(hbar omega0) = xi a^dag a + g_pi (a^dag sigma^- + a sigma^+), in 1/m.
inline OperatorMatrix pi_operator(const PhysicalParams& p, std::size_t d) {
  const auto c = derive_couplings(p);
  const auto ops = detail::atom_photon_ops(d);
  return OperatorMatrix(ops.dims, c.xi * ops.n_photon.entries() + c.g_pi * ops.exchange.entries(), true);
}

// Complex frequencies carrying the decay shifts: omega - i kappa and Omega - i Gamma/2.
// The shifts enter the Hamiltonian as -i kappa a^dag a - i (Gamma/2)|e><e|, so the
// anti-Hermitian part is negative semidefinite and norms never grow.
struct ComplexFrequencies {
  Complex omega;
  Complex Omega;
};

inline ComplexFrequencies apply_decay(const PhysicalParams& p) {
  if (!(p.Gamma >= 0.0) || !(p.kappa >= 0.0)) {
    throw InvalidArgument("apply_decay: Gamma and kappa must be >= 0");
  }
  return {Complex(p.omega, -p.kappa), Complex(p.Omega, -0.5 * p.Gamma)};
}

struct PiOptions {
  Frame frame = Frame::lab;
  unsigned n_m = 0;     // mirror phonon number; enters only as a constant
  bool decay = false;   // add the imaginary shifts from apply_decay
};

struct PiHamiltonian {
  OperatorMatrix matrix;
  double mirror_energy;  // omega_m (n_m + 1/2), rescaled; not included in the matrix
  Frame frame;
};

namespace detail {

inline Matrix decay_part(const PhysicalParams& p, const AtomPhotonOps& ops) {
  const auto cf = apply_decay(p);
  return Complex(0.0, p.rescale(cf.omega.imag())) * ops.n_photon.entries() +
         Complex(0.0, p.rescale(cf.Omega.imag())) * ops.p_excited.entries();
}

inline bool has_decay(const PhysicalParams& p) { return p.Gamma > 0.0 || p.kappa > 0.0; }

}  // namespace detail

// H = omega a^dag a + Omega/2 sigma_z - pi^2/(2 m omega_m^2) on atom x photon.
inline PiHamiltonian build_h_pi_eff(const PhysicalParams& p, std::size_t d, const PiOptions& opt = {}) {
  const auto c = derive_couplings(p);
  const auto ops = detail::atom_photon_ops(d);
  const Matrix pi = c.xi * ops.n_photon.entries() + c.g_pi * ops.exchange.entries();
  Matrix h = detail::bare_part(p, ops, opt.frame) - c.pi_sq * (pi * pi);
  bool herm = true;
  if (opt.decay && detail::has_decay(p)) {
    h += detail::decay_part(p, ops);
    herm = false;
  } else {
    h = 0.5 * (h + h.adjoint());
  }
  const double mirror = p.rescale(p.omega_m) * (static_cast<double>(opt.n_m) + 0.5);
  return {OperatorMatrix(ops.dims, std::move(h), herm), mirror, opt.frame};
}

// omega a^dag a + Omega/2 sigma_z + g (a^dag sigma^- + a sigma^+).
inline OperatorMatrix build_jaynes_cummings(const PhysicalParams& p, std::size_t d,
                                            Frame frame = Frame::lab) {
  p.validate();
  const auto ops = detail::atom_photon_ops(d);
  Matrix h = detail::bare_part(p, ops, frame) + p.rescale(p.g) * ops.exchange.entries();
  return OperatorMatrix(ops.dims, std::move(h), true);
}

// Jaynes-Cummings plus the Kerr term -chi (a^dag a)^2, chi = hbar xi^2/(2 m omega_m^2).
inline OperatorMatrix build_h_pi_half_eff(const PhysicalParams& p, std::size_t d,
                                          Frame frame = Frame::lab) {
  const auto c = derive_couplings(p);
  const auto ops = detail::atom_photon_ops(d);
  const Matrix& n = ops.n_photon.entries();
  Matrix h = detail::bare_part(p, ops, frame) + p.rescale(p.g) * ops.exchange.entries() -
             c.chi * (n * n);
  return OperatorMatrix(ops.dims, std::move(h), true);
}

// Analytic eigensystem of the invariant block {|n+1,g>, |n,e>} of build_h_pi_eff.
// Energies are stored relative to `offset` = omega(n+1) - Omega/2, i.e. in the
// rotating frame; the lab values are offset + stored value.
struct DressedPair {
  unsigned n = 0;
  double offset = 0.0;
  double h11 = 0.0;
  double h22 = 0.0;
  double h12 = 0.0;
  double e_plus = 0.0;
  double e_minus = 0.0;
  double theta = 0.0;

  double lab_h11() const { return offset + h11; }
  double lab_h22() const { return offset + h22; }
  double lab_e_plus() const { return offset + e_plus; }
  double lab_e_minus() const { return offset + e_minus; }
  double splitting() const { return e_plus - e_minus; }
};

inline DressedPair dressed_pair(const PhysicalParams& p, unsigned n) {
  const auto c = derive_couplings(p);
  const double np1 = static_cast<double>(n) + 1.0;
  const double nn = static_cast<double>(n);
  // hbar^2/(2 m omega_m^2) [xi^2 ...] in rescaled units is pi_sq * (rescaled xi)^2.
  const double kxx = c.pi_sq * c.xi * c.xi;
  const double kxg = c.pi_sq * c.xi * c.g_pi;
  const double kgg = c.pi_sq * c.g_pi * c.g_pi;
  const double delta = p.rescale(p.Delta());

  DressedPair d;
  d.n = n;
  d.offset = p.rescale(p.omega) * np1 - 0.5 * p.rescale(p.Omega);
  d.h11 = -(kxx * np1 * np1 + kgg * np1);
  d.h22 = -delta - (kxx * nn * nn + kgg * np1);
  d.h12 = -kxg * (2.0 * nn + 1.0) * std::sqrt(np1);
  // h11 - h22 with the g_pi^2 terms cancelled analytically.
  const double diff = delta - kxx * (2.0 * nn + 1.0);
  const double mean = 0.5 * (d.h11 + d.h22);
  const double root = std::hypot(0.5 * diff, d.h12);
  d.e_plus = mean + root;
  d.e_minus = mean - root;
  d.theta = std::atan2(2.0 * d.h12, diff);
  return d;
}

// Flattened indices of |n+1,g> and |n,e> in the atom x photon basis.
inline std::pair<Eigen::Index, Eigen::Index> dressed_block_indices(unsigned n, std::size_t d) {
  if (n + 1 >= d) throw InvalidArgument("dressed block n=" + std::to_string(n) + " outside truncation");
  const auto dd = static_cast<Eigen::Index>(d);
  return {dd + static_cast<Eigen::Index>(n) + 1, static_cast<Eigen::Index>(n)};
}

enum class Branch { plus, minus };

// Exact adiabatic potential U_{+-,n}(Q, q) in units of hbar*omega0, k = (omega - xi q)/c.
inline double potential_exact(const PhysicalParams& p, unsigned n, double Q, double q, Branch branch) {
  p.validate();
  const double xi = p.omega / p.L;
  const double w_eff = p.omega - xi * q;
  const double k = w_eff / p.c_light;
  const double s = std::sin(k * Q);
  const double np1 = static_cast<double>(n) + 1.0;
  const double det = p.Delta() - xi * q;
  const double root = std::sqrt(p.g * p.g * s * s * np1 + 0.25 * det * det);
  const double mean = 0.5 * (2.0 * n + 1.0) * w_eff;
  return p.rescale(branch == Branch::plus ? mean + root : mean - root);
}

// U_{+,n}(Q, q) - U_{+,n}(0, 0) without cancellation against the large mean.
inline double potential_exact_shift(const PhysicalParams& p, unsigned n, double Q, double q) {
  p.validate();
  const double xi = p.omega / p.L;
  const double x = xi * q;
  const double k = (p.omega - x) / p.c_light;
  const double s = std::sin(k * Q);
  const double np1 = static_cast<double>(n) + 1.0;
  const double delta = p.Delta();
  const double a = p.g * p.g * s * s * np1;
  const double dq = delta - x;
  // sqrt(4a + dq^2) - |delta| = (4a + x^2 - 2 delta x) / (sqrt(4a + dq^2) + |delta|)
  const double num = 4.0 * a + x * x - 2.0 * delta * x;
  const double den = std::sqrt(4.0 * a + dq * dq) + std::abs(delta);
  const double root_shift = den > 0.0 ? num / den : 0.0;
  return p.rescale(-0.5 * (2.0 * n + 1.0) * x + 0.5 * root_shift);
}

// Large-detuning expansion of U_{+,n} with k = k0, constant terms dropped:
// -(n+1) xi q + g^2 k^2 Q^2 (n+1)/Delta - xi q g^2 k^2 Q^2 (n+1)/Delta^2.
inline double potential_approx(const PhysicalParams& p, unsigned n, double Q, double q) {
  p.validate();
  const double delta = p.Delta();
  if (delta == 0.0) throw InvalidArgument("potential_approx: Delta = 0");
  const double xi = p.omega / p.L;
  const double k0 = p.omega / p.c_light;
  const double np1 = static_cast<double>(n) + 1.0;
  const double s2 = p.g * p.g * k0 * k0 * Q * Q * np1;
  return p.rescale(-np1 * xi * q + s2 / delta - xi * q * s2 / (delta * delta));
}

struct MotionOptions {
  std::size_t d_c = 10;
  std::size_t d_b = 12;
  bool rwa = false;
  std::optional<double> G_override;  // rad/s
  OmegaChoice omega_choice = OmegaChoice::cavity;
};

struct MotionHamiltonian {
  OperatorMatrix matrix;  // on c x b (mirror mode first)
  double omega_m;         // rescaled
  double omega_prime;     // rescaled
  double G;               // rescaled
};

// omega_m (c^dag c + 1/2) + omega' (b^dag b + 1/2) - G (c^dag + c)(b^dag + b)^2,
// or with the coupling replaced by -G (c^dag b^2 + b^dag^2 c) under the RWA.
inline MotionHamiltonian build_h_motion(const PhysicalParams& p, const MotionOptions& opt) {
  if (opt.d_c < 2 || opt.d_b < 2) throw InvalidArgument("build_h_motion: truncations must be >= 2");
  const auto c = derive_couplings(p, opt.omega_choice);
  const double wp = c.require_omega_prime();
  const double G = opt.G_override ? p.rescale(*opt.G_override) : c.require_G();
  const double wm = p.rescale(p.omega_m);

  SpaceDims dims({opt.d_c, opt.d_b});
  const auto cm = embed(annihilation({ModeLabel::mirror_mode, opt.d_c}), 0, dims).entries();
  const auto bm = embed(annihilation({ModeLabel::atom_com, opt.d_b}), 1, dims).entries();
  const Matrix cd = cm.adjoint();
  const Matrix bd = bm.adjoint();
  const auto n = static_cast<Eigen::Index>(dims.total());
  const Matrix id = Matrix::Identity(n, n);

  Matrix h = wm * (cd * cm + 0.5 * id) + wp * (bd * bm + 0.5 * id);
  if (opt.rwa) {
    const Matrix coupling = cd * (bm * bm);
    h -= G * (coupling + coupling.adjoint());
  } else {
    const Matrix xb = bd + bm;
    h -= G * ((cd + cm) * (xb * xb));
  }
  h = 0.5 * (h + h.adjoint());
  return {OperatorMatrix(std::move(dims), std::move(h), true), wm, wp, G};
}

// 2 c^dag c + b^dag b on c x b.
inline OperatorMatrix weighted_number(std::size_t d_c, std::size_t d_b) {
  SpaceDims dims({d_c, d_b});
  return embed(number_operator({ModeLabel::mirror_mode, d_c}), 0, dims).scaled(2.0) +
         embed(number_operator({ModeLabel::atom_com, d_b}), 1, dims);
}

// |<psi|<n_m| (g_pi X + xi a^dag a) q |m_m>|psi>| / (omega_m |n_m - m_m|), with
// q = sqrt(hbar/(2 m omega_m)) (a_m + a_m^dag). Dimensionless.
inline double mirror_adiabaticity_ratio(const QuantumState& psi, unsigned n_m, unsigned m_m,
                                        const PhysicalParams& p) {
  p.validate();
  if (n_m == m_m) throw InvalidArgument("mirror_adiabaticity_ratio: n_m == m_m");
  if (psi.dims().count() != 2 || psi.dims().factor(0) != 2) {
    throw InvalidArgument("mirror_adiabaticity_ratio: state must live on atom x photon");
  }
  const unsigned gap = n_m > m_m ? n_m - m_m : m_m - n_m;
  if (gap != 1) return 0.0;
  const double q_elem = std::sqrt(kHbar / (2.0 * p.m * p.omega_m)) *
                        std::sqrt(static_cast<double>(std::max(n_m, m_m)));
  const auto ops = detail::atom_photon_ops(psi.dims().factor(1));
  const double xi = p.omega / p.L;
  const double g_pi = p.g * std::numbers::pi / p.L;
  const OperatorMatrix o(ops.dims, g_pi * ops.exchange.entries() + xi * ops.n_photon.entries(), true);
  const Complex ev = psi.expectation(o);
  return std::abs(ev) * q_elem / (p.omega_m * gap);
}

struct BornOppenheimerRatio {
  double analytic = 0.0;
  double finite_difference = 0.0;
  double gap = 0.0;  // U+ - U-, rescaled
};

namespace detail {

// Block {|n+1,g>, |n,e>} at fixed (Q, q), traceless, rescaled.
inline Matrix bo_block(const PhysicalParams& p, unsigned n, double Q, double q) {
  const double xi = p.omega / p.L;
  const double w_eff = p.omega - xi * q;
  const double k = w_eff / p.c_light;
  const double v = p.g * std::sin(k * Q) * std::sqrt(static_cast<double>(n) + 1.0);
  const double det = p.Delta() - xi * q;
  Matrix b(2, 2);
  b << 0.5 * p.rescale(det), p.rescale(v), p.rescale(v), -0.5 * p.rescale(det);
  return b;
}

inline std::pair<Vector, Vector> bo_vectors(const PhysicalParams& p, unsigned n, double Q, double q) {
  const auto es = eig_hermitian(OperatorMatrix(SpaceDims({2}), bo_block(p, n, Q, q), true));
  return {es.vectors.col(1), es.vectors.col(0)};  // (phi_plus, phi_minus)
}

inline Vector align_phase(const Vector& v, const Vector& ref) {
  const Complex ov = ref.dot(v);
  if (std::abs(ov) == 0.0) return v;
  return v * (std::conj(ov) / std::abs(ov));
}

}  // namespace detail

// |(<phi+|d_Q|phi-> + <phi+|d_q|phi->)/(U+ - U-)| with <phi+|d|phi-> = -theta'/2.
// Derivatives are per meter and the gap is in hbar*omega0. The finite-difference
// value uses phase-fixed central differences of numerically diagonalized blocks.
inline BornOppenheimerRatio born_oppenheimer_ratio(const PhysicalParams& p, unsigned n, double Q,
                                                   double q, std::optional<double> fd_step = {}) {
  p.validate();
  const double xi = p.omega / p.L;
  const double w_eff = p.omega - xi * q;
  const double k = w_eff / p.c_light;
  const double gn = p.g * std::sqrt(static_cast<double>(n) + 1.0);
  const double v = gn * std::sin(k * Q);
  const double D = p.Delta() - xi * q;
  const double gap_si = std::sqrt(D * D + 4.0 * v * v);
  BornOppenheimerRatio r;
  r.gap = p.rescale(gap_si);
  if (r.gap <= 1e-12) {
    throw NumericalError("born_oppenheimer_ratio: U+ and U- degenerate at Q=" + std::to_string(Q) +
                         ", q=" + std::to_string(q));
  }
  // theta = atan2(2V, D); dtheta = (D dV2 - V2 dD)/(D^2 + V2^2), V2 = 2V.
  const double denom = D * D + 4.0 * v * v;
  const double dV_dQ = gn * std::cos(k * Q) * k;
  const double dV_dq = gn * std::cos(k * Q) * Q * (-xi / p.c_light);
  const double dD_dq = -xi;
  const double dtheta_dQ = (2.0 * D * dV_dQ) / denom;
  const double dtheta_dq = (2.0 * D * dV_dq - 2.0 * v * dD_dq) / denom;
  const double coupling = -0.5 * (dtheta_dQ + dtheta_dq);
  r.analytic = std::abs(coupling / r.gap);

  // Steps resolve the scale on which the mixing angle varies; central
  // differences at h and h/2 are Richardson-combined.
  const double hQ = fd_step.value_or(1e-3 * std::min(1.0 / k, gap_si / (gn * k)));
  const double hq = fd_step.value_or(1e-3 * gap_si / xi);
  const auto [plus0, minus0] = detail::bo_vectors(p, n, Q, q);
  auto central = [&](double dQ, double dq, double h) {
    const Vector fwd = detail::align_phase(detail::bo_vectors(p, n, Q + dQ, q + dq).second, minus0);
    const Vector bwd = detail::align_phase(detail::bo_vectors(p, n, Q - dQ, q - dq).second, minus0);
    return plus0.dot((fwd - bwd) / (2.0 * h));
  };
  auto derivative = [&](double dQ, double dq, double h) {
    return (4.0 * central(0.5 * dQ, 0.5 * dq, 0.5 * h) - central(dQ, dq, h)) / 3.0;
  };
  const Complex fd = derivative(hQ, 0.0, hQ) + derivative(0.0, hq, hq);
  // Eigenvector sign conventions of the solver fix only the overall sign.
  r.finite_difference = std::abs(fd) / r.gap;
  return r;
}

}  // namespace optocav
