#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "optocav/dynamics.hpp"
#include "optocav/hamiltonians.hpp"
#include "support.hpp"

using namespace optocav;
using optocav::testing::Rng;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// 2x2 block {|n+1,g>, |n,e>} of an atom x photon matrix.
Matrix block(const OperatorMatrix& h, unsigned n, std::size_t d) {
  const auto [ig, ie] = dressed_block_indices(n, d);
  Matrix b(2, 2);
  b << h(ig, ig), h(ig, ie), h(ie, ig), h(ie, ie);
  return b;
}

}  // namespace

TEST(Couplings, FrozenScalarOracles) {
  const auto p = PhysicalParams::population_defaults();
  const auto c = derive_couplings(p);
  EXPECT_LT(rel(c.chi, 6.833625374159997e-27), 1e-13);
  EXPECT_LT(rel(c.g_pi * p.omega0 * p.L / (p.g * std::numbers::pi), 1.0), 1e-15);
  EXPECT_LT(rel(c.xi * p.omega0, p.omega / p.L), 1e-15);
  EXPECT_FALSE(c.omega_prime.has_value());
  EXPECT_THROW(c.require_G(), InvalidArgument);
}

TEST(Couplings, FrozenEntanglementOracles) {
  const auto p = PhysicalParams::entanglement_defaults();
  const auto cav = derive_couplings(p, OmegaChoice::cavity);
  const auto mir = derive_couplings(p, OmegaChoice::mirror);
  EXPECT_LT(rel(cav.require_omega_prime() * p.omega0, 163288604.0135262), 1e-9);
  EXPECT_LT(rel(cav.require_G() * p.omega0, 813.9533681607907), 1e-9);
  EXPECT_LT(rel(mir.require_G() * p.omega0, 704904.2943231524), 1e-9);
}

TEST(DressedPair, FrozenNZeroValues) {
  const auto d = dressed_pair(PhysicalParams::population_defaults(), 0);
  EXPECT_LT(rel(d.h12, -2.1468467272845852e-26), 1e-13);
  EXPECT_LT(rel(d.splitting(), 4.34773364402119e-26), 1e-12);
}

TEST(DressedPair, InvariantsHoldOverRandomParameters) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = PhysicalParams::population_defaults();
    p.g *= rng.uniform(0.0, 3.0);
    p.Omega = p.omega * rng.uniform(0.5, 1.5);
    p.omega_m *= rng.uniform(0.2, 5.0);
    const unsigned n = static_cast<unsigned>(rng.index(40));
    const auto d = dressed_pair(p, n);
    EXPECT_GE(d.e_plus, d.e_minus);
    const double scale = std::max({std::abs(d.h11), std::abs(d.h22), std::abs(d.h12)});
    EXPECT_NEAR(d.e_plus + d.e_minus, d.h11 + d.h22, 1e-12 * scale);
    const double root = std::sqrt(0.25 * (d.h11 - d.h22) * (d.h11 - d.h22) + d.h12 * d.h12);
    EXPECT_NEAR(d.e_plus, 0.5 * (d.h11 + d.h22) + root, 1e-9 * scale);
    if (d.h11 != d.h22) EXPECT_NEAR(std::tan(d.theta) * (d.h11 - d.h22), 2 * d.h12, 1e-9 * scale);
  }
}

TEST(DressedPair, ZeroCouplingHasNoMixing) {
  auto p = PhysicalParams::population_defaults();
  p.g = 0.0;
  p.Omega = 0.9 * p.omega;
  const auto d = dressed_pair(p, 3);
  EXPECT_EQ(d.h12, 0.0);
  EXPECT_EQ(d.theta, 0.0);
}

TEST(HPiEff, BlocksMatchAnalyticPairs) {
  const auto p = PhysicalParams::population_defaults();
  const std::size_t d = 18;
  const auto h = build_h_pi_eff(p, d, {Frame::rotating}).matrix;
  for (unsigned n = 0; n <= 15; ++n) {
    const auto dp = dressed_pair(p, n);
    const Matrix b = block(h, n, d);
    EXPECT_LT(rel(b(0, 0).real(), dp.h11), 1e-10) << n;
    EXPECT_LT(rel(b(1, 1).real(), dp.h22), 1e-10) << n;
    EXPECT_LT(rel(b(0, 1).real(), dp.h12), 1e-10) << n;
    const auto es = eig_hermitian(OperatorMatrix(SpaceDims({2}), b, true));
    EXPECT_LT(rel(es.values(1), dp.e_plus), 1e-10) << n;
    EXPECT_LT(rel(es.values(0), dp.e_minus), 1e-10) << n;
  }
}

TEST(HPiEff, BlocksAreInvariant) {
  const auto p = PhysicalParams::population_defaults();
  const std::size_t d = 12;
  const auto h = build_h_pi_eff(p, d, {Frame::rotating}).matrix;
  const double scale = h.entries().cwiseAbs().maxCoeff();
  for (unsigned n = 0; n + 2 < d; ++n) {
    const auto [ig, ie] = dressed_block_indices(n, d);
    for (Eigen::Index k = 0; k < h.dim(); ++k) {
      if (k == ig || k == ie) continue;
      EXPECT_LE(std::abs(h(k, ig)), 1e-15 * scale);
      EXPECT_LE(std::abs(h(k, ie)), 1e-15 * scale);
    }
  }
}

TEST(HPiEff, LabMinusRotatingIsExcitationNumber) {
  auto p = PhysicalParams::population_defaults();
  p.Omega = 1.1 * p.omega;
  const std::size_t d = 8;
  const auto lab = build_h_pi_eff(p, d, {Frame::lab}).matrix;
  const auto rot = build_h_pi_eff(p, d, {Frame::rotating}).matrix;
  const auto ops = detail::atom_photon_ops(d);
  const Matrix n_exc = ops.n_photon.entries() + ops.p_excited.entries();
  const Matrix expect = p.rescale(p.omega) * n_exc -
                        0.5 * p.rescale(p.Omega) * Matrix::Identity(2 * d, 2 * d);
  EXPECT_LT((lab.entries() - rot.entries() - expect).cwiseAbs().maxCoeff(), 1e-15 * lab.entries().norm());
  EXPECT_LT(commutator(rot, OperatorMatrix(ops.dims, n_exc, true)).entries().norm(), 1e-40);
}

TEST(HPiEff, DecoupledLimitIsDiagonal) {
  auto p = PhysicalParams::population_defaults();
  p.g = 0.0;
  p.L = 1e300;  // xi^2 underflows to zero
  const std::size_t d = 6;
  const auto h = build_h_pi_eff(p, d).matrix;
  const SpaceDims dims({2, d});
  for (std::size_t i = 0; i < dims.total(); ++i) {
    const auto dg = dims.digits(i);
    const double sign = dg[0] == 0 ? 1.0 : -1.0;
    EXPECT_DOUBLE_EQ(h(i, i).real(), p.rescale(p.omega) * dg[1] + sign * 0.5 * p.rescale(p.Omega));
    for (std::size_t j = 0; j < dims.total(); ++j)
      if (i != j) EXPECT_EQ(h(i, j), Complex(0.0, 0.0));
  }
}

TEST(HPiEff, MirrorEnergyIsRecordedNotAdded) {
  const auto p = PhysicalParams::population_defaults();
  const auto a = build_h_pi_eff(p, 5, {Frame::rotating, 0});
  const auto b = build_h_pi_eff(p, 5, {Frame::rotating, 3});
  EXPECT_EQ(a.matrix.entries(), b.matrix.entries());
  EXPECT_DOUBLE_EQ(b.mirror_energy, p.rescale(p.omega_m) * 3.5);
}

TEST(Decay, AntiHermitianPartIsNegativeSemidefinite) {
  auto p = PhysicalParams::population_defaults();
  p.Gamma = 10 * p.g;
  p.kappa = 2 * p.g;
  const auto cf = apply_decay(p);
  EXPECT_EQ(cf.omega.imag(), -p.kappa);
  EXPECT_EQ(cf.Omega.imag(), -0.5 * p.Gamma);
  const std::size_t d = 7;
  const auto h = build_h_pi_eff(p, d, {Frame::rotating, 0, true}).matrix;
  EXPECT_FALSE(h.hermitian_hint());
  const Matrix anti = (h.entries() - h.entries().adjoint()) / Complex(0.0, 2.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(anti);
  EXPECT_LE(es.eigenvalues().maxCoeff(), 1e-30);
  const auto ops = detail::atom_photon_ops(d);
  const Matrix expect = -p.rescale(p.kappa) * ops.n_photon.entries() - 0.5 * p.rescale(p.Gamma) * ops.p_excited.entries();
  EXPECT_LT((anti - expect).norm(), 1e-15 * expect.norm());
  p.Gamma = -1.0;
  EXPECT_THROW(apply_decay(p), InvalidArgument);
}

TEST(Kerr, EqualsJaynesCummingsMinusChiN2) {
  for (Frame f : {Frame::lab, Frame::rotating}) {
    const auto p = PhysicalParams::population_defaults();
    const std::size_t d = 20;
    const auto k = build_h_pi_half_eff(p, d, f);
    const auto jc = build_jaynes_cummings(p, d, f);
    const auto n = detail::atom_photon_ops(d).n_photon.entries();
    const double chi = derive_couplings(p).chi;
    const Matrix diff = k.entries() - (jc.entries() - chi * n * n);
    EXPECT_LE(diff.cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, jc.entries().cwiseAbs().maxCoeff()));
  }
}

TEST(Kerr, ZeroChiReducesToJaynesCummingsExactly) {
  auto p = PhysicalParams::population_defaults();
  p.m = 1e300;
  ASSERT_EQ(derive_couplings(p).chi, 0.0);
  EXPECT_EQ(build_h_pi_half_eff(p, 9).entries(), build_jaynes_cummings(p, 9).entries());
}

TEST(Kerr, DiagonalAtGroundFock) {
  const auto p = PhysicalParams::population_defaults();
  const std::size_t d = 10;
  const auto h = build_h_pi_half_eff(p, d);
  const double chi = derive_couplings(p).chi;
  for (std::size_t n = 0; n < d; ++n) {
    const double expect = p.rescale(p.omega) * n - 0.5 * p.rescale(p.Omega) - chi * n * n;
    EXPECT_NEAR(h(d + n, d + n).real(), expect, 1e-15 * std::max(1.0, std::abs(expect)));
  }
}

TEST(Motion, HermitianAndDiagonalWhenUncoupled) {
  const auto p = PhysicalParams::entanglement_defaults();
  MotionOptions o;
  o.G_override = 0.0;
  const auto h = build_h_motion(p, o);
  EXPECT_TRUE(h.matrix.hermitian_hint());
  const Matrix off = h.matrix.entries() - Matrix(h.matrix.entries().diagonal().asDiagonal());
  EXPECT_EQ(off.norm(), 0.0);
}

TEST(Motion, RwaMatrixElementAndConservedCharge) {
  auto p = PhysicalParams::entanglement_defaults();
  MotionOptions o;
  o.rwa = true;
  o.G_override = 5e3;
  const auto h = build_h_motion(p, o);
  const SpaceDims& dims = h.matrix.dims();
  const auto i11 = dims.flatten({1, 1});
  const auto i03 = dims.flatten({0, 3});
  EXPECT_NEAR(h.matrix(i11, i03).real(), -h.G * std::sqrt(6.0), 1e-15 * h.G * std::sqrt(6.0));
  const auto w = weighted_number(o.d_c, o.d_b);
  const auto c = commutator(h.matrix, w).entries();
  EXPECT_LE(c.cwiseAbs().maxCoeff(), 1e-10 * h.matrix.entries().cwiseAbs().maxCoeff());

  o.rwa = false;
  const auto full = build_h_motion(p, o);
  EXPECT_GT(commutator(full.matrix, w).entries().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Motion, RequiresPositiveDetuning) {
  auto p = PhysicalParams::entanglement_defaults();
  p.Omega = p.omega + 1e3;
  EXPECT_THROW(build_h_motion(p, {}), InvalidArgument);
  EXPECT_THROW(build_h_motion(PhysicalParams::entanglement_defaults(), {1, 12}), InvalidArgument);
}

TEST(Potential, QZeroClosedFormAndBranchOrder) {
  Rng rng(41);
  const auto p = PhysicalParams::entanglement_defaults();
  const double xi = p.omega / p.L;
  for (int trial = 0; trial < 100; ++trial) {
    const unsigned n = static_cast<unsigned>(rng.index(10));
    const double q = rng.uniform(-1e-15, 1e-15);
    const double w = p.omega - xi * q;
    const double up = potential_exact(p, n, 0.0, q, Branch::plus);
    const double um = potential_exact(p, n, 0.0, q, Branch::minus);
    EXPECT_LT(rel(up, p.rescale((2 * n + 1) * w / 2 + std::abs(w - p.Omega) / 2)), 1e-15);
    EXPECT_LT(rel(um, p.rescale((2 * n + 1) * w / 2 - std::abs(w - p.Omega) / 2)), 1e-15);
    const double Q = rng.uniform(0.0, 1e-6);
    EXPECT_GE(potential_exact(p, n, Q, q, Branch::plus), potential_exact(p, n, Q, q, Branch::minus));
  }
}

TEST(Potential, ShiftMatchesDirectDifference) {
  auto p = PhysicalParams::population_defaults();
  p.Omega = 0.7 * p.omega;
  const double k0 = p.omega / p.c_light;
  for (unsigned n : {0u, 2u}) {
    for (double kQ : {0.1, 0.5, 1.0}) {
      const double Q = kQ / k0;
      const double q = 1e-4;
      const double direct = potential_exact(p, n, Q, q, Branch::plus) - potential_exact(p, n, 0.0, 0.0, Branch::plus);
      EXPECT_NEAR(potential_exact_shift(p, n, Q, q), direct, 1e-10 * std::abs(direct));
    }
  }
}

TEST(Potential, ApproxReadOffs) {
  auto p = PhysicalParams::entanglement_defaults();
  p.Omega = p.omega - 10 * p.g;
  const double xi = p.omega / p.L;
  const double k0 = p.omega / p.c_light;
  EXPECT_EQ(potential_approx(p, 0, 0.0, 0.0), 0.0);
  for (unsigned n : {0u, 4u}) {
    const double h = 1e-20;
    EXPECT_LT(rel((potential_approx(p, n, 0.0, h) - potential_approx(p, n, 0.0, -h)) / (2 * h),
                  p.rescale(-(n + 1.0) * xi)), 1e-12);
    const double hQ = 1e-3 / k0;
    const double d2 = (potential_approx(p, n, hQ, 0.0) - 2 * potential_approx(p, n, 0.0, 0.0) +
                       potential_approx(p, n, -hQ, 0.0)) / (hQ * hQ);
    EXPECT_LT(rel(d2, p.rescale(2 * p.g * p.g * k0 * k0 * (n + 1.0) / p.Delta())), 1e-6);
  }
  p.Omega = p.omega;
  EXPECT_THROW(potential_approx(p, 0, 0.0, 0.0), InvalidArgument);
}

TEST(Potential, ApproxTracksExactInLargeDetuningRegion) {
  auto p = PhysicalParams::entanglement_defaults();
  p.Omega = p.omega - 10 * p.g;
  const double xi = p.omega / p.L;
  const double k0 = p.omega / p.c_light;
  for (int i = 0; i <= 20; ++i) {
    for (int j = -10; j <= 10; ++j) {
      const double Q = 0.03 * i / 20.0 / k0;
      const double q = 1e-3 * j / 10.0 * p.Delta() / xi;
      const double exact = potential_exact_shift(p, 0, Q, q);
      if (exact == 0.0) continue;
      EXPECT_LE(std::abs(exact - potential_approx(p, 0, Q, q)) / std::abs(exact), 1e-3);
    }
  }
}

TEST(MirrorRatio, FrozenMatrixOracles) {
  const auto p = PhysicalParams::population_defaults();
  const ModeSpec spec{ModeLabel::photon, 19};
  const auto coh = coherent_state(1.0, spec).state;
  const auto e = product_state({atom_state(AtomLevel::excited), coh});
  EXPECT_LT(rel(mirror_adiabaticity_ratio(e, 0, 1, p), 6.595772153541286e-10), 1e-12);
  Vector sup(2);
  sup << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const auto s = product_state({QuantumState::pure(SpaceDims({2}), sup), coh});
  EXPECT_LT(rel(mirror_adiabaticity_ratio(s, 0, 1, p), 2.7317001495858725e-09), 1e-12);
}

TEST(MirrorRatio, SelectionRules) {
  const auto p = PhysicalParams::population_defaults();
  const auto g0 = product_state({atom_state(AtomLevel::ground), fock_state(0, {ModeLabel::photon, 4})});
  EXPECT_EQ(mirror_adiabaticity_ratio(g0, 0, 1, p), 0.0);
  const auto e1 = product_state({atom_state(AtomLevel::excited), fock_state(1, {ModeLabel::photon, 4})});
  EXPECT_EQ(mirror_adiabaticity_ratio(e1, 0, 2, p), 0.0);
  EXPECT_EQ(mirror_adiabaticity_ratio(e1, 5, 2, p), 0.0);
  EXPECT_GT(mirror_adiabaticity_ratio(e1, 2, 1, p), 0.0);
  EXPECT_DOUBLE_EQ(mirror_adiabaticity_ratio(e1, 2, 1, p), mirror_adiabaticity_ratio(e1, 1, 2, p));
  EXPECT_THROW(mirror_adiabaticity_ratio(e1, 1, 1, p), InvalidArgument);
}

TEST(BornOppenheimer, AnalyticMatchesFiniteDifference) {
  Rng rng(51);
  auto p = PhysicalParams::entanglement_defaults();
  p.Omega = p.omega - 10 * p.g;
  const double k0 = p.omega / p.c_light;
  const double xi = p.omega / p.L;
  for (int trial = 0; trial < 40; ++trial) {
    const unsigned n = static_cast<unsigned>(rng.index(5));
    const double Q = rng.uniform(0.05, 1.5) / k0;
    const double q = rng.uniform(-0.1, 0.1) * p.Delta() / xi;
    const auto r = born_oppenheimer_ratio(p, n, Q, q);
    EXPECT_LT(rel(r.finite_difference, r.analytic), 1e-6) << "trial " << trial;
  }
  const auto f2 = PhysicalParams::population_defaults();
  for (double kQ : {0.25, 0.5, 1.0, 1.5}) {
    const auto r = born_oppenheimer_ratio(f2, 0, kQ / (f2.omega / f2.c_light), 0.0);
    EXPECT_LT(rel(r.finite_difference, r.analytic), 1e-6);
  }
}

TEST(BornOppenheimer, ZeroCouplingAndDegeneracy) {
  auto p = PhysicalParams::entanglement_defaults();
  p.g = 0.0;
  EXPECT_EQ(born_oppenheimer_ratio(p, 0, 1e-7, 0.0).analytic, 0.0);
  const auto f2 = PhysicalParams::population_defaults();
  EXPECT_THROW(born_oppenheimer_ratio(f2, 0, 0.0, 0.0), NumericalError);
}

TEST(BornOppenheimer, DecreasesWithDetuning) {
  auto p = PhysicalParams::entanglement_defaults();
  const double Q = 0.3 / (p.omega / p.c_light);
  double prev = std::numeric_limits<double>::infinity();
  for (double ratio : {1.0, 3.0, 10.0, 30.0, 100.0}) {
    p.Omega = p.omega - ratio * p.g;
    const double r = born_oppenheimer_ratio(p, 0, Q, 0.0).analytic;
    EXPECT_LT(r, prev);
    prev = r;
  }
}
