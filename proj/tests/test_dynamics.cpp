#include <gtest/gtest.h>

#include <cmath>

#include "optocav/dynamics.hpp"
#include "optocav/hamiltonians.hpp"
#include "support.hpp"

using namespace optocav;
using optocav::testing::Rng;

TEST(TimeGrid, EndpointsAndValidation) {
  const TimeGrid g{1.0, 2.0, 4};
  EXPECT_EQ(g.time(0), 1.0);
  EXPECT_EQ(g.time(3), 2.0);
  EXPECT_NEAR(g.step(), 1.0 / 3.0, 1e-16);
  EXPECT_THROW((TimeGrid{1.0, 1.0, 4}.validate()), InvalidArgument);
  EXPECT_THROW((TimeGrid{0.0, 1.0, 1}.validate()), InvalidArgument);
}

TEST(Evolve, RabiOscillationMatchesTwoLevelClosedForm) {
  const auto p = PhysicalParams::population_defaults();
  const auto dp = dressed_pair(p, 0);
  const std::size_t d = 10;
  const auto h = build_h_pi_eff(p, d, {Frame::rotating}).matrix;
  const auto init = product_state({atom_state(AtomLevel::excited), fock_state(0, {ModeLabel::photon, d})});
  const TimeGrid grid{0.0, 5.0 * kTwoPi / dp.splitting(), 801};
  const auto states = evolve(h, init, grid);
  const double diff = dp.h11 - dp.h22;
  const double mix = 4 * dp.h12 * dp.h12 / (diff * diff + 4 * dp.h12 * dp.h12);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.n_steps; ++i) {
    const double s = std::sin(0.5 * dp.splitting() * grid.time(i));
    worst = std::max(worst, std::abs(excited_population(states[i], 0) - (1.0 - mix * s * s)));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(Evolve, MixedPathMatchesPurePath) {
  Rng rng(61);
  const SpaceDims dims({3, 4});
  const OperatorMatrix h(dims, optocav::testing::random_hermitian(rng, 12), true);
  const Vector v = optocav::testing::random_unit_vector(rng, 12);
  const auto pure = QuantumState::pure(dims, v);
  const TimeGrid grid{0.0, 3.0, 7};
  const auto a = evolve(h, pure, grid);
  const auto b = evolve(h, pure.to_mixed(), grid);
  for (std::size_t i = 0; i < grid.n_steps; ++i) {
    EXPECT_LT((a[i].density_matrix() - b[i].matrix()).norm(), 1e-12);
  }
}

TEST(Evolve, StepPathMatchesSpectralPath) {
  Rng rng(62);
  const SpaceDims dims({6});
  const Matrix m = optocav::testing::random_hermitian(rng, 6);
  const OperatorMatrix spectral(dims, m, true);
  const OperatorMatrix stepped(dims, m, false);
  const auto init = QuantumState::pure(dims, optocav::testing::random_unit_vector(rng, 6));
  const TimeGrid grid{0.5, 4.0, 50};
  const auto a = evolve(spectral, init, grid);
  const auto b = evolve(stepped, init, grid);
  for (std::size_t i = 0; i < grid.n_steps; ++i) EXPECT_LT((a[i].vector() - b[i].vector()).norm(), 1e-10);
}

// Random Hermitian generators: norm and <H> conserved, pure and mixed.
TEST(Evolve, ConservesNormAndEnergy) {
  Rng rng(63);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + rng.index(20));
    const SpaceDims dims({static_cast<std::size_t>(n)});
    const OperatorMatrix h(dims, optocav::testing::random_hermitian(rng, n, 3.0), true);
    const auto init = trial % 2 ? QuantumState::pure(dims, optocav::testing::random_unit_vector(rng, n))
                                : QuantumState::mixed(dims, optocav::testing::random_density(rng, n));
    const double e0 = init.expectation(h).real();
    for (const auto& s : evolve(h, init, {0.0, rng.uniform(1.0, 100.0), 25})) {
      EXPECT_NEAR(s.norm(), 1.0, 1e-9);
      EXPECT_NEAR(s.expectation(h).real(), e0, 1e-8 * std::max(1.0, std::abs(e0)));
    }
  }
}

TEST(Evolve, DecayIsMonotone) {
  auto p = PhysicalParams::population_defaults();
  p.Gamma = 10 * p.g;
  p.kappa = 2 * p.g;
  const std::size_t d = 19;
  const auto h = build_h_pi_eff(p, d, {Frame::rotating, 0, true}).matrix;
  const auto init = product_state({atom_state(AtomLevel::excited), coherent_state(1.0, {ModeLabel::photon, d}).state});
  const auto states = evolve(h, init, {0.0, 3.0 / p.rescale(p.g), 200});
  for (std::size_t i = 1; i < states.size(); ++i) EXPECT_LE(states[i].norm(), states[i - 1].norm());
  EXPECT_LT(excited_population(states.back(), 0), 0.05);
}

TEST(Evolve, NormGuardTripsOnGain) {
  const SpaceDims dims({2});
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = Complex(0.0, 1.0);  // e^{-iHt} amplifies |0>
  const auto init = QuantumState::pure(dims, Vector::Unit(2, 0));
  EXPECT_THROW(evolve(OperatorMatrix(dims, m), init, {0.0, 10.0, 11}), NumericalError);
  EXPECT_THROW(evolve(OperatorMatrix(SpaceDims({3}), Matrix::Zero(3, 3), true), init, {0.0, 1.0, 2}), InvalidArgument);
}

TEST(Observables, ExcitedPopulationAndLeakage) {
  const auto s = product_state({atom_state(AtomLevel::excited), fock_state(4, {ModeLabel::photon, 6})});
  EXPECT_EQ(excited_population(s, 0), 1.0);
  EXPECT_THROW(excited_population(s, 1), InvalidArgument);
  EXPECT_EQ(leakage(s, 2, {1}), 1.0);
  EXPECT_EQ(leakage(s, 1, {1}), 0.0);
  EXPECT_EQ(leakage(s, 2), 1.0);  // the atom factor counts as edge when band >= 2
  EXPECT_THROW(leakage(s, 2, {5}), InvalidArgument);
}

TEST(EntropyTrajectory, ColumnsAndLeakageWarning) {
  const auto p = PhysicalParams::entanglement_defaults();
  MotionOptions o;
  o.d_c = 4;
  o.d_b = 4;
  o.G_override = 1e7;
  const auto h = build_h_motion(p, o);
  const auto init = product_state({fock_state(1, {ModeLabel::mirror_mode, 4}), fock_state(1, {ModeLabel::atom_com, 4})});
  const TimeGrid grid{0.0, 1e-4 * p.omega0, 11};
  const auto tr = entropy_trajectory(h.matrix, init, grid, {0}, 1);
  EXPECT_EQ(tr.names, (std::vector<std::string>{"t", "S", "leakage", "norm"}));
  EXPECT_NEAR(tr.column("S").front(), 0.0, 1e-14);
  for (double n : tr.column("norm")) EXPECT_NEAR(n, 1.0, 1e-9);
  EXPECT_FALSE(tr.warnings.empty());
}

TEST(EntropyTrajectory, ThermalFactorisedPathMatchesDenseMixedEvolution) {
  const auto p = PhysicalParams::entanglement_defaults();
  MotionOptions o;
  o.d_c = 5;
  o.d_b = 6;
  o.G_override = 2e5;
  const auto h = build_h_motion(p, o);
  const auto init = product_state({thermal_state(1.0, 0.7, {ModeLabel::mirror_mode, 5}),
                                   fock_state(1, {ModeLabel::atom_com, 6})});
  const SpectralPropagator prop(h.matrix);
  const std::vector<double> times{0.0, 1e7, 3e7};
  const auto many = prop.evolve_many(init, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    EXPECT_LT((many[i].matrix() - prop.evolve(init, times[i]).matrix()).norm(), 1e-12);
  }
}
