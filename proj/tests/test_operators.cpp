#include <gtest/gtest.h>

#include <cmath>

#include "optocav/operators.hpp"
#include "support.hpp"

using namespace optocav;
using optocav::testing::Rng;

TEST(Ladder, CommutatorIsIdentityBelowTruncation) {
  const ModeSpec spec{ModeLabel::photon, 8};
  const auto c = commutator(annihilation(spec), creation(spec));
  for (Eigen::Index i = 0; i < 8; ++i) {
    for (Eigen::Index j = 0; j < 8; ++j) {
      const double expect = i == j ? (i == 7 ? -7.0 : 1.0) : 0.0;
      EXPECT_NEAR(std::abs(c(i, j) - expect), 0.0, 1e-14);
    }
  }
}

TEST(Ladder, NumberOperatorIsAdagA) {
  const ModeSpec spec{ModeLabel::atom_com, 6};
  const auto n = creation(spec) * annihilation(spec);
  EXPECT_LT((n.entries() - number_operator(spec).entries()).norm(), 1e-14);
  EXPECT_THROW(annihilation({ModeLabel::photon, 1}), InvalidArgument);
}

TEST(Pauli, ConventionExcitedIsIndexZero) {
  const auto e = atom_state(AtomLevel::excited);
  EXPECT_NEAR(e.expectation(pauli(Pauli::z)).real(), 1.0, 0.0);
  EXPECT_FALSE(pauli(Pauli::plus).hermitian_hint());
  // sigma^+ |g> = |e>
  const Vector up = pauli(Pauli::plus).entries() * atom_state(AtomLevel::ground).vector();
  EXPECT_EQ(up(0), Complex(1.0, 0.0));
  EXPECT_LT((commutator(pauli(Pauli::plus), pauli(Pauli::minus)).entries() - pauli(Pauli::z).entries()).norm(), 1e-15);
}

TEST(Embed, ActsOnOneFactor) {
  SpaceDims d({2, 3, 4});
  const auto n = embed(number_operator({ModeLabel::photon, 3}), 1, d);
  for (std::size_t i = 0; i < d.total(); ++i) EXPECT_EQ(n(i, i).real(), static_cast<double>(d.digits(i)[1]));
  EXPECT_THROW(embed(number_operator({ModeLabel::photon, 3}), 2, d), InvalidArgument);
  EXPECT_THROW(embed(number_operator({ModeLabel::photon, 3}), 3, d), InvalidArgument);
}

TEST(Embed, FactorsCommute) {
  SpaceDims d({3, 4});
  const auto a = embed(annihilation({ModeLabel::mirror_mode, 3}), 0, d);
  const auto b = embed(annihilation({ModeLabel::atom_com, 4}), 1, d);
  EXPECT_LT(commutator(a, b).entries().norm(), 1e-15);
  EXPECT_LT(commutator(a, b.adjoint()).entries().norm(), 1e-15);
}

TEST(Coherent, TruncationHeuristic) {
  EXPECT_EQ(coherent_truncation(0.0), 10u);
  EXPECT_EQ(coherent_truncation(1.0), 19u);
  EXPECT_EQ(coherent_truncation(5.0), 75u);
}

TEST(Coherent, TailWeightMatchesComplementOfHead) {
  for (double r : {0.5, 1.0, 3.0, 5.0}) {
    for (std::size_t d : {std::size_t{5}, std::size_t{10}, std::size_t{20}}) {
      double head = 0.0, p = std::exp(-r * r);
      for (std::size_t n = 0; n < d; ++n) {
        head += p;
        p *= r * r / static_cast<double>(n + 1);
      }
      EXPECT_NEAR(coherent_tail_weight(r, d), 1.0 - head, 1e-13);
    }
  }
}

TEST(Coherent, MomentsAndTruncationPrecondition) {
  for (Complex alpha : {Complex(1.0, 0.0), Complex(3.0, 0.0), Complex(5.0, 0.0), Complex(1.0, -2.0)}) {
    const ModeSpec spec{ModeLabel::photon, coherent_truncation(alpha)};
    const auto c = coherent_state(alpha, spec);
    EXPECT_LT(c.norm_deficit, kTruncationTolerance);
    EXPECT_NEAR(c.state.norm(), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(c.state.expectation(annihilation(spec)) - alpha), 0.0, 1e-7);
    EXPECT_NEAR(c.state.expectation(number_operator(spec)).real(), std::norm(alpha), 1e-6);
  }
  EXPECT_THROW(coherent_state(5.0, {ModeLabel::photon, 20}), InvalidArgument);
}

TEST(Thermal, BoltzmannWeights) {
  const auto s = thermal_state(1.0, std::log(2.0), {ModeLabel::mirror_mode, 4});
  // weights 1, 1/2, 1/4, 1/8 normalised by 15/8
  EXPECT_NEAR(s.population(0), 8.0 / 15.0, 1e-15);
  EXPECT_NEAR(s.population(3), 1.0 / 15.0, 1e-15);
  const auto cold = thermal_state(1e14, 5e8, {ModeLabel::mirror_mode, 6});
  EXPECT_EQ(cold.population(0), 1.0);
  EXPECT_THROW(thermal_state(0.0, 1.0, {ModeLabel::mirror_mode, 4}), InvalidArgument);
}

TEST(ProductState, PureAndMixedOrdering) {
  const auto s = product_state({atom_state(AtomLevel::ground), fock_state(2, {ModeLabel::photon, 3})});
  EXPECT_TRUE(s.is_pure());
  EXPECT_EQ(s.population(SpaceDims({2, 3}).flatten({1, 2})), 1.0);
  const auto m = product_state({fock_state(1, {ModeLabel::mirror_mode, 3}),
                                thermal_state(1.0, 1.0, {ModeLabel::atom_com, 3})});
  EXPECT_FALSE(m.is_pure());
  EXPECT_NEAR(m.norm(), 1.0, 1e-15);
  EXPECT_THROW(fock_state(3, {ModeLabel::photon, 3}), InvalidArgument);
}

// Random pure parts: the reduced state on each factor recovers that part.
TEST(ProductState, ReducedStatesRecoverParts) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto da = 2 + rng.index(4), db = 2 + rng.index(4);
    const Vector a = optocav::testing::random_unit_vector(rng, static_cast<Eigen::Index>(da));
    const Vector b = optocav::testing::random_unit_vector(rng, static_cast<Eigen::Index>(db));
    const auto s = product_state({QuantumState::pure(SpaceDims({da}), a), QuantumState::pure(SpaceDims({db}), b)});
    EXPECT_LT((partial_trace(s, {0}).matrix() - a * a.adjoint()).norm(), 1e-14);
    EXPECT_LT((partial_trace(s, {1}).matrix() - b * b.adjoint()).norm(), 1e-14);
  }
}
