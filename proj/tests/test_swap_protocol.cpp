#include "swapsim/swap_protocol.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace swapsim;

namespace {

// Bell(1,4) x Bell(2,3) written out amplitude by amplitude.
Ket crossed_product(BellKind outer, BellKind middle) {
  const Ket o = bell_state(outer);
  const Ket m = bell_state(middle);
  CVector a(16);
  for (int b1 = 0; b1 < 2; ++b1)
    for (int b2 = 0; b2 < 2; ++b2)
      for (int b3 = 0; b3 < 2; ++b3)
        for (int b4 = 0; b4 < 2; ++b4) a(8 * b1 + 4 * b2 + 2 * b3 + b4) = o[2 * b1 + b4] * m[2 * b2 + b3];
  return Ket(4, a);
}

LabeledFourPhotonState delayed(double phase = std::numbers::pi) {
  return apply_delay(build_two_pair_state(phase, phase));
}

}  // namespace

TEST(Source, PairPhaseSelectsPsiState) {
  EXPECT_NEAR(overlap_modulus(source_pair(std::numbers::pi), bell_state(BellKind::PsiMinus)), 1.0, 1e-15);
  EXPECT_NEAR(overlap_modulus(source_pair(0.0), bell_state(BellKind::PsiPlus)), 1.0, 1e-15);
}

TEST(Delay, ShiftsOnlyModeB) {
  const auto pre = build_two_pair_state();
  EXPECT_TRUE(pre.is_pre_delay());
  const auto post = apply_delay(pre);
  EXPECT_TRUE(post.is_post_delay());
  EXPECT_EQ(post.labels()[1].time_slot, 1);
  EXPECT_EQ(post.labels()[3].time_slot, 2);
  EXPECT_EQ(post.labels()[2].time_slot, 1);
  EXPECT_EQ((post.ket().amplitudes() - pre.ket().amplitudes()).norm(), 0.0);
  EXPECT_THROW(apply_delay(post), std::logic_error);
}

TEST(Delay, LabelsAreValidated) {
  FourLabels dup = kPreDelayLabels;
  dup[1] = dup[0];
  EXPECT_THROW(LabeledFourPhotonState(build_two_pair_state().ket(), dup), std::invalid_argument);
  FourLabels late = kPreDelayLabels;
  late[0].time_slot = 3;
  EXPECT_THROW(LabeledFourPhotonState(build_two_pair_state().ket(), late), std::invalid_argument);
  EXPECT_THROW(LabeledFourPhotonState(Ket::basis("hh"), kPreDelayLabels), std::invalid_argument);
}

TEST(Decomposition, MatchesBruteForceCoefficients) {
  const auto state = delayed();
  const BellDecomposition d = bell_decompose(state);
  for (BellKind o : kAllBellKinds) {
    for (BellKind m : kAllBellKinds) {
      const Complex expected = inner(crossed_product(o, m), state.ket());
      EXPECT_NEAR(std::abs(d.coefficient(o, m) - expected), 0.0, 1e-15);
    }
  }
}

TEST(Decomposition, PsiMinusPairsGiveSignedHalves) {
  const BellDecomposition d = bell_decompose(delayed());
  EXPECT_NEAR(d.matched(BellKind::PsiPlus).real(), 0.5, 1e-15);
  EXPECT_NEAR(d.matched(BellKind::PsiMinus).real(), -0.5, 1e-15);
  EXPECT_NEAR(d.matched(BellKind::PhiPlus).real(), -0.5, 1e-15);
  EXPECT_NEAR(d.matched(BellKind::PhiMinus).real(), 0.5, 1e-15);
  for (BellKind k : kAllBellKinds) EXPECT_NEAR(d.matched(k).imag(), 0.0, 1e-15);
  EXPECT_LT(d.max_cross_term(), 1e-15);
  EXPECT_NEAR(d.squared_sum(), 1.0, 1e-14);
}

TEST(Decomposition, PsiPlusPairsFlipSigns) {
  const BellDecomposition d = bell_decompose(delayed(0.0));
  EXPECT_NEAR(d.matched(BellKind::PhiPlus).real(), 0.5, 1e-15);
  EXPECT_NEAR(d.matched(BellKind::PhiMinus).real(), -0.5, 1e-15);
  EXPECT_NEAR(d.matched(BellKind::PsiPlus).real(), 0.5, 1e-15);
  EXPECT_NEAR(d.matched(BellKind::PsiMinus).real(), -0.5, 1e-15);
  EXPECT_LT(d.max_cross_term(), 1e-15);
}

TEST(Decomposition, UnequalPhasesLeaveCrossTerms) {
  const auto state = apply_delay(build_two_pair_state(0.0, std::numbers::pi));
  const BellDecomposition d = bell_decompose(state);
  // psi+ x psi- regroups into phi+phi-, phi-phi+, psi+psi-, psi-psi+ with weight 1/2 each.
  EXPECT_NEAR(d.max_cross_term(), 0.5, 1e-14);
  EXPECT_NEAR(std::abs(d.coefficient(BellKind::PhiPlus, BellKind::PhiMinus)), 0.5, 1e-14);
  EXPECT_NEAR(std::abs(d.matched(BellKind::PhiPlus)), 0.0, 1e-14);
}

TEST(Decomposition, GenericPhaseMixesPsiSector) {
  // Equal phases other than 0 or pi leave a psi+ psi- cross term of size |sin phi| / 2.
  const BellDecomposition d = bell_decompose(delayed(0.3));
  EXPECT_NEAR(std::abs(d.coefficient(BellKind::PsiPlus, BellKind::PsiMinus)), std::sin(0.3) / 2, 1e-14);
  EXPECT_LT(std::abs(d.coefficient(BellKind::PhiPlus, BellKind::PhiMinus)), 1e-15);
}

TEST(Decomposition, RecomposeIsInverseForRandomStates) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 25; ++trial) {
    CVector a(16);
    for (Eigen::Index i = 0; i < 16; ++i) a(i) = Complex(g(rng), g(rng));
    const Ket k = Ket(4, a).normalized();
    const BellDecomposition d = bell_decompose(LabeledFourPhotonState(k, kPostDelayLabels));
    EXPECT_NEAR(d.squared_sum(), 1.0, 1e-12);
    EXPECT_LT((bell_recompose(d).amplitudes() - k.amplitudes()).norm(), 1e-13);
  }
}

TEST(Decomposition, RequiresPostDelayLabels) {
  EXPECT_THROW(bell_decompose(build_two_pair_state()), std::invalid_argument);
  EXPECT_THROW(project_middle(build_two_pair_state(), BellKind::PhiPlus), std::invalid_argument);
}

TEST(Projection, IdealSwapYieldsMatchingBellState) {
  const auto state = delayed();
  for (BellKind k : {BellKind::PhiPlus, BellKind::PhiMinus}) {
    const auto r = project_middle(state, k);
    EXPECT_NEAR(r.probability, 0.25, 1e-12);
    const CMatrix target = DensityMatrix::from_ket(bell_state(k)).matrix();
    EXPECT_LT((r.conditional_state.matrix() - target).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(concurrence(r.conditional_state), 1.0, 1e-8);
  }
}

TEST(Projection, PsiOutcomesAreNotResolved) {
  EXPECT_THROW(project_middle(delayed(), BellKind::PsiPlus), std::invalid_argument);
  EXPECT_THROW(middle_measurement(BellKind::PsiMinus, 1.0), std::invalid_argument);
}

TEST(Projection, FullyDistinguishableGivesClassicalMixture) {
  for (BellKind k : {BellKind::PhiPlus, BellKind::PhiMinus}) {
    const auto r = project_middle(delayed(), k, {0.0, 0.0});
    EXPECT_NEAR(r.probability, 0.25, 1e-12);
    CMatrix expected = CMatrix::Zero(4, 4);
    expected(0, 0) = expected(3, 3) = 0.5;
    EXPECT_LT((r.conditional_state.matrix() - expected).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(concurrence(r.conditional_state), 1e-8);
    EXPECT_NEAR(fidelity(r.conditional_state, bell_state(k)), 0.5, 1e-10);
  }
}

TEST(Projection, FidelityFollowsClosedForm) {
  for (double v : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
    for (double p : {0.0, 0.02, 0.1, 0.5}) {
      const DistinguishabilityModel m{v, p};
      const auto r = project_middle(delayed(), BellKind::PhiPlus, m);
      // Direct oracle: (1-p)(1+v)/2 + p/4.
      EXPECT_NEAR(fidelity(r.conditional_state, bell_state(BellKind::PhiPlus)), (1 - p) * (1 + v) / 2 + p / 4, 1e-12);
      EXPECT_NEAR(model_fidelity(m), (1 - p) * (1 + v) / 2 + p / 4, 1e-15);
      EXPECT_NEAR(r.probability, 0.25, 1e-12);
    }
  }
}

TEST(Projection, OutcomeProbabilitiesOfAllFourBellStatesSumToOne) {
  // The ideal measurement over all four Bell states is complete.
  const auto state = delayed();
  const Eigen::Matrix4cd psi = detail::outer_middle_matrix(state.ket());
  double total = 0.0;
  for (BellKind k : kAllBellKinds) {
    const CVector b = bell_state(k).amplitudes();
    total += (psi * b.conjugate()).squaredNorm();
  }
  EXPECT_NEAR(total, 1.0, 1e-14);
}

TEST(Projection, ModelIsValidated) {
  EXPECT_THROW(project_middle(delayed(), BellKind::PhiPlus, {1.2, 0.0}), std::invalid_argument);
  EXPECT_THROW(project_middle(delayed(), BellKind::PhiPlus, {0.5, -0.1}), std::invalid_argument);
}
