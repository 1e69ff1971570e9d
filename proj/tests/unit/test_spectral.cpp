#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sshhom/errors.hpp"
#include "sshhom/spectral.hpp"

using namespace sshhom;

namespace {

const Schedule kSched{252.0, 16128};

DisorderSpec make_disorder(DisorderKind kind, double strength, std::uint64_t realization = 0) {
  DisorderSpec d;
  d.kind = kind;
  d.strength = strength;
  d.seed = 7;
  d.realization = realization;
  return d;
}

EigenSystem clean_at(double t, const LatticeSpec& spec = {}) {
  return diagonalize(build_hamiltonian(t, spec, kSched, DisorderSpec{}, DisorderDraw{}));
}

// H at intracell amplitude v (clean): t chosen so that v0 sin(theta) = v.
EigenSystem clean_at_v(const LatticeSpec& spec, double v) {
  LatticeSpec s = spec;
  s.v0 = v;
  return clean_at(126.0, s);
}

// Exact in-gap splitting E_+ from diagonalization.
double exact_splitting(const LatticeSpec& spec, double v) {
  const EdgePair p = in_gap_pair(clean_at_v(spec, v));
  return std::max(std::abs(p.e_plus), std::abs(p.e_minus));
}

WaveFunction basis(int l, int site) {
  WaveFunction e = WaveFunction::Zero(l);
  e(site) = 1.0;
  return e;
}

}  // namespace

TEST(Diagonalize, ResidualsAndOrthonormality) {
  LatticeSpec spec;
  const DisorderSpec d = make_disorder(DisorderKind::onsite_generic, 0.2);
  const HamiltonianMatrix hm = build_hamiltonian(70.0, spec, kSched, d, sample_disorder(d, 8, 0));
  const EigenSystem es = diagonalize(hm);
  const Eigen::MatrixXcd h = hm.dense();
  EXPECT_LE((h * es.states - es.states * es.energies.asDiagonal()).norm(), 1e-12);
  EXPECT_LE((es.states.adjoint() * es.states - Eigen::MatrixXcd::Identity(16, 16)).norm(), 1e-12);
  EXPECT_TRUE(std::is_sorted(es.energies.data(), es.energies.data() + es.size()));
  for (int n = 0; n < es.size(); ++n) {
    Eigen::Index big;
    es.states.col(n).cwiseAbs().maxCoeff(&big);
    EXPECT_GT(es.states(big, n).real(), 0.0);
    EXPECT_EQ(es.states(big, n).imag(), 0.0);
  }
}

TEST(Diagonalize, DenseAndTridiagonalPathsAgree) {
  LatticeSpec spec;
  const HamiltonianMatrix hm = build_hamiltonian(100.0, spec, kSched, DisorderSpec{}, DisorderDraw{});
  const EigenSystem a = diagonalize(hm), b = diagonalize(hm.dense());
  EXPECT_LE((a.energies - b.energies).norm(), 1e-12);
}

TEST(Diagonalize, RejectsNonHermitian) {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(3, 3);
  h(0, 1) = 1.0;
  EXPECT_THROW(diagonalize(h), std::invalid_argument);
}

TEST(Spectrum, CleanChainIsPlusMinusPaired) {
  for (double t : {0.0, 30.0, 126.0, 240.0}) EXPECT_LE(chiral_pairing_error(clean_at(t)), 1e-10);
}

TEST(Spectrum, DimerLimit) {
  const EigenSystem es = clean_at(0.0);
  for (int n = 0; n < 7; ++n) EXPECT_NEAR(es.energies(n), -1.0, 1e-14);
  EXPECT_NEAR(es.energies(7), 0.0, 1e-14);
  EXPECT_NEAR(es.energies(8), 0.0, 1e-14);
  for (int n = 9; n < 16; ++n) EXPECT_NEAR(es.energies(n), 1.0, 1e-14);
}

TEST(Spectrum, HoppingDisorderStaysPaired) {
  LatticeSpec spec;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const DisorderSpec d = make_disorder(DisorderKind::hopping_bdi, 0.2, k);
    const EigenSystem es = diagonalize(build_hamiltonian(90.0, spec, kSched, d, sample_disorder(d, 8, 0)));
    EXPECT_LE(chiral_pairing_error(es), 1e-10);
  }
}

TEST(InGapPair, DegeneratePairAtStartSpansEndSites) {
  const EdgePair p = in_gap_pair(clean_at(0.0));
  EXPECT_NEAR(p.e_plus, 0.0, 1e-14);
  EXPECT_NEAR(p.e_minus, 0.0, 1e-14);
  for (const WaveFunction* s : {&p.plus_state, &p.minus_state}) {
    EXPECT_NEAR(std::norm((*s)(0)) + std::norm((*s)(15)), 1.0, 1e-12);
  }
  // Plus state carries parity (-1)^(N+1) = -1 for N = 8.
  EXPECT_NEAR(parity_expectation(p.plus_state), -1.0, 1e-12);
  EXPECT_NEAR(parity_expectation(p.minus_state), 1.0, 1e-12);
}

TEST(InGapPair, ParityLabelsFollowCellCountAwayFromDegeneracy) {
  for (int n : {5, 6, 8}) {
    LatticeSpec spec{n, 0.6, 1.0};
    const EdgePair p = in_gap_pair(clean_at(126.0, spec));
    const double sign = (n % 2 == 1) ? 1.0 : -1.0;  // (-1)^(N+1)
    EXPECT_NEAR(parity_expectation(p.plus_state), sign, 1e-10) << n;
    EXPECT_NEAR(parity_expectation(p.minus_state), -sign, 1e-10) << n;
  }
}

TEST(InGapPair, SplittingAtHalfTime) {
  const EdgePair p = in_gap_pair(clean_at(126.0));
  const double e = std::abs(p.e_plus);
  EXPECT_NEAR(std::abs(p.e_minus), e, 1e-12);
  EXPECT_NEAR(e, 0.01075, 0.01 * 0.01075);
  EXPECT_NEAR(hybrid_energy_formula(LatticeSpec{}, 0.6), e, 0.01 * e);
}

TEST(InGapPair, HybridStatesLiveOnOddAndEvenSublattices) {
  // (|0+> + |0->)/sqrt(2) and (|0+> - |0->)/sqrt(2) are |L> (odd sites) and |R> (even sites) up to sign.
  const EdgePair p = in_gap_pair(clean_at(126.0));
  const double r = std::numbers::sqrt2 / 2;
  const WaveFunction a = r * (p.plus_state + p.minus_state), b = r * (p.plus_state - p.minus_state);
  auto odd_weight = [](const WaveFunction& v) {
    double s = 0;
    for (int i = 0; i < v.size(); i += 2) s += std::norm(v(i));
    return s;
  };
  const double wa = odd_weight(a), wb = odd_weight(b);
  EXPECT_NEAR(std::max(wa, wb), 1.0, 1e-10);
  EXPECT_NEAR(std::min(wa, wb), 0.0, 1e-10);
}

TEST(InGapPair, GaugeContinuityAlongRamp) {
  LatticeSpec spec;
  EdgePair prev = in_gap_pair(clean_at(0.0));
  for (int i = 1; i <= 400; ++i) {
    const EdgePair cur = in_gap_pair(clean_at(252.0 * i / 400), &prev);
    EXPECT_GT(prev.plus_state.dot(cur.plus_state).real(), 0.0) << i;
    EXPECT_GT(prev.minus_state.dot(cur.minus_state).real(), 0.0) << i;
    prev = cur;
  }
}

TEST(InGapPair, CollapsedGapThrows) {
  HamiltonianMatrix h{Eigen::VectorXd::Zero(6), Eigen::VectorXd::Zero(5)};
  EXPECT_THROW(in_gap_pair(diagonalize(h)), GapCollapseError);
}

TEST(InGapPair, PopulationOfBasisStates) {
  const EdgePair p = in_gap_pair(clean_at(0.0));
  EXPECT_NEAR(in_gap_population(p, basis(16, 0)), 1.0, 1e-12);
  EXPECT_NEAR(in_gap_population(p, basis(16, 5)), 0.0, 1e-12);
}

TEST(AnalyticEdge, DimerLimitIsEndSites) {
  const AnalyticEdgeStates e = analytic_edge_states(LatticeSpec{}, 0.0);
  EXPECT_LE((e.left - basis(16, 0)).norm(), 1e-15);
  EXPECT_LE((e.right - basis(16, 15)).norm(), 1e-15);
}

TEST(AnalyticEdge, GeometricDecay) {
  const AnalyticEdgeStates e = analytic_edge_states(LatticeSpec{}, 0.6);
  EXPECT_NEAR(e.eta, -0.6, 1e-15);
  EXPECT_NEAR((e.left(2) / e.left(0)).real(), -0.6, 1e-14);
  EXPECT_NEAR((e.right(13) / e.right(15)).real(), -0.6, 1e-14);
  EXPECT_NEAR(e.left.norm(), 1.0, 1e-14);
  EXPECT_EQ(e.left(1), Complex(0.0));
  EXPECT_THROW(analytic_edge_states(LatticeSpec{}, 1.0), std::invalid_argument);
}

TEST(AnalyticEdge, OverlapWithExactPair) {
  const LatticeSpec spec;
  const EdgePair p = in_gap_pair(clean_at_v(spec, 0.3));
  const AnalyticEdgeStates e = analytic_edge_states(spec, 0.3);
  const double r = std::numbers::sqrt2 / 2;
  const double ov = std::max(std::abs(e.left.dot(r * (p.plus_state + p.minus_state))),
                             std::abs(e.left.dot(r * (p.plus_state - p.minus_state))));
  EXPECT_GE(ov, 0.999);
}

TEST(HybridEnergy, ClosedFormValues) {
  const LatticeSpec spec;
  EXPECT_EQ(hybrid_energy_formula(spec, 0.0), 0.0);
  // |v eta^(N-1) (eta^2 - 1) / (eta^(2N) - 1)| at N = 8, v = 0.6.
  const double eta = -0.6;
  const double by_hand = std::abs(0.6 * std::pow(eta, 7) * (eta * eta - 1) / (std::pow(eta, 16) - 1));
  EXPECT_NEAR(hybrid_energy_formula(spec, 0.6), by_hand, 1e-15);
  EXPECT_NEAR(hybrid_energy_formula(spec, 0.6), 0.01075, 0.01 * 0.01075);
}

TEST(HybridEnergy, AgreesWithDiagonalization) {
  const LatticeSpec spec;
  const double e = exact_splitting(spec, 0.3);
  EXPECT_LE(std::abs(hybrid_energy_formula(spec, 0.3) - e) / e, 1e-3);
  const double e6 = exact_splitting(spec, 0.6);
  EXPECT_LE(std::abs(hybrid_energy_formula(spec, 0.6) - e6) / e6, 1e-2);
}

TEST(HybridEnergy, ErrorShrinksWithChainLength) {
  double last = 1.0;
  for (int n = 3; n <= 12; ++n) {
    const LatticeSpec spec{n, 0.6, 1.0};
    const double e = exact_splitting(spec, 0.6);
    const double rel = std::abs(hybrid_energy_formula(spec, 0.6) - e) / e;
    EXPECT_LT(rel, last) << n;
    last = rel;
  }
}

TEST(DistributionDifference, EndSitesAndCleanEdgeStates) {
  EXPECT_EQ(distribution_difference(basis(16, 0)), 1.0);
  EXPECT_EQ(distribution_difference(basis(16, 15)), -1.0);
  for (double t : {10.0, 126.0, 240.0}) {
    const EdgePair p = in_gap_pair(clean_at(t));
    EXPECT_LE(std::abs(distribution_difference(p.plus_state)), 1e-10);
    EXPECT_LE(std::abs(distribution_difference(p.minus_state)), 1e-10);
  }
}

TEST(DistributionDifference, ZeroForEveryStateOfInversionSymmetricH) {
  LatticeSpec spec;
  for (std::uint64_t k = 0; k < 5; ++k) {
    const DisorderSpec d = make_disorder(DisorderKind::onsite_inversion_symmetric, 0.2, k);
    const EigenSystem es = diagonalize(build_hamiltonian(80.0, spec, kSched, d, sample_disorder(d, 8, 0)));
    for (int n = 0; n < es.size(); ++n) EXPECT_LE(std::abs(distribution_difference(es.states.col(n))), 1e-10);
  }
}

TEST(Parity, EndSiteCombinations) {
  const double r = std::numbers::sqrt2 / 2;
  EXPECT_NEAR(parity_expectation(r * (basis(16, 0) + basis(16, 15))), 1.0, 1e-15);
  EXPECT_NEAR(parity_expectation(r * (basis(16, 0) - basis(16, 15))), -1.0, 1e-15);
  EXPECT_EQ(parity_expectation(basis(16, 3)), 0.0);
}

TEST(EqualSupport, CleanAndBdiPassGenericFails) {
  LatticeSpec spec;
  const EqualSupportReport clean = equal_support_check(clean_at(126.0));
  EXPECT_TRUE(clean.passed);
  EXPECT_EQ(clean.checked, 16);  // every state is gapped away from zero at t > 0
  const EqualSupportReport clean0 = equal_support_check(clean_at(0.0));
  EXPECT_TRUE(clean0.passed);
  EXPECT_EQ(clean0.checked, 14);

  const DisorderSpec bdi = make_disorder(DisorderKind::hopping_bdi, 0.2, 2);
  EXPECT_TRUE(
      equal_support_check(diagonalize(build_hamiltonian(126.0, spec, kSched, bdi, sample_disorder(bdi, 8, 0)))).passed);
  const DisorderSpec gen = make_disorder(DisorderKind::onsite_generic, 0.2, 2);
  const EqualSupportReport bad =
      equal_support_check(diagonalize(build_hamiltonian(126.0, spec, kSched, gen, sample_disorder(gen, 8, 0))));
  EXPECT_FALSE(bad.passed);
  EXPECT_FALSE(bad.violations.empty());
}

TEST(TransitionElement, VanishesUnderChiralSymmetry) {
  LatticeSpec spec;
  for (auto kind : {DisorderKind::none, DisorderKind::hopping_bdi}) {
    const DisorderSpec d = make_disorder(kind, 0.2, 3);
    const DisorderDraw draw = sample_disorder(d, 8, 0);
    for (double t : {30.0, 126.0, 200.0}) {
      const EigenSystem es = diagonalize(build_hamiltonian(t, spec, kSched, d, draw));
      const Eigen::MatrixXcd dh = hamiltonian_rate(t, spec, kSched, d, draw).dense();
      for (int n = 0; n < es.size(); ++n) EXPECT_LE(std::abs(transition_element(es, dh, n)), 1e-12);
    }
  }
}

TEST(TransitionElement, MatchesDirectExpression) {
  // <psi|dH S|psi> with dH = v'(t) on intracell bonds, evaluated by hand.
  LatticeSpec spec;
  const double t = 60.0;
  const EigenSystem es = clean_at(t);
  const Eigen::MatrixXcd dh = hamiltonian_rate(t, spec, kSched, DisorderSpec{}, DisorderDraw{}).dense();
  const Eigen::MatrixXcd s = chiral_operator(8).cast<Complex>();
  for (int n : {0, 7, 8}) {
    const WaveFunction psi = es.states.col(n);
    const Complex direct = psi.dot(dh * (s * psi));
    EXPECT_LE(std::abs(transition_element(es, dh, n) - direct), 1e-15);
  }
}

TEST(TransitionElement, OnsiteRateBreaksIt) {
  // A bond-only rate gives zero for any real state, with or without on-site
  // disorder in H; a time-dependent on-site term does not.
  LatticeSpec spec;
  const DisorderSpec d = make_disorder(DisorderKind::onsite_generic, 0.2, 3);
  const DisorderDraw draw = sample_disorder(d, 8, 0);
  const EigenSystem es = diagonalize(build_hamiltonian(126.0, spec, kSched, d, draw));
  const Eigen::MatrixXcd bond_rate = hamiltonian_rate(126.0, spec, kSched, d, draw).dense();
  Eigen::MatrixXcd onsite_rate = bond_rate;
  const DisorderDraw next = sample_disorder(make_disorder(DisorderKind::onsite_generic, 0.2, 4), 8, 0);
  for (int n = 0; n < 16; ++n) onsite_rate(n, n) = 0.2 * (next.r[n] - draw.r[n]);
  double bond_worst = 0.0, onsite_worst = 0.0;
  for (int n = 0; n < es.size(); ++n) {
    bond_worst = std::max(bond_worst, std::abs(transition_element(es, bond_rate, n)));
    onsite_worst = std::max(onsite_worst, std::abs(transition_element(es, onsite_rate, n)));
  }
  EXPECT_LE(bond_worst, 1e-12);
  EXPECT_GT(onsite_worst, 1e-3);
  EXPECT_GT(chiral_pairing_error(es), 1e-3);
}
