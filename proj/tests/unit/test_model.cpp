#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "sshhom/errors.hpp"
#include "sshhom/model.hpp"

using namespace sshhom;

namespace {

// Dense H written out site by site in 1-based labels, straight from the model
// definition: intracell bonds (2m-1, 2m) carry v(t)(1 + xi r), intercell bonds
// (2m, 2m+1) carry w(1 + xi r), on-site terms zeta r_n.
Eigen::MatrixXd reference_hamiltonian(double t, const LatticeSpec& spec, double t_final, const DisorderSpec& d,
                                      const std::vector<double>& r) {
  const int l = 2 * spec.n_cells;
  const double v = spec.v0 * std::sin(std::numbers::pi * t / t_final);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(l, l);
  for (int site = 1; site < l; ++site) {
    double amp = (site % 2 == 1) ? v : spec.w;
    if (d.kind == DisorderKind::hopping_bdi) amp *= 1.0 + d.strength * r[site - 1];
    h(site - 1, site) = amp;
    h(site, site - 1) = amp;
  }
  if (d.kind == DisorderKind::onsite_generic || d.kind == DisorderKind::onsite_inversion_symmetric) {
    for (int site = 1; site <= l; ++site) h(site - 1, site - 1) = d.strength * r[site - 1];
  }
  return h;
}

DisorderSpec make_disorder(DisorderKind kind, double strength, std::uint64_t realization = 0,
                           TemporalPolicy policy = TemporalPolicy::static_draw) {
  DisorderSpec d;
  d.kind = kind;
  d.strength = strength;
  d.policy = policy;
  d.seed = 42;
  d.realization = realization;
  return d;
}

const Schedule kSched{252.0, 16128};

}  // namespace

TEST(Schedule, IntracellAmplitudeAtSpecialTimes) {
  LatticeSpec spec;
  EXPECT_EQ(intracell_amplitude(0.0, spec, kSched), 0.0);
  EXPECT_DOUBLE_EQ(intracell_amplitude(126.0, spec, kSched), 0.6);
  EXPECT_LE(std::abs(intracell_amplitude(252.0, spec, kSched)), 1e-12);
  EXPECT_THROW(intracell_amplitude(-1e-9, spec, kSched), std::out_of_range);
  EXPECT_THROW(intracell_amplitude(252.5, spec, kSched), std::out_of_range);
}

TEST(Schedule, RateMatchesFiniteDifference) {
  LatticeSpec spec;
  for (double t : {10.0, 100.0, 200.0}) {
    const double h = 1e-4;
    const double fd =
        (intracell_amplitude(t + h, spec, kSched) - intracell_amplitude(t - h, spec, kSched)) / (2 * h);
    EXPECT_NEAR(intracell_rate(t, spec, kSched), fd, 1e-9);
  }
}

TEST(Schedule, DefaultStepsAndValidation) {
  EXPECT_EQ(Schedule::default_steps(1.0), 4096);
  EXPECT_EQ(Schedule::default_steps(252.0), 16128);
  EXPECT_DOUBLE_EQ(Schedule::with_default_steps(504.0).dt(), 504.0 / 32256);
  EXPECT_THROW((Schedule{0.0, 10}.validate()), ConfigError);
  EXPECT_THROW((Schedule{10.0, 0}.validate()), ConfigError);
  EXPECT_DOUBLE_EQ(kSched.step_midpoint(0), 0.5 * kSched.dt());
}

TEST(Lattice, Validation) {
  EXPECT_NO_THROW(LatticeSpec{}.validate());
  EXPECT_THROW((LatticeSpec{1, 0.6, 1.0}.validate()), ConfigError);
  EXPECT_THROW((LatticeSpec{8, 1.0, 1.0}.validate()), ConfigError);
  EXPECT_THROW((LatticeSpec{8, -0.1, 1.0}.validate()), ConfigError);
  EXPECT_THROW((LatticeSpec{8, 0.6, 2.0}.validate()), ConfigError);
}

TEST(Hamiltonian, FullyDimerizedSmallChain) {
  LatticeSpec spec{2, 0.6, 1.0};
  const Eigen::MatrixXcd h = build_hamiltonian(0.0, spec, kSched, DisorderSpec{}, DisorderDraw{}).dense();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const bool bond = (i == 1 && j == 2) || (i == 2 && j == 1);
      EXPECT_EQ(h(i, j), Complex(bond ? 1.0 : 0.0, 0.0)) << i << "," << j;
    }
  }
}

TEST(Hamiltonian, IntracellPeakAtHalfTime) {
  LatticeSpec spec;
  const HamiltonianMatrix h = build_hamiltonian(126.0, spec, kSched, DisorderSpec{}, DisorderDraw{});
  for (int b = 0; b < h.bonds.size(); ++b) EXPECT_DOUBLE_EQ(h.bonds(b), b % 2 == 0 ? 0.6 : 1.0);
  EXPECT_EQ(h.diagonal.norm(), 0.0);
}

TEST(Hamiltonian, MatchesSiteBySiteConstruction) {
  LatticeSpec spec;
  for (auto kind : {DisorderKind::none, DisorderKind::hopping_bdi, DisorderKind::onsite_generic,
                    DisorderKind::onsite_inversion_symmetric}) {
    for (std::uint64_t k = 0; k < 3; ++k) {
      const DisorderSpec d = make_disorder(kind, 0.2, k);
      const DisorderDraw draw = sample_disorder(d, spec.n_cells, 0);
      for (double t : {0.0, 37.0, 126.0, 251.0}) {
        const Eigen::MatrixXd ref = reference_hamiltonian(t, spec, kSched.t_final, d, draw.r);
        const Eigen::MatrixXd got = build_hamiltonian(t, spec, kSched, d, draw).dense().real();
        EXPECT_LE((ref - got).norm(), 1e-14) << to_string(kind) << " t=" << t;
      }
    }
  }
}

TEST(Hamiltonian, RateMatchesFiniteDifferenceAtFixedDraw) {
  LatticeSpec spec;
  for (auto kind : {DisorderKind::none, DisorderKind::hopping_bdi, DisorderKind::onsite_generic}) {
    const DisorderSpec d = make_disorder(kind, 0.2, 3);
    const DisorderDraw draw = sample_disorder(d, spec.n_cells, 0);
    const double t = 80.0, eps = 1e-4;
    const Eigen::MatrixXcd fd = (build_hamiltonian(t + eps, spec, kSched, d, draw).dense() -
                                 build_hamiltonian(t - eps, spec, kSched, d, draw).dense()) /
                                (2 * eps);
    EXPECT_LE((hamiltonian_rate(t, spec, kSched, d, draw).dense() - fd).norm(), 1e-9);
  }
}

TEST(Hamiltonian, HermitianForAllKinds) {
  LatticeSpec spec;
  for (auto kind : {DisorderKind::hopping_bdi, DisorderKind::onsite_generic,
                    DisorderKind::onsite_inversion_symmetric}) {
    const DisorderSpec d = make_disorder(kind, 0.2, 5);
    const DisorderDraw draw = sample_disorder(d, spec.n_cells, 0);
    const Eigen::MatrixXcd h = build_hamiltonian(90.0, spec, kSched, d, draw).dense();
    EXPECT_LE((h - h.adjoint()).norm(), 1e-12);
  }
}

TEST(Hamiltonian, HoppingDisorderKeepsChiralSymmetry) {
  LatticeSpec spec;
  const Eigen::MatrixXcd s = chiral_operator(spec.n_cells).cast<Complex>();
  for (std::uint64_t k = 0; k < 20; ++k) {
    const DisorderSpec d = make_disorder(DisorderKind::hopping_bdi, 0.2, k);
    const DisorderDraw draw = sample_disorder(d, spec.n_cells, 0);
    for (double t : {0.0, 50.0, 126.0, 252.0}) {
      const Eigen::MatrixXcd h = build_hamiltonian(t, spec, kSched, d, draw).dense();
      EXPECT_LE((s * h * s + h).norm(), 1e-12);
    }
  }
}

TEST(Hamiltonian, HoppingDisorderVanishesWithIntracellBonds) {
  LatticeSpec spec;
  const DisorderSpec d = make_disorder(DisorderKind::hopping_bdi, 0.2, 1);
  const DisorderDraw draw = sample_disorder(d, spec.n_cells, 0);
  for (double t : {0.0, 252.0}) {
    const HamiltonianMatrix h = build_hamiltonian(t, spec, kSched, d, draw);
    EXPECT_LE(std::abs(h.bonds(0)), 1e-12);
    EXPECT_LE(std::abs(h.bonds(h.bonds.size() - 1)), 1e-12);
  }
}

TEST(Hamiltonian, InversionSymmetricDisorderKeepsInversion) {
  LatticeSpec spec;
  const Eigen::MatrixXcd inv = inversion_operator(spec.n_cells).cast<Complex>();
  for (std::uint64_t k = 0; k < 20; ++k) {
    const DisorderSpec d = make_disorder(DisorderKind::onsite_inversion_symmetric, 0.2, k);
    const DisorderDraw draw = sample_disorder(d, spec.n_cells, 0);
    for (double t : {0.0, 63.0, 126.0, 252.0}) {
      const Eigen::MatrixXcd h = build_hamiltonian(t, spec, kSched, d, draw).dense();
      EXPECT_LE((inv * h * inv - h).norm(), 1e-12);
    }
  }
}

TEST(Hamiltonian, GenericOnsiteBreaksChiralAndInversion) {
  LatticeSpec spec;
  const Eigen::MatrixXcd s = chiral_operator(spec.n_cells).cast<Complex>();
  const Eigen::MatrixXcd inv = inversion_operator(spec.n_cells).cast<Complex>();
  const DisorderSpec d = make_disorder(DisorderKind::onsite_generic, 0.2, 0);
  const Eigen::MatrixXcd h = build_hamiltonian(100.0, spec, kSched, d, sample_disorder(d, spec.n_cells, 0)).dense();
  EXPECT_GT((s * h * s + h).norm(), 1e-3);
  EXPECT_GT((inv * h * inv - h).norm(), 1e-3);
}

TEST(Hamiltonian, CleanEndSitesDecoupledAtEndpoints) {
  LatticeSpec spec;
  for (double t : {0.0, 252.0}) {
    const Eigen::MatrixXcd h = build_hamiltonian(t, spec, kSched, DisorderSpec{}, DisorderDraw{}).dense();
    EXPECT_LE(h.row(0).norm(), 1e-12);
    EXPECT_LE(h.row(15).norm(), 1e-12);
  }
}

TEST(Hamiltonian, RejectsMismatchedDraw) {
  LatticeSpec spec;
  const DisorderSpec d = make_disorder(DisorderKind::hopping_bdi, 0.2);
  DisorderDraw draw = sample_disorder(d, spec.n_cells, 0);
  draw.r.push_back(0.0);
  EXPECT_THROW(build_hamiltonian(1.0, spec, kSched, d, draw), std::invalid_argument);
  EXPECT_THROW(build_hamiltonian(1.0, spec, kSched, d, DisorderDraw{}), std::invalid_argument);
  DisorderSpec neg = d;
  neg.strength = -0.1;
  EXPECT_THROW(build_hamiltonian(1.0, spec, kSched, neg, sample_disorder(d, spec.n_cells, 0)),
               std::invalid_argument);
}

TEST(Operators, InvolutionsAndInversionOfSiteOne) {
  for (int n : {2, 5, 8}) {
    const Eigen::MatrixXd s = chiral_operator(n);
    const Eigen::MatrixXd inv = inversion_operator(n);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    EXPECT_EQ((s * s - id).norm(), 0.0);
    EXPECT_EQ((inv * inv - id).norm(), 0.0);
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(2 * n);
    e1(0) = 1.0;
    const Eigen::VectorXd img = inv * e1;
    EXPECT_EQ(img(2 * n - 1), 1.0);
    EXPECT_EQ(img.sum(), 1.0);
    EXPECT_EQ(s(0, 0), 1.0);
    EXPECT_EQ(s(1, 1), -1.0);
  }
}

TEST(Operators, CleanHamiltonianIsInversionSymmetric) {
  LatticeSpec spec;
  const Eigen::MatrixXcd inv = inversion_operator(spec.n_cells).cast<Complex>();
  for (double t : {0.0, 20.0, 126.0, 200.0, 252.0}) {
    const Eigen::MatrixXcd h = build_hamiltonian(t, spec, kSched, DisorderSpec{}, DisorderDraw{}).dense();
    EXPECT_LE((inv * h * inv - h).norm(), 1e-12);
  }
}

TEST(Bloch, SpecialMomenta) {
  const double v = 0.6, w = 1.0;
  Eigen::Matrix2cd sx;
  sx << 0, 1, 1, 0;
  EXPECT_LE((bloch_hamiltonian(0.0, v, w) - (v + w) * sx).norm(), 1e-15);
  EXPECT_LE((bloch_hamiltonian(std::numbers::pi, v, w) - (v - w) * sx).norm(), 1e-15);
}

TEST(Bloch, SymmetryResidualsVanishOnGrid) {
  Eigen::Matrix2cd sx, sz;
  sx << 0, 1, 1, 0;
  sz << 1, 0, 0, -1;
  for (double v : {0.0, 0.3, 0.6}) {
    for (int i = 0; i < 101; ++i) {
      const double k = -std::numbers::pi + 2 * std::numbers::pi * i / 100;
      const Eigen::Matrix2cd hk = bloch_hamiltonian(k, v, 1.0), hmk = bloch_hamiltonian(-k, v, 1.0);
      EXPECT_LE((sz * hk * sz + hk).norm(), 1e-12);
      EXPECT_LE((hk.conjugate() - hmk).norm(), 1e-12);
      EXPECT_LE((sz * hk.conjugate() * sz + hmk).norm(), 1e-12);
      EXPECT_LE((sx * hk * sx - hmk).norm(), 1e-12);
    }
  }
}

TEST(Bloch, BandEnergyMatchesDispersion) {
  // |E(k)| = sqrt(v^2 + w^2 + 2 v w cos k)
  for (double k : {0.0, 0.7, 2.0, 3.1}) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(bloch_hamiltonian(k, 0.6, 1.0));
    EXPECT_NEAR(es.eigenvalues()(1), std::sqrt(0.36 + 1.0 + 1.2 * std::cos(k)), 1e-14);
    EXPECT_NEAR(es.eigenvalues()(0), -es.eigenvalues()(1), 1e-14);
  }
}

TEST(Disorder, StaticDrawIgnoresStep) {
  const DisorderSpec d = make_disorder(DisorderKind::onsite_generic, 0.2, 4);
  EXPECT_EQ(sample_disorder(d, 8, 0).r, sample_disorder(d, 8, 7).r);
  EXPECT_EQ(draw_index_for_step(d, kSched, 7), 0u);
}

TEST(Disorder, TemporalDrawChangesPerStep) {
  const DisorderSpec d = make_disorder(DisorderKind::onsite_generic, 0.2, 4, TemporalPolicy::resample_every_step);
  EXPECT_NE(sample_disorder(d, 8, draw_index_for_step(d, kSched, 0)).r,
            sample_disorder(d, 8, draw_index_for_step(d, kSched, 1)).r);
  EXPECT_EQ(draw_index_for_step(d, kSched, 123), 123u);
}

TEST(Disorder, RefreshIntervalGroupsSteps) {
  DisorderSpec d = make_disorder(DisorderKind::onsite_generic, 0.2, 0, TemporalPolicy::resample_every_step);
  d.refresh_interval = 1.0;
  const Schedule sched{10.0, 100};  // dt = 0.1
  EXPECT_EQ(draw_index_for_step(d, sched, 0), 0u);
  EXPECT_EQ(draw_index_for_step(d, sched, 9), 0u);
  EXPECT_EQ(draw_index_for_step(d, sched, 10), 1u);
  EXPECT_EQ(draw_index_for_step(d, sched, 99), 9u);
}

TEST(Disorder, InversionSymmetricDrawIsMirrored) {
  for (std::uint64_t k = 0; k < 10; ++k) {
    const auto r = sample_disorder(make_disorder(DisorderKind::onsite_inversion_symmetric, 0.2, k), 8, 0).r;
    ASSERT_EQ(r.size(), 16u);
    for (int n = 0; n < 16; ++n) EXPECT_EQ(r[n], r[15 - n]);
  }
}

TEST(Disorder, DrawLengths) {
  EXPECT_EQ(draw_length(DisorderKind::none, 8), 0u);
  EXPECT_EQ(draw_length(DisorderKind::hopping_bdi, 8), 15u);
  EXPECT_EQ(draw_length(DisorderKind::onsite_generic, 8), 16u);
  EXPECT_EQ(draw_length(DisorderKind::onsite_inversion_symmetric, 8), 16u);
  EXPECT_TRUE(sample_disorder(DisorderSpec{}, 8, 0).empty());
}

TEST(Disorder, UniformEntriesInRangeWithUniformMoments) {
  // 10^5 samples: range [-0.5, 0.5], mean 0, variance 1/12.
  const DisorderSpec d = make_disorder(DisorderKind::onsite_generic, 0.2, 0, TemporalPolicy::resample_every_step);
  double sum = 0, sum2 = 0;
  int count = 0;
  for (std::uint64_t step = 0; step < 6250; ++step) {
    for (double r : sample_disorder(d, 8, step).r) {
      ASSERT_GE(r, -0.5);
      ASSERT_LE(r, 0.5);
      sum += r;
      sum2 += r * r;
      ++count;
    }
  }
  ASSERT_EQ(count, 100000);
  const double mean = sum / count;
  EXPECT_NEAR(mean, 0.0, 5 * std::sqrt(1.0 / 12 / count));
  EXPECT_NEAR(sum2 / count - mean * mean, 1.0 / 12, 0.002);
}

TEST(Disorder, CounterKeyIsReproducibleAndSensitive) {
  const double a = counter_uniform(1, 2, 3, 4);
  EXPECT_EQ(a, counter_uniform(1, 2, 3, 4));
  std::set<double> distinct{a, counter_uniform(2, 2, 3, 4), counter_uniform(1, 3, 3, 4), counter_uniform(1, 2, 4, 4),
                            counter_uniform(1, 2, 3, 5)};
  EXPECT_EQ(distinct.size(), 5u);
}

TEST(Disorder, NamesRoundTrip) {
  for (auto k : {DisorderKind::none, DisorderKind::hopping_bdi, DisorderKind::onsite_generic,
                 DisorderKind::onsite_inversion_symmetric}) {
    EXPECT_EQ(parse_disorder_kind(to_string(k)), k);
  }
  EXPECT_EQ(parse_temporal_policy("static"), TemporalPolicy::static_draw);
  EXPECT_EQ(parse_temporal_policy("resample_every_step"), TemporalPolicy::resample_every_step);
  EXPECT_THROW(parse_disorder_kind("offsite"), ConfigError);
  EXPECT_THROW(parse_temporal_policy("sometimes"), ConfigError);
}

TEST(Disorder, Validation) {
  DisorderSpec d = make_disorder(DisorderKind::hopping_bdi, -0.1);
  EXPECT_THROW(d.validate(), ConfigError);
  d.strength = 0.1;
  d.refresh_interval = 0.0;
  EXPECT_THROW(d.validate(), ConfigError);
  d.refresh_interval = 2.0;
  EXPECT_NO_THROW(d.validate());
  EXPECT_FALSE(make_disorder(DisorderKind::hopping_bdi, 0.0).is_random());
  EXPECT_FALSE(make_disorder(DisorderKind::none, 0.3).is_random());
}
