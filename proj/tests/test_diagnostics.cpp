#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "exsd/diagnostics.hpp"
#include "exsd/scenarios.hpp"
#include "exsd/simulate.hpp"
#include "test_support.hpp"

using namespace exsd;
using testing_support::letters;
using testing_support::random_model;
using testing_support::random_stream;

namespace {

// Two types: A (index 0) is gated off in state 1, B (index 1) toggles the state.
ModelSpec pause_model() {
  ModelSpec m;
  m.taxonomy = letters(2, 2);
  m.variant = Variant::EXSD_HAWKES;
  m.transition = TransitionKernel(2, 2);
  m.transition.phi(0, 0, 0) = 1.0;
  m.transition.phi(1, 0, 1) = 1.0;
  m.transition.phi(1, 1, 0) = 1.0;
  for (std::size_t e = 0; e < 2; ++e)
    for (std::size_t x = 0; x < 2; ++x) m.transition.normalize_row(e, x);
  m.hawkes = HawkesParams(2, 2);
  m.hawkes.nu = {1.0, 1.0};
  return m;
}

ModelSpec unit_poisson() {
  ModelSpec m;
  m.taxonomy = letters(1, 1);
  m.variant = Variant::POISSON;
  m.transition = TransitionKernel(1, 1);
  m.transition.phi(0, 0, 0) = 1.0;
  m.transition.gate(0, 0) = 1.0;
  m.hawkes = HawkesParams(1, 1);
  return m;
}

std::vector<double> exp_quantile_grid(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = -std::log1p(-(static_cast<double>(i) + 0.5) / static_cast<double>(n));
  return v;
}

}  // namespace

TEST(EventResiduals, UnitRateGivesOnes) {
  EventStream s;
  s.horizon = 4.0;
  s.records = {{1.0, 0, 0, 0}, {2.0, 0, 0, 0}, {3.0, 0, 0, 0}};
  const auto r = event_residuals(s, unit_poisson());
  ASSERT_EQ(r.size(), 1u);
  ASSERT_EQ(r[0].values.size(), 3u);
  for (double v : r[0].values) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(EventResiduals, GateOffIntervalPausesIntegration) {
  EventStream s;
  s.horizon = 4.0;
  s.records = {{1.0, 1, 0, 1}, {2.0, 1, 1, 0}, {3.0, 0, 0, 0}};
  const auto r = event_residuals(s, pause_model());
  ASSERT_EQ(r[0].values.size(), 1u);
  EXPECT_EQ(r[0].values[0], 2.0);
}

TEST(EventResiduals, InadmissibleRecordIsRejected) {
  EventStream s;
  s.horizon = 4.0;
  s.records = {{1.0, 1, 0, 1}, {2.0, 0, 1, 1}};
  try {
    event_residuals(s, pause_model());
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("record 2"), std::string::npos) << e.what();
  }
}

TEST(EventResiduals, SumEqualsCompensatorToLastArrival) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = random_model(4, 2, 100 + seed, Variant::EXSD_HAWKES);
    const auto s = random_stream(m, 400, 200.0, 200 + seed);
    const auto r = event_residuals(s, m);
    for (std::size_t e = 0; e < 4; ++e) {
      double last = 0.0;
      for (const auto& rec : s.records)
        if (rec.event == e) last = rec.time;
      double sum = 0.0;
      for (double v : r[e].values) sum += v;
      EXPECT_NEAR(sum, gated_compensator(s, m, last)[e], 1e-8);
    }
  }
}

TEST(EventResiduals, AllNonNegative) {
  const auto m = random_model(3, 3, 8, Variant::EXSD_HAWKES);
  const auto s = random_stream(m, 300, 100.0, 9);
  for (const auto& series : event_residuals(s, m))
    for (double v : series.values) EXPECT_GE(v, 0.0);
  for (const auto& series : total_residuals(s, m))
    for (double v : series.values) EXPECT_GE(v, 0.0);
}

TEST(TotalResiduals, PairMassEqualsEventMassOverSameInterval) {
  // Build a stream where the final two records are e->x for every x, at nearly the
  // same time, so every pair series closes at (almost) the same instant.
  const auto m = random_model(2, 2, 41, Variant::SD_HAWKES);
  auto s = random_stream(m, 200, 100.0, 42);
  std::size_t state = s.records.empty() ? 0 : s.records.back().state_after;
  const double t0 = s.records.empty() ? 1.0 : s.records.back().time;
  // Close pair (0, y) for y = 0, 1 and then re-close the event series at the same point.
  s.records.push_back({t0 + 1.0, 0, static_cast<StateIndex>(state), 0});
  s.records.push_back({t0 + 1.0 + 1e-9, 0, 0, 1});
  s.horizon = t0 + 5.0;
  const auto ev = event_residuals(s, m);
  const auto tot = total_residuals(s, m);
  double pair_mass = 0.0;
  for (std::size_t x = 0; x < 2; ++x)
    for (double v : tot[x].values) pair_mass += v;
  double event_mass = 0.0;
  for (double v : ev[0].values) event_mass += v;
  // The pair (0,0) series stops 1e-9 s before the event series; that gap holds at
  // most lambda * 1e-9 of mass.
  EXPECT_NEAR(pair_mass, event_mass, 1e-7);
}

TEST(TotalResiduals, SingleStateCollapsesToEventWise) {
  const auto m = random_model(3, 1, 51, Variant::EXSD_HAWKES);
  const auto s = random_stream(m, 200, 60.0, 52);
  const auto ev = event_residuals(s, m);
  const auto tot = total_residuals(s, m);
  ASSERT_EQ(ev.size(), tot.size());
  for (std::size_t e = 0; e < ev.size(); ++e) {
    EXPECT_EQ(ev[e].key, tot[e].key);
    ASSERT_EQ(ev[e].values.size(), tot[e].values.size());
    for (std::size_t i = 0; i < ev[e].values.size(); ++i)
      EXPECT_NEAR(ev[e].values[i], tot[e].values[i], 1e-12 * std::max(1.0, ev[e].values[i]));
  }
}

TEST(TotalResiduals, ZeroTransitionProbabilityContributesNothing) {
  auto m = pause_model();
  // A never moves the book to state 1, so pair (A, S1) accrues no mass.
  EventStream s;
  s.horizon = 10.0;
  s.records = {{1.0, 0, 0, 0}, {2.0, 1, 0, 1}, {3.0, 1, 1, 0}, {4.0, 0, 0, 0}};
  const auto tot = total_residuals(s, m);
  EXPECT_TRUE(tot[0 * 2 + 1].values.empty());
  ASSERT_EQ(tot[0].values.size(), 2u);
  EXPECT_DOUBLE_EQ(tot[0].values[0], 1.0);
  EXPECT_DOUBLE_EQ(tot[0].values[1], 2.0);
}

TEST(TotalResiduals, KeysNameEventAndState) {
  const auto m = pause_model();
  EventStream s;
  s.horizon = 1.0;
  const auto tot = total_residuals(s, m);
  ASSERT_EQ(tot.size(), 4u);
  EXPECT_EQ(tot[1].key, "E0|S1");
  EXPECT_EQ(tot[2].key, "E1|S0");
}

TEST(Qq, SingletonOnDiagonal) {
  const auto q = qq_exp1(std::vector<double>{std::log(2.0)});
  EXPECT_NEAR(q.theoretical_quantiles[0], std::log(2.0), 1e-15);
  EXPECT_NEAR(q.empirical_quantiles[0], q.theoretical_quantiles[0], 1e-15);
}

TEST(Qq, ExactGridHugsDiagonal) {
  auto v = exp_quantile_grid(10'000);
  std::shuffle(v.begin(), v.end(), std::mt19937_64(3));
  const auto q = qq_exp1(v);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_LT(std::abs(q.empirical_quantiles[i] - q.theoretical_quantiles[i]), 0.05);
    if (i > 0) {
      EXPECT_LE(q.empirical_quantiles[i - 1], q.empirical_quantiles[i]);
    }
  }
}

TEST(Qq, ConstantSeriesIsFlat) {
  const auto q = qq_exp1(std::vector<double>(100, 0.1));
  EXPECT_EQ(q.empirical_quantiles.front(), q.empirical_quantiles.back());
  EXPECT_GT(q.theoretical_quantiles.back() - q.empirical_quantiles.back(), 3.0);
}

TEST(Qq, EmptyThrows) { EXPECT_THROW(qq_exp1(std::vector<double>{}), Error); }

TEST(Acf, WhiteNoiseMostlyInsideBand) {
  std::mt19937_64 rng(11);
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> v(10'000);
  for (auto& x : v) x = ex(rng);
  const auto a = acf(v, 20);
  EXPECT_EQ(a.acf[0], 1.0);
  EXPECT_NEAR(a.band, 1.96 / 100.0, 1e-15);
  EXPECT_GE(a.fraction_inside(), 0.9);
}

TEST(Acf, AlternatingSeries) {
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(i % 2 ? 3.0 : 1.0);
  const auto a = acf(v, 2);
  EXPECT_NEAR(a.acf[1], -1.0, 2e-3);
  EXPECT_NEAR(a.acf[2], 1.0, 3e-3);
}

TEST(Acf, TooShortThrows) { EXPECT_THROW(acf(std::vector<double>{1, 2, 3}, 3), Error); }

TEST(CrossCorrelation, IdenticalSeriesAtLagZero) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> nd;
  std::vector<double> a(500);
  for (auto& x : a) x = nd(rng);
  const auto c = cross_correlation(a, a, 3);
  EXPECT_NEAR(c[0], 1.0, 1e-12);
  std::vector<double> b(a.begin() + 1, a.end());
  b.push_back(0.0);
  // b[i] = a[i + 1], so corr(b[i], a[i + 1]) is one at lag 1.
  const auto d = cross_correlation(b, a, 2);
  EXPECT_GT(d[1], 0.99);
  EXPECT_LT(std::abs(d[0]), 0.15);
}

TEST(Ks, ExactGridSmallStatistic) {
  const auto r = ks_exp1(exp_quantile_grid(1000));
  EXPECT_LT(r.statistic, 0.02);
  EXPECT_GT(r.p_value, 0.99);
}

TEST(Ks, AllZerosStatisticOne) { EXPECT_DOUBLE_EQ(ks_exp1(std::vector<double>(50, 0.0)).statistic, 1.0); }

TEST(Ks, UniformSampleRejected) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(10'000);
  for (auto& x : v) x = u(rng);
  EXPECT_LT(ks_exp1(v).p_value, 1e-10);
}

TEST(Ks, KolmogorovSurvivalKnownValues) {
  // Tabulated critical values of the limiting distribution.
  EXPECT_NEAR(kolmogorov_survival(1.3581), 0.05, 5e-5);
  EXPECT_NEAR(kolmogorov_survival(1.6276), 0.01, 5e-5);
  EXPECT_NEAR(kolmogorov_survival(1.2238), 0.10, 5e-5);
  EXPECT_NEAR(kolmogorov_survival(0.8276), 0.50, 5e-4);
  // Both branches agree at the switch point.
  EXPECT_NEAR(kolmogorov_survival(1.18 - 1e-12), kolmogorov_survival(1.18), 1e-10);
}

TEST(Stability, HandDerivedEigenvalue) {
  Matrix K(2, 2);
  K(0, 0) = 0.2;
  K(0, 1) = 0.1;
  K(1, 0) = 0.1;
  K(1, 1) = 0.2;
  const auto pi = spectral_radius(K);
  EXPECT_TRUE(pi.converged);
  EXPECT_NEAR(pi.rho, 0.3, 1e-9);
}

TEST(Stability, ZeroKernelIsSubCritical) {
  ModelSpec m = unit_poisson();
  const auto rep = stability_report(m);
  EXPECT_EQ(rep.spectral[0], 0.0);
  EXPECT_EQ(rep.regime[0], Regime::SUB_CRITICAL);
}

TEST(Stability, PeriodicMatrixConverges) {
  Matrix K(2, 2);
  K(0, 1) = 2.0;
  K(1, 0) = 0.5;
  const auto pi = spectral_radius(K);
  EXPECT_TRUE(pi.converged);
  EXPECT_NEAR(pi.rho, 1.0, 1e-9);
}

TEST(Stability, PerronFrobeniusBounds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = random_model(5, 3, 300 + seed, Variant::EXSD_HAWKES);
    const auto rep = stability_report(m);
    for (std::size_t x = 0; x < 3; ++x) {
      const auto K = kernel_matrix(m, x);
      double lo = 1e300, hi = 0.0;
      for (std::size_t j = 0; j < 5; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < 5; ++i) col += K(i, j);
        lo = std::min(lo, col);
        hi = std::max(hi, col);
      }
      EXPECT_GE(rep.spectral[x], lo - 1e-9);
      EXPECT_LE(rep.spectral[x], hi + 1e-9);
    }
  }
}

TEST(Stability, DualRegimeScenario) {
  const auto sc = make_scenario("dual-regime");
  const auto rep = stability_report(sc.model);
  EXPECT_NEAR(rep.spectral[0], kDualRegimeRhoEquilibrium, 0.01 * kDualRegimeRhoEquilibrium);
  EXPECT_NEAR(rep.spectral[1], kDualRegimeRhoDisequilibrium, 0.01 * kDualRegimeRhoDisequilibrium);
  EXPECT_EQ(rep.regime[0], Regime::SUB_CRITICAL);
  EXPECT_EQ(rep.regime[1], Regime::SUPER_CRITICAL);
}

TEST(Stability, IterationCapReportsNonConvergence) {
  const auto sc = make_scenario("dual-regime");
  EXPECT_FALSE(spectral_radius(kernel_matrix(sc.model, 1), 1e-10, 1).converged);
}

TEST(Residuals, SelfSimulatedWhitening) {
  const auto m = random_model(2, 2, 61, Variant::EXSD_HAWKES);
  const auto r = simulate(m, ImpactTable{Matrix(2, 2)}, 40'000.0, 0, 62);
  for (const auto& s : event_residuals(r.stream, m)) {
    const double n = static_cast<double>(s.values.size());
    ASSERT_GE(n, 1000.0);
    double mean = 0.0;
    for (double v : s.values) mean += v;
    mean /= n;
    EXPECT_LE(std::abs(mean - 1.0), 3.0 / std::sqrt(n)) << s.key;
    EXPECT_GT(ks_exp1(s).p_value, 0.01) << s.key;
  }
}
