#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spinsim/dynamics.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/photonstats.hpp"

using namespace spinsim;

namespace {

FitData noiseless(const std::vector<double>& c, const std::vector<double>& tau, bool binned) {
  EmpiricalFit truth;
  truth.order = static_cast<int>(c.size());
  truth.c = c;
  truth.tau_s = tau;
  const auto t = log_delays(1e-10, 2e-4, 25);
  FitData d;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double lo = binned ? t[i] : t[i];
    const double hi = binned ? t[i + 1] : t[i];
    d.lo_s.push_back(lo);
    d.hi_s.push_back(hi);
    d.values.push_back(truth.bin_average(lo, hi));
    d.sigma.push_back(1e-3);
  }
  return d;
}

}  // namespace

TEST(EmpiricalFit, RecoversNoiselessThreeTermModel) {
  const std::vector<double> c{1.58, 1.7, 0.09};
  const std::vector<double> tau{1.2e-9, 1.48e-6, 16e-6};
  for (bool binned : {false, true}) {
    const auto fit = fit_empirical_order(noiseless(c, tau, binned), 3);
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(fit.c[k] / c[k], 1.0, 1e-6) << "C" << k + 1;
      EXPECT_NEAR(fit.tau_s[k] / tau[k], 1.0, 1e-6) << "tau" << k + 1;
    }
    EXPECT_LT(fit.chi2, 1e-10);
  }
}

TEST(EmpiricalFit, BinAverageMatchesQuadrature) {
  EmpiricalFit f;
  f.order = 2;
  f.c = {1.3, 0.8};
  f.tau_s = {2e-9, 1e-6};
  for (auto [lo, hi] : {std::pair{0.0, 1e-9}, std::pair{1e-9, 5e-9}, std::pair{1e-7, 3e-6}}) {
    const double oracle = oracle::simpson_average([&](double t) { return f.value(t); }, lo, hi, 2000);
    EXPECT_NEAR(f.bin_average(lo, hi), oracle, 1e-10);
  }
}

TEST(EmpiricalFit, PoissonHistogramSelectsThirdOrder) {
  const auto h = oracle::synthetic_histogram({1.58, 1.7, 0.09}, {1.2e-9, 1.48e-6, 16e-6}, 1e-10, 2e-4, 20, 1e6, 77);
  const auto sel = fit_empirical(FitData::from_histogram(h), {.orders = {2, 3, 4}});
  EXPECT_EQ(sel.best.order, 3);
  EXPECT_NEAR(sel.best.reduced_chi2, 1.0, 0.4);
}

TEST(EmpiricalFit, NonConsecutiveOrders) {
  // A lower-order fit only seeds the order directly above it.
  const auto sel = fit_empirical(noiseless({1.58, 1.7, 0.09}, {1.2e-9, 1.48e-6, 16e-6}, true), {.orders = {2, 4}});
  ASSERT_EQ(sel.candidates.size(), 2u);
  EXPECT_EQ(sel.candidates[0].order, 2);
  EXPECT_EQ(sel.candidates[1].order, 4);
  EXPECT_EQ(sel.best.order, 4);
}

TEST(EmpiricalFit, PureAntibunchingSelectsSecondOrderWithVanishingBunching) {
  const auto h = oracle::synthetic_histogram({1.0, 0.0}, {5e-9, 1e-6}, 1e-10, 1e-4, 20, 1e8, 3);
  const auto sel = fit_empirical(FitData::from_histogram(h), {.orders = {2, 3}});
  EXPECT_EQ(sel.best.order, 2);
  EXPECT_LT(std::abs(sel.best.c[1]), 3.0 * sel.best.c_sigma(1));
  EXPECT_LT(std::abs(sel.best.c[1]), 0.05);
  EXPECT_NEAR(sel.best.c[0], 1.0, 3.0 * sel.best.c_sigma(0));
}

TEST(EmpiricalFit, FlatHistogramIsUnidentifiable) {
  const auto h = oracle::synthetic_histogram({0.0, 0.0}, {5e-9, 1e-6}, 1e-9, 1e-4, 10, 1e6, 8);
  const FitData d = FitData::from_histogram(h);
  try {
    const auto sel = fit_empirical(d, {.orders = {2}});
    // If a fit is returned the dip amplitude must be negligible.
    EXPECT_LT(sel.best.c[0], 5.0 * sel.best.c_sigma(0) + 0.01);
  } catch (const NumericalError&) {
    SUCCEED();
  }
}

TEST(EmpiricalFit, CovarianceScalesWithNoise) {
  const auto small = oracle::synthetic_histogram({1.0, 1.0}, {3e-9, 2e-6}, 1e-10, 1e-4, 15, 1e6, 12);
  const auto large = oracle::synthetic_histogram({1.0, 1.0}, {3e-9, 2e-6}, 1e-10, 1e-4, 15, 1e8, 12);
  const auto fs = fit_empirical_order(FitData::from_histogram(small), 2);
  const auto fl = fit_empirical_order(FitData::from_histogram(large), 2);
  // sigma ~ 1/sqrt(N): a 100x larger sample has ~10x smaller errors.
  EXPECT_NEAR(fs.c_sigma(1) / fl.c_sigma(1), 10.0, 2.0);
  EXPECT_NEAR(fl.c[1], 1.0, 5.0 * fl.c_sigma(1));
}

TEST(EmpiricalFit, ShortDelayFormReportsZeroDelayValue) {
  // Constant bunching plateau over the short window.
  const auto h = oracle::synthetic_histogram({1.2, 0.5}, {1.5e-9, 1e-3}, 1e-11, 3e-8, 60, 4e5, 19);
  const auto fit = fit_short_delay(FitData::from_histogram(h), 3e-8);
  const double g0_true = 1.0 - 1.2 + 0.5 * std::exp(-1.5e-8 / 1e-3);
  EXPECT_NEAR(fit.g0(), g0_true, 3.0 * fit.g0_sigma());
  EXPECT_GT(fit.g0_sigma(), 0.0);
  EXPECT_NEAR(fit.tau1_s, 1.5e-9, 0.3e-9);
}

TEST(EmpiricalFit, InputValidation) {
  FitData d = noiseless({1.0, 0.5}, {1e-9, 1e-6}, false);
  EXPECT_THROW(fit_empirical_order(d, 5), ValidationError);
  d.sigma[3] = 0.0;
  EXPECT_THROW(fit_empirical_order(d, 2), ValidationError);
  FitData tiny = FitData::from_points({1e-9, 2e-9}, {0.5, 0.7}, {0.1, 0.1});
  EXPECT_THROW(fit_empirical_order(tiny, 2), ValidationError);
  EXPECT_THROW(fit_empirical(noiseless({1.0, 0.5}, {1e-9, 1e-6}, false), {.orders = {}}), ValidationError);
}
