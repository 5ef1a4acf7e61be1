#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace freight;

namespace {

std::vector<double> power_law_samples(double a1, double a2, double brk, double lo, double hi, std::size_t n,
                                      std::uint64_t seed) {
  oracle::two_segment_power_law draw(a1, a2, brk, lo, hi);
  std::mt19937_64 rng(seed);
  std::vector<double> xs(n);
  for (auto& x : xs) x = draw(rng);
  return xs;
}

// Expected counts of a lognormal with the given mode over 0.1 km/h bins.
std::vector<double> lognormal_bin_counts(double mode, double sigma, double total, std::size_t bins, double width) {
  const double mu = std::log(mode) + sigma * sigma;
  auto cdf = [&](double x) { return x <= 0.0 ? 0.0 : 0.5 * std::erfc(-(std::log(x) - mu) / (sigma * std::sqrt(2.0))); };
  std::vector<double> out(bins);
  for (std::size_t i = 0; i < bins; ++i) out[i] = total * (cdf((i + 1) * width) - cdf(i * width));
  return out;
}

std::size_t count_at_most(const std::vector<double>& xs, double r) {
  return static_cast<std::size_t>(std::count_if(xs.begin(), xs.end(), [&](double x) { return x <= r; }));
}

} // namespace

TEST(Histogram, LandsSamplesInLeftClosedBins) {
  const std::vector<double> a{0.5, 1.5};
  EXPECT_EQ(build_histogram(a, 1.0, 0.0).hist.counts, (std::vector<std::uint64_t>{1, 1}));
  EXPECT_TRUE(build_histogram(std::vector<double>{}, 1.0, 0.0).hist.counts.empty());
  const std::vector<double> b{0.999999, 1.0};
  EXPECT_EQ(build_histogram(b, 1.0, 0.0).hist.counts, (std::vector<std::uint64_t>{1, 1}));
  const std::vector<double> c{-1.0, 0.2, 2.0};
  const auto built = build_histogram(c, 1.0, 0.0);
  EXPECT_EQ(built.rejected_below_origin, 1u);
  EXPECT_EQ(built.hist.total(), 2u);
}

TEST(SpeedThreshold, MixtureBoundaryIsBracketed) {
  // Erratic drift counts on [0, 1.1) km/h on top of a smooth traffic
  // lognormal peaking at 60 km/h.
  const double width = 0.1;
  const auto smooth = lognormal_bin_counts(60.0, 1.5, 1e9, 1500, width);
  std::mt19937_64 rng(2);
  std::lognormal_distribution<double> rough(std::log(3000.0), 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    histogram h;
    h.bin_width = width;
    for (std::size_t i = 0; i < smooth.size(); ++i) {
      const double jitter = i < 11 ? rough(rng) : 0.0;
      h.counts.push_back(static_cast<std::uint64_t>(std::llround(smooth[i] + jitter)));
    }
    const auto d = detect_speed_threshold(h);
    EXPECT_FALSE(d.fallback);
    EXPECT_GE(d.value, 0.8);
    EXPECT_LE(d.value, 1.4);
  }
}

TEST(SpeedThreshold, AllSmoothReturnsFirstEdge) {
  histogram h;
  h.origin = 0.0;
  h.bin_width = 0.1;
  for (int i = 0; i < 50; ++i) h.counts.push_back(1000 + 10 * i);
  const auto d = detect_speed_threshold(h);
  EXPECT_FALSE(d.fallback);
  EXPECT_EQ(d.value, 0.0);
}

TEST(SpeedThreshold, NoSmoothRegionFallsBack) {
  histogram h;
  h.bin_width = 0.1;
  for (int i = 0; i < 50; ++i) h.counts.push_back(i % 2 == 0 ? 10 : 10000);
  const auto d = detect_speed_threshold(h);
  EXPECT_TRUE(d.fallback);
  EXPECT_EQ(d.value, 1.1);
}

TEST(SpeedThreshold, TooFewPopulatedBins) {
  histogram h;
  h.bin_width = 0.1;
  h.counts = {5, 0, 5, 5, 5, 5, 5, 5, 5, 0, 0};
  EXPECT_THROW(detect_speed_threshold(h), insufficient_data_error);
}

TEST(BrokenPowerLaw, RecoversPlantedParameters) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto xs = power_law_samples(1.3, 0.6, 1440.0, 60.0, 46800.0, 100'000, seed);
    const auto fit = fit_broken_power_law(xs);
    EXPECT_NEAR(fit.break_point, 1440.0, 0.15 * 1440.0) << "seed " << seed;
    EXPECT_NEAR(fit.alpha1, 1.3, 0.1) << "seed " << seed;
    EXPECT_NEAR(fit.alpha2, 0.6, 0.1) << "seed " << seed;
    EXPECT_LT(fit.break_point, 46800.0);
    EXPECT_GT(fit.break_point, xs.empty() ? 0.0 : *std::min_element(xs.begin(), xs.end()));
  }
}

TEST(BrokenPowerLaw, IndependentUnweightedLinesAlsoRecoverAtLargeN) {
  power_law_options opts;
  opts.joined = false;
  opts.count_weighted = false;
  const auto xs = power_law_samples(1.3, 0.6, 1440.0, 60.0, 46800.0, 100'000, 7);
  const auto fit = fit_broken_power_law(xs, opts);
  EXPECT_NEAR(fit.break_point, 1440.0, 0.15 * 1440.0);
  EXPECT_NEAR(fit.alpha1, 1.3, 0.1);
  EXPECT_NEAR(fit.alpha2, 0.6, 0.1);
}

TEST(BrokenPowerLaw, SinglePowerLawGivesEqualSlopes) {
  const auto xs = power_law_samples(1.0, 1.0, 1000.0, 10.0, 100'000.0, 100'000, 3);
  const auto fit = fit_broken_power_law(xs);
  EXPECT_NEAR(fit.alpha1, 1.0, 0.1);
  EXPECT_NEAR(fit.alpha2, 1.0, 0.1);
}

TEST(BrokenPowerLaw, DegenerateAndSmallInputsFail) {
  EXPECT_THROW(fit_broken_power_law(std::vector<double>(5000, 600.0)), fit_error);
  EXPECT_THROW(fit_broken_power_law(std::vector<double>(999, 600.0)), insufficient_data_error);
}

TEST(BrokenPowerLaw, ScaleEquivariant) {
  const auto xs = power_law_samples(1.3, 0.6, 1440.0, 60.0, 46800.0, 20'000, 11);
  const auto base = fit_broken_power_law(xs);
  for (double c : {0.01, 0.5, 2.5, 10.0, 1000.0}) {
    std::vector<double> scaled(xs);
    for (auto& x : scaled) x *= c;
    const auto fit = fit_broken_power_law(scaled);
    EXPECT_NEAR(fit.break_point / c, base.break_point, 1e-6 * base.break_point) << "c = " << c;
    EXPECT_NEAR(fit.alpha1, base.alpha1, 1e-6) << "c = " << c;
    EXPECT_NEAR(fit.alpha2, base.alpha2, 1e-6) << "c = " << c;
  }
}

TEST(BrokenPowerLaw, Deterministic) {
  const auto xs = power_law_samples(1.3, 0.6, 1440.0, 60.0, 46800.0, 20'000, 13);
  const auto a = fit_broken_power_law(xs), b = fit_broken_power_law(xs);
  EXPECT_EQ(a.break_point, b.break_point);
  EXPECT_EQ(a.alpha1, b.alpha1);
  EXPECT_EQ(a.alpha2, b.alpha2);
  EXPECT_EQ(a.fit_error, b.fit_error);
}

TEST(LatticeQuantum, SharedIntegerSpacing) {
  EXPECT_EQ(lattice_quantum(std::vector<double>{30, 60, 90}), 30.0);
  EXPECT_EQ(lattice_quantum(std::vector<double>{30, 45}), 15.0);
  EXPECT_EQ(lattice_quantum(std::vector<double>{30, 31}), 0.0);
  EXPECT_EQ(lattice_quantum(std::vector<double>{1.5, 3.0}), 0.0);
}

TEST(TimeThresholds, MixtureChangepointsAreFound) {
  // The upper changepoint is seen through a Poisson-noisy tail, so it is
  // judged by its hit rate over many realisations; the lower one must hold
  // on every realisation.
  const int trials = 30;
  int t_max_hits = 0;
  for (int seed = 1; seed <= trials; ++seed) {
    auto xs = power_law_samples(1.3, 0.6, 1440.0, 60.0, 46800.0, 100'000, seed);
    std::mt19937_64 rng(seed + 100);
    std::uniform_real_distribution<double> tail(46800.0, 300'000.0);
    for (int i = 0; i < 100; ++i) xs.push_back(tail(rng));
    const auto th = detect_time_thresholds(xs);
    EXPECT_FALSE(th.t_min.fallback);
    EXPECT_GE(th.t_min.value, 1224.0) << "seed " << seed;
    EXPECT_LE(th.t_min.value, 1656.0) << "seed " << seed;
    EXPECT_LT(th.t_min.value, th.t_max.value);
    if (!th.t_max.fallback && th.t_max.value >= 46800.0 / 1.5 && th.t_max.value <= 46800.0 * 1.5) ++t_max_hits;
  }
  EXPECT_GE(t_max_hits, 27);
}

TEST(TimeThresholds, CleanPowerLawFallsBackForUpperThreshold) {
  const auto xs = power_law_samples(1.3, 0.6, 1440.0, 60.0, 46800.0, 100'000, 21);
  const auto th = detect_time_thresholds(xs);
  EXPECT_TRUE(th.t_max.fallback);
  EXPECT_EQ(th.t_max.value, 46800.0);
  EXPECT_LT(th.t_min.value, th.t_max.value);
}

TEST(TimeThresholds, TooFewSamples) {
  EXPECT_THROW(detect_time_thresholds(std::vector<double>(500, 60.0)), insufficient_data_error);
}

TEST(TimeThresholds, MinimumAlwaysBelowMaximum) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> a(0.3, 2.0), brk(100.0, 20'000.0), hi(30'000.0, 500'000.0);
  for (int trial = 0; trial < 40; ++trial) {
    const double top = hi(rng);
    auto xs = power_law_samples(a(rng), a(rng), brk(rng), 30.0, top, 5000, rng());
    std::uniform_real_distribution<double> tail(top, 3.0 * top);
    const int extra = static_cast<int>(rng() % 60);
    for (int i = 0; i < extra; ++i) xs.push_back(tail(rng));
    const auto th = detect_time_thresholds(xs);
    ASSERT_LT(th.t_min.value, th.t_max.value) << "trial " << trial;
  }
}

TEST(PoiRadii, RayleighModeAndDoublingRule) {
  // Stratified quantiles keep histogram sampling noise below one bin.
  const std::size_t n = 200'000;
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = oracle::rayleigh_quantile(350.0, (i + 0.5) / n);
  const auto d = detect_poi_radii(poi_category::factory, xs);
  EXPECT_NEAR(d.params.valid_radius_m, 350.0, 5.0);
  EXPECT_LT(d.params.valid_radius_m, d.params.poi_radius_m);
  const std::size_t at_valid = count_at_most(xs, d.params.valid_radius_m);
  EXPECT_GE(count_at_most(xs, d.params.poi_radius_m), 2 * at_valid);
  std::vector<double> sorted(xs);
  std::sort(sorted.begin(), sorted.end());
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), d.params.poi_radius_m);
  ASSERT_NE(it, sorted.begin());
  EXPECT_LT(count_at_most(xs, *std::prev(it)), 2 * at_valid);
}

TEST(PoiRadii, RandomSamplesAgreeWithBruteForceScan) {
  std::mt19937_64 rng(41);
  int unreachable = 0;
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_real_distribution<double> scale(50.0, 500.0);
    const double s = scale(rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> xs(600);
    for (auto& x : xs) x = std::round(oracle::rayleigh_quantile(s, u(rng)) * 10.0) / 10.0;
    const double peak = oracle::smoothed_peak_center(xs, 5.0, 2000.0, 3);
    poi_radius_detection d;
    try {
      d = detect_poi_radii(poi_category::logistics_warehouse, xs);
    } catch (const radius_unreachable_error&) {
      // Legitimate only when the peak already holds more than half the mass.
      EXPECT_GT(2.0 * oracle::empirical_cdf(xs, peak), 1.0);
      ++unreachable;
      continue;
    }
    EXPECT_EQ(d.params.valid_radius_m, peak);
    const auto expected = oracle::doubling_radius_scan(xs, d.params.valid_radius_m);
    ASSERT_TRUE(expected.has_value());
    EXPECT_EQ(d.params.poi_radius_m, *expected);
    EXPECT_LT(d.params.valid_radius_m, d.params.poi_radius_m);
    EXPECT_GE(oracle::empirical_cdf(xs, d.params.poi_radius_m), 2.0 * oracle::empirical_cdf(xs, d.params.valid_radius_m));
  }
  EXPECT_LT(unreachable, 10);
}

TEST(PoiRadii, PointMassIsUnreachable) {
  EXPECT_THROW(detect_poi_radii(poi_category::factory, std::vector<double>(1000, 100.0)), radius_unreachable_error);
}

TEST(PoiRadii, TooFewSamples) {
  EXPECT_THROW(detect_poi_radii(poi_category::factory, std::vector<double>(499, 100.0)), insufficient_data_error);
}
