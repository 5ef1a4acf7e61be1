#pragma once

#include "freight/error.hpp"
#include "freight/histogram.hpp"
#include "freight/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace freight {

// A calibrated value plus whether it came from the configured default.
struct detection {
  double value = 0.0;
  bool fallback = false;
};

namespace detail {

// Mean absolute successive difference of values[first .. first + n_diffs].
inline double roughness(std::span<const double> values, std::size_t first, std::size_t n_diffs) {
  double sum = 0.0;
  for (std::size_t j = first; j < first + n_diffs; ++j) sum += std::abs(values[j + 1] - values[j]);
  return sum / static_cast<double>(n_diffs);
}

struct segment_fit {
  double below_slope = 0.0;
  double above_slope = 0.0;
  double weighted_sse = 0.0;
  double sse = 0.0; // unweighted
};

// Weighted least squares for y against the basis functions f(x) of each row.
template <std::size_t N, class Basis>
std::array<double, N> weighted_normal_solve(std::span<const double> x, std::span<const double> y,
                                            std::span<const double> w, Basis basis) {
  double m[N][N + 1] = {};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::array<double, N> f = basis(x[i]);
    for (std::size_t r = 0; r < N; ++r) {
      for (std::size_t c = 0; c < N; ++c) m[r][c] += w[i] * f[r] * f[c];
      m[r][N] += w[i] * f[r] * y[i];
    }
  }
  std::array<double, N> coef{};
  for (std::size_t p = 0; p < N; ++p) {
    std::size_t piv = p;
    for (std::size_t r = p + 1; r < N; ++r)
      if (std::abs(m[r][p]) > std::abs(m[piv][p])) piv = r;
    std::swap(m[p], m[piv]);
    if (std::abs(m[p][p]) < 1e-300) {
      coef.fill(std::numeric_limits<double>::quiet_NaN());
      return coef;
    }
    for (std::size_t r = 0; r < N; ++r) {
      if (r == p) continue;
      const double k = m[r][p] / m[p][p];
      for (std::size_t c = p; c <= N; ++c) m[r][c] -= k * m[p][c];
    }
  }
  for (std::size_t r = 0; r < N; ++r) coef[r] = m[r][N] / m[r][r];
  return coef;
}

// Two lines split at xb (x < xb below). Joined lines share their value at xb.
inline segment_fit fit_two_segments(std::span<const double> x, std::span<const double> y, std::span<const double> w,
                                    double xb, bool joined) {
  segment_fit out;
  auto accumulate = [&](auto predict) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - predict(x[i]);
      out.weighted_sse += w[i] * r * r;
      out.sse += r * r;
    }
  };
  if (joined) {
    const auto c = weighted_normal_solve<3>(x, y, w, [xb](double v) {
      return std::array<double, 3>{1.0, std::min(v - xb, 0.0), std::max(v - xb, 0.0)};
    });
    out.below_slope = c[1];
    out.above_slope = c[2];
    accumulate([&](double v) { return c[0] + c[1] * std::min(v - xb, 0.0) + c[2] * std::max(v - xb, 0.0); });
  } else {
    const auto c = weighted_normal_solve<4>(x, y, w, [xb](double v) {
      const double lo = v < xb ? 1.0 : 0.0;
      return std::array<double, 4>{lo, lo * v, 1.0 - lo, (1.0 - lo) * v};
    });
    out.below_slope = c[1];
    out.above_slope = c[3];
    accumulate([&](double v) { return v < xb ? c[0] + c[1] * v : c[2] + c[3] * v; });
  }
  if (!std::isfinite(out.weighted_sse)) out.weighted_sse = std::numeric_limits<double>::infinity();
  return out;
}

} // namespace detail

// ---- speed threshold ------------------------------------------------------

struct speed_threshold_options {
  std::size_t window = 5;          // bins per roughness window
  double smoothness_ratio = 0.2;   // roughness below this counts as smooth
  double default_kmh = 1.1;
  std::size_t min_populated_bins = 10;
};

// Finds where the erratic low-speed part of the pairwise speed histogram
// (GPS drift while parked) gives way to the smooth traffic-speed part.
//
// Roughness at bin i is the mean |log(c[j+1]+1) - log(c[j]+1)| over the w
// differences starting at i; the result is the left edge of the first bin
// whose roughness is below the smoothness ratio.
inline detection detect_speed_threshold(const histogram& speeds, const speed_threshold_options& opts = {}) {
  if (speeds.populated_bins() < opts.min_populated_bins)
    throw insufficient_data_error("speed threshold: fewer than " + std::to_string(opts.min_populated_bins) +
                                  " populated bins");
  if (opts.window == 0) throw config_error("speed threshold: window must be positive");
  std::vector<double> lv(speeds.counts.size());
  for (std::size_t i = 0; i < lv.size(); ++i) lv[i] = std::log(static_cast<double>(speeds.counts[i]) + 1.0);
  for (std::size_t i = 0; i + opts.window < lv.size(); ++i)
    if (detail::roughness(lv, i, opts.window) < opts.smoothness_ratio) return {speeds.left_edge(i), false};
  return {opts.default_kmh, true};
}

// ---- dwell-time thresholds --------------------------------------------------

struct broken_power_law_fit {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double break_point = 0.0;
  double fit_error = 0.0; // unweighted squared residual of log density
  std::size_t bins_below = 0;
  std::size_t bins_above = 0;
};

struct power_law_options {
  double bins_per_decade = 50.0;
  double break_min = 0.0; // candidate break range
  double break_max = std::numeric_limits<double>::infinity();
  std::size_t min_samples = 1000;
  double quantum = 0.0; // lattice spacing of the samples; 0 when continuous
  bool joined = true;         // segments meet at the break
  bool count_weighted = true; // bins weighted by their counts
};

// Largest integer spacing shared by all samples (e.g. the sampling interval
// for dwell times), or 0 when the samples are not on a coarser lattice.
inline double lattice_quantum(std::span<const double> samples) {
  std::int64_t g = 0;
  for (double x : samples) {
    if (!(x > 0.0)) continue;
    if (x != std::floor(x) || x > 9e15) return 0.0;
    g = std::gcd(g, static_cast<std::int64_t>(x));
    if (g == 1) return 0.0;
  }
  return g > 1 ? static_cast<double>(g) : 0.0;
}

namespace detail {

struct power_law_work {
  log_histogram hist;
  broken_power_law_fit fit;
};

inline power_law_work fit_broken_power_law_impl(std::span<const double> samples, const power_law_options& opts) {
  if (samples.size() < opts.min_samples)
    throw insufficient_data_error("broken power law: need at least " + std::to_string(opts.min_samples) +
                                  " samples, got " + std::to_string(samples.size()));
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double x : samples) {
    if (!(x > 0.0) || !std::isfinite(x)) continue;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (!(hi > lo)) throw fit_error("broken power law: samples occupy a single bin");

  power_law_work w;
  w.hist = build_log_histogram(samples, lo, hi, opts.bins_per_decade);
  w.hist.quantum = opts.quantum;
  const log_histogram& h = w.hist;

  std::vector<std::size_t> idx;
  std::vector<double> lx, ly, wt;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h.counts[i] == 0) continue;
    idx.push_back(i);
    lx.push_back(std::log(h.center(i)));
    ly.push_back(std::log(h.density(i)));
    wt.push_back(opts.count_weighted ? static_cast<double>(h.counts[i]) : 1.0);
  }

  bool found = false;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < h.size(); ++k) {
    const double edge = h.edges[k];
    if (edge < opts.break_min || edge > opts.break_max) continue;
    const auto split = static_cast<std::size_t>(std::lower_bound(idx.begin(), idx.end(), k) - idx.begin());
    if (split < 2 || idx.size() - split < 2) continue;
    const auto f = fit_two_segments(lx, ly, wt, std::log(edge), opts.joined);
    if (f.weighted_sse < best) {
      best = f.weighted_sse;
      found = true;
      w.fit = {-f.below_slope, -f.above_slope, edge, f.sse, split, idx.size() - split};
    }
  }
  if (!found) throw fit_error("broken power law: no candidate break has two populated bins on each side");
  return w;
}

} // namespace detail

// Two-segment least-squares fit of log density against log dwell on
// logarithmic bins. By default the segments meet at the break and each bin
// is weighted by its count (the inverse variance of a Poisson log count).
// Every interior bin edge inside the candidate range is tried as the break;
// the one minimising the total (weighted) squared residual wins.
inline broken_power_law_fit fit_broken_power_law(std::span<const double> samples,
                                                 const power_law_options& opts = {}) {
  return detail::fit_broken_power_law_impl(samples, opts).fit;
}

struct time_threshold_options {
  power_law_options fit;
  std::size_t window = 10;          // bins in the trailing roughness window
  double irregularity_ratio = 1.0;  // roughness above this marks the erratic tail
  double default_t_min = 1440.0;
  double default_t_max = 46800.0;
};

struct time_thresholds {
  detection t_min;
  detection t_max;
  broken_power_law_fit fit;
  std::size_t samples = 0;
};

// t_max is the left edge of the first bin beyond the provisional break whose
// trailing window of log densities is erratic. t_min is the break of the
// broken power law refitted below that window, so the erratic tail does not
// bend the upper segment.
inline time_thresholds detect_time_thresholds(std::span<const double> dwell_s,
                                              const time_threshold_options& opts = {}) {
  if (opts.window < 2) throw config_error("time thresholds: window must cover at least two bins");
  auto work = detail::fit_broken_power_law_impl(dwell_s, opts.fit);
  const log_histogram& h = work.hist;
  time_thresholds out;
  out.fit = work.fit;
  out.samples = dwell_s.size();
  out.t_min = {work.fit.break_point, false};

  // Bins that hold no lattice point cannot be populated and are skipped.
  std::vector<std::size_t> bins;
  std::vector<double> lv;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double support = h.support(i);
    if (support <= 0.0) continue;
    bins.push_back(i);
    lv.push_back(std::log((static_cast<double>(h.counts[i]) + 1.0) / support));
  }

  for (std::size_t k = opts.window - 1; k < bins.size(); ++k) {
    if (h.edges[bins[k]] <= out.t_min.value) continue;
    if (detail::roughness(lv, k + 1 - opts.window, opts.window - 1) <= opts.irregularity_ratio) continue;
    out.t_max = {h.edges[bins[k]], false};
    const double regular_end = h.edges[bins[k + 1 - opts.window]];
    std::vector<double> regular;
    for (double x : dwell_s)
      if (x < regular_end) regular.push_back(x);
    try {
      out.fit = fit_broken_power_law(regular, opts.fit);
      out.t_min = {out.fit.break_point, false};
    } catch (const error&) {
      // Too little regular data to refit; the provisional break stands.
    }
    return out;
  }
  out.t_max = {opts.default_t_max, true};
  if (out.t_max.value <= out.t_min.value) out.t_max.value = h.edges.back();
  return out;
}

// ---- POI radii --------------------------------------------------------------

struct poi_radius_options {
  double bin_width = 5.0;
  double max_distance = 2000.0;
  std::size_t smoothing_window = 3;
  std::size_t min_samples = 500;
};

struct poi_radius_detection {
  poi_category_params params;
  std::size_t samples = 0;
  std::size_t within_valid = 0; // samples at or below the valid radius
};

// valid radius: centre of the peak bin of the smoothed distance histogram.
// POI radius: smallest sample distance r with CDF(r) >= 2 * CDF(valid radius).
inline poi_radius_detection detect_poi_radii(poi_category category, std::span<const double> distances,
                                             const poi_radius_options& opts = {}) {
  const std::string name(to_string(category));
  if (distances.size() < opts.min_samples)
    throw insufficient_data_error("poi radii (" + name + "): need at least " + std::to_string(opts.min_samples) +
                                  " samples, got " + std::to_string(distances.size()));
  if (!(opts.bin_width > 0.0) || !(opts.max_distance > opts.bin_width) || opts.smoothing_window == 0)
    throw config_error("poi radii: invalid histogram options");

  const auto n_bins = static_cast<std::size_t>(std::ceil(opts.max_distance / opts.bin_width));
  std::vector<double> counts(n_bins, 0.0);
  for (double d : distances) {
    if (!(d >= 0.0)) throw domain_error("poi radii (" + name + "): negative distance");
    const double pos = std::floor(d / opts.bin_width);
    if (pos < static_cast<double>(n_bins)) counts[static_cast<std::size_t>(pos)] += 1.0;
  }

  const std::size_t half = opts.smoothing_window / 2;
  std::size_t peak = 0;
  double peak_value = -1.0;
  for (std::size_t i = 0; i < n_bins; ++i) {
    const std::size_t a = i >= half ? i - half : 0;
    const std::size_t b = std::min(n_bins - 1, i + half);
    double s = 0.0;
    for (std::size_t j = a; j <= b; ++j) s += counts[j];
    s /= static_cast<double>(b - a + 1);
    if (s > peak_value) {
      peak_value = s;
      peak = i;
    }
  }
  const double valid = (static_cast<double>(peak) + 0.5) * opts.bin_width;

  std::vector<double> sorted(distances.begin(), distances.end());
  std::sort(sorted.begin(), sorted.end());
  const auto within = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), valid) - sorted.begin());
  if (within == 0) throw radius_unreachable_error("poi radii (" + name + "): no samples inside the valid radius");
  if (2 * within > sorted.size())
    throw radius_unreachable_error("poi radii (" + name + "): cumulative probability at the valid radius exceeds 1/2");
  const double poi_radius = sorted[2 * within - 1];
  if (poi_radius > opts.max_distance)
    throw radius_unreachable_error("poi radii (" + name + "): doubled cumulative probability lies beyond range");

  poi_radius_detection out;
  out.params = {category, valid, poi_radius};
  out.samples = sorted.size();
  out.within_valid = within;
  return out;
}

} // namespace freight
