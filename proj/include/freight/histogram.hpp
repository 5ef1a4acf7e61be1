#pragma once

#include "freight/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace freight {

// Fixed-width histogram with left-closed, right-open bins starting at `origin`.
struct histogram {
  double origin = 0.0;
  double bin_width = 1.0;
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }

  double left_edge(std::size_t i) const { return origin + static_cast<double>(i) * bin_width; }
  double center(std::size_t i) const { return origin + (static_cast<double>(i) + 0.5) * bin_width; }

  std::size_t populated_bins() const {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
  }

  void add(double x) {
    const double pos = std::floor((x - origin) / bin_width);
    if (!(pos >= 0.0 && pos < 1e8)) throw domain_error("histogram: sample outside the addressable bin range");
    const auto i = static_cast<std::size_t>(pos);
    if (i >= counts.size()) counts.resize(i + 1, 0);
    ++counts[i];
  }

  // Bin-wise sum; both histograms must share origin and width.
  void merge(const histogram& o) {
    if (o.origin != origin || o.bin_width != bin_width) throw domain_error("histogram merge: incompatible binning");
    if (o.counts.size() > counts.size()) counts.resize(o.counts.size(), 0);
    for (std::size_t i = 0; i < o.counts.size(); ++i) counts[i] += o.counts[i];
  }
};

struct histogram_build {
  histogram hist;
  std::size_t rejected_below_origin = 0;
};

inline histogram_build build_histogram(std::span<const double> samples, double bin_width, double origin = 0.0) {
  if (!(bin_width > 0.0)) throw domain_error("build_histogram: bin_width must be positive");
  histogram_build out;
  out.hist.origin = origin;
  out.hist.bin_width = bin_width;
  for (double x : samples) {
    if (!(x >= origin)) {
      ++out.rejected_below_origin;
      continue;
    }
    out.hist.add(x);
  }
  return out;
}

// Logarithmically spaced bins over [lo, hi]; the top edge is inclusive.
struct log_histogram {
  std::vector<double> edges; // size = counts.size() + 1
  std::vector<std::uint64_t> counts;
  std::uint64_t n_samples = 0; // samples that landed in a bin
  double quantum = 0.0;         // samples lie on multiples of this; 0 when continuous

  std::size_t size() const { return counts.size(); }
  double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
  double center(std::size_t i) const { return std::sqrt(edges[i] * edges[i + 1]); }

  // Measure of the values bin i can hold: its width, or quantum times the
  // number of lattice points in it. The last bin is closed on the right.
  double support(std::size_t i) const {
    if (quantum <= 0.0) return width(i);
    const double first = std::ceil(edges[i] / quantum - 1e-9);
    const double last = i + 1 == size() ? std::floor(edges[i + 1] / quantum + 1e-9)
                                        : std::ceil(edges[i + 1] / quantum - 1e-9) - 1.0;
    return last < first ? 0.0 : (last - first + 1.0) * quantum;
  }

  double density(std::size_t i) const {
    const double s = support(i);
    return n_samples == 0 || s <= 0.0 ? 0.0 : static_cast<double>(counts[i]) / (static_cast<double>(n_samples) * s);
  }

  std::size_t populated_bins() const {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
  }
};

inline log_histogram make_log_bins(double lo, double hi, std::size_t n_bins) {
  if (!(lo > 0.0 && hi > lo) || n_bins == 0) throw domain_error("log bins: require 0 < lo < hi and n_bins > 0");
  log_histogram h;
  h.edges.resize(n_bins + 1);
  const double llo = std::log(lo);
  const double step = (std::log(hi) - llo) / static_cast<double>(n_bins);
  for (std::size_t i = 0; i <= n_bins; ++i) h.edges[i] = std::exp(llo + step * static_cast<double>(i));
  h.edges.front() = lo;
  h.edges.back() = hi;
  h.counts.assign(n_bins, 0);
  return h;
}

// Bins spanning [lo, hi] at roughly `bins_per_decade` bins per factor of ten.
inline log_histogram build_log_histogram(std::span<const double> samples, double lo, double hi,
                                         double bins_per_decade) {
  const double decades = std::log10(hi / lo);
  const auto n_bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(decades * bins_per_decade - 1e-9)));
  log_histogram h = make_log_bins(lo, hi, n_bins);
  const double llo = std::log(lo);
  const double inv_step = static_cast<double>(n_bins) / (std::log(hi) - llo);
  for (double x : samples) {
    if (!(x >= lo && x <= hi)) continue;
    auto i = static_cast<std::size_t>((std::log(x) - llo) * inv_step);
    i = std::min(i, n_bins - 1);
    // Guard the floating-point log against edge misplacement.
    while (i > 0 && x < h.edges[i]) --i;
    while (i + 1 < n_bins && x >= h.edges[i + 1]) ++i;
    ++h.counts[i];
    ++h.n_samples;
  }
  return h;
}

} // namespace freight
