#pragma once

#include "freight/error.hpp"
#include "freight/histogram.hpp"
#include "freight/model.hpp"
#include "freight/parallel.hpp"
#include "freight/time.hpp"
#include "freight/trips.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace freight {

// ---- lognormal fits ---------------------------------------------------------

struct lognormal_fit {
  double mu = 0.0;
  double sigma = 0.0;
  std::size_t n = 0;

  double mode() const { return std::exp(mu - sigma * sigma); }
  double median() const { return std::exp(mu); }

  double density(double x) const {
    if (!(x > 0.0)) return 0.0;
    const double z = (std::log(x) - mu) / sigma;
    return std::exp(-0.5 * z * z) / (x * sigma * std::sqrt(2.0 * std::numbers::pi));
  }
};

// Count, mean and sum of squared deviations of ln(x); merges exactly
// enough for partial aggregation across workers.
struct log_moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw domain_error("lognormal: samples must be positive and finite");
    const double v = std::log(x);
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }

  void merge(const log_moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
    const double delta = o.mean - mean;
    const double total = na + nb;
    mean += delta * nb / total;
    m2 += o.m2 + delta * delta * na * nb / total;
    n += o.n;
  }

  // Maximum-likelihood estimates; sigma is the population deviation.
  lognormal_fit fit() const {
    if (n < 2) throw degenerate_fit_error("lognormal: need at least two samples");
    const double var = m2 / static_cast<double>(n);
    if (!(var > 0.0)) throw degenerate_fit_error("lognormal: all samples equal, sigma would be 0");
    return {mean, std::sqrt(var), n};
  }
};

inline lognormal_fit fit_lognormal(std::span<const double> samples, std::size_t workers = 1) {
  constexpr std::size_t chunk = 1 << 16;
  const std::size_t n_chunks = (samples.size() + chunk - 1) / chunk;
  std::vector<log_moments> parts(n_chunks);
  parallel_for(n_chunks, workers, [&](std::size_t c) {
    const auto end = std::min(samples.size(), (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) parts[c].add(samples[i]);
  });
  log_moments total;
  for (const auto& p : parts) total.merge(p);
  return total.fit();
}

// ---- category shares --------------------------------------------------------

struct category_share_table {
  std::array<std::size_t, poi_category_count> counts{};
  std::size_t uncategorized = 0;

  std::size_t categorized() const {
    std::size_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }

  double share(poi_category c) const {
    return static_cast<double>(counts[index_of(c)]) / static_cast<double>(categorized());
  }
};

// Ends without a matched category are tallied apart and excluded from the base.
inline category_share_table category_shares(std::span<const trip_end> ends) {
  category_share_table t;
  for (const auto& e : ends) {
    if (e.category)
      ++t.counts[index_of(*e.category)];
    else
      ++t.uncategorized;
  }
  if (t.categorized() == 0) throw insufficient_data_error("category shares: no categorized trip ends");
  return t;
}

// ---- OD matrix --------------------------------------------------------------

struct od_matrix {
  std::vector<std::string> cities;
  std::vector<std::uint64_t> counts; // row-major, origin by destination

  std::size_t size() const { return cities.size(); }
  std::uint64_t at(std::size_t from, std::size_t to) const { return counts[from * size() + to]; }

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }
};

// Directed intercity trip counts; rows and columns follow `cities`.
inline od_matrix build_od_matrix(std::span<const trip> trips, std::vector<std::string> cities) {
  od_matrix m;
  std::map<std::string, std::size_t, std::less<>> pos;
  for (std::size_t i = 0; i < cities.size(); ++i)
    if (!pos.emplace(cities[i], i).second) throw consistency_error("od matrix: duplicate city id " + cities[i]);
  m.cities = std::move(cities);
  m.counts.assign(m.size() * m.size(), 0);
  for (const trip& t : trips) {
    if (t.intercity != intercity_status::intercity) continue;
    const auto a = pos.find(*t.origin.city_id);
    const auto b = pos.find(*t.destination.city_id);
    if (a == pos.end() || b == pos.end())
      throw consistency_error("od matrix: trip " + t.id() + " references a city outside the city list");
    ++m.counts[a->second * m.size() + b->second];
  }
  return m;
}

// ---- time of day ------------------------------------------------------------

struct hourly_profiles {
  std::array<std::uint64_t, 24> departure{};
  std::array<std::uint64_t, 24> arrival{};
};

inline hourly_profiles time_of_day_profiles(std::span<const trip> trips, std::int64_t tz_offset_s) {
  hourly_profiles p;
  for (const trip& t : trips) {
    ++p.departure[static_cast<std::size_t>(local_hour(t.departure_ts, tz_offset_s))];
    ++p.arrival[static_cast<std::size_t>(local_hour(t.arrival_ts, tz_offset_s))];
  }
  return p;
}

// ---- distance and duration --------------------------------------------------

struct quantity_stats {
  log_histogram hist;
  std::optional<lognormal_fit> fit;
  std::string fit_error; // set when fit is absent
};

struct distance_duration {
  quantity_stats distance; // meters
  quantity_stats duration; // seconds
};

namespace detail {

inline quantity_stats quantity(std::span<const double> xs, double bins_per_decade) {
  quantity_stats q;
  double lo = xs.front(), hi = xs.front();
  for (double x : xs) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  // A single distinct value still gets one bin around it.
  if (!(hi > lo)) {
    lo *= 0.99;
    hi *= 1.01;
  }
  q.hist = build_log_histogram(xs, lo, hi, bins_per_decade);
  try {
    q.fit = fit_lognormal(xs);
  } catch (const fit_error& e) {
    q.fit_error = e.what();
  }
  return q;
}

} // namespace detail

// Log-binned histograms and lognormal fits of trip path distance and
// duration. Zero or negative values are a domain error naming the trips.
inline distance_duration distance_duration_stats(std::span<const trip> trips, double bins_per_decade = 20.0) {
  if (trips.empty()) throw insufficient_data_error("distance/duration stats: no trips");
  std::string bad;
  std::vector<double> dist, dur;
  for (const trip& t : trips) {
    if (!(t.path_distance_m > 0.0) || t.duration <= 0) bad += (bad.empty() ? "" : ", ") + t.id();
    dist.push_back(t.path_distance_m);
    dur.push_back(static_cast<double>(t.duration));
  }
  if (!bad.empty()) throw domain_error("distance/duration stats: non-positive distance or duration in trips " + bad);
  return {detail::quantity(dist, bins_per_decade), detail::quantity(dur, bins_per_decade)};
}

} // namespace freight
