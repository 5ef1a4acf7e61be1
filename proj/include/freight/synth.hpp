#pragma once

#include "freight/error.hpp"
#include "freight/geo.hpp"
#include "freight/model.hpp"
#include "freight/parallel.hpp"
#include "freight/spatial.hpp"
#include "freight/text.hpp"
#include "freight/time.hpp"
#include "freight/trips.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

// Synthetic labelled fleets on a square road grid, plus the scorer that
// compares extracted trip ends against the generator's ground truth.
namespace freight::synth {

// ---- random streams ---------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent engine for stream `stream` of a global seed.
inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x5851f42d4c957f2dULL)));
}

// ---- broken power law -------------------------------------------------------

// Density proportional to x^-alpha1 on [lo, break] and continuing as
// x^-alpha2 on [break, hi], continuous at the break.
class broken_power_law {
public:
  broken_power_law(double alpha1, double alpha2, double break_point, double lo, double hi)
      : a1_(alpha1), a2_(alpha2), b_(break_point), lo_(lo), hi_(hi) {
    if (!(0.0 < lo && lo < break_point && break_point < hi))
      throw plan_error("broken power law: require 0 < lo < break < hi");
    c2_ = std::pow(b_, a2_ - a1_);
    m1_ = segment_mass(a1_, lo_, b_);
    m2_ = c2_ * segment_mass(a2_, b_, hi_);
  }

  double cdf(double x) const {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    const double total = m1_ + m2_;
    if (x <= b_) return segment_mass(a1_, lo_, x) / total;
    return (m1_ + c2_ * segment_mass(a2_, b_, x)) / total;
  }

  double quantile(double p) const {
    const double target = std::clamp(p, 0.0, 1.0) * (m1_ + m2_);
    if (target <= m1_) return segment_inverse(a1_, lo_, target);
    return segment_inverse(a2_, b_, (target - m1_) / c2_);
  }

  // Inverse-CDF draw restricted to [from, to].
  template <typename Rng>
  double sample(Rng& rng, double from, double to) const {
    const double p0 = cdf(from), p1 = cdf(to);
    std::uniform_real_distribution<double> u(p0, p1);
    return std::clamp(quantile(u(rng)), from, to);
  }

  double lo() const { return lo_; }
  double hi() const { return hi_; }

private:
  static double segment_mass(double a, double x0, double x1) {
    if (std::abs(a - 1.0) < 1e-12) return std::log(x1 / x0);
    return (std::pow(x1, 1.0 - a) - std::pow(x0, 1.0 - a)) / (1.0 - a);
  }

  static double segment_inverse(double a, double x0, double mass) {
    if (std::abs(a - 1.0) < 1e-12) return x0 * std::exp(mass);
    return std::pow(std::pow(x0, 1.0 - a) + (1.0 - a) * mass, 1.0 / (1.0 - a));
  }

  double a1_, a2_, b_, lo_, hi_;
  double c2_ = 1.0, m1_ = 0.0, m2_ = 0.0;
};

// ---- plan -------------------------------------------------------------------

struct noise_model {
  double jitter_m = 0.0;           // Gaussian position error per axis
  double dropout_prob = 0.0;       // fix silently missing
  double duplicate_prob = 0.0;     // fix emitted twice with the same timestamp
  double jump_prob = 0.0;          // fix teleported 2-20 km away
  double drift_prob = 0.0;         // stationary fix takes a new drift offset
  int drift_steps = 3;             // drift offset per axis, in 1e-5 degree steps

  bool silent() const {
    return jitter_m == 0.0 && dropout_prob == 0.0 && duplicate_prob == 0.0 && jump_prob == 0.0 && drift_prob == 0.0;
  }

  static noise_model standard() { return {10.0, 0.01, 0.005, 0.001, 0.1}; }
};

// Table 3 proportions of trip ends by category.
inline std::array<double, poi_category_count> default_category_mix() {
  return {14.65, 12.69, 2.57, 3.42, 9.47, 6.03, 22.21, 7.47, 18.49, 1.31, 1.69};
}

struct fleet_plan {
  std::uint64_t seed = 1;
  std::size_t n_trucks = 200;
  std::int64_t start_epoch = 1526227200; // 2018-05-14 00:00:00 at +08:00
  std::int64_t horizon_s = 7 * 86400;
  std::int64_t sampling_interval_s = 30;
  std::int64_t tz_offset_s = 8 * 3600;

  // Geography: a square region with a road line every `road_spacing_m` in
  // both directions and square cities tiling the region.
  double center_lon = 113.0;
  double center_lat = 32.0;
  double extent_m = 800'000.0;
  double road_spacing_m = 10'000.0;
  double city_size_m = 80'000.0;
  std::size_t pois_per_category = 1000;
  std::array<double, poi_category_count> category_mix = default_category_mix();
  category_table radii = default_category_params();

  // Dwell law shared by every stop type.
  double dwell_alpha1 = 1.3;
  double dwell_alpha2 = 0.6;
  double dwell_break_s = 1440.0;
  double dwell_min_s = 60.0;
  double dwell_max_s = 46800.0;
  double long_tail_prob = 0.02;      // dwells drawn past the law's range
  double long_tail_max_s = 48 * 3600.0;

  // Classification bands the generator keeps clear of.
  double t_min_s = 1440.0;
  double t_max_s = 46800.0;
  double class_margin_s = 120.0;

  // Trip size: lognormal distance and effective speed, chosen so both the
  // distance and the duration (distance / effective speed) have the given modes.
  double distance_mode_m = 90'000.0;
  double distance_sigma = 0.5;
  double duration_mode_s = 3 * 3600.0;
  double speed_sigma = 0.2;
  double drive_speed_min_kmh = 35.0;
  double drive_speed_max_kmh = 60.0;
  double ramp_s = 60.0;

  // Departure clock preference: two Gaussian peaks over a flat floor.
  double departure_peak1_h = 8.0;
  double departure_peak2_h = 14.0;
  double departure_peak_sd_h = 1.0;
  double departure_floor = 0.03;

  // Intermediate stops.
  double congestion_share = 0.5;         // medium stops placed on a road
  double congestion_near_poi_prob = 0.3; // medium congestion stop at the last road point
  double rest_offset_min_m = 60.0;
  double rest_offset_max_m = 200.0;
  double off_road_clearance_m = 40.0;

  std::size_t max_trip_ends_per_truck = 0; // 0 = unlimited
  noise_model noise;

  void validate() const {
    if (n_trucks == 0) throw plan_error("plan: n_trucks must be positive");
    if (sampling_interval_s <= 0 || horizon_s < sampling_interval_s)
      throw plan_error("plan: need a positive sampling interval within the horizon");
    if (!(extent_m >= 4 * road_spacing_m && road_spacing_m >= 2000.0))
      throw plan_error("plan: extent must span at least four road spacings of at least 2 km");
    if (!(city_size_m > 0.0)) throw plan_error("plan: city size must be positive");
    double mix = 0.0;
    for (std::size_t c = 0; c < poi_category_count; ++c) {
      if (!(category_mix[c] >= 0.0)) throw plan_error("plan: category mix must be non-negative");
      if (category_mix[c] > 0.0 && pois_per_category == 0)
        throw plan_error("plan: trip ends need POIs but pois_per_category is 0");
      mix += category_mix[c];
      radii[c].validate();
    }
    if (!(mix > 0.0)) throw plan_error("plan: category mix sums to zero");
    if (!(dwell_min_s > 0.5 * static_cast<double>(sampling_interval_s)))
      throw plan_error("plan: dwell_min_s must exceed half the sampling interval");
    if (!(dwell_min_s < t_min_s - class_margin_s && t_min_s + class_margin_s < t_max_s - 1800.0))
      throw plan_error("plan: classification bands leave no room for stops");
    if (!(distance_mode_m > 0 && duration_mode_s > 0 && distance_sigma > 0 && speed_sigma >= 0))
      throw plan_error("plan: trip size law must be positive");
    if (!(drive_speed_min_kmh > 0 && drive_speed_max_kmh >= drive_speed_min_kmh && drive_speed_max_kmh <= 100.0))
      throw plan_error("plan: drive speeds must lie in (0, 100] km/h");
    if (!(noise.jitter_m >= 0 && noise.dropout_prob >= 0 && noise.dropout_prob < 1 && noise.duplicate_prob >= 0 &&
          noise.duplicate_prob <= 1 && noise.jump_prob >= 0 && noise.jump_prob <= 1 && noise.drift_prob >= 0 &&
          noise.drift_prob <= 1))
      throw plan_error("plan: noise probabilities must lie in [0, 1]");
  }
};

// ---- geography --------------------------------------------------------------

class road_grid {
public:
  explicit road_grid(const fleet_plan& plan) {
    const double m_per_deg = earth_radius_m * std::numbers::pi / 180.0;
    n_ = static_cast<std::size_t>(std::floor(plan.extent_m / plan.road_spacing_m));
    dlat_ = plan.road_spacing_m / m_per_deg;
    dlon_ = plan.road_spacing_m / (m_per_deg * std::cos(deg_to_rad(plan.center_lat)));
    lon0_ = plan.center_lon - dlon_ * static_cast<double>(n_) / 2.0;
    lat0_ = plan.center_lat - dlat_ * static_cast<double>(n_) / 2.0;
  }

  std::size_t lines() const { return n_ + 1; }
  double lon_of(std::size_t i) const { return lon0_ + dlon_ * static_cast<double>(i); }
  double lat_of(std::size_t j) const { return lat0_ + dlat_ * static_cast<double>(j); }
  geo_box bounds() const { return {lon0_, lat0_, lon_of(n_), lat_of(n_)}; }

  static road_class class_of(std::size_t line) {
    static constexpr std::array<road_class, 4> cycle{road_class::motorway, road_class::primary, road_class::secondary,
                                                     road_class::tertiary};
    return cycle[line % 4];
  }

  // A vertical (meridian) line has index i, a horizontal one index j.
  struct line_ref {
    bool vertical = true;
    std::size_t index = 0;
  };

  std::size_t nearest_vertical(double lon) const { return clamp_index((lon - lon0_) / dlon_); }
  std::size_t nearest_horizontal(double lat) const { return clamp_index((lat - lat0_) / dlat_); }

  // Distance from p to its nearest grid line, with the foot point.
  struct access {
    line_ref line;
    lon_lat foot;
    double distance_m;
  };

  access nearest_line(lon_lat p) const {
    const std::size_t i = nearest_vertical(p.lon);
    const std::size_t j = nearest_horizontal(p.lat);
    const lon_lat fv{lon_of(i), p.lat};
    const lon_lat fh{p.lon, lat_of(j)};
    const double dv = great_circle_distance(p, fv);
    const double dh = great_circle_distance(p, fh);
    if (dv <= dh) return {{true, i}, fv, dv};
    return {{false, j}, fh, dh};
  }

  double half_width(line_ref l) const { return half_width_m(class_of(l.index + (l.vertical ? 0 : 2))); }

  std::vector<road_segment> segments() const {
    std::vector<road_segment> out;
    out.reserve(2 * lines() * n_);
    for (std::size_t i = 0; i < lines(); ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        road_segment s;
        s.id = "v" + std::to_string(i) + "_" + std::to_string(j);
        s.cls = class_of(i);
        s.half_width = half_width_m(s.cls);
        s.centerline = {{lon_of(i), lat_of(j)}, {lon_of(i), lat_of(j + 1)}};
        out.push_back(std::move(s));
      }
    for (std::size_t j = 0; j < lines(); ++j)
      for (std::size_t i = 0; i < n_; ++i) {
        road_segment s;
        s.id = "h" + std::to_string(j) + "_" + std::to_string(i);
        s.cls = class_of(j + 2);
        s.half_width = half_width_m(s.cls);
        s.centerline = {{lon_of(i), lat_of(j)}, {lon_of(i + 1), lat_of(j)}};
        out.push_back(std::move(s));
      }
    return out;
  }

private:
  std::size_t clamp_index(double x) const {
    const double r = std::round(x);
    if (r <= 0.0) return 0;
    if (r >= static_cast<double>(n_)) return n_;
    return static_cast<std::size_t>(r);
  }

  std::size_t n_ = 0;
  double dlon_ = 0.0, dlat_ = 0.0, lon0_ = 0.0, lat0_ = 0.0;
};

inline std::vector<city_region> make_cities(const fleet_plan& plan, const road_grid& grid) {
  const geo_box b = grid.bounds();
  const auto k = static_cast<std::size_t>(std::max(1.0, std::round(plan.extent_m / plan.city_size_m)));
  const double dlon = (b.max_lon - b.min_lon) / static_cast<double>(k);
  const double dlat = (b.max_lat - b.min_lat) / static_cast<double>(k);
  std::vector<city_region> out;
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c) {
      const double x0 = b.min_lon + dlon * static_cast<double>(c), x1 = c + 1 == k ? b.max_lon : x0 + dlon;
      const double y0 = b.min_lat + dlat * static_cast<double>(r), y1 = r + 1 == k ? b.max_lat : y0 + dlat;
      auto pad2 = [](std::size_t v) { return (v < 10 ? "0" : "") + std::to_string(v); };
      const std::string id = "C" + pad2(r) + pad2(c);
      out.push_back({id, {{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}}});
    }
  return out;
}

inline std::vector<poi> make_pois(const fleet_plan& plan, const road_grid& grid) {
  auto rng = make_engine(plan.seed, 0);
  const geo_box b = grid.bounds();
  const double inset_lat = 2000.0 / (earth_radius_m * std::numbers::pi / 180.0);
  const double inset_lon = inset_lat / std::cos(deg_to_rad(plan.center_lat));
  std::uniform_real_distribution<double> ulon(b.min_lon + inset_lon, b.max_lon - inset_lon);
  std::uniform_real_distribution<double> ulat(b.min_lat + inset_lat, b.max_lat - inset_lat);
  std::vector<poi> out;
  for (poi_category c : all_poi_categories) {
    if (plan.category_mix[index_of(c)] <= 0.0) continue;
    for (std::size_t k = 0; k < plan.pois_per_category; ++k) {
      char id[48];
      std::snprintf(id, sizeof id, "P%02zu%05zu", index_of(c), k);
      const double lon = ulon(rng);
      const double lat = ulat(rng);
      out.push_back({id, c, lon, lat});
    }
  }
  return out;
}

// ---- ground truth -----------------------------------------------------------

enum class visit_label { trip_end, rest_stop, congestion_stop };

inline std::string_view to_string(visit_label l) {
  switch (l) {
  case visit_label::trip_end: return "TripEnd";
  case visit_label::rest_stop: return "RestStop";
  case visit_label::congestion_stop: return "CongestionStop";
  }
  return "?";
}

inline std::optional<visit_label> parse_visit_label(std::string_view s) {
  if (s == "TripEnd") return visit_label::trip_end;
  if (s == "RestStop") return visit_label::rest_stop;
  if (s == "CongestionStop") return visit_label::congestion_stop;
  return std::nullopt;
}

struct truth_visit {
  std::string truck_id;
  lon_lat location;
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  visit_label label = visit_label::trip_end;
  std::optional<poi_category> category; // trip ends only
  std::string poi_id;                   // trip ends only
};

// One planted trip between consecutive trip-end visits of a truck.
struct planned_trip {
  std::size_t origin = 0;      // index into fleet::truth
  std::size_t destination = 0; // index into fleet::truth
  std::int64_t departure = 0;
  std::int64_t arrival = 0;
  double path_length_m = 0.0;  // driven geometry, including intermediate detours
};

struct fleet {
  std::vector<gps_record> records; // by truck, then time
  std::vector<poi> pois;
  std::vector<road_segment> roads;
  std::vector<city_region> cities;
  std::vector<truth_visit> truth; // by truck, then time
  std::vector<planned_trip> trips; // by truck, then time
};

namespace detail {

struct route {
  std::vector<lon_lat> pts;
  std::vector<double> cum; // arc length at each vertex
  std::vector<double> half_width; // per edge; 0 for off-road access edges
  std::vector<bool> vertical;     // per edge orientation of the road it follows

  double length() const { return cum.empty() ? 0.0 : cum.back(); }

  void push(lon_lat p, double hw, bool vert) {
    if (!pts.empty() && pts.back() == p) return;
    if (!pts.empty()) {
      cum.push_back(cum.back() + great_circle_distance(pts.back(), p));
      half_width.push_back(hw);
      vertical.push_back(vert);
    } else {
      cum.push_back(0.0);
    }
    pts.push_back(p);
  }

  std::size_t edge_at(double s) const {
    const auto it = std::upper_bound(cum.begin(), cum.end(), s);
    const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - cum.begin()));
    return std::min(k, pts.size() - 1) - 1;
  }

  lon_lat at(double s) const {
    if (pts.size() == 1) return pts.front();
    s = std::clamp(s, 0.0, length());
    const std::size_t e = edge_at(s);
    const double len = cum[e + 1] - cum[e];
    const double t = len > 0.0 ? (s - cum[e]) / len : 0.0;
    return {pts[e].lon + t * (pts[e + 1].lon - pts[e].lon), pts[e].lat + t * (pts[e + 1].lat - pts[e].lat)};
  }

  // Vertices strictly inside (s0, s1), bracketed by the two cut points.
  std::vector<lon_lat> cut(double s0, double s1) const {
    std::vector<lon_lat> out{at(s0)};
    for (std::size_t k = 0; k < pts.size(); ++k)
      if (cum[k] > s0 && cum[k] < s1 && !(pts[k] == out.back())) out.push_back(pts[k]);
    const lon_lat end = at(s1);
    if (!(end == out.back())) out.push_back(end);
    return out;
  }
};

// Off-road access to the nearest grid line, Manhattan travel on the grid,
// then access to the destination.
inline route build_route(const road_grid& g, lon_lat a, lon_lat b, double& road_from, double& road_to) {
  const auto fa = g.nearest_line(a);
  const auto fb = g.nearest_line(b);
  route r;
  r.push(a, 0.0, fa.line.vertical);
  r.push(fa.foot, 0.0, fa.line.vertical);
  road_from = r.length();
  const double hwa = g.half_width(fa.line), hwb = g.half_width(fb.line);
  if (fa.line.vertical && fb.line.vertical) {
    if (fa.line.index != fb.line.index) {
      const std::size_t j = g.nearest_horizontal(fa.foot.lat);
      const double hwj = g.half_width({false, j});
      r.push({fa.foot.lon, g.lat_of(j)}, hwa, true);
      r.push({fb.foot.lon, g.lat_of(j)}, hwj, false);
    }
    r.push(fb.foot, hwb, true);
  } else if (!fa.line.vertical && !fb.line.vertical) {
    if (fa.line.index != fb.line.index) {
      const std::size_t i = g.nearest_vertical(fa.foot.lon);
      const double hwi = g.half_width({true, i});
      r.push({g.lon_of(i), fa.foot.lat}, hwa, false);
      r.push({g.lon_of(i), fb.foot.lat}, hwi, true);
    }
    r.push(fb.foot, hwb, false);
  } else if (fa.line.vertical) {
    r.push({fa.foot.lon, fb.foot.lat}, hwa, true);
    r.push(fb.foot, hwb, false);
  } else {
    r.push({fb.foot.lon, fa.foot.lat}, hwa, false);
    r.push(fb.foot, hwb, true);
  }
  road_to = r.length();
  r.push(b, 0.0, fb.line.vertical);
  return r;
}

// Rough route length used to pick destinations: Manhattan distance on the
// local plane.
inline double manhattan_m(lon_lat a, lon_lat b) {
  const double m_per_deg = earth_radius_m * std::numbers::pi / 180.0;
  const double k = std::cos(deg_to_rad(0.5 * (a.lat + b.lat)));
  return m_per_deg * (std::abs(a.lon - b.lon) * k + std::abs(a.lat - b.lat));
}

// Constant-accelerate, cruise, constant-decelerate profile.
struct motion_profile {
  double length = 0.0;
  double duration = 0.0;
  double ramp = 0.0;
  double cruise = 0.0;

  motion_profile(double len, double dur, double ramp_s) : length(len), duration(dur) {
    ramp = std::min(ramp_s, 0.45 * dur);
    cruise = len / (dur - ramp);
  }

  double distance_at(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= duration) return length;
    if (t < ramp) return cruise * t * t / (2.0 * ramp);
    if (t <= duration - ramp) return cruise * ramp / 2.0 + cruise * (t - ramp);
    const double rem = duration - t;
    return length - cruise * rem * rem / (2.0 * ramp);
  }

  double speed_at(double t) const {
    if (t <= 0.0 || t >= duration) return 0.0;
    if (t < ramp) return cruise * t / ramp;
    if (t <= duration - ramp) return cruise;
    return cruise * (duration - t) / ramp;
  }
};

struct leg {
  route path;
  std::int64_t t_depart = 0;
  std::int64_t t_arrive = 0;
};

struct schedule {
  std::vector<truth_visit> visits; // visits[k] precedes legs[k]
  std::vector<leg> legs;
};

inline double bearing_deg(lon_lat a, lon_lat b) {
  const double phi1 = deg_to_rad(a.lat), phi2 = deg_to_rad(b.lat);
  const double dl = deg_to_rad(b.lon - a.lon);
  const double y = std::sin(dl) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dl);
  double deg = rad_to_deg(std::atan2(y, x));
  if (deg < 0.0) deg += 360.0;
  return deg >= 360.0 ? 0.0 : deg;
}

inline lon_lat offset_m(lon_lat p, double east_m, double north_m) {
  const double m_per_deg = earth_radius_m * std::numbers::pi / 180.0;
  return {p.lon + east_m / (m_per_deg * std::cos(deg_to_rad(p.lat))), p.lat + north_m / m_per_deg};
}

class truck_generator {
public:
  truck_generator(const fleet_plan& plan, const road_grid& grid, const poi_index& pois, std::size_t truck)
      : plan_(plan), grid_(grid), pois_(pois), rng_(make_engine(plan.seed, truck + 1)),
        // The law starts half a sampling step below dwell_min so rounding to
        // the sampling grid gives the lowest grid dwell its full share.
        dwell_(plan.dwell_alpha1, plan.dwell_alpha2, plan.dwell_break_s,
               plan.dwell_min_s - 0.5 * static_cast<double>(plan.sampling_interval_s), plan.dwell_max_s) {
    char id[32];
    std::snprintf(id, sizeof id, "T%04zu", truck + 1);
    truck_id_ = id;
    mix_ = std::discrete_distribution<std::size_t>(plan.category_mix.begin(), plan.category_mix.end());
    const double sd2 = plan.distance_sigma * plan.distance_sigma;
    const double st2 = sd2 + plan.speed_sigma * plan.speed_sigma;
    mu_d_ = std::log(plan.distance_mode_m) + sd2;
    mu_v_ = mu_d_ - (std::log(plan.duration_mode_s) + st2);
  }

  const std::string& truck_id() const { return truck_id_; }

  schedule plan_schedule() {
    schedule s;
    const std::int64_t t_end_horizon = plan_.start_epoch + plan_.horizon_s;
    const double min_te_dwell = plan_.t_min_s + plan_.class_margin_s;
    const poi* here = pick_poi(draw_category(), nullptr, std::nullopt);
    truth_visit cur = trip_end_visit(*here);
    cur.t_start = plan_.start_epoch;
    std::size_t n_ends = 1;
    while (true) {
      if (plan_.max_trip_ends_per_truck != 0 && n_ends >= plan_.max_trip_ends_per_truck) break;
      std::lognormal_distribution<double> dist_law(mu_d_, plan_.distance_sigma);
      std::lognormal_distribution<double> speed_law(mu_v_, plan_.speed_sigma);
      const double target = std::max(5000.0, dist_law(rng_));
      const poi* next = pick_poi(draw_category(), here, std::make_pair(cur.location, target));
      truth_visit dest = trip_end_visit(*next);
      double road_from = 0.0, road_to = 0.0;
      route r = build_route(grid_, cur.location, dest.location, road_from, road_to);
      const double v_eff = speed_law(rng_);
      const double duration = std::max(20.0 * 60.0, r.length() / v_eff);
      // The arrival fix reads as moving, so the detectable dwell is one
      // sampling interval shorter than the time on site.
      const std::int64_t depart =
          cur.t_start + grid_align(take_trip_end_dwell(cur.t_start)) + plan_.sampling_interval_s;
      if (depart + static_cast<std::int64_t>(duration) + static_cast<std::int64_t>(min_te_dwell) + 3600 >
          t_end_horizon)
        break;
      const std::int64_t arrive = plan_trip(s, cur, r, road_from, road_to, depart, duration);
      dest.t_start = arrive;
      cur = std::move(dest);
      here = next;
      ++n_ends;
    }
    cur.t_end = t_end_horizon;
    s.visits.push_back(std::move(cur));
    return s;
  }

  // Emits the fixes of a schedule at the sampling cadence, with noise.
  std::vector<gps_record> emit(const schedule& s) {
    std::vector<gps_record> out;
    const noise_model& nz = plan_.noise;
    std::normal_distribution<double> jitter(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::size_t vi = 0;
    lon_lat held{0.0, 0.0};
    lon_lat drift{0.0, 0.0};
    std::size_t held_for = std::numeric_limits<std::size_t>::max();
    double heading = 0.0;
    for (std::int64_t t = plan_.start_epoch; t <= plan_.start_epoch + plan_.horizon_s; t += plan_.sampling_interval_s) {
      while (vi + 1 < s.visits.size() && t > s.legs[vi].t_arrive) ++vi;
      const truth_visit& v = s.visits[vi];
      lon_lat pos;
      double speed_kmh = 0.0;
      if (t <= v.t_end || vi >= s.legs.size()) {
        if (held_for != vi) {
          held_for = vi;
          held = {nz.jitter_m * jitter(rng_), nz.jitter_m * jitter(rng_)};
          drift = {0.0, 0.0};
        }
        if (nz.drift_prob > 0.0 && u01(rng_) < nz.drift_prob) {
          std::uniform_int_distribution<int> step(-nz.drift_steps, nz.drift_steps);
          drift = {step(rng_) * 1e-5, step(rng_) * 1e-5};
        }
        pos = offset_m(v.location, held.lon, held.lat);
        pos.lon += drift.lon;
        pos.lat += drift.lat;
      } else {
        const leg& l = s.legs[vi];
        const motion_profile prof(l.path.length(), static_cast<double>(l.t_arrive - l.t_depart), plan_.ramp_s);
        const double dt = static_cast<double>(t - l.t_depart);
        const double d = prof.distance_at(dt);
        pos = l.path.at(d);
        const lon_lat ahead = l.path.at(std::min(l.path.length(), d + 1.0));
        if (!(ahead == pos)) heading = bearing_deg(pos, ahead);
        speed_kmh = ms_to_kmh(prof.speed_at(dt));
        if (nz.jitter_m > 0.0) pos = offset_m(pos, nz.jitter_m * jitter(rng_), nz.jitter_m * jitter(rng_));
      }
      if (nz.dropout_prob > 0.0 && u01(rng_) < nz.dropout_prob) continue;
      if (nz.jump_prob > 0.0 && u01(rng_) < nz.jump_prob) {
        std::uniform_real_distribution<double> jump_len(2000.0, 20000.0), jump_dir(0.0, 360.0);
        const double len = jump_len(rng_);
        pos = destination_point(pos, jump_dir(rng_), len);
      }
      gps_record rec;
      rec.truck_id = truck_id_;
      rec.lon = pos.lon;
      rec.lat = pos.lat;
      rec.timestamp = t;
      rec.reported_speed = std::round(speed_kmh);
      rec.heading = std::round(heading);
      if (*rec.heading >= 360.0) rec.heading = 0.0;
      out.push_back(rec);
      if (nz.duplicate_prob > 0.0 && u01(rng_) < nz.duplicate_prob) {
        gps_record dup = rec;
        if (nz.jitter_m > 0.0) {
          const lon_lat p = offset_m(pos, nz.jitter_m * jitter(rng_), nz.jitter_m * jitter(rng_));
          dup.lon = p.lon;
          dup.lat = p.lat;
        }
        out.push_back(std::move(dup));
      }
    }
    return out;
  }

private:
  std::int64_t grid_align(double seconds) const {
    const auto step = static_cast<double>(plan_.sampling_interval_s);
    return static_cast<std::int64_t>(std::max(1.0, std::round(seconds / step))) * plan_.sampling_interval_s;
  }

  poi_category draw_category() { return all_poi_categories[mix_(rng_)]; }

  // With a target, the POI whose Manhattan distance from `from` best matches
  // it; otherwise a uniformly random POI of the category.
  const poi* pick_poi(poi_category c, const poi* exclude, std::optional<std::pair<lon_lat, double>> target) {
    const auto& sites = pois_.sites(c);
    if (sites.empty()) throw plan_error("plan: no POIs for category " + std::string(to_string(c)));
    if (!target) {
      std::uniform_int_distribution<std::size_t> pick(0, sites.size() - 1);
      return &sites[pick(rng_)];
    }
    // Shortlist by Manhattan distance, then choose by driven route length.
    std::vector<std::pair<double, const poi*>> shortlist;
    for (const poi& p : sites) {
      if (&p == exclude) continue;
      shortlist.emplace_back(std::abs(manhattan_m(target->first, p.position()) - target->second), &p);
    }
    if (shortlist.empty()) return &sites.front();
    const std::size_t keep = std::min<std::size_t>(16, shortlist.size());
    std::partial_sort(shortlist.begin(), shortlist.begin() + static_cast<std::ptrdiff_t>(keep), shortlist.end());
    const poi* best = nullptr;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < keep; ++k) {
      double from = 0.0, to = 0.0;
      const double len = build_route(grid_, target->first, shortlist[k].second->position(), from, to).length();
      const double gap = std::abs(len - target->second);
      if (gap < best_gap) {
        best_gap = gap;
        best = shortlist[k].second;
      }
    }
    return best;
  }

  // Offset from the POI centre follows a Rayleigh law peaking at the
  // category's valid radius, kept inside its POI radius and off the roads.
  truth_visit trip_end_visit(const poi& p) {
    const auto& params = pois_.params(p.category);
    std::uniform_real_distribution<double> u01(0.0, 1.0), dir(0.0, 360.0);
    lon_lat loc = p.position();
    for (int attempt = 0; attempt < 200; ++attempt) {
      const double r = params.valid_radius_m * std::sqrt(-2.0 * std::log(1.0 - u01(rng_)));
      if (r < 20.0 || r > 0.97 * params.poi_radius_m) continue;
      const lon_lat cand = destination_point(p.position(), dir(rng_), r);
      if (grid_.nearest_line(cand).distance_m < plan_.off_road_clearance_m) continue;
      loc = cand;
      break;
    }
    truth_visit v;
    v.truck_id = truck_id_;
    v.location = loc;
    v.label = visit_label::trip_end;
    v.category = p.category;
    v.poi_id = p.id;
    return v;
  }

  double departure_weight(std::int64_t epoch) const {
    const double local = static_cast<double>(((epoch + plan_.tz_offset_s) % 86400 + 86400) % 86400) / 3600.0;
    auto bump = [&](double peak) {
      double d = std::abs(local - peak);
      d = std::min(d, 24.0 - d);
      return std::exp(-0.5 * d * d / (plan_.departure_peak_sd_h * plan_.departure_peak_sd_h));
    };
    // A peak hour names an hourly bin; the bump sits at the bin's middle.
    return plan_.departure_floor + bump(plan_.departure_peak1_h + 0.5) + bump(plan_.departure_peak2_h + 0.5);
  }

  // Every stop dwell comes from one per-truck stream drawn from the dwell
  // law (plus the sparse tail past t_max). Draws wait in two pools until a
  // stop takes them, so the pooled dwells of all stops follow the law.
  double draw_dwell() {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    if (u01(rng_) < plan_.long_tail_prob) {
      // Long stays cluster at 4 h spacing from t_max + 1 h, which makes the
      // tail lumpy.
      const double first = plan_.t_max_s + 3600.0;
      const auto n_modes = static_cast<int>(std::floor((plan_.long_tail_max_s - first) / 14400.0));
      std::uniform_int_distribution<int> mode(0, std::max(0, n_modes));
      std::uniform_real_distribution<double> spread(-300.0, 300.0);
      return first + mode(rng_) * 14400.0 + spread(rng_);
    }
    return dwell_.sample(rng_, dwell_.lo(), dwell_.hi());
  }

  // Trip ends take dwells clear of t_min; intermediate stops take the rest
  // below t_max. Dwells near t_max may serve either role as a trip end.
  void refill_pools(std::size_t depth) {
    while (long_pool_.size() < depth) {
      const double d = draw_dwell();
      (d >= plan_.t_min_s + plan_.class_margin_s ? long_pool_ : short_pool_).push_back(d);
    }
  }

  // Trip-end dwell: one of the pooled Medium or Long dwells, picked with
  // probability proportional to the clock preference at departure. Near the
  // horizon the pool drains instead of refilling, so few draws go unused.
  double take_trip_end_dwell(std::int64_t arrival) {
    refill_pools(arrival < plan_.start_epoch + plan_.horizon_s - drain_window_s ? pool_depth : 1);
    std::vector<double> w;
    for (double d : long_pool_)
      w.push_back(departure_weight(arrival + static_cast<std::int64_t>(d)));
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    const std::size_t k = pick(rng_);
    const double d = long_pool_[k];
    long_pool_.erase(long_pool_.begin() + static_cast<std::ptrdiff_t>(k));
    return d;
  }

  // Intermediate dwells that fit in `slack`: the intermediate pool first,
  // then Medium dwells from the trip-end pool.
  std::vector<double> take_intermediate_dwells(double slack, std::size_t max_stops) {
    std::vector<double> out;
    auto take_from = [&](std::vector<double>& pool, double cap) {
      for (std::size_t i = 0; i < pool.size() && out.size() < max_stops;) {
        const double d = pool[i];
        const double cost = d + plan_.ramp_s + static_cast<double>(plan_.sampling_interval_s);
        if (d < cap && cost + 300.0 <= slack) {
          out.push_back(d);
          slack -= cost;
          pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
        } else {
          ++i;
        }
      }
    };
    take_from(short_pool_, plan_.t_max_s);
    take_from(long_pool_, plan_.t_max_s - plan_.class_margin_s);
    return out;
  }

  struct stop_plan {
    double s = 0.0;    // arc position along the route
    double dwell = 0.0;
    visit_label label = visit_label::congestion_stop;
    lon_lat location;
    bool detour = false; // rest stops leave the road
  };

  // Appends the origin visit and the legs and intermediate visits of one
  // trip; returns the arrival time at the destination.
  std::int64_t plan_trip(schedule& s, truth_visit origin, const route& r, double road_from, double road_to,
                         std::int64_t depart, double duration) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_real_distribution<double> drive_speed(kmh_to_ms(plan_.drive_speed_min_kmh),
                                                       kmh_to_ms(plan_.drive_speed_max_kmh));
    const double length = r.length();
    double v_drive = std::max(drive_speed(rng_), length / std::max(1.0, duration - 2.0 * plan_.ramp_s) * 1.05);
    v_drive = std::min(v_drive, kmh_to_ms(100.0));
    const double road_len = road_to - road_from;
    const double spacing = 3000.0;
    const auto max_stops = static_cast<std::size_t>(std::max(0.0, std::floor(road_len / spacing) - 1.0));

    // Dwell budget: time not needed for driving.
    std::vector<double> dwells = take_intermediate_dwells(duration - length / v_drive - plan_.ramp_s, max_stops);

    // Positions along the road part: evenly spaced slots, jittered, at
    // least `spacing` apart. Dwell order is shuffled against position.
    std::shuffle(dwells.begin(), dwells.end(), rng_);
    std::vector<stop_plan> stops;
    const std::size_t k = dwells.size();
    const double slot = road_len / static_cast<double>(k + 1);
    for (std::size_t i = 0; i < k; ++i) {
      stop_plan sp;
      sp.s = road_from + slot * (static_cast<double>(i) + 1.0) + (u01(rng_) - 0.5) * 0.5 * std::max(0.0, slot - spacing);
      sp.dwell = dwells[i];
      stops.push_back(sp);
    }
    // Sometimes the last medium stop waits where the route leaves the road
    // for the destination, which may lie inside the destination's boundary.
    if (k > 0 && stops.back().dwell >= plan_.t_min_s && u01(rng_) < plan_.congestion_near_poi_prob &&
        (k == 1 || road_to - stops[k - 2].s >= spacing))
      stops.back().s = road_to;

    for (stop_plan& sp : stops) {
      const std::size_t e = r.edge_at(sp.s);
      const lon_lat on_road = r.at(sp.s);
      const bool vertical = r.vertical[e];
      const double hw = r.half_width[e] > 0.0 ? r.half_width[e] : half_width_m(road_class::motorway);
      const bool medium = sp.dwell >= plan_.t_min_s;
      const bool congest = !medium || u01(rng_) < plan_.congestion_share;
      if (congest) {
        const double lateral = (u01(rng_) - 0.5) * 0.8 * hw;
        sp.location = vertical ? offset_m(on_road, lateral, 0.0) : offset_m(on_road, 0.0, lateral);
        sp.label = visit_label::congestion_stop;
        continue;
      }
      sp.label = visit_label::rest_stop;
      sp.detour = true;
      sp.location = on_road;
      bool placed = false;
      for (int attempt = 0; attempt < 20 && !placed; ++attempt) {
        std::uniform_real_distribution<double> off(plan_.rest_offset_min_m, plan_.rest_offset_max_m);
        const double o = (u01(rng_) < 0.5 ? -1.0 : 1.0) * off(rng_);
        const lon_lat cand = vertical ? offset_m(on_road, o, 0.0) : offset_m(on_road, 0.0, o);
        if (grid_.nearest_line(cand).distance_m < plan_.off_road_clearance_m) continue;
        if (attribute_poi(cand, pois_)) continue;
        sp.location = cand;
        placed = true;
      }
      if (!placed) {
        sp.label = visit_label::congestion_stop;
        sp.detour = false;
      }
    }

    // Leg geometry between consecutive stops.
    std::vector<route> paths;
    double prev_s = 0.0;
    std::optional<lon_lat> prev_detour;
    for (const stop_plan& sp : stops) {
      route p;
      if (prev_detour) p.push(*prev_detour, 0.0, true);
      for (const lon_lat& q : r.cut(prev_s, sp.s)) p.push(q, 0.0, true);
      p.push(sp.location, 0.0, true);
      paths.push_back(std::move(p));
      prev_s = sp.s;
      prev_detour = sp.detour ? std::optional<lon_lat>(sp.location) : std::nullopt;
    }
    {
      route p;
      if (prev_detour) p.push(*prev_detour, 0.0, true);
      for (const lon_lat& q : r.cut(prev_s, r.length())) p.push(q, 0.0, true);
      paths.push_back(std::move(p));
    }

    // Timing: legs share one cruise speed chosen to spend the whole duration.
    double total_len = 0.0, total_dwell = 0.0;
    for (const route& p : paths) total_len += p.length();
    for (const stop_plan& sp : stops) total_dwell += sp.dwell + static_cast<double>(plan_.sampling_interval_s);
    const double drive_time = duration - total_dwell;
    const double v = std::min(kmh_to_ms(100.0), total_len / std::max(1.0, drive_time - static_cast<double>(paths.size()) * plan_.ramp_s));

    origin.t_end = depart;
    s.visits.push_back(std::move(origin));
    std::int64_t t = depart;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const double leg_time = plan_.ramp_s + paths[i].length() / v;
      const std::int64_t arrive = t + std::max<std::int64_t>(2 * plan_.sampling_interval_s, grid_align(leg_time));
      s.legs.push_back({std::move(paths[i]), t, arrive});
      t = arrive;
      if (i < stops.size()) {
        truth_visit iv;
        iv.truck_id = truck_id_;
        iv.location = stops[i].location;
        iv.label = stops[i].label;
        iv.t_start = t;
        iv.t_end = t + grid_align(stops[i].dwell) + plan_.sampling_interval_s;
        t = iv.t_end;
        s.visits.push_back(std::move(iv));
      }
    }
    return t;
  }

  const fleet_plan& plan_;
  const road_grid& grid_;
  const poi_index& pois_;
  std::mt19937_64 rng_;
  broken_power_law dwell_;
  static constexpr std::size_t pool_depth = 5;
  static constexpr std::int64_t drain_window_s = 36 * 3600;
  std::vector<double> short_pool_;
  std::vector<double> long_pool_;
  std::discrete_distribution<std::size_t> mix_;
  std::string truck_id_;
  double mu_d_ = 0.0;
  double mu_v_ = 0.0;
};

} // namespace detail

// Geography, per-truck schedules and GPS fixes for a plan. Trucks are
// generated in parallel from per-truck engines, so output does not depend
// on the worker count. Without `emit_records` only the schedules are built;
// they are identical to those of a full run.
inline fleet generate_fleet(const fleet_plan& plan, std::size_t workers = 0, bool emit_records = true) {
  plan.validate();
  fleet f;
  const road_grid grid(plan);
  f.roads = grid.segments();
  f.cities = make_cities(plan, grid);
  f.pois = make_pois(plan, grid);
  const poi_index pois(f.pois, plan.radii);

  std::vector<std::vector<gps_record>> records(plan.n_trucks);
  std::vector<detail::schedule> schedules(plan.n_trucks);
  parallel_for(plan.n_trucks, workers, [&](std::size_t k) {
    detail::truck_generator gen(plan, grid, pois, k);
    schedules[k] = gen.plan_schedule();
    if (emit_records) records[k] = gen.emit(schedules[k]);
  });
  for (auto& r : records) f.records.insert(f.records.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  for (std::size_t i = 0; i < f.records.size(); ++i) f.records[i].source_line = i + 1;
  for (auto& s : schedules) {
    const std::size_t base = f.truth.size();
    std::optional<std::size_t> open;
    double length = 0.0;
    for (std::size_t k = 0; k < s.visits.size(); ++k) {
      if (s.visits[k].label == visit_label::trip_end) {
        if (open)
          f.trips.push_back({base + *open, base + k, s.visits[*open].t_end, s.visits[k].t_start, length});
        open = k;
        length = 0.0;
      }
      if (k < s.legs.size()) length += s.legs[k].path.length();
    }
    f.truth.insert(f.truth.end(), std::make_move_iterator(s.visits.begin()), std::make_move_iterator(s.visits.end()));
  }
  return f;
}

// ---- files ------------------------------------------------------------------

// GPS rows in the raw input layout: id, lon, lat, speed, local time, heading.
inline void write_gps(std::ostream& os, const std::vector<gps_record>& records, std::int64_t tz_offset_s) {
  for (const gps_record& r : records) {
    os << r.truck_id << ',' << text::fmt_fixed(r.lon, 6) << ',' << text::fmt_fixed(r.lat, 6) << ',';
    if (r.reported_speed) os << text::fmt_double(*r.reported_speed);
    os << ',' << format_local_timestamp(r.timestamp, tz_offset_s) << ',';
    if (r.heading) os << text::fmt_double(*r.heading);
    os << '\n';
  }
}

inline void write_truth(std::ostream& os, const std::vector<truth_visit>& truth) {
  os << "truck_id,lon,lat,t_start,t_end,label,category,poi_id\n";
  for (const truth_visit& v : truth) {
    os << v.truck_id << ',' << text::fmt_double(v.location.lon) << ',' << text::fmt_double(v.location.lat) << ','
       << v.t_start << ',' << v.t_end << ',' << to_string(v.label) << ',';
    if (v.category) os << to_string(*v.category);
    os << ',' << v.poi_id << '\n';
  }
}

inline std::vector<truth_visit> read_truth(std::istream& in) {
  if (!in) throw io_error("truth file: unreadable input stream");
  std::vector<truth_visit> out;
  std::string line;
  std::vector<std::string_view> f;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = text::trim(line);
    if (view.empty()) continue;
    text::split(view, ',', f);
    if (line_no == 1 && !f.empty() && f[0] == "truck_id") continue;
    if (f.size() < 6) throw parse_error("truth file: malformed line " + std::to_string(line_no));
    truth_visit v;
    v.truck_id = std::string(f[0]);
    const auto lon = text::to_double(f[1]), lat = text::to_double(f[2]);
    const auto ts = text::to_int<std::int64_t>(f[3]), te = text::to_int<std::int64_t>(f[4]);
    const auto label = parse_visit_label(f[5]);
    if (!lon || !lat || !ts || !te || !label) throw parse_error("truth file: malformed line " + std::to_string(line_no));
    v.location = {*lon, *lat};
    v.t_start = *ts;
    v.t_end = *te;
    v.label = *label;
    if (f.size() > 6 && !f[6].empty()) v.category = parse_poi_category(f[6]);
    if (f.size() > 7) v.poi_id = std::string(f[7]);
    out.push_back(std::move(v));
  }
  return out;
}

// ---- scoring ----------------------------------------------------------------

struct predicted_end {
  std::string truck_id;
  lon_lat location;
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
};

inline predicted_end to_prediction(const trip_end& e) {
  return {e.stop.truck_id, e.stop.centroid(), e.stop.t_start, e.stop.t_end};
}

struct score {
  std::size_t predicted = 0;
  std::size_t truth_trip_ends = 0;
  std::size_t matched = 0;
  std::optional<double> precision; // absent when nothing was predicted
  std::optional<double> recall;    // absent when the truth has no trip ends

  // Predictions by the label of the truth visit they fell on.
  std::size_t true_positive = 0;
  std::size_t false_trip_end = 0; // a trip end that was already matched
  std::size_t false_rest_stop = 0;
  std::size_t false_congestion_stop = 0;
  std::size_t false_none = 0;
};

struct match_rule {
  double radius_m = 200.0;
  std::int64_t window_s = 1800;
};

// Greedy one-to-one matching in time order per truck: a prediction takes the
// earliest unmatched truth trip end within the radius whose interval overlaps
// the prediction's interval widened by the window.
inline score score_trip_ends(std::vector<predicted_end> predicted, const std::vector<truth_visit>& truth,
                             const match_rule& rule = {}) {
  if (!(rule.radius_m > 0.0) || rule.window_s <= 0) throw config_error("score: radius and window must be positive");
  std::stable_sort(predicted.begin(), predicted.end(), [](const predicted_end& a, const predicted_end& b) {
    return a.truck_id != b.truck_id ? a.truck_id < b.truck_id : a.t_start < b.t_start;
  });
  std::vector<std::size_t> order(truth.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return truth[a].truck_id != truth[b].truck_id ? truth[a].truck_id < truth[b].truck_id
                                                  : truth[a].t_start < truth[b].t_start;
  });

  score out;
  out.predicted = predicted.size();
  for (const auto& v : truth) out.truth_trip_ends += v.label == visit_label::trip_end;
  std::vector<bool> used(truth.size(), false);

  auto close = [&](const predicted_end& p, const truth_visit& v) {
    return p.t_start - rule.window_s <= v.t_end && v.t_start <= p.t_end + rule.window_s &&
           great_circle_distance(p.location, v.location) <= rule.radius_m;
  };

  std::size_t lo = 0;
  for (const predicted_end& p : predicted) {
    while (lo < order.size() && truth[order[lo]].truck_id < p.truck_id) ++lo;
    std::optional<std::size_t> hit, other;
    for (std::size_t k = lo; k < order.size() && truth[order[k]].truck_id == p.truck_id; ++k) {
      const truth_visit& v = truth[order[k]];
      if (v.t_start > p.t_end + rule.window_s) break;
      if (!close(p, v)) continue;
      if (v.label == visit_label::trip_end && !used[order[k]]) {
        hit = order[k];
        break;
      }
      if (!other) other = order[k];
    }
    if (hit) {
      used[*hit] = true;
      ++out.matched;
      ++out.true_positive;
      continue;
    }
    if (!other) {
      ++out.false_none;
      continue;
    }
    switch (truth[*other].label) {
    case visit_label::trip_end: ++out.false_trip_end; break;
    case visit_label::rest_stop: ++out.false_rest_stop; break;
    case visit_label::congestion_stop: ++out.false_congestion_stop; break;
    }
  }
  if (out.predicted > 0) out.precision = static_cast<double>(out.matched) / static_cast<double>(out.predicted);
  if (out.truth_trip_ends > 0) out.recall = static_cast<double>(out.matched) / static_cast<double>(out.truth_trip_ends);
  return out;
}

} // namespace freight::synth
