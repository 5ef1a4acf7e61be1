#pragma once

#include "freight/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace freight {

inline constexpr double earth_radius_m = 6'371'000.0;

struct lon_lat {
  double lon = 0.0;
  double lat = 0.0;

  friend bool operator==(const lon_lat&, const lon_lat&) = default;
};

inline constexpr double deg_to_rad(double deg) { return deg * (std::numbers::pi / 180.0); }
inline constexpr double rad_to_deg(double rad) { return rad * (180.0 / std::numbers::pi); }

inline constexpr double kmh_to_ms(double kmh) { return kmh / 3.6; }
inline constexpr double ms_to_kmh(double ms) { return ms * 3.6; }

namespace detail {

inline double haversine_from_term(double h) {
  return 2.0 * earth_radius_m * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
}

inline double sin_sq_half(double rad) {
  const double s = std::sin(0.5 * rad);
  return s * s;
}

} // namespace detail

// Haversine distance on a sphere of radius earth_radius_m.
inline double great_circle_distance(lon_lat a, lon_lat b) {
  const double phi1 = deg_to_rad(a.lat);
  const double phi2 = deg_to_rad(b.lat);
  const double h = detail::sin_sq_half(phi2 - phi1) +
                   std::cos(phi1) * std::cos(phi2) * detail::sin_sq_half(deg_to_rad(b.lon - a.lon));
  return detail::haversine_from_term(h);
}

// Point reached by travelling `distance_m` along the great circle leaving
// `origin` with initial bearing `bearing_deg` (clockwise from north).
inline lon_lat destination_point(lon_lat origin, double bearing_deg, double distance_m) {
  const double delta = distance_m / earth_radius_m;
  const double theta = deg_to_rad(bearing_deg);
  const double phi1 = deg_to_rad(origin.lat);
  const double lambda1 = deg_to_rad(origin.lon);
  const double sin_phi2 =
      std::sin(phi1) * std::cos(delta) + std::cos(phi1) * std::sin(delta) * std::cos(theta);
  const double phi2 = std::asin(std::clamp(sin_phi2, -1.0, 1.0));
  const double lambda2 =
      lambda1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(phi1),
                           std::cos(delta) - std::sin(phi1) * std::sin(phi2));
  return {rad_to_deg(lambda2), rad_to_deg(phi2)};
}

// Average speed in km/h between two timestamped positions.
inline double avg_speed_kmh(lon_lat a, std::int64_t t_a, lon_lat b, std::int64_t t_b) {
  if (t_b <= t_a) throw rejected_pair_error("avg_speed: timestamps must be strictly increasing");
  return ms_to_kmh(great_circle_distance(a, b) / static_cast<double>(t_b - t_a));
}

// Signed acceleration in m/s^2 between two km/h speeds `dt_s` seconds apart.
inline double accel_between(double v_prev_kmh, double v_next_kmh, double dt_s) {
  if (!(dt_s > 0.0)) throw rejected_pair_error("accel_between: dt must be positive");
  return kmh_to_ms(v_next_kmh - v_prev_kmh) / dt_s;
}

struct edge_projection {
  double distance_m = 0.0;
  double t = 0.0; // position along the edge, 0 at `a`, 1 at `b`
  lon_lat nearest;
};

// Distance from `q` to the edge a-b. The foot point is located in an
// equirectangular tangent plane centred on `q`; the returned distance is the
// great-circle distance to that foot point.
inline edge_projection project_onto_edge(lon_lat q, lon_lat a, lon_lat b) {
  const double k = std::cos(deg_to_rad(q.lat));
  const double ax = (a.lon - q.lon) * k;
  const double ay = a.lat - q.lat;
  const double dx = (b.lon - a.lon) * k;
  const double dy = b.lat - a.lat;
  const double len_sq = dx * dx + dy * dy;
  double t = 0.0;
  if (len_sq > 0.0) t = std::clamp(-(ax * dx + ay * dy) / len_sq, 0.0, 1.0);
  const lon_lat p{a.lon + t * (b.lon - a.lon), a.lat + t * (b.lat - a.lat)};
  return {great_circle_distance(q, p), t, p};
}

// Axis-aligned lon/lat box. Boxes never straddle the antimeridian.
struct geo_box {
  double min_lon = 0.0;
  double min_lat = 0.0;
  double max_lon = 0.0;
  double max_lat = 0.0;

  static geo_box of(lon_lat p) { return {p.lon, p.lat, p.lon, p.lat}; }

  void expand(lon_lat p) {
    min_lon = std::min(min_lon, p.lon);
    min_lat = std::min(min_lat, p.lat);
    max_lon = std::max(max_lon, p.lon);
    max_lat = std::max(max_lat, p.lat);
  }

  void expand(const geo_box& o) {
    min_lon = std::min(min_lon, o.min_lon);
    min_lat = std::min(min_lat, o.min_lat);
    max_lon = std::max(max_lon, o.max_lon);
    max_lat = std::max(max_lat, o.max_lat);
  }

  bool contains(lon_lat p) const {
    return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat && p.lat <= max_lat;
  }

  lon_lat center() const { return {0.5 * (min_lon + max_lon), 0.5 * (min_lat + max_lat)}; }
};

// Lower bound on the great-circle distance from `q` to any point of `box`.
// Each haversine term is minimised independently, so the bound never exceeds
// the true minimum. For a degenerate (point) box it equals the haversine.
inline double min_distance(lon_lat q, const geo_box& box) {
  const double dlat = q.lat < box.min_lat ? box.min_lat - q.lat
                      : q.lat > box.max_lat ? q.lat - box.max_lat
                                            : 0.0;
  const double dlon = q.lon < box.min_lon ? box.min_lon - q.lon
                      : q.lon > box.max_lon ? q.lon - box.max_lon
                                            : 0.0;
  const double cos_min = std::min(std::cos(deg_to_rad(box.min_lat)), std::cos(deg_to_rad(box.max_lat)));
  const double h = detail::sin_sq_half(deg_to_rad(dlat)) +
                   std::cos(deg_to_rad(q.lat)) * std::max(cos_min, 0.0) * detail::sin_sq_half(deg_to_rad(dlon));
  return detail::haversine_from_term(h);
}

// Inserts intermediate vertices so that no edge is longer than `max_edge_m`.
inline std::vector<lon_lat> densify(const std::vector<lon_lat>& line, double max_edge_m) {
  if (line.size() < 2) return line;
  std::vector<lon_lat> out;
  out.reserve(line.size());
  out.push_back(line.front());
  for (std::size_t i = 1; i < line.size(); ++i) {
    const lon_lat a = line[i - 1];
    const lon_lat b = line[i];
    const double len = great_circle_distance(a, b);
    const auto pieces = static_cast<std::size_t>(std::ceil(len / max_edge_m));
    for (std::size_t k = 1; k < pieces; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(pieces);
      out.push_back({a.lon + t * (b.lon - a.lon), a.lat + t * (b.lat - a.lat)});
    }
    out.push_back(b);
  }
  return out;
}

} // namespace freight
