#pragma once

#include "freight/geo.hpp"
#include "freight/model.hpp"

#include <cmath>
#include <vector>

namespace freight {

enum class ring_location { outside, boundary, inside };

namespace detail {

inline bool on_edge(lon_lat p, lon_lat a, lon_lat b) {
  const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
  const double len_sq = (b.lon - a.lon) * (b.lon - a.lon) + (b.lat - a.lat) * (b.lat - a.lat);
  if (std::abs(cross) > 1e-12 * std::max(len_sq, 1e-12)) return false;
  return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) && p.lat >= std::min(a.lat, b.lat) &&
         p.lat <= std::max(a.lat, b.lat);
}

} // namespace detail

// Even-odd containment over all rings in the lon/lat plane, so inner rings
// act as holes. Points on any ring edge report `boundary`.
inline ring_location locate_in_rings(lon_lat p, const std::vector<ring>& rings) {
  bool inside = false;
  for (const ring& r : rings) {
    if (r.empty()) continue;
    for (std::size_t i = 0, j = r.size() - 1; i < r.size(); j = i++) {
      const lon_lat a = r[j];
      const lon_lat b = r[i];
      if (detail::on_edge(p, a, b)) return ring_location::boundary;
      if ((a.lat > p.lat) != (b.lat > p.lat)) {
        const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
        if (p.lon < x) inside = !inside;
      }
    }
  }
  return inside ? ring_location::inside : ring_location::outside;
}

inline geo_box bounds_of(const std::vector<ring>& rings) {
  geo_box box = geo_box::of(rings.at(0).at(0));
  for (const ring& r : rings)
    for (const lon_lat& p : r) box.expand(p);
  return box;
}

inline void require_closed(const ring& r, const std::string& what) {
  if (r.size() < 4) throw parse_error(what + ": ring needs at least 4 vertices (closed triangle)");
  if (!(r.front() == r.back())) throw parse_error(what + ": ring is not closed");
}

} // namespace freight
