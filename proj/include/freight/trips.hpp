#pragma once

#include "freight/error.hpp"
#include "freight/geo.hpp"
#include "freight/model.hpp"
#include "freight/spatial.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace freight {

enum class validity_reason { long_term, medium_in_poi };

inline std::string_view to_string(validity_reason r) {
  return r == validity_reason::long_term ? "long_term" : "medium_in_poi";
}

inline std::optional<validity_reason> parse_validity_reason(std::string_view s) {
  if (s == "long_term") return validity_reason::long_term;
  if (s == "medium_in_poi") return validity_reason::medium_in_poi;
  return std::nullopt;
}

struct trip_end {
  truck_stop stop;
  std::optional<poi_category> category;
  std::optional<std::string> poi_id;
  std::optional<double> poi_distance_m;
  std::optional<std::string> city_id;
  validity_reason reason = validity_reason::long_term;

  // Stable identifier: truck, segment and stop sequence number.
  std::string id() const {
    return stop.truck_id + ":" + std::to_string(stop.segment_id) + ":" + std::to_string(stop.seq);
  }
};

struct poi_attribution {
  poi_category category;
  std::string poi_id;
  double distance_m;
};

// Among categories whose nearest POI lies within that category's POI radius,
// the one with the smallest distance / poi_radius ratio.
inline std::optional<poi_attribution> attribute_poi(lon_lat p, const poi_index& pois) {
  std::optional<poi_attribution> best;
  double best_ratio = 0.0;
  for (poi_category c : all_poi_categories) {
    const auto m = pois.nearest(p, c);
    if (!m) continue;
    const double radius = pois.params(c).poi_radius_m;
    if (m->distance_m > radius) continue;
    const double ratio = m->distance_m / radius;
    if (!best || ratio < best_ratio) {
      best_ratio = ratio;
      best = poi_attribution{c, m->site->id, m->distance_m};
    }
  }
  return best;
}

struct selection_counts {
  std::size_t stops = 0;
  std::size_t accepted_long = 0;
  std::size_t accepted_medium = 0;
  std::size_t rejected_short = 0;
  std::size_t rejected_outside_poi = 0;
  std::size_t rejected_on_road = 0;

  std::size_t accepted() const { return accepted_long + accepted_medium; }
  std::size_t rejected() const { return rejected_short + rejected_outside_poi + rejected_on_road; }

  selection_counts& operator+=(const selection_counts& o) {
    stops += o.stops;
    accepted_long += o.accepted_long;
    accepted_medium += o.accepted_medium;
    rejected_short += o.rejected_short;
    rejected_outside_poi += o.rejected_outside_poi;
    rejected_on_road += o.rejected_on_road;
    return *this;
  }
};

struct trip_end_selection {
  std::vector<trip_end> ends;
  selection_counts counts;
};

// Long stops are trip ends unconditionally; medium stops only inside a POI
// boundary and off every road. Long ends still carry a category when one
// applies.
inline trip_end_selection select_trip_ends(const std::vector<truck_stop>& stops, const poi_index& pois,
                                           const road_index& roads) {
  trip_end_selection out;
  out.counts.stops = stops.size();
  for (const truck_stop& s : stops) {
    if (s.cls == stop_class::short_term) {
      ++out.counts.rejected_short;
      continue;
    }
    const auto attribution = attribute_poi(s.centroid(), pois);
    if (s.cls == stop_class::medium_term) {
      if (!attribution) {
        ++out.counts.rejected_outside_poi;
        continue;
      }
      if (roads.is_on_road(s.centroid())) {
        ++out.counts.rejected_on_road;
        continue;
      }
    }
    trip_end e;
    e.stop = s;
    e.reason = s.cls == stop_class::long_term ? validity_reason::long_term : validity_reason::medium_in_poi;
    if (attribution) {
      e.category = attribution->category;
      e.poi_id = attribution->poi_id;
      e.poi_distance_m = attribution->distance_m;
    }
    ++(e.reason == validity_reason::long_term ? out.counts.accepted_long : out.counts.accepted_medium);
    out.ends.push_back(std::move(e));
  }
  return out;
}

struct city_assignment_counts {
  std::size_t resolved = 0;
  std::size_t unresolved = 0;
  std::size_t boundary_ties = 0;
  std::size_t overlaps = 0; // strictly inside several cities; left unresolved
};

inline city_assignment_counts assign_cities(std::vector<trip_end>& ends, const city_index& cities) {
  city_assignment_counts n;
  for (trip_end& e : ends) {
    e.city_id.reset();
    try {
      const auto loc = cities.locate_detailed(e.stop.centroid());
      e.city_id = loc.city_id;
      if (loc.boundary_tie) ++n.boundary_ties;
    } catch (const ambiguity_error&) {
      ++n.overlaps;
    }
    ++(e.city_id ? n.resolved : n.unresolved);
  }
  return n;
}

// ---- trips ------------------------------------------------------------------

enum class intercity_status { unresolved, intracity, intercity };

inline std::string_view to_string(intercity_status s) {
  switch (s) {
  case intercity_status::unresolved: return "unresolved";
  case intercity_status::intracity: return "no";
  case intercity_status::intercity: return "yes";
  }
  return "?";
}

inline std::optional<intercity_status> parse_intercity_status(std::string_view s) {
  if (s == "unresolved") return intercity_status::unresolved;
  if (s == "no") return intercity_status::intracity;
  if (s == "yes") return intercity_status::intercity;
  return std::nullopt;
}

struct trip {
  std::string truck_id;
  trip_end origin;
  trip_end destination;
  std::int64_t departure_ts = 0; // origin.stop.t_end
  std::int64_t arrival_ts = 0;   // destination.stop.t_start
  std::int64_t duration = 0;
  double path_distance_m = 0.0;
  intercity_status intercity = intercity_status::unresolved;

  std::string id() const { return origin.id() + ">" + std::to_string(destination.stop.seq); }
};

// Sum of inter-record distances over the records timed within [from, to].
inline double path_distance(const trajectory& seg, std::int64_t from, std::int64_t to) {
  const auto& r = seg.records;
  auto lo = std::lower_bound(r.begin(), r.end(), from, [](const gps_record& g, std::int64_t t) { return g.timestamp < t; });
  double sum = 0.0;
  for (auto it = lo; it != r.end() && std::next(it) != r.end() && std::next(it)->timestamp <= to; ++it)
    sum += great_circle_distance(it->position(), std::next(it)->position());
  return sum;
}

// Consecutive trip ends of one truck within one segment form a trip; pairs
// straddling a segment boundary are dropped. `ends` must be time-ordered
// and `segments` must belong to the same truck.
inline std::vector<trip> chain_trips(const std::vector<trip_end>& ends, const std::vector<trajectory>& segments) {
  std::vector<trip> out;
  for (std::size_t i = 0; i + 1 < ends.size(); ++i) {
    const trip_end& a = ends[i];
    const trip_end& b = ends[i + 1];
    if (a.stop.truck_id != b.stop.truck_id || a.stop.segment_id != b.stop.segment_id) continue;
    if (!(a.stop.t_end < b.stop.t_start)) continue;
    const auto seg = std::find_if(segments.begin(), segments.end(), [&](const trajectory& t) {
      return t.truck_id == a.stop.truck_id && t.segment_id == a.stop.segment_id;
    });
    if (seg == segments.end())
      throw consistency_error("chain_trips: no segment " + std::to_string(a.stop.segment_id) + " for truck " +
                              a.stop.truck_id);
    trip t;
    t.truck_id = a.stop.truck_id;
    t.origin = a;
    t.destination = b;
    t.departure_ts = a.stop.t_end;
    t.arrival_ts = b.stop.t_start;
    t.duration = t.arrival_ts - t.departure_ts;
    t.path_distance_m = path_distance(*seg, t.departure_ts, t.arrival_ts);
    out.push_back(std::move(t));
  }
  return out;
}

// Intercity iff both ends resolve to cities and the cities differ. Ends
// whose city is already set are not relocated.
inline void mark_intercity(std::vector<trip>& trips, const city_index& cities) {
  auto resolve = [&](trip_end& e) {
    if (e.city_id) return;
    try {
      e.city_id = cities.locate(e.stop.centroid());
    } catch (const ambiguity_error&) {
      e.city_id.reset();
    }
  };
  for (trip& t : trips) {
    resolve(t.origin);
    resolve(t.destination);
    if (!t.origin.city_id || !t.destination.city_id)
      t.intercity = intercity_status::unresolved;
    else
      t.intercity = *t.origin.city_id != *t.destination.city_id ? intercity_status::intercity
                                                                : intercity_status::intracity;
  }
}

} // namespace freight
