#pragma once

#include "freight/box_tree.hpp"
#include "freight/error.hpp"
#include "freight/geo.hpp"
#include "freight/model.hpp"
#include "freight/polygon.hpp"
#include "freight/text.hpp"
#include "freight/wkt.hpp"

#include <algorithm>
#include <array>
#include <bitset>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace freight {

// ---- POIs -------------------------------------------------------------------

class poi_index {
public:
  struct match {
    const poi* site = nullptr;
    double distance_m = 0.0;
  };

  poi_index() : params_(default_category_params()) {}

  explicit poi_index(std::vector<poi> pois, category_table params = default_category_params())
      : params_(params) {
    for (const auto& p : params_) p.validate();
    for (auto& p : pois) by_category_[index_of(p.category)].push_back(std::move(p));
    for (std::size_t c = 0; c < poi_category_count; ++c) {
      std::vector<geo_box> boxes;
      boxes.reserve(by_category_[c].size());
      for (const auto& p : by_category_[c]) boxes.push_back(geo_box::of(p.position()));
      trees_[c] = box_tree(boxes);
    }
  }

  // Nearest POI of `category` by great-circle distance; ties go to the lowest id.
  std::optional<match> nearest(lon_lat q, poi_category category) const {
    const auto c = index_of(category);
    const auto& sites = by_category_[c];
    const auto best = trees_[c].nearest(
        q, [&](std::size_t e) { return great_circle_distance(q, sites[e].position()); },
        [&](std::size_t a, std::size_t b) { return sites[a].id < sites[b].id; });
    if (!best.found()) return std::nullopt;
    return match{&sites[best.entry], best.distance};
  }

  std::optional<match> nearest(lon_lat q, std::string_view category) const {
    const auto c = parse_poi_category(category);
    if (!c) throw config_error("nearest_poi: unknown POI category '" + std::string(category) + "'");
    return nearest(q, *c);
  }

  const poi_category_params& params(poi_category c) const { return params_[index_of(c)]; }
  const category_table& params() const { return params_; }
  const std::vector<poi>& sites(poi_category c) const { return by_category_[index_of(c)]; }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& v : by_category_) n += v.size();
    return n;
  }

private:
  std::array<std::vector<poi>, poi_category_count> by_category_;
  std::array<box_tree, poi_category_count> trees_;
  category_table params_;
};

// ---- roads ------------------------------------------------------------------

using road_class_set = std::bitset<4>;

inline road_class_set all_road_classes() { return road_class_set{}.set(); }

inline road_class_set only(road_class c) { return road_class_set{}.set(static_cast<std::size_t>(c)); }

class road_index {
public:
  struct match {
    const road_segment* segment = nullptr;
    double distance_m = 0.0;
  };

  road_index() = default;

  // Edges longer than `max_edge_m` are split so the tangent-plane foot-point
  // approximation stays accurate.
  explicit road_index(std::vector<road_segment> roads, double max_edge_m = 1000.0) : roads_(std::move(roads)) {
    std::vector<geo_box> boxes;
    for (std::uint32_t s = 0; s < roads_.size(); ++s) {
      auto& seg = roads_[s];
      if (seg.centerline.size() < 2) throw parse_error("road " + seg.id + ": centerline needs at least two vertices");
      if (!(seg.half_width > 0.0)) throw config_error("road " + seg.id + ": half width must be positive");
      seg.centerline = densify(seg.centerline, max_edge_m);
      max_half_width_ = std::max(max_half_width_, seg.half_width);
      for (std::uint32_t v = 0; v + 1 < seg.centerline.size(); ++v) {
        edges_.push_back({s, v});
        geo_box b = geo_box::of(seg.centerline[v]);
        b.expand(seg.centerline[v + 1]);
        boxes.push_back(b);
      }
    }
    tree_ = box_tree(boxes);
  }

  const std::vector<road_segment>& segments() const { return roads_; }

  double edge_distance(lon_lat q, std::size_t edge) const {
    const auto& e = edges_[edge];
    const auto& line = roads_[e.segment].centerline;
    return project_onto_edge(q, line[e.vertex], line[e.vertex + 1]).distance_m;
  }

  // Minimal point-to-centerline distance over segments whose class is in `filter`.
  std::optional<match> nearest(lon_lat q, road_class_set filter = all_road_classes()) const {
    const auto best = tree_.nearest(
        q,
        [&](std::size_t e) {
          const auto& seg = roads_[edges_[e].segment];
          if (!filter.test(static_cast<std::size_t>(seg.cls))) return std::numeric_limits<double>::infinity();
          return edge_distance(q, e);
        },
        [&](std::size_t a, std::size_t b) { return roads_[edges_[a].segment].id < roads_[edges_[b].segment].id; });
    if (!best.found() || !std::isfinite(best.distance)) return std::nullopt;
    return match{&roads_[edges_[best.entry].segment], best.distance};
  }

  // The closest segment whose centerline is strictly nearer than its half width.
  std::optional<match> on_road(lon_lat q) const {
    std::optional<match> hit;
    tree_.within(q, max_half_width_, [&](std::size_t e) {
      const road_segment& seg = roads_[edges_[e].segment];
      const double d = edge_distance(q, e);
      if (d < seg.half_width && (!hit || d < hit->distance_m || (d == hit->distance_m && seg.id < hit->segment->id)))
        hit = match{&seg, d};
    });
    return hit;
  }

  bool is_on_road(lon_lat q) const { return on_road(q).has_value(); }

private:
  struct edge_ref {
    std::uint32_t segment;
    std::uint32_t vertex;
  };

  std::vector<road_segment> roads_;
  std::vector<edge_ref> edges_;
  box_tree tree_;
  double max_half_width_ = 0.0;
};

// ---- cities -----------------------------------------------------------------

class city_index {
public:
  struct location {
    std::optional<std::string> city_id;
    std::vector<std::string> candidates; // every city whose closed region holds the point
    bool boundary_tie = false;           // several cities touched only on their boundaries
  };

  city_index() = default;

  explicit city_index(std::vector<city_region> cities) : cities_(std::move(cities)) {
    std::vector<geo_box> boxes;
    for (const auto& c : cities_) {
      if (c.rings.empty()) throw parse_error("city " + c.id + ": no rings");
      for (const auto& r : c.rings) require_closed(r, "city " + c.id);
      boxes.push_back(bounds_of(c.rings));
    }
    tree_ = box_tree(boxes);
  }

  const std::vector<city_region>& cities() const { return cities_; }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& c : cities_) out.push_back(c.id);
    return out;
  }

  // Boundary points count as inside. A point strictly inside two cities is
  // an ambiguity error; a point only on shared borders goes to the lowest id.
  location locate_detailed(lon_lat q) const {
    std::vector<std::size_t> inside, boundary;
    tree_.containing(q, [&](std::size_t e) {
      switch (locate_in_rings(q, cities_[e].rings)) {
      case ring_location::inside: inside.push_back(e); break;
      case ring_location::boundary: boundary.push_back(e); break;
      case ring_location::outside: break;
      }
    });
    location out;
    for (auto e : inside) out.candidates.push_back(cities_[e].id);
    for (auto e : boundary) out.candidates.push_back(cities_[e].id);
    std::sort(out.candidates.begin(), out.candidates.end());
    if (inside.size() > 1) {
      std::string list;
      for (const auto& id : out.candidates) list += (list.empty() ? "" : ", ") + id;
      throw ambiguity_error("locate_city: point lies inside overlapping cities: " + list, out.candidates);
    }
    if (inside.size() == 1) {
      out.city_id = cities_[inside.front()].id;
    } else if (!boundary.empty()) {
      out.city_id = out.candidates.front();
      out.boundary_tie = boundary.size() > 1;
    }
    return out;
  }

  std::optional<std::string> locate(lon_lat q) const { return locate_detailed(q).city_id; }

private:
  std::vector<city_region> cities_;
  box_tree tree_;
};

// ---- reference-geography files ------------------------------------------

// POI csv: poi_id,category,lon,lat (optional header row).
inline std::vector<poi> read_pois(std::istream& in) {
  if (!in) throw io_error("read_pois: unreadable input stream");
  std::vector<poi> out;
  std::string line;
  std::vector<std::string_view> f;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = text::trim(line);
    if (view.empty() || view.front() == '#') continue;
    text::split(view, ',', f);
    if (out.empty() && f.size() == 4 && f[0] == "poi_id") continue;
    const auto lon = f.size() == 4 ? text::to_double(f[2]) : std::nullopt;
    const auto lat = f.size() == 4 ? text::to_double(f[3]) : std::nullopt;
    const auto cat = f.size() == 4 ? parse_poi_category(f[1]) : std::nullopt;
    if (!lon || !lat || !cat || f[0].empty() || !valid_coordinates(*lon, *lat))
      throw parse_error("poi file: malformed line " + std::to_string(line_no));
    out.push_back({std::string(f[0]), *cat, *lon, *lat});
  }
  return out;
}

inline void write_pois(std::ostream& os, const std::vector<poi>& pois) {
  os << "poi_id,category,lon,lat\n";
  for (const auto& p : pois)
    os << p.id << ',' << to_string(p.category) << ',' << text::fmt_double(p.lon) << ',' << text::fmt_double(p.lat)
       << '\n';
}

namespace detail {

// Tab-separated geometry records; '#' starts a comment line.
template <typename OnFields>
void read_geometry_lines(std::istream& in, std::size_t n_fields, std::string_view header_first, const char* what,
                         OnFields&& on_fields) {
  if (!in) throw io_error(std::string(what) + ": unreadable input stream");
  std::string line;
  std::vector<std::string_view> f;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = text::trim(line);
    if (view.empty() || view.front() == '#') continue;
    text::split(view, '\t', f);
    if (first && !f.empty() && f[0] == header_first) {
      first = false;
      continue;
    }
    first = false;
    if (f.size() != n_fields) throw parse_error(std::string(what) + ": expected tab-separated fields on line " +
                                                std::to_string(line_no));
    try {
      on_fields(f);
    } catch (const parse_error& e) {
      throw parse_error(std::string(what) + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

} // namespace detail

// Road file: segment_id <TAB> road_class <TAB> LINESTRING (...)
inline std::vector<road_segment> read_roads(std::istream& in) {
  std::vector<road_segment> out;
  detail::read_geometry_lines(in, 3, "segment_id", "road file", [&](const std::vector<std::string_view>& f) {
    const auto cls = parse_road_class(f[1]);
    if (!cls) throw parse_error("unknown road class '" + std::string(f[1]) + "'");
    road_segment s;
    s.id = std::string(f[0]);
    s.cls = *cls;
    s.half_width = half_width_m(*cls);
    s.centerline = wkt::parse_linestring(f[2]);
    out.push_back(std::move(s));
  });
  return out;
}

inline void write_roads(std::ostream& os, const std::vector<road_segment>& roads) {
  os << "segment_id\troad_class\tgeometry\n";
  for (const auto& r : roads) os << r.id << '\t' << to_string(r.cls) << '\t' << wkt::format_linestring(r.centerline) << '\n';
}

// City file: city_id <TAB> POLYGON (...) | MULTIPOLYGON (...)
inline std::vector<city_region> read_cities(std::istream& in) {
  std::vector<city_region> out;
  detail::read_geometry_lines(in, 2, "city_id", "city file", [&](const std::vector<std::string_view>& f) {
    city_region c;
    c.id = std::string(f[0]);
    c.rings = wkt::parse_polygonal(f[1]);
    for (const auto& r : c.rings) require_closed(r, "city " + c.id);
    out.push_back(std::move(c));
  });
  return out;
}

inline void write_cities(std::ostream& os, const std::vector<city_region>& cities) {
  os << "city_id\tgeometry\n";
  for (const auto& c : cities) os << c.id << '\t' << wkt::format_polygon(c.rings) << '\n';
}

} // namespace freight
