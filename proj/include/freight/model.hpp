#pragma once

#include "freight/error.hpp"
#include "freight/geo.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace freight {

// One GPS fix. `source_line` is the 1-based line of the input file the record
// came from (0 when the record was not read from a file).
struct gps_record {
  std::string truck_id;
  double lon = 0.0;
  double lat = 0.0;
  std::int64_t timestamp = 0; // UTC epoch seconds
  std::optional<double> reported_speed;
  std::optional<double> heading;
  std::size_t source_line = 0;

  lon_lat position() const { return {lon, lat}; }
};

inline bool valid_coordinates(double lon, double lat) {
  return lon >= -180.0 && lon <= 180.0 && lat >= -90.0 && lat <= 90.0;
}

inline double avg_speed_kmh(const gps_record& a, const gps_record& b) {
  return avg_speed_kmh(a.position(), a.timestamp, b.position(), b.timestamp);
}

// A gap-free, time-ordered run of one truck's records.
struct trajectory {
  std::string truck_id;
  std::uint32_t segment_id = 0;
  std::vector<gps_record> records;
};

enum class stop_class { short_term, medium_term, long_term };

inline std::string_view to_string(stop_class c) {
  switch (c) {
  case stop_class::short_term: return "short";
  case stop_class::medium_term: return "medium";
  case stop_class::long_term: return "long";
  }
  return "?";
}

inline std::optional<stop_class> parse_stop_class(std::string_view s) {
  if (s == "short") return stop_class::short_term;
  if (s == "medium") return stop_class::medium_term;
  if (s == "long") return stop_class::long_term;
  return std::nullopt;
}

struct truck_stop {
  std::string truck_id;
  std::uint32_t segment_id = 0;
  std::uint32_t seq = 0; // ordinal of the stop within its truck
  double centroid_lon = 0.0;
  double centroid_lat = 0.0;
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  std::int64_t dwell = 0;
  std::size_t n_points = 0;
  stop_class cls = stop_class::short_term;
  // Index range [first_index, last_index] of the member records in the segment.
  std::size_t first_index = 0;
  std::size_t last_index = 0;

  lon_lat centroid() const { return {centroid_lon, centroid_lat}; }
};

struct thresholds {
  double speed_threshold_kmh = 1.1;
  double t_min_s = 1440.0;
  double t_max_s = 46800.0;
  double max_speed_kmh = 120.0;
  double max_accel_ms2 = 5.0;
  double gap_limit_s = 3600.0;

  void validate() const {
    if (!(speed_threshold_kmh > 0.0 && speed_threshold_kmh < max_speed_kmh))
      throw config_error("thresholds: require 0 < speed_threshold < max_speed");
    if (!(t_min_s > 0.0 && t_min_s < t_max_s))
      throw config_error("thresholds: require 0 < t_min < t_max");
    if (!(max_accel_ms2 > 0.0)) throw config_error("thresholds: max_accel must be positive");
    if (!(gap_limit_s > 0.0)) throw config_error("thresholds: gap_limit must be positive");
  }
};

enum class poi_category : std::uint8_t {
  construction_company,
  machinery_electronics,
  chemical_metallurgy,
  commercial_trade,
  logistics_warehouse,
  mining_company,
  factory,
  farming_base,
  industrial_park,
  residential_area,
  building_materials_market,
};

inline constexpr std::size_t poi_category_count = 11;

inline constexpr std::array<poi_category, poi_category_count> all_poi_categories{
    poi_category::construction_company, poi_category::machinery_electronics,
    poi_category::chemical_metallurgy,  poi_category::commercial_trade,
    poi_category::logistics_warehouse,  poi_category::mining_company,
    poi_category::factory,              poi_category::farming_base,
    poi_category::industrial_park,      poi_category::residential_area,
    poi_category::building_materials_market,
};

inline constexpr std::array<std::string_view, poi_category_count> poi_category_names{
    "construction_company", "machinery_electronics", "chemical_metallurgy",
    "commercial_trade",     "logistics_warehouse",   "mining_company",
    "factory",              "farming_base",          "industrial_park",
    "residential_area",     "building_materials_market",
};

inline std::size_t index_of(poi_category c) { return static_cast<std::size_t>(c); }

inline std::string_view to_string(poi_category c) { return poi_category_names[index_of(c)]; }

// Accepts the canonical snake_case names; spaces and dashes are treated as underscores.
inline std::optional<poi_category> parse_poi_category(std::string_view s) {
  std::string norm(s);
  for (char& ch : norm) {
    if (ch == ' ' || ch == '-') ch = '_';
    else if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  for (std::size_t i = 0; i < poi_category_count; ++i)
    if (norm == poi_category_names[i]) return all_poi_categories[i];
  return std::nullopt;
}

struct poi {
  std::string id;
  poi_category category = poi_category::factory;
  double lon = 0.0;
  double lat = 0.0;

  lon_lat position() const { return {lon, lat}; }
};

struct poi_category_params {
  poi_category category = poi_category::factory;
  double valid_radius_m = 0.0;
  double poi_radius_m = 0.0;

  void validate() const {
    if (!(valid_radius_m > 0.0 && valid_radius_m < poi_radius_m))
      throw config_error("category " + std::string(to_string(category)) +
                         ": require 0 < valid_radius < poi_radius");
  }
};

using category_table = std::array<poi_category_params, poi_category_count>;

// Per-category radii observed for freight POIs in the national dataset.
inline category_table default_category_params() {
  return {{
      {poi_category::construction_company, 370.0, 690.0},
      {poi_category::machinery_electronics, 345.0, 655.0},
      {poi_category::chemical_metallurgy, 290.0, 545.0},
      {poi_category::commercial_trade, 275.0, 516.0},
      {poi_category::logistics_warehouse, 260.0, 487.0},
      {poi_category::mining_company, 285.0, 521.0},
      {poi_category::factory, 350.0, 670.0},
      {poi_category::farming_base, 310.0, 550.0},
      {poi_category::industrial_park, 450.0, 849.0},
      {poi_category::residential_area, 430.0, 814.0},
      {poi_category::building_materials_market, 390.0, 715.0},
  }};
}

enum class road_class { motorway, primary, secondary, tertiary };

inline std::string_view to_string(road_class c) {
  switch (c) {
  case road_class::motorway: return "motorway";
  case road_class::primary: return "primary";
  case road_class::secondary: return "secondary";
  case road_class::tertiary: return "tertiary";
  }
  return "?";
}

inline std::optional<road_class> parse_road_class(std::string_view s) {
  if (s == "motorway") return road_class::motorway;
  if (s == "primary") return road_class::primary;
  if (s == "secondary") return road_class::secondary;
  if (s == "tertiary") return road_class::tertiary;
  return std::nullopt;
}

// Half of the average carriageway width: five 3.5 m lanes for primary and
// secondary roads, three for motorways and tertiary roads.
inline constexpr double half_width_m(road_class c) {
  return (c == road_class::primary || c == road_class::secondary) ? 17.5 / 2.0 : 10.5 / 2.0;
}

inline constexpr double max_half_width_m = 17.5 / 2.0;

struct road_segment {
  std::string id;
  road_class cls = road_class::primary;
  std::vector<lon_lat> centerline;
  double half_width = half_width_m(road_class::primary);
};

using ring = std::vector<lon_lat>;

struct city_region {
  std::string id;
  std::vector<ring> rings;
};

} // namespace freight
