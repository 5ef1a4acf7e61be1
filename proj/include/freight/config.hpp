#pragma once

#include "freight/calibration.hpp"
#include "freight/error.hpp"
#include "freight/ingest.hpp"
#include "freight/model.hpp"
#include "freight/synth.hpp"
#include "freight/text.hpp"
#include "freight/time.hpp"
#include "freight/wkt.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>

namespace freight {

namespace config_detail {

// Binds "section.key" names to setters; every key in the file must be bound.
class binder {
public:
  using setter = std::function<void(std::string_view)>;

  void bind(std::string name, setter set) { setters_.emplace(std::move(name), std::move(set)); }

  void apply(const boost::property_tree::ptree& tree, const std::string& what) {
    for (const auto& [section, body] : tree) {
      if (body.empty()) throw config_error(what + ": key '" + section + "' outside any section");
      for (const auto& [key, value] : body) {
        const std::string name = section + "." + key;
        const auto it = setters_.find(name);
        if (it == setters_.end()) throw config_error(what + ": unknown key '" + name + "'");
        try {
          it->second(text::trim(value.data()));
        } catch (const config_error& e) {
          throw config_error(what + ": " + name + ": " + e.what());
        }
      }
    }
  }

private:
  std::map<std::string, setter> setters_;
};

inline double as_double(std::string_view v) {
  const auto d = text::to_double(v);
  if (!d) throw config_error("expected a number, got '" + std::string(v) + "'");
  return *d;
}

template <typename Int>
Int as_int(std::string_view v) {
  const auto i = text::to_int<Int>(v);
  if (!i) throw config_error("expected an integer, got '" + std::string(v) + "'");
  return *i;
}

inline bool as_bool(std::string_view v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw config_error("expected true or false, got '" + std::string(v) + "'");
}

inline std::int64_t as_tz(std::string_view v) {
  const auto tz = parse_tz_offset(v);
  if (!tz) throw config_error("bad timezone offset '" + std::string(v) + "'");
  return *tz;
}

inline boost::property_tree::ptree read_ini(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open configuration file " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw config_error("configuration file " + path.string() + ": " + e.message() + " (line " +
                       std::to_string(e.line()) + ")");
  }
  return tree;
}

} // namespace config_detail

// ---- run configuration --------------------------------------------------------

struct calibration_config {
  double speed_bin_width_kmh = 0.1;
  double speed_histogram_max_kmh = 130.0;
  speed_threshold_options speed;
  time_threshold_options time;
  poi_radius_options poi;
  stop_class poi_stop_min_class = stop_class::medium_term;
  bool allow_fallback = true;

  calibration_config() {
    time.fit.break_min = 300.0;
    time.fit.break_max = 10800.0;
  }
};

struct run_config {
  std::filesystem::path source; // the file this was read from
  std::filesystem::path gps, pois, roads, cities, output, calibration_report;
  parse_options parse;
  std::optional<bounding_region> region;
  std::filesystem::path region_file;
  thresholds th;
  calibration_config calibration;
  category_table categories = default_category_params();
  std::array<bool, poi_category_count> category_overridden{};
  double stats_bins_per_decade = 20.0;
  std::size_t workers = 0;

  std::filesystem::path out(const std::string& name) const { return output / name; }
};

namespace config_detail {

inline bounding_region parse_region(std::string_view v) {
  if (v == "china") return bounding_region::china();
  if (v.substr(0, 5) == "rect:") {
    const auto f = text::split(v.substr(5), ',');
    if (f.size() == 4) {
      const double a = as_double(text::trim(f[0])), b = as_double(text::trim(f[1]));
      const double c = as_double(text::trim(f[2])), d = as_double(text::trim(f[3]));
      return bounding_region::rectangle(a, b, c, d);
    }
  }
  if (v == "none") throw config_error("region 'none' is not a region");
  throw config_error("region must be 'china', 'rect:min_lon,min_lat,max_lon,max_lat' or set via region_file");
}

} // namespace config_detail

// Reads and fully validates a run configuration. Relative paths resolve
// against the configuration file's directory.
inline run_config load_run_config(const std::filesystem::path& path) {
  using namespace config_detail;
  run_config c;
  c.source = path;
  const auto base = path.parent_path();
  auto resolve = [&](std::string_view v) {
    std::filesystem::path p{std::string(v)};
    return p.is_absolute() ? p : base / p;
  };
  c.output = base / "output";
  binder b;
  b.bind("paths.gps", [&](auto v) { c.gps = resolve(v); });
  b.bind("paths.pois", [&](auto v) { c.pois = resolve(v); });
  b.bind("paths.roads", [&](auto v) { c.roads = resolve(v); });
  b.bind("paths.cities", [&](auto v) { c.cities = resolve(v); });
  b.bind("paths.output", [&](auto v) { c.output = resolve(v); });
  b.bind("paths.calibration_report", [&](auto v) { c.calibration_report = resolve(v); });

  b.bind("ingest.delimiter", [&](std::string_view v) {
    if (v == "tab" || v == "\\t") c.parse.delimiter = '\t';
    else if (v.size() == 1) c.parse.delimiter = v[0];
    else throw config_error("delimiter must be a single character or 'tab'");
  });
  b.bind("ingest.has_header", [&](auto v) { c.parse.has_header = as_bool(v); });
  b.bind("ingest.tz_offset", [&](auto v) { c.parse.tz_offset_s = as_tz(v); });
  b.bind("ingest.region", [&](auto v) { c.region = parse_region(v); });
  b.bind("ingest.region_file", [&](auto v) { c.region_file = resolve(v); });

  b.bind("thresholds.speed_threshold_kmh", [&](auto v) { c.th.speed_threshold_kmh = as_double(v); });
  b.bind("thresholds.t_min_s", [&](auto v) { c.th.t_min_s = as_double(v); });
  b.bind("thresholds.t_max_s", [&](auto v) { c.th.t_max_s = as_double(v); });
  b.bind("thresholds.max_speed_kmh", [&](auto v) { c.th.max_speed_kmh = as_double(v); });
  b.bind("thresholds.max_accel_ms2", [&](auto v) { c.th.max_accel_ms2 = as_double(v); });
  b.bind("thresholds.gap_limit_s", [&](auto v) { c.th.gap_limit_s = as_double(v); });

  auto& cal = c.calibration;
  b.bind("calibration.speed_bin_width_kmh", [&](auto v) { cal.speed_bin_width_kmh = as_double(v); });
  b.bind("calibration.speed_histogram_max_kmh", [&](auto v) { cal.speed_histogram_max_kmh = as_double(v); });
  b.bind("calibration.speed_window", [&](auto v) { cal.speed.window = as_int<std::size_t>(v); });
  b.bind("calibration.speed_smoothness_ratio", [&](auto v) { cal.speed.smoothness_ratio = as_double(v); });
  b.bind("calibration.speed_min_populated_bins", [&](auto v) { cal.speed.min_populated_bins = as_int<std::size_t>(v); });
  b.bind("calibration.dwell_bins_per_decade", [&](auto v) { cal.time.fit.bins_per_decade = as_double(v); });
  b.bind("calibration.break_min_s", [&](auto v) { cal.time.fit.break_min = as_double(v); });
  b.bind("calibration.break_max_s", [&](auto v) { cal.time.fit.break_max = as_double(v); });
  b.bind("calibration.dwell_joined_segments", [&](auto v) { cal.time.fit.joined = as_bool(v); });
  b.bind("calibration.dwell_count_weighted", [&](auto v) { cal.time.fit.count_weighted = as_bool(v); });
  b.bind("calibration.dwell_min_samples", [&](auto v) { cal.time.fit.min_samples = as_int<std::size_t>(v); });
  b.bind("calibration.tail_window", [&](auto v) { cal.time.window = as_int<std::size_t>(v); });
  b.bind("calibration.irregularity_ratio", [&](auto v) { cal.time.irregularity_ratio = as_double(v); });
  b.bind("calibration.poi_bin_width_m", [&](auto v) { cal.poi.bin_width = as_double(v); });
  b.bind("calibration.poi_max_distance_m", [&](auto v) { cal.poi.max_distance = as_double(v); });
  b.bind("calibration.poi_smoothing_window", [&](auto v) { cal.poi.smoothing_window = as_int<std::size_t>(v); });
  b.bind("calibration.poi_min_samples", [&](auto v) { cal.poi.min_samples = as_int<std::size_t>(v); });
  b.bind("calibration.poi_stop_min_class", [&](std::string_view v) {
    const auto cls = parse_stop_class(v);
    if (!cls) throw config_error("expected short, medium or long");
    cal.poi_stop_min_class = *cls;
  });
  b.bind("calibration.allow_fallback", [&](auto v) { cal.allow_fallback = as_bool(v); });

  // "categories.factory = 350, 670" overrides a row of the radius table.
  for (poi_category cat : all_poi_categories) {
    b.bind("categories." + std::string(to_string(cat)), [&c, cat](std::string_view v) {
      const auto f = text::split(v, ',');
      if (f.size() != 2) throw config_error("expected 'valid_radius, poi_radius'");
      auto& row = c.categories[index_of(cat)];
      row.valid_radius_m = as_double(text::trim(f[0]));
      row.poi_radius_m = as_double(text::trim(f[1]));
      c.category_overridden[index_of(cat)] = true;
    });
  }

  b.bind("stats.bins_per_decade", [&](auto v) { c.stats_bins_per_decade = as_double(v); });
  b.bind("run.workers", [&](auto v) { c.workers = as_int<std::size_t>(v); });

  b.apply(read_ini(path), path.string());

  if (c.region && !c.region_file.empty()) throw config_error("ingest.region and ingest.region_file are exclusive");
  if (!c.region_file.empty()) {
    std::ifstream in(c.region_file);
    if (!in) throw config_error("cannot open region file " + c.region_file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      c.region = bounding_region::polygon(wkt::parse_polygonal(text::trim(ss.str())));
    } catch (const parse_error& e) {
      throw config_error("region file " + c.region_file.string() + ": " + e.what());
    }
  }
  try {
    c.th.validate();
    for (const auto& row : c.categories) row.validate();
  } catch (const config_error& e) {
    throw config_error(path.string() + ": " + e.what());
  }
  if (!(cal.speed_bin_width_kmh > 0.0) || !(cal.speed_histogram_max_kmh > cal.speed_bin_width_kmh))
    throw config_error(path.string() + ": speed histogram needs 0 < bin width < max");
  if (!(c.stats_bins_per_decade > 0.0)) throw config_error(path.string() + ": stats.bins_per_decade must be positive");
  return c;
}

// ---- fleet plan files -----------------------------------------------------------

inline synth::fleet_plan load_fleet_plan(const std::filesystem::path& path) {
  using namespace config_detail;
  synth::fleet_plan p;
  binder b;
  b.bind("fleet.seed", [&](auto v) { p.seed = as_int<std::uint64_t>(v); });
  b.bind("fleet.trucks", [&](auto v) { p.n_trucks = as_int<std::size_t>(v); });
  b.bind("fleet.tz_offset", [&](auto v) { p.tz_offset_s = as_tz(v); });
  // Interpreted with the tz_offset in effect at this line.
  b.bind("fleet.start", [&](std::string_view v) {
    const auto t = parse_local_timestamp(v, p.tz_offset_s);
    if (!t) throw config_error("expected 'YYYY-MM-DD hh:mm:ss'");
    p.start_epoch = *t;
  });
  b.bind("fleet.horizon_s", [&](auto v) { p.horizon_s = as_int<std::int64_t>(v); });
  b.bind("fleet.sampling_interval_s", [&](auto v) { p.sampling_interval_s = as_int<std::int64_t>(v); });
  b.bind("fleet.max_trip_ends_per_truck", [&](auto v) { p.max_trip_ends_per_truck = as_int<std::size_t>(v); });

  b.bind("geography.center_lon", [&](auto v) { p.center_lon = as_double(v); });
  b.bind("geography.center_lat", [&](auto v) { p.center_lat = as_double(v); });
  b.bind("geography.extent_m", [&](auto v) { p.extent_m = as_double(v); });
  b.bind("geography.road_spacing_m", [&](auto v) { p.road_spacing_m = as_double(v); });
  b.bind("geography.city_size_m", [&](auto v) { p.city_size_m = as_double(v); });
  b.bind("geography.pois_per_category", [&](auto v) { p.pois_per_category = as_int<std::size_t>(v); });
  for (poi_category cat : all_poi_categories)
    b.bind("mix." + std::string(to_string(cat)), [&p, cat](auto v) { p.category_mix[index_of(cat)] = as_double(v); });

  b.bind("dwell.alpha1", [&](auto v) { p.dwell_alpha1 = as_double(v); });
  b.bind("dwell.alpha2", [&](auto v) { p.dwell_alpha2 = as_double(v); });
  b.bind("dwell.break_s", [&](auto v) { p.dwell_break_s = as_double(v); });
  b.bind("dwell.min_s", [&](auto v) { p.dwell_min_s = as_double(v); });
  b.bind("dwell.max_s", [&](auto v) { p.dwell_max_s = as_double(v); });
  b.bind("dwell.long_tail_prob", [&](auto v) { p.long_tail_prob = as_double(v); });

  b.bind("trips.distance_mode_m", [&](auto v) { p.distance_mode_m = as_double(v); });
  b.bind("trips.distance_sigma", [&](auto v) { p.distance_sigma = as_double(v); });
  b.bind("trips.duration_mode_s", [&](auto v) { p.duration_mode_s = as_double(v); });
  b.bind("trips.speed_sigma", [&](auto v) { p.speed_sigma = as_double(v); });
  b.bind("trips.departure_peak1_h", [&](auto v) { p.departure_peak1_h = as_double(v); });
  b.bind("trips.departure_peak2_h", [&](auto v) { p.departure_peak2_h = as_double(v); });

  b.bind("noise.standard", [&](auto v) {
    if (as_bool(v)) p.noise = synth::noise_model::standard();
  });
  b.bind("noise.jitter_m", [&](auto v) { p.noise.jitter_m = as_double(v); });
  b.bind("noise.dropout_prob", [&](auto v) { p.noise.dropout_prob = as_double(v); });
  b.bind("noise.duplicate_prob", [&](auto v) { p.noise.duplicate_prob = as_double(v); });
  b.bind("noise.jump_prob", [&](auto v) { p.noise.jump_prob = as_double(v); });
  b.bind("noise.drift_prob", [&](auto v) { p.noise.drift_prob = as_double(v); });

  b.apply(read_ini(path), path.string());
  p.validate();
  return p;
}

} // namespace freight
