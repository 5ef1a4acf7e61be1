#pragma once

#include "freight/calibration.hpp"
#include "freight/config.hpp"
#include "freight/error.hpp"
#include "freight/histogram.hpp"
#include "freight/ingest.hpp"
#include "freight/parallel.hpp"
#include "freight/spatial.hpp"
#include "freight/stats.hpp"
#include "freight/stops.hpp"
#include "freight/synth.hpp"
#include "freight/text.hpp"
#include "freight/trips.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

// File-to-file stages. Each stage reads its inputs from disk and writes its
// outputs to the configured output directory.
namespace freight::pipeline {

// ---- file helpers -------------------------------------------------------------

inline std::ifstream open_in(const std::filesystem::path& p, const char* what) {
  if (p.empty()) throw config_error(std::string(what) + ": no path configured");
  if (!std::filesystem::exists(p)) throw config_error(std::string(what) + ": " + p.string() + " does not exist");
  std::ifstream in(p, std::ios::binary);
  if (!in) throw io_error(std::string(what) + ": cannot open " + p.string());
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write " + p.string());
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& p) {
  out.flush();
  if (!out) throw io_error("write failed for " + p.string());
}

// ---- stops, trip ends and trips files ------------------------------------------

inline constexpr std::string_view stops_header =
    "truck_id,segment_id,seq,centroid_lon,centroid_lat,t_start,t_end,dwell,n_points,stop_class";

inline void write_stop_fields(std::ostream& os, const truck_stop& s) {
  os << s.truck_id << ',' << s.segment_id << ',' << s.seq << ',' << text::fmt_double(s.centroid_lon) << ','
     << text::fmt_double(s.centroid_lat) << ',' << s.t_start << ',' << s.t_end << ',' << s.dwell << ','
     << s.n_points << ',' << to_string(s.cls);
}

inline void write_stops(std::ostream& os, const std::vector<truck_stop>& stops) {
  os << stops_header << '\n';
  for (const auto& s : stops) {
    write_stop_fields(os, s);
    os << '\n';
  }
}

namespace detail {

inline truck_stop parse_stop_fields(const std::vector<std::string_view>& f, std::size_t line_no) {
  truck_stop s;
  const auto seg = text::to_int<std::uint32_t>(f[1]);
  const auto seq = text::to_int<std::uint32_t>(f[2]);
  const auto lon = text::to_double(f[3]), lat = text::to_double(f[4]);
  const auto ts = text::to_int<std::int64_t>(f[5]), te = text::to_int<std::int64_t>(f[6]);
  const auto dwell = text::to_int<std::int64_t>(f[7]);
  const auto n = text::to_int<std::size_t>(f[8]);
  const auto cls = parse_stop_class(f[9]);
  if (f[0].empty() || !seg || !seq || !lon || !lat || !ts || !te || !dwell || !n || !cls)
    throw parse_error("stop fields: malformed line " + std::to_string(line_no));
  s.truck_id = std::string(f[0]);
  s.segment_id = *seg;
  s.seq = *seq;
  s.centroid_lon = *lon;
  s.centroid_lat = *lat;
  s.t_start = *ts;
  s.t_end = *te;
  s.dwell = *dwell;
  s.n_points = *n;
  s.cls = *cls;
  return s;
}

template <typename OnRow>
void read_csv(std::istream& in, std::size_t n_fields, const char* what, OnRow&& on_row) {
  std::string line;
  std::vector<std::string_view> f;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) continue; // header
    const auto view = text::trim(line);
    if (view.empty()) continue;
    text::split(view, ',', f);
    if (f.size() != n_fields)
      throw parse_error(std::string(what) + ": expected " + std::to_string(n_fields) + " fields on line " +
                        std::to_string(line_no));
    on_row(f, line_no);
  }
}

template <typename T>
std::string opt_str(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_same_v<T, std::string>) return *v;
  else if constexpr (std::is_same_v<T, double>) return text::fmt_double(*v);
  else return std::string(to_string(*v));
}

inline std::optional<std::string> str_opt(std::string_view v) {
  if (v.empty()) return std::nullopt;
  return std::string(v);
}

} // namespace detail

inline std::vector<truck_stop> read_stops(std::istream& in) {
  std::vector<truck_stop> out;
  detail::read_csv(in, 10, "stops file", [&](const auto& f, std::size_t line_no) {
    out.push_back(detail::parse_stop_fields(f, line_no));
  });
  return out;
}

inline void write_trip_ends(std::ostream& os, const std::vector<trip_end>& ends) {
  os << stops_header << ",validity_reason,matched_poi_category,matched_poi_id,poi_distance_m,city_id\n";
  for (const auto& e : ends) {
    write_stop_fields(os, e.stop);
    os << ',' << to_string(e.reason) << ',' << detail::opt_str(e.category) << ',' << detail::opt_str(e.poi_id) << ','
       << detail::opt_str(e.poi_distance_m) << ',' << detail::opt_str(e.city_id) << '\n';
  }
}

inline std::vector<trip_end> read_trip_ends(std::istream& in) {
  std::vector<trip_end> out;
  detail::read_csv(in, 15, "trip-ends file", [&](const auto& f, std::size_t line_no) {
    trip_end e;
    e.stop = detail::parse_stop_fields(f, line_no);
    const auto reason = parse_validity_reason(f[10]);
    if (!reason) throw parse_error("trip-ends file: bad validity_reason on line " + std::to_string(line_no));
    e.reason = *reason;
    if (!f[11].empty()) {
      e.category = parse_poi_category(f[11]);
      if (!e.category) throw parse_error("trip-ends file: bad category on line " + std::to_string(line_no));
    }
    e.poi_id = detail::str_opt(f[12]);
    if (!f[13].empty()) e.poi_distance_m = text::to_double(f[13]);
    e.city_id = detail::str_opt(f[14]);
    out.push_back(std::move(e));
  });
  return out;
}

inline void write_trips(std::ostream& os, const std::vector<trip>& trips) {
  os << "truck_id,segment_id,origin_seq,destination_seq,origin_lon,origin_lat,destination_lon,destination_lat,"
        "origin_city,destination_city,origin_category,destination_category,departure_ts,arrival_ts,duration,"
        "path_distance_m,intercity\n";
  for (const trip& t : trips) {
    os << t.truck_id << ',' << t.origin.stop.segment_id << ',' << t.origin.stop.seq << ','
       << t.destination.stop.seq << ',' << text::fmt_double(t.origin.stop.centroid_lon) << ','
       << text::fmt_double(t.origin.stop.centroid_lat) << ',' << text::fmt_double(t.destination.stop.centroid_lon)
       << ',' << text::fmt_double(t.destination.stop.centroid_lat) << ',' << detail::opt_str(t.origin.city_id) << ','
       << detail::opt_str(t.destination.city_id) << ',' << detail::opt_str(t.origin.category) << ','
       << detail::opt_str(t.destination.category) << ',' << t.departure_ts << ',' << t.arrival_ts << ','
       << t.duration << ',' << text::fmt_double(t.path_distance_m) << ',' << to_string(t.intercity) << '\n';
  }
}

// Trips carry only the end attributes the trips file records.
inline std::vector<trip> read_trips(std::istream& in) {
  std::vector<trip> out;
  detail::read_csv(in, 17, "trips file", [&](const auto& f, std::size_t line_no) {
    auto bad = [&] { return parse_error("trips file: malformed line " + std::to_string(line_no)); };
    trip t;
    t.truck_id = std::string(f[0]);
    const auto seg = text::to_int<std::uint32_t>(f[1]);
    const auto oseq = text::to_int<std::uint32_t>(f[2]), dseq = text::to_int<std::uint32_t>(f[3]);
    const auto olon = text::to_double(f[4]), olat = text::to_double(f[5]);
    const auto dlon = text::to_double(f[6]), dlat = text::to_double(f[7]);
    const auto dep = text::to_int<std::int64_t>(f[12]), arr = text::to_int<std::int64_t>(f[13]);
    const auto dur = text::to_int<std::int64_t>(f[14]);
    const auto dist = text::to_double(f[15]);
    const auto inter = parse_intercity_status(f[16]);
    if (t.truck_id.empty() || !seg || !oseq || !dseq || !olon || !olat || !dlon || !dlat || !dep || !arr || !dur ||
        !dist || !inter)
      throw bad();
    for (trip_end* e : {&t.origin, &t.destination}) {
      e->stop.truck_id = t.truck_id;
      e->stop.segment_id = *seg;
    }
    t.origin.stop.seq = *oseq;
    t.destination.stop.seq = *dseq;
    t.origin.stop.centroid_lon = *olon;
    t.origin.stop.centroid_lat = *olat;
    t.destination.stop.centroid_lon = *dlon;
    t.destination.stop.centroid_lat = *dlat;
    t.origin.stop.t_end = *dep;
    t.destination.stop.t_start = *arr;
    t.origin.city_id = detail::str_opt(f[8]);
    t.destination.city_id = detail::str_opt(f[9]);
    if (!f[10].empty() && !(t.origin.category = parse_poi_category(f[10]))) throw bad();
    if (!f[11].empty() && !(t.destination.category = parse_poi_category(f[11]))) throw bad();
    t.departure_ts = *dep;
    t.arrival_ts = *arr;
    t.duration = *dur;
    t.path_distance_m = *dist;
    t.intercity = *inter;
    if (t.intercity == intercity_status::intercity && (!t.origin.city_id || !t.destination.city_id)) throw bad();
    out.push_back(std::move(t));
  });
  return out;
}

// ---- calibration report ----------------------------------------------------------

struct calibration_report {
  detection speed{1.1, true};
  std::size_t speed_pairs = 0;
  std::string speed_error;

  detection t_min{1440.0, true};
  detection t_max{46800.0, true};
  std::optional<broken_power_law_fit> fit;
  std::size_t dwell_samples = 0;
  std::string dwell_error;

  struct radius_row {
    poi_category_params params;
    bool fallback = true;
    std::size_t samples = 0;
    std::string error;
  };
  std::array<radius_row, poi_category_count> radii{};

  std::vector<std::string> errors() const {
    std::vector<std::string> out;
    if (!speed_error.empty()) out.push_back("speed threshold: " + speed_error);
    if (!dwell_error.empty()) out.push_back("time thresholds: " + dwell_error);
    for (const auto& r : radii)
      if (!r.error.empty()) out.push_back("poi radii " + std::string(to_string(r.params.category)) + ": " + r.error);
    return out;
  }
};

namespace detail {

inline std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

inline const char* flag(bool b) { return b ? "true" : "false"; }

} // namespace detail

inline void write_calibration_report(std::ostream& os, const calibration_report& r) {
  using detail::flag;
  using text::fmt_double;
  os << "[speed]\n"
     << "threshold_kmh = " << fmt_double(r.speed.value) << '\n'
     << "fallback = " << flag(r.speed.fallback) << '\n'
     << "pairs = " << r.speed_pairs << '\n';
  if (!r.speed_error.empty()) os << "error = " << detail::one_line(r.speed_error) << '\n';
  os << "\n[dwell]\n"
     << "t_min_s = " << fmt_double(r.t_min.value) << '\n'
     << "t_min_fallback = " << flag(r.t_min.fallback) << '\n'
     << "t_max_s = " << fmt_double(r.t_max.value) << '\n'
     << "t_max_fallback = " << flag(r.t_max.fallback) << '\n'
     << "samples = " << r.dwell_samples << '\n';
  if (r.fit)
    os << "alpha1 = " << fmt_double(r.fit->alpha1) << '\n'
       << "alpha2 = " << fmt_double(r.fit->alpha2) << '\n'
       << "break_s = " << fmt_double(r.fit->break_point) << '\n'
       << "fit_error = " << fmt_double(r.fit->fit_error) << '\n';
  if (!r.dwell_error.empty()) os << "error = " << detail::one_line(r.dwell_error) << '\n';
  os << "\n[radii]\n";
  for (const auto& row : r.radii) {
    const std::string name(to_string(row.params.category));
    os << name << " = " << fmt_double(row.params.valid_radius_m) << ", " << fmt_double(row.params.poi_radius_m) << '\n'
       << name << "_fallback = " << flag(row.fallback) << '\n'
       << name << "_samples = " << row.samples << '\n';
    if (!row.error.empty()) os << name << "_error = " << detail::one_line(row.error) << '\n';
  }
}

inline calibration_report read_calibration_report(const std::filesystem::path& path) {
  using namespace config_detail;
  calibration_report r;
  std::array<bool, poi_category_count> seen{};
  bool have_speed = false, have_tmin = false, have_tmax = false;
  std::optional<broken_power_law_fit> fit;
  auto fit_field = [&]() -> broken_power_law_fit& {
    if (!fit) fit.emplace();
    return *fit;
  };
  binder b;
  b.bind("speed.threshold_kmh", [&](auto v) { r.speed.value = as_double(v); have_speed = true; });
  b.bind("speed.fallback", [&](auto v) { r.speed.fallback = as_bool(v); });
  b.bind("speed.pairs", [&](auto v) { r.speed_pairs = as_int<std::size_t>(v); });
  b.bind("speed.error", [&](auto v) { r.speed_error = std::string(v); });
  b.bind("dwell.t_min_s", [&](auto v) { r.t_min.value = as_double(v); have_tmin = true; });
  b.bind("dwell.t_min_fallback", [&](auto v) { r.t_min.fallback = as_bool(v); });
  b.bind("dwell.t_max_s", [&](auto v) { r.t_max.value = as_double(v); have_tmax = true; });
  b.bind("dwell.t_max_fallback", [&](auto v) { r.t_max.fallback = as_bool(v); });
  b.bind("dwell.samples", [&](auto v) { r.dwell_samples = as_int<std::size_t>(v); });
  b.bind("dwell.alpha1", [&](auto v) { fit_field().alpha1 = as_double(v); });
  b.bind("dwell.alpha2", [&](auto v) { fit_field().alpha2 = as_double(v); });
  b.bind("dwell.break_s", [&](auto v) { fit_field().break_point = as_double(v); });
  b.bind("dwell.fit_error", [&](auto v) { fit_field().fit_error = as_double(v); });
  b.bind("dwell.error", [&](auto v) { r.dwell_error = std::string(v); });
  for (poi_category cat : all_poi_categories) {
    const std::string name(to_string(cat));
    auto& row = r.radii[index_of(cat)];
    row.params.category = cat;
    b.bind("radii." + name, [&row, &seen, cat](std::string_view v) {
      const auto f = text::split(v, ',');
      if (f.size() != 2) throw config_error("expected 'valid_radius, poi_radius'");
      row.params.valid_radius_m = as_double(text::trim(f[0]));
      row.params.poi_radius_m = as_double(text::trim(f[1]));
      seen[index_of(cat)] = true;
    });
    b.bind("radii." + name + "_fallback", [&row](auto v) { row.fallback = as_bool(v); });
    b.bind("radii." + name + "_samples", [&row](auto v) { row.samples = as_int<std::size_t>(v); });
    b.bind("radii." + name + "_error", [&row](auto v) { row.error = std::string(v); });
  }
  b.apply(read_ini(path), "calibration report " + path.string());
  r.fit = fit;
  if (!have_speed || !have_tmin || !have_tmax)
    throw config_error("calibration report " + path.string() + ": missing threshold values");
  for (std::size_t i = 0; i < poi_category_count; ++i) {
    if (!seen[i])
      throw config_error("calibration report " + path.string() + ": missing radii for " +
                         std::string(poi_category_names[i]));
    r.radii[i].params.validate();
  }
  return r;
}

// ---- stage: ingest ---------------------------------------------------------------

struct ingest_summary {
  std::size_t rows = 0;
  std::size_t accepted = 0;
  std::size_t trucks = 0;
  std::size_t segments = 0;
  std::map<rejection_reason, std::size_t> rejected;

  std::size_t rejected_total() const {
    std::size_t n = 0;
    for (const auto& [_, c] : rejected) n += c;
    return n;
  }
};

struct cleaned_data {
  std::vector<trajectory> segments;
  std::vector<rejection_record> rejections;
  ingest_summary summary;
};

// Parse and clean in memory; per-truck cascades run in parallel.
inline cleaned_data clean_records(std::istream& in, const parse_options& opts, const bounding_region& region,
                                  const thresholds& th, std::size_t workers) {
  auto parsed = parse_records(in, opts);
  cleaned_data out;
  out.summary.rows = parsed.rows;
  out.rejections = std::move(parsed.rejections);
  auto trucks = group_by_truck(std::move(parsed.records));
  std::vector<cascade_result> results(trucks.size());
  parallel_for(trucks.size(), workers,
               [&](std::size_t k) { results[k] = clean_truck(std::move(trucks[k]), region, th); });
  out.summary.trucks = trucks.size();
  for (auto& r : results) {
    for (auto& s : r.segments) {
      out.summary.accepted += s.records.size();
      out.segments.push_back(std::move(s));
    }
    out.rejections.insert(out.rejections.end(), std::make_move_iterator(r.rejections.begin()),
                          std::make_move_iterator(r.rejections.end()));
  }
  out.summary.segments = out.segments.size();
  std::stable_sort(out.rejections.begin(), out.rejections.end(),
                   [](const auto& a, const auto& b) { return a.source_line < b.source_line; });
  for (const auto& r : out.rejections) ++out.summary.rejected[r.reason];
  if (out.summary.accepted + out.rejections.size() != out.summary.rows)
    throw consistency_error("ingest: accepted + rejected does not equal input rows");
  return out;
}

inline parse_options cleaned_file_options(const run_config& cfg) {
  return {cfg.parse.delimiter, true, cfg.parse.tz_offset_s};
}

inline ingest_summary run_ingest(const run_config& cfg, std::ostream& log) {
  if (!cfg.region) throw config_error("ingest: no bounding region configured (ingest.region or ingest.region_file)");
  auto in = open_in(cfg.gps, "paths.gps");
  auto data = clean_records(in, cfg.parse, *cfg.region, cfg.th, cfg.workers);
  const auto cleaned_path = cfg.out("cleaned.csv");
  auto out = open_out(cleaned_path);
  write_cleaned_records(out, data.segments, cleaned_file_options(cfg));
  finish(out, cleaned_path);
  const auto rej_path = cfg.out("rejections.csv");
  auto rej = open_out(rej_path);
  write_rejections(rej, data.rejections, cfg.parse.tz_offset_s);
  finish(rej, rej_path);
  log << "ingest: " << data.summary.rows << " rows, " << data.summary.accepted << " accepted, "
      << data.summary.rejected_total() << " rejected, " << data.summary.trucks << " trucks, "
      << data.summary.segments << " segments\n";
  for (const auto& [reason, n] : data.summary.rejected) log << "ingest: rejected " << to_string(reason) << " " << n << '\n';
  return data.summary;
}

inline std::vector<trajectory> load_cleaned(const run_config& cfg) {
  auto in = open_in(cfg.out("cleaned.csv"), "cleaned records (run ingest first)");
  return read_cleaned_records(in, cleaned_file_options(cfg));
}

inline std::vector<poi> load_pois(const std::filesystem::path& p) {
  if (p.empty()) return {};
  auto in = open_in(p, "paths.pois");
  return read_pois(in);
}

inline std::vector<road_segment> load_roads(const std::filesystem::path& p) {
  if (p.empty()) return {};
  auto in = open_in(p, "paths.roads");
  return read_roads(in);
}

inline std::vector<city_region> load_cities(const std::filesystem::path& p) {
  if (p.empty()) return {};
  auto in = open_in(p, "paths.cities");
  return read_cities(in);
}

// ---- stage: calibrate ----------------------------------------------------------

inline histogram pairwise_speed_histogram(const std::vector<trajectory>& segments, double bin_width, double max_kmh,
                                          std::size_t workers, std::size_t* pairs = nullptr) {
  std::vector<histogram> parts(segments.size());
  std::vector<std::size_t> counts(segments.size(), 0);
  parallel_for(segments.size(), workers, [&](std::size_t k) {
    histogram& h = parts[k];
    h.origin = 0.0;
    h.bin_width = bin_width;
    const auto& r = segments[k].records;
    for (std::size_t i = 1; i < r.size(); ++i) {
      const double v = avg_speed_kmh(r[i - 1], r[i]);
      if (v < max_kmh) {
        h.add(v);
        ++counts[k];
      }
    }
  });
  histogram total;
  total.origin = 0.0;
  total.bin_width = bin_width;
  for (const auto& h : parts) total.merge(h);
  if (pairs) {
    *pairs = 0;
    for (auto c : counts) *pairs += c;
  }
  return total;
}

inline std::vector<truck_stop> detect_all_stops(const std::vector<trajectory>& segments, const thresholds& th,
                                                std::size_t workers) {
  std::vector<std::vector<truck_stop>> parts(segments.size());
  parallel_for(segments.size(), workers, [&](std::size_t k) { parts[k] = detect_stops(segments[k], th); });
  // Sequence numbers run per truck across its segments.
  std::vector<truck_stop> out;
  std::uint32_t seq = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (k == 0 || segments[k].truck_id != segments[k - 1].truck_id) seq = 0;
    for (auto& s : parts[k]) {
      s.seq = seq++;
      out.push_back(std::move(s));
    }
  }
  return out;
}

inline calibration_report calibrate(const run_config& cfg, const std::vector<trajectory>& segments,
                                    const std::vector<poi>& pois) {
  const auto& cal = cfg.calibration;
  calibration_report r;

  const histogram speeds = pairwise_speed_histogram(segments, cal.speed_bin_width_kmh, cal.speed_histogram_max_kmh,
                                                    cfg.workers, &r.speed_pairs);
  try {
    speed_threshold_options opts = cal.speed;
    opts.default_kmh = cfg.th.speed_threshold_kmh;
    r.speed = detect_speed_threshold(speeds, opts);
  } catch (const insufficient_data_error& e) {
    r.speed = {cfg.th.speed_threshold_kmh, true};
    r.speed_error = e.what();
  }

  thresholds th = cfg.th;
  th.speed_threshold_kmh = r.speed.value;
  auto stops = detect_all_stops(segments, th, cfg.workers);
  std::vector<double> dwells;
  for (const auto& s : stops)
    if (s.dwell > 0) dwells.push_back(static_cast<double>(s.dwell));
  r.dwell_samples = dwells.size();
  try {
    time_threshold_options opts = cal.time;
    opts.fit.quantum = lattice_quantum(dwells);
    opts.default_t_min = cfg.th.t_min_s;
    opts.default_t_max = cfg.th.t_max_s;
    const auto t = detect_time_thresholds(dwells, opts);
    r.t_min = t.t_min;
    r.t_max = t.t_max;
    r.fit = t.fit;
  } catch (const error& e) {
    if (!dynamic_cast<const insufficient_data_error*>(&e) && !dynamic_cast<const fit_error*>(&e)) throw;
    r.t_min = {cfg.th.t_min_s, true};
    r.t_max = {cfg.th.t_max_s, true};
    r.dwell_error = e.what();
  }

  // Radii: distances from qualifying stops to the nearest POI of each category.
  std::vector<truck_stop> candidates;
  for (auto& s : stops) {
    s.cls = classify_stop(s, r.t_min.value, r.t_max.value);
    if (s.cls >= cal.poi_stop_min_class) candidates.push_back(s);
  }
  const poi_index index(pois, cfg.categories);
  for (poi_category cat : all_poi_categories) {
    auto& row = r.radii[index_of(cat)];
    row.params = cfg.categories[index_of(cat)];
    row.fallback = true;
    if (index.sites(cat).empty()) {
      row.error = "no POIs of this category";
      continue;
    }
    std::vector<double> d(candidates.size());
    parallel_for(candidates.size(), cfg.workers,
                 [&](std::size_t k) { d[k] = index.nearest(candidates[k].centroid(), cat)->distance_m; });
    row.samples = d.size();
    try {
      row.params = detect_poi_radii(cat, d, cal.poi).params;
      row.fallback = false;
    } catch (const error& e) {
      if (!dynamic_cast<const insufficient_data_error*>(&e) && !dynamic_cast<const radius_unreachable_error*>(&e))
        throw;
      row.error = e.what();
    }
  }
  return r;
}

inline calibration_report run_calibrate(const run_config& cfg, std::ostream& log) {
  const auto segments = load_cleaned(cfg);
  const auto pois = load_pois(cfg.pois);
  const auto report = calibrate(cfg, segments, pois);
  const auto path = cfg.calibration_report.empty() ? cfg.out("calibration.ini") : cfg.calibration_report;
  auto out = open_out(path);
  write_calibration_report(out, report);
  finish(out, path);
  log << "calibrate: speed threshold " << text::fmt_fixed(report.speed.value, 3) << " km/h"
      << (report.speed.fallback ? " (fallback)" : "") << ", t_min " << text::fmt_fixed(report.t_min.value, 1) << " s"
      << (report.t_min.fallback ? " (fallback)" : "") << ", t_max " << text::fmt_fixed(report.t_max.value, 1) << " s"
      << (report.t_max.fallback ? " (fallback)" : "") << '\n';
  const auto errors = report.errors();
  for (const auto& e : errors) log << "calibrate: insufficient data: " << e << '\n';
  if (!errors.empty() && !cfg.calibration.allow_fallback)
    throw insufficient_data_error("calibrate: " + std::to_string(errors.size()) +
                                  " detector(s) lacked data and fallback is disabled");
  return report;
}

// ---- stage: extract ------------------------------------------------------------

struct effective_parameters {
  thresholds th;
  category_table categories;
  bool from_report = false;
};

// Thresholds and radii for extraction: configuration values, replaced by a
// calibration report when one is configured. Radii set explicitly in the
// configuration take precedence over the report.
inline effective_parameters resolve_parameters(const run_config& cfg) {
  effective_parameters p{cfg.th, cfg.categories, false};
  const auto path = cfg.calibration_report;
  if (path.empty()) return p;
  if (!std::filesystem::exists(path))
    throw config_error("paths.calibration_report: " + path.string() + " does not exist");
  const auto r = read_calibration_report(path);
  p.from_report = true;
  p.th.speed_threshold_kmh = r.speed.value;
  p.th.t_min_s = r.t_min.value;
  p.th.t_max_s = r.t_max.value;
  for (std::size_t i = 0; i < poi_category_count; ++i)
    if (!cfg.category_overridden[i]) p.categories[i] = r.radii[i].params;
  p.th.validate();
  return p;
}

struct extraction {
  std::vector<truck_stop> stops;
  std::vector<trip_end> ends;
  std::vector<trip> trips;
  selection_counts counts;
  city_assignment_counts cities;
};

inline extraction extract(const std::vector<trajectory>& segments, const thresholds& th, const poi_index& pois,
                          const road_index& roads, const city_index& cities, std::size_t workers) {
  // Truck boundaries in the segment list.
  std::vector<std::pair<std::size_t, std::size_t>> trucks;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    if (k == 0 || segments[k].truck_id != segments[k - 1].truck_id) trucks.push_back({k, k});
    trucks.back().second = k + 1;
  }
  struct truck_out {
    std::vector<truck_stop> stops;
    trip_end_selection sel;
    city_assignment_counts cities;
    std::vector<trip> trips;
  };
  std::vector<truck_out> parts(trucks.size());
  parallel_for(trucks.size(), workers, [&](std::size_t t) {
    auto& o = parts[t];
    const auto [a, b] = trucks[t];
    const std::vector<trajectory> own(segments.begin() + static_cast<std::ptrdiff_t>(a),
                                      segments.begin() + static_cast<std::ptrdiff_t>(b));
    for (const auto& seg : own) {
      auto s = detect_stops(seg, th, static_cast<std::uint32_t>(o.stops.size()));
      o.stops.insert(o.stops.end(), s.begin(), s.end());
    }
    o.sel = select_trip_ends(o.stops, pois, roads);
    o.cities = assign_cities(o.sel.ends, cities);
    o.trips = chain_trips(o.sel.ends, own);
    mark_intercity(o.trips, cities);
  });
  extraction ex;
  for (auto& o : parts) {
    ex.stops.insert(ex.stops.end(), o.stops.begin(), o.stops.end());
    ex.ends.insert(ex.ends.end(), o.sel.ends.begin(), o.sel.ends.end());
    ex.trips.insert(ex.trips.end(), o.trips.begin(), o.trips.end());
    ex.counts += o.sel.counts;
    ex.cities.resolved += o.cities.resolved;
    ex.cities.unresolved += o.cities.unresolved;
    ex.cities.boundary_ties += o.cities.boundary_ties;
    ex.cities.overlaps += o.cities.overlaps;
  }
  return ex;
}

inline extraction run_extract(const run_config& cfg, std::ostream& log) {
  const auto params = resolve_parameters(cfg);
  const auto segments = load_cleaned(cfg);
  const poi_index pois(load_pois(cfg.pois), params.categories);
  const road_index roads(load_roads(cfg.roads));
  const city_index cities(load_cities(cfg.cities));
  if (pois.size() == 0) log << "extract: no POIs loaded; only long-term stops can become trip ends\n";
  auto ex = extract(segments, params.th, pois, roads, cities, cfg.workers);

  const auto write = [&](const std::string& name, auto&& fn) {
    const auto path = cfg.out(name);
    auto out = open_out(path);
    fn(out);
    finish(out, path);
  };
  write("stops.csv", [&](std::ostream& os) { write_stops(os, ex.stops); });
  write("trip_ends.csv", [&](std::ostream& os) { write_trip_ends(os, ex.ends); });
  write("trips.csv", [&](std::ostream& os) { write_trips(os, ex.trips); });

  log << "extract: thresholds " << text::fmt_double(params.th.speed_threshold_kmh) << " km/h, "
      << text::fmt_double(params.th.t_min_s) << " s, " << text::fmt_double(params.th.t_max_s) << " s"
      << (params.from_report ? " (calibration report)" : " (configuration)") << '\n';
  log << "extract: " << ex.stops.size() << " stops, " << ex.counts.accepted_long << " long-term and "
      << ex.counts.accepted_medium << " medium-in-POI trip ends; rejected " << ex.counts.rejected_short << " short, "
      << ex.counts.rejected_outside_poi << " outside POI, " << ex.counts.rejected_on_road << " on road\n";
  std::size_t inter = 0, unresolved = 0;
  for (const auto& t : ex.trips) {
    inter += t.intercity == intercity_status::intercity;
    unresolved += t.intercity == intercity_status::unresolved;
  }
  log << "extract: " << ex.trips.size() << " trips, " << inter << " intercity, " << unresolved << " unresolved\n";
  if (ex.cities.boundary_ties > 0)
    log << "extract: warning: " << ex.cities.boundary_ties
        << " trip ends lie on shared city borders; assigned to the lowest city id\n";
  if (ex.cities.overlaps > 0)
    log << "extract: warning: " << ex.cities.overlaps << " trip ends lie inside overlapping cities; left unresolved\n";
  return ex;
}

// ---- stage: stats ----------------------------------------------------------------

inline void write_shares(std::ostream& os, const std::vector<trip_end>& ends) {
  os << "category,count,share\n";
  category_share_table t;
  try {
    t = category_shares(ends);
  } catch (const insufficient_data_error&) {
    return;
  }
  for (poi_category c : all_poi_categories)
    os << to_string(c) << ',' << t.counts[index_of(c)] << ',' << text::fmt_fixed(t.share(c), 6) << '\n';
  os << "uncategorized," << t.uncategorized << ",\n";
}

inline void write_log_histogram(std::ostream& os, const log_histogram& h) {
  os << "bin_lo,bin_hi,count,density\n";
  for (std::size_t i = 0; i < h.size(); ++i)
    os << text::fmt_double(h.edges[i]) << ',' << text::fmt_double(h.edges[i + 1]) << ',' << h.counts[i] << ','
       << text::fmt_double(h.density(i)) << '\n';
}

struct stats_summary {
  std::size_t trips = 0;
  std::size_t intercity = 0;
  std::size_t excluded = 0; // trips left out of distance/duration stats
};

inline stats_summary run_stats(const run_config& cfg, std::ostream& log) {
  auto ends_in = open_in(cfg.out("trip_ends.csv"), "trip ends (run extract first)");
  const auto ends = read_trip_ends(ends_in);
  auto trips_in = open_in(cfg.out("trips.csv"), "trips (run extract first)");
  const auto trips = read_trips(trips_in);
  stats_summary sum;
  sum.trips = trips.size();

  const auto write = [&](const std::string& name, auto&& fn) {
    const auto path = cfg.out(name);
    auto out = open_out(path);
    fn(out);
    finish(out, path);
  };

  write("category_shares.csv", [&](std::ostream& os) { write_shares(os, ends); });
  std::vector<trip_end> inter_ends;
  for (const auto& t : trips)
    if (t.intercity == intercity_status::intercity) {
      inter_ends.push_back(t.origin);
      inter_ends.push_back(t.destination);
      ++sum.intercity;
    }
  write("intercity_category_shares.csv", [&](std::ostream& os) { write_shares(os, inter_ends); });

  std::vector<std::string> city_ids;
  if (!cfg.cities.empty()) {
    for (const auto& c : load_cities(cfg.cities)) city_ids.push_back(c.id);
  } else {
    std::set<std::string> ids;
    for (const auto& t : trips)
      if (t.intercity == intercity_status::intercity) {
        ids.insert(*t.origin.city_id);
        ids.insert(*t.destination.city_id);
      }
    city_ids.assign(ids.begin(), ids.end());
  }
  const auto od = build_od_matrix(trips, city_ids);
  write("od_matrix.csv", [&](std::ostream& os) {
    os << "origin_city,destination_city,count\n";
    for (std::size_t a = 0; a < od.size(); ++a)
      for (std::size_t b = 0; b < od.size(); ++b)
        if (od.at(a, b) > 0) os << od.cities[a] << ',' << od.cities[b] << ',' << od.at(a, b) << '\n';
  });

  const auto prof = time_of_day_profiles(trips, cfg.parse.tz_offset_s);
  write("departure_profile.csv", [&](std::ostream& os) {
    os << "hour,count\n";
    for (std::size_t h = 0; h < 24; ++h) os << h << ',' << prof.departure[h] << '\n';
  });
  write("arrival_profile.csv", [&](std::ostream& os) {
    os << "hour,count\n";
    for (std::size_t h = 0; h < 24; ++h) os << h << ',' << prof.arrival[h] << '\n';
  });

  // Trips without positive distance and duration are reported and excluded.
  std::vector<trip> usable;
  std::string excluded_ids;
  for (const auto& t : trips) {
    if (t.path_distance_m > 0.0 && t.duration > 0) {
      usable.push_back(t);
    } else {
      ++sum.excluded;
      excluded_ids += (excluded_ids.empty() ? "" : ", ") + t.id();
    }
  }
  if (sum.excluded > 0) log << "stats: excluded trips with zero distance or duration: " << excluded_ids << '\n';

  std::optional<distance_duration> dd;
  if (!usable.empty()) dd = distance_duration_stats(usable, cfg.stats_bins_per_decade);
  write("distance_histogram.csv", [&](std::ostream& os) {
    if (dd) write_log_histogram(os, dd->distance.hist);
    else os << "bin_lo,bin_hi,count,density\n";
  });
  write("duration_histogram.csv", [&](std::ostream& os) {
    if (dd) write_log_histogram(os, dd->duration.hist);
    else os << "bin_lo,bin_hi,count,density\n";
  });
  write("fits.txt", [&](std::ostream& os) {
    auto line = [&](const char* name, const std::optional<quantity_stats>& q) {
      if (q && q->fit)
        os << name << " mu=" << text::fmt_double(q->fit->mu) << " sigma=" << text::fmt_double(q->fit->sigma)
           << " n=" << q->fit->n << " mode=" << text::fmt_double(q->fit->mode()) << '\n';
      else
        os << name << " error=" << (q ? detail::one_line(q->fit_error) : std::string("no trips")) << '\n';
    };
    line("distance_m", dd ? std::optional<quantity_stats>(dd->distance) : std::nullopt);
    line("duration_s", dd ? std::optional<quantity_stats>(dd->duration) : std::nullopt);
    if (sum.excluded > 0) os << "excluded " << sum.excluded << '\n';
  });
  log << "stats: " << sum.trips << " trips, " << sum.intercity << " intercity, OD total " << od.total() << '\n';
  if (dd && dd->distance.fit && dd->duration.fit)
    log << "stats: distance mode " << text::fmt_fixed(dd->distance.fit->mode() / 1000.0, 1) << " km, duration mode "
        << text::fmt_fixed(dd->duration.fit->mode() / 3600.0, 2) << " h\n";
  return sum;
}

// ---- synth and score --------------------------------------------------------------

// Writes a generated fleet plus a run configuration that points at it.
inline void write_fleet(const synth::fleet& f, const synth::fleet_plan& plan, const std::filesystem::path& dir) {
  const auto write = [&](const std::string& name, auto&& fn) {
    const auto path = dir / name;
    auto out = open_out(path);
    fn(out);
    finish(out, path);
  };
  write("gps.csv", [&](std::ostream& os) { synth::write_gps(os, f.records, plan.tz_offset_s); });
  write("pois.csv", [&](std::ostream& os) { write_pois(os, f.pois); });
  write("roads.wkt", [&](std::ostream& os) { write_roads(os, f.roads); });
  write("cities.wkt", [&](std::ostream& os) { write_cities(os, f.cities); });
  write("truth.csv", [&](std::ostream& os) { synth::write_truth(os, f.truth); });
  write("run.ini", [&](std::ostream& os) {
    os << "[paths]\ngps = gps.csv\npois = pois.csv\nroads = roads.wkt\ncities = cities.wkt\noutput = out\n\n"
       << "[ingest]\ntz_offset = " << plan.tz_offset_s << "\nregion = china\n";
  });
}

inline std::vector<synth::predicted_end> read_predictions(const std::filesystem::path& p) {
  auto in = open_in(p, "predictions");
  std::vector<synth::predicted_end> out;
  for (const auto& e : read_trip_ends(in)) out.push_back(synth::to_prediction(e));
  return out;
}

inline void write_score(std::ostream& os, const synth::score& s) {
  auto opt = [](const std::optional<double>& v) { return v ? text::fmt_fixed(*v, 4) : std::string("undefined"); };
  os << "predicted = " << s.predicted << '\n'
     << "truth_trip_ends = " << s.truth_trip_ends << '\n'
     << "matched = " << s.matched << '\n'
     << "precision = " << opt(s.precision) << '\n'
     << "recall = " << opt(s.recall) << '\n'
     << "confusion_TripEnd_matched = " << s.true_positive << '\n'
     << "confusion_TripEnd_duplicate = " << s.false_trip_end << '\n'
     << "confusion_RestStop = " << s.false_rest_stop << '\n'
     << "confusion_CongestionStop = " << s.false_congestion_stop << '\n'
     << "confusion_none = " << s.false_none << '\n';
}

} // namespace freight::pipeline
