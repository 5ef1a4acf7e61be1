#pragma once

#include "freight/error.hpp"
#include "freight/model.hpp"
#include "freight/polygon.hpp"
#include "freight/text.hpp"
#include "freight/time.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace freight {

enum class rejection_reason { duplicate, out_of_bounds, speed_jump, accel_jump, non_monotonic_time, malformed };

inline std::string_view to_string(rejection_reason r) {
  switch (r) {
  case rejection_reason::duplicate: return "duplicate";
  case rejection_reason::out_of_bounds: return "out_of_bounds";
  case rejection_reason::speed_jump: return "speed_jump";
  case rejection_reason::accel_jump: return "accel_jump";
  case rejection_reason::non_monotonic_time: return "non_monotonic_time";
  case rejection_reason::malformed: return "malformed";
  }
  return "?";
}

struct rejection_record {
  std::string truck_id;
  std::optional<std::int64_t> timestamp;
  rejection_reason reason = rejection_reason::malformed;
  std::size_t source_line = 0;
};

inline rejection_record reject(const gps_record& r, rejection_reason why) {
  return {r.truck_id, r.timestamp, why, r.source_line};
}

struct parse_options {
  char delimiter = ',';
  bool has_header = false;
  std::int64_t tz_offset_s = 0;
};

struct parse_result {
  std::vector<gps_record> records;
  std::vector<rejection_record> rejections;
  std::size_t rows = 0; // data rows seen (header and blank lines excluded)
};

namespace detail {

// Columns: id, lon, lat, speed, timestamp, direction[, segment_id]. Speed and
// direction may be empty. Returns nullopt for a malformed row.
inline std::optional<gps_record> parse_row(const std::vector<std::string_view>& f, std::int64_t tz_offset_s) {
  if (f.size() != 6 && f.size() != 7) return std::nullopt;
  if (f[0].empty()) return std::nullopt;
  const auto lon = text::to_double(f[1]);
  const auto lat = text::to_double(f[2]);
  if (!lon || !lat || !valid_coordinates(*lon, *lat)) return std::nullopt;
  const auto ts = parse_local_timestamp(f[4], tz_offset_s);
  if (!ts) return std::nullopt;
  gps_record r;
  r.truck_id = std::string(f[0]);
  r.lon = *lon;
  r.lat = *lat;
  r.timestamp = *ts;
  if (!f[3].empty()) {
    const auto v = text::to_double(f[3]);
    if (!v || !(*v >= 0.0) || !std::isfinite(*v)) return std::nullopt;
    r.reported_speed = *v;
  }
  if (!f[5].empty()) {
    const auto h = text::to_double(f[5]);
    if (!h || !(*h >= 0.0 && *h < 360.0)) return std::nullopt;
    r.heading = *h;
  }
  return r;
}

} // namespace detail

// Reads delimiter-separated GPS rows. Malformed rows (wrong column count,
// unparseable or out-of-range values, missing mandatory fields) become
// rejections; they never abort the parse.
inline parse_result parse_records(std::istream& in, const parse_options& opts = {}) {
  if (!in) throw io_error("parse_records: unreadable input stream");
  parse_result out;
  std::string line;
  std::vector<std::string_view> fields;
  std::size_t line_no = 0;
  bool header_pending = opts.has_header;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = text::trim(line);
    if (view.empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    ++out.rows;
    text::split(view, opts.delimiter, fields);
    if (auto rec = detail::parse_row(fields, opts.tz_offset_s)) {
      rec->source_line = line_no;
      out.records.push_back(std::move(*rec));
    } else {
      rejection_record rej;
      rej.truck_id = fields.empty() ? std::string{} : std::string(fields[0]);
      rej.reason = rejection_reason::malformed;
      rej.source_line = line_no;
      out.rejections.push_back(std::move(rej));
    }
  }
  if (in.bad()) throw io_error("parse_records: read failure");
  return out;
}

inline parse_result parse_records(std::string_view text, const parse_options& opts = {}) {
  std::istringstream in{std::string(text)};
  return parse_records(in, opts);
}

// Groups records by truck id (trucks in lexicographic order, records in input order).
inline std::vector<std::vector<gps_record>> group_by_truck(std::vector<gps_record> records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const gps_record& a, const gps_record& b) { return a.truck_id < b.truck_id; });
  std::vector<std::vector<gps_record>> groups;
  for (auto& r : records) {
    if (groups.empty() || groups.back().front().truck_id != r.truck_id) groups.emplace_back();
    groups.back().push_back(std::move(r));
  }
  return groups;
}

struct filter_result {
  std::vector<gps_record> kept;
  std::vector<rejection_record> rejected;
};

// Sorts one truck's records by time; any later row sharing a timestamp with an
// earlier-seen row is a duplicate (first occurrence wins).
inline filter_result dedupe_and_sort(std::vector<gps_record> records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const gps_record& a, const gps_record& b) { return a.timestamp < b.timestamp; });
  filter_result out;
  out.kept.reserve(records.size());
  for (auto& r : records) {
    if (!out.kept.empty() && out.kept.back().timestamp == r.timestamp)
      out.rejected.push_back(reject(r, rejection_reason::duplicate));
    else
      out.kept.push_back(std::move(r));
  }
  return out;
}

// Closed region (boundary points are inside): a lon/lat rectangle or polygon rings.
class bounding_region {
public:
  static bounding_region rectangle(double min_lon, double min_lat, double max_lon, double max_lat) {
    if (!(min_lon <= max_lon && min_lat <= max_lat)) throw config_error("bounding rectangle: min must be <= max");
    bounding_region b;
    b.shape_ = geo_box{min_lon, min_lat, max_lon, max_lat};
    return b;
  }

  static bounding_region polygon(std::vector<ring> rings) {
    if (rings.empty()) throw config_error("bounding polygon: no rings");
    for (const ring& r : rings) require_closed(r, "bounding polygon");
    bounding_region b;
    b.shape_ = std::move(rings);
    return b;
  }

  // Generous rectangle around mainland China and its islands.
  static bounding_region china() { return rectangle(73.49, 3.83, 135.09, 53.56); }

  bool contains(lon_lat p) const {
    if (const auto* box = std::get_if<geo_box>(&shape_)) return box->contains(p);
    return locate_in_rings(p, std::get<std::vector<ring>>(shape_)) != ring_location::outside;
  }

private:
  bounding_region() = default;
  std::variant<geo_box, std::vector<ring>> shape_;
};

inline filter_result bounds_filter(std::vector<gps_record> records, const bounding_region& region) {
  filter_result out;
  out.kept.reserve(records.size());
  for (auto& r : records) {
    if (region.contains(r.position()))
      out.kept.push_back(std::move(r));
    else
      out.rejected.push_back(reject(r, rejection_reason::out_of_bounds));
  }
  return out;
}

inline filter_result bounds_filter(std::vector<gps_record> records, const std::optional<bounding_region>& region) {
  if (!region) throw config_error("bounds_filter: no bounding region configured");
  return bounds_filter(std::move(records), *region);
}

// Removes data jumps from one truck's sorted, deduplicated records.
//
// Each candidate is compared with the last kept record: the acceleration
// between the speed that reached the anchor and the candidate's speed is
// checked first, then the speed itself. A leading record is dropped as a
// speed jump when it is inconsistent with both of its successors while those
// two agree with each other, so a bad first fix cannot anchor the scan.
inline filter_result jump_filter(std::vector<gps_record> records, const thresholds& th) {
  filter_result out;
  out.kept.reserve(records.size());
  std::size_t i = 0;
  const std::size_t n = records.size();

  // Bootstrap the anchor.
  while (i + 2 < n) {
    const gps_record& a = records[i];
    const gps_record& b = records[i + 1];
    const gps_record& c = records[i + 2];
    if (a.timestamp < b.timestamp && b.timestamp < c.timestamp && avg_speed_kmh(a, b) > th.max_speed_kmh &&
        avg_speed_kmh(a, c) > th.max_speed_kmh && avg_speed_kmh(b, c) <= th.max_speed_kmh) {
      out.rejected.push_back(reject(a, rejection_reason::speed_jump));
      ++i;
      continue;
    }
    break;
  }
  if (i >= n) return out;

  out.kept.push_back(std::move(records[i++]));
  std::optional<double> anchor_speed; // speed with which the anchor was reached
  for (; i < n; ++i) {
    gps_record& r = records[i];
    const gps_record& anchor = out.kept.back();
    if (r.timestamp <= anchor.timestamp) {
      out.rejected.push_back(reject(r, rejection_reason::non_monotonic_time));
      continue;
    }
    const double v = avg_speed_kmh(anchor, r);
    if (anchor_speed) {
      const double dt = static_cast<double>(r.timestamp - anchor.timestamp);
      if (std::abs(accel_between(*anchor_speed, v, dt)) > th.max_accel_ms2) {
        out.rejected.push_back(reject(r, rejection_reason::accel_jump));
        continue;
      }
    }
    if (v > th.max_speed_kmh) {
      out.rejected.push_back(reject(r, rejection_reason::speed_jump));
      continue;
    }
    anchor_speed = v;
    out.kept.push_back(std::move(r));
  }
  return out;
}

// Cuts a clean, sorted record run wherever consecutive fixes are more than
// `gap_limit_s` apart (a gap of exactly the limit does not split).
inline std::vector<trajectory> split_on_gaps(std::vector<gps_record> records, double gap_limit_s) {
  std::vector<trajectory> out;
  for (auto& r : records) {
    if (out.empty() || static_cast<double>(r.timestamp - out.back().records.back().timestamp) > gap_limit_s) {
      trajectory t;
      t.truck_id = r.truck_id;
      t.segment_id = static_cast<std::uint32_t>(out.size());
      out.push_back(std::move(t));
    }
    out.back().records.push_back(std::move(r));
  }
  return out;
}

struct cascade_result {
  std::vector<trajectory> segments;
  std::vector<rejection_record> rejections;
};

// Full preprocessing for one truck: dedupe/sort, bounds, jumps, gap split.
inline cascade_result clean_truck(std::vector<gps_record> records, const bounding_region& region,
                                  const thresholds& th) {
  cascade_result out;
  auto take = [&out](filter_result&& f) {
    out.rejections.insert(out.rejections.end(), std::make_move_iterator(f.rejected.begin()),
                          std::make_move_iterator(f.rejected.end()));
    return std::move(f.kept);
  };
  auto kept = take(dedupe_and_sort(std::move(records)));
  kept = take(bounds_filter(std::move(kept), region));
  kept = take(jump_filter(std::move(kept), th));
  out.segments = split_on_gaps(std::move(kept), th.gap_limit_s);
  return out;
}

// ---- file formats -------------------------------------------------------

inline void write_record_row(std::ostream& os, const gps_record& r, std::uint32_t segment_id, char delim,
                             std::int64_t tz_offset_s) {
  os << r.truck_id << delim << text::fmt_double(r.lon) << delim << text::fmt_double(r.lat) << delim;
  if (r.reported_speed) os << text::fmt_double(*r.reported_speed);
  os << delim << format_local_timestamp(r.timestamp, tz_offset_s) << delim;
  if (r.heading) os << text::fmt_double(*r.heading);
  os << delim << segment_id << '\n';
}

// Cleaned-records file: input schema plus a trailing segment_id column.
inline void write_cleaned_records(std::ostream& os, const std::vector<trajectory>& segments,
                                  const parse_options& opts) {
  if (opts.has_header) {
    const char d = opts.delimiter;
    os << "id" << d << "longitude" << d << "latitude" << d << "speed" << d << "timestamp" << d << "direction" << d
       << "segment_id\n";
  }
  for (const trajectory& t : segments)
    for (const gps_record& r : t.records) write_record_row(os, r, t.segment_id, opts.delimiter, opts.tz_offset_s);
}

inline std::vector<trajectory> read_cleaned_records(std::istream& in, const parse_options& opts) {
  if (!in) throw io_error("read_cleaned_records: unreadable input stream");
  std::vector<trajectory> out;
  std::string line;
  std::vector<std::string_view> fields;
  std::size_t line_no = 0;
  bool header_pending = opts.has_header;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = text::trim(line);
    if (view.empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    text::split(view, opts.delimiter, fields);
    auto rec = fields.size() == 7 ? detail::parse_row(fields, opts.tz_offset_s) : std::nullopt;
    const auto seg = fields.size() == 7 ? text::to_int<std::uint32_t>(fields[6]) : std::nullopt;
    if (!rec || !seg) throw parse_error("cleaned records: malformed line " + std::to_string(line_no));
    rec->source_line = line_no;
    if (out.empty() || out.back().truck_id != rec->truck_id || out.back().segment_id != *seg) {
      trajectory t;
      t.truck_id = rec->truck_id;
      t.segment_id = *seg;
      out.push_back(std::move(t));
    }
    if (!out.back().records.empty() && out.back().records.back().timestamp >= rec->timestamp)
      throw parse_error("cleaned records: timestamps not increasing at line " + std::to_string(line_no));
    out.back().records.push_back(std::move(*rec));
  }
  return out;
}

inline void write_rejections(std::ostream& os, const std::vector<rejection_record>& rejections,
                             std::int64_t tz_offset_s) {
  os << "truck_id,timestamp,reason,source_line\n";
  for (const auto& r : rejections) {
    os << r.truck_id << ',';
    if (r.timestamp) os << format_local_timestamp(*r.timestamp, tz_offset_s);
    os << ',' << to_string(r.reason) << ',' << r.source_line << '\n';
  }
}

} // namespace freight
