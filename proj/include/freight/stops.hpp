#pragma once

#include "freight/model.hpp"

#include <span>
#include <vector>

namespace freight {

enum class motion_status : std::uint8_t { moving, stationary };

// Record i+1 is stationary iff the average speed from record i is at most
// `speed_threshold_kmh`. The first record takes the status of the second; a
// lone record is moving.
inline std::vector<motion_status> mark_motion_status(const trajectory& seg, double speed_threshold_kmh) {
  const auto& r = seg.records;
  std::vector<motion_status> out(r.size(), motion_status::moving);
  for (std::size_t i = 1; i < r.size(); ++i)
    out[i] = avg_speed_kmh(r[i - 1], r[i]) <= speed_threshold_kmh ? motion_status::stationary : motion_status::moving;
  if (r.size() >= 2) out[0] = out[1];
  return out;
}

// Dwell < t_min is short, t_min <= dwell < t_max is medium, otherwise long.
inline stop_class classify_stop(double dwell_s, double t_min_s, double t_max_s) {
  if (dwell_s < t_min_s) return stop_class::short_term;
  if (dwell_s < t_max_s) return stop_class::medium_term;
  return stop_class::long_term;
}

inline stop_class classify_stop(const truck_stop& stop, double t_min_s, double t_max_s) {
  return classify_stop(static_cast<double>(stop.dwell), t_min_s, t_max_s);
}

// One stop per maximal run of stationary records. Stops come back
// unclassified (short); `seq` numbers them from `first_seq`.
inline std::vector<truck_stop> extract_stops(const trajectory& seg, std::span<const motion_status> status,
                                             std::uint32_t first_seq = 0) {
  std::vector<truck_stop> out;
  const auto& r = seg.records;
  std::size_t i = 0;
  while (i < r.size()) {
    if (status[i] != motion_status::stationary) {
      ++i;
      continue;
    }
    std::size_t j = i;
    double sum_lon = 0.0, sum_lat = 0.0;
    while (j < r.size() && status[j] == motion_status::stationary) {
      sum_lon += r[j].lon;
      sum_lat += r[j].lat;
      ++j;
    }
    truck_stop s;
    s.truck_id = seg.truck_id;
    s.segment_id = seg.segment_id;
    s.seq = first_seq + static_cast<std::uint32_t>(out.size());
    s.n_points = j - i;
    s.centroid_lon = sum_lon / static_cast<double>(s.n_points);
    s.centroid_lat = sum_lat / static_cast<double>(s.n_points);
    s.t_start = r[i].timestamp;
    s.t_end = r[j - 1].timestamp;
    s.dwell = s.t_end - s.t_start;
    s.first_index = i;
    s.last_index = j - 1;
    out.push_back(std::move(s));
    i = j;
  }
  return out;
}

// Status marking, run extraction and classification for one segment.
inline std::vector<truck_stop> detect_stops(const trajectory& seg, const thresholds& th, std::uint32_t first_seq = 0) {
  const auto status = mark_motion_status(seg, th.speed_threshold_kmh);
  auto stops = extract_stops(seg, status, first_seq);
  for (auto& s : stops) s.cls = classify_stop(s, th.t_min_s, th.t_max_s);
  return stops;
}

} // namespace freight
