#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace freight;

namespace {

trajectory make_segment(const std::vector<lon_lat>& pts, std::int64_t t0 = 1'526'700'000, std::int64_t dt = 30) {
  trajectory seg;
  seg.truck_id = "t";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    gps_record r;
    r.truck_id = "t";
    r.lon = pts[i].lon;
    r.lat = pts[i].lat;
    r.timestamp = t0 + static_cast<std::int64_t>(i) * dt;
    seg.records.push_back(r);
  }
  return seg;
}

// Random walk that alternates between parking (small drift) and driving.
trajectory random_segment(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<lon_lat> pts;
  lon_lat p{113.0, 32.0};
  bool parked = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (u(rng) < 0.1) parked = !parked;
    const double step = parked ? (u(rng) < 0.5 ? 0.0 : u(rng) * 15.0) : 100.0 + 700.0 * u(rng);
    p = destination_point(p, 360.0 * u(rng), step);
    pts.push_back(p);
  }
  return make_segment(pts);
}

std::vector<motion_status> statuses(const std::string& pattern) {
  std::vector<motion_status> out;
  for (char c : pattern) out.push_back(c == 'S' ? motion_status::stationary : motion_status::moving);
  return out;
}

} // namespace

TEST(MotionStatus, SampleRows) {
  // Rows 4 and 5 of the sample table share coordinates; rows 1 and 2 are
  // about 91 m apart.
  const auto seg = make_segment({{119.786484, 34.387562},
                                 {119.787315, 34.388016},
                                 {119.788536, 34.388783},
                                 {119.789902, 34.38847},
                                 {119.789902, 34.38847}});
  const auto st = mark_motion_status(seg, 1.1);
  EXPECT_EQ(st[1], motion_status::moving);
  EXPECT_EQ(st[4], motion_status::stationary);
  EXPECT_EQ(st[0], st[1]);
}

TEST(MotionStatus, ThresholdIsClosed) {
  const auto seg = make_segment({{113.0, 32.0}, {113.00008, 32.0}});
  const double v = avg_speed_kmh(seg.records[0], seg.records[1]);
  EXPECT_EQ(mark_motion_status(seg, v)[1], motion_status::stationary);
  EXPECT_EQ(mark_motion_status(seg, std::nextafter(v, 0.0))[1], motion_status::moving);
}

TEST(MotionStatus, SingletonIsMoving) {
  const auto st = mark_motion_status(make_segment({{113.0, 32.0}}), 1.1);
  ASSERT_EQ(st.size(), 1u);
  EXPECT_EQ(st[0], motion_status::moving);
}

TEST(MotionStatus, LoweringThresholdNeverAddsStationaryRecords) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto seg = random_segment(rng, 200);
    std::size_t previous = seg.records.size() + 1;
    for (double dv : {5.0, 2.0, 1.1, 0.5, 0.1, 0.0}) {
      const auto st = mark_motion_status(seg, dv);
      const auto n = static_cast<std::size_t>(std::count(st.begin(), st.end(), motion_status::stationary));
      ASSERT_LE(n, previous);
      previous = n;
    }
  }
}

TEST(ExtractStops, SingleRun) {
  const auto seg = make_segment({{113.0, 32.0}, {113.0, 32.0}, {113.0, 32.0}, {113.0, 32.0}, {113.01, 32.0}});
  const auto st = statuses("MSSSM");
  const auto stops = extract_stops(seg, st);
  ASSERT_EQ(stops.size(), 1u);
  EXPECT_EQ(stops[0].dwell, 60);
  EXPECT_EQ(stops[0].n_points, 3u);
  EXPECT_EQ(stops[0].first_index, 1u);
  EXPECT_EQ(stops[0].last_index, 3u);
}

TEST(ExtractStops, AllMovingGivesNothing) {
  const auto seg = make_segment({{113.0, 32.0}, {113.1, 32.0}, {113.2, 32.0}});
  EXPECT_TRUE(extract_stops(seg, statuses("MMM")).empty());
}

TEST(ExtractStops, LoneStationaryRecordHasZeroDwell) {
  const auto seg = make_segment({{113.0, 32.0}, {113.0, 32.0}, {113.1, 32.0}});
  const auto stops = extract_stops(seg, statuses("MSM"));
  ASSERT_EQ(stops.size(), 1u);
  EXPECT_EQ(stops[0].dwell, 0);
}

TEST(ExtractStops, CentroidIsArithmeticMean) {
  const auto seg = make_segment({{113.0, 32.0}, {113.002, 32.001}, {113.004, 32.005}});
  const auto stops = extract_stops(seg, statuses("SSS"));
  ASSERT_EQ(stops.size(), 1u);
  EXPECT_DOUBLE_EQ(stops[0].centroid_lon, (113.0 + 113.002 + 113.004) / 3.0);
  EXPECT_DOUBLE_EQ(stops[0].centroid_lat, (32.0 + 32.001 + 32.005) / 3.0);
}

TEST(ExtractStops, AgreesWithNaiveRunScan) {
  std::mt19937_64 rng(8);
  std::bernoulli_distribution coin(0.55);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 80;
    std::vector<lon_lat> pts(n, lon_lat{113.0, 32.0});
    const auto seg = make_segment(pts);
    std::vector<bool> flags(n);
    std::vector<motion_status> st(n);
    for (std::size_t i = 0; i < n; ++i) {
      flags[i] = coin(rng);
      st[i] = flags[i] ? motion_status::stationary : motion_status::moving;
    }
    const auto runs = oracle::naive_runs(flags);
    const auto stops = extract_stops(seg, st, 7);
    ASSERT_EQ(stops.size(), runs.size());
    for (std::size_t k = 0; k < runs.size(); ++k) {
      EXPECT_EQ(stops[k].first_index, runs[k].first);
      EXPECT_EQ(stops[k].last_index, runs[k].second);
      EXPECT_EQ(stops[k].seq, 7 + k);
      EXPECT_EQ(stops[k].dwell, static_cast<std::int64_t>(runs[k].second - runs[k].first) * 30);
    }
  }
}

TEST(ExtractStops, StopsAreDisjointOrderedAndCoverStationaryRecords) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto seg = random_segment(rng, 300);
    const auto st = mark_motion_status(seg, 1.1);
    const auto stops = detect_stops(seg, thresholds{});
    std::set<std::size_t> members;
    for (std::size_t k = 0; k < stops.size(); ++k) {
      if (k > 0) {
        ASSERT_LT(stops[k - 1].t_end, stops[k].t_start);
      }
      for (std::size_t i = stops[k].first_index; i <= stops[k].last_index; ++i) ASSERT_TRUE(members.insert(i).second);
    }
    std::set<std::size_t> stationary;
    for (std::size_t i = 0; i < st.size(); ++i)
      if (st[i] == motion_status::stationary) stationary.insert(i);
    ASSERT_EQ(members, stationary);
  }
}

TEST(Classify, DwellClasses) {
  EXPECT_EQ(classify_stop(600.0, 1440.0, 46800.0), stop_class::short_term);
  EXPECT_EQ(classify_stop(7200.0, 1440.0, 46800.0), stop_class::medium_term);
  EXPECT_EQ(classify_stop(72000.0, 1440.0, 46800.0), stop_class::long_term);
}

TEST(Classify, BoundariesGoToTheHigherClass) {
  const std::vector<double> dwell{600, 1439, 1440, 46799, 46800, 72000};
  const std::vector<stop_class> expected{stop_class::short_term,  stop_class::short_term, stop_class::medium_term,
                                         stop_class::medium_term, stop_class::long_term,  stop_class::long_term};
  for (std::size_t i = 0; i < dwell.size(); ++i) EXPECT_EQ(classify_stop(dwell[i], 1440.0, 46800.0), expected[i]);
}

TEST(Classify, ExhaustivePartitionAndMonotone) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> t(1.0, 100'000.0), d(0.0, 300'000.0);
  for (int i = 0; i < 10'000; ++i) {
    double lo = t(rng), hi = t(rng);
    if (lo == hi) continue;
    if (lo > hi) std::swap(lo, hi);
    const double a = d(rng), b = d(rng);
    const auto ca = classify_stop(a, lo, hi);
    const bool is_short = a < lo, is_medium = a >= lo && a < hi, is_long = a >= hi;
    ASSERT_EQ(is_short + is_medium + is_long, 1);
    ASSERT_EQ(ca, is_short ? stop_class::short_term : is_medium ? stop_class::medium_term : stop_class::long_term);
    if (a <= b) {
      ASSERT_LE(static_cast<int>(ca), static_cast<int>(classify_stop(b, lo, hi)));
    }
  }
}
