#include "oracles.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace freight;

namespace {

const char* sample_rows =
    "60817be2749c77,119.786484,34.387562,0,2018-05-19 12:03:20,132\n"
    "60817be2749c77,119.787315,34.388016,30,2018-05-19 12:03:50,169\n"
    "60817be2749c77,119.788536,34.388783,25,2018-05-19 12:04:20,70\n"
    "60817be2749c77,119.789902,34.38847,7,2018-05-19 12:04:50,206\n"
    "60817be2749c77,119.789902,34.38847,0,2018-05-19 12:05:20,206\n";

gps_record rec(const std::string& id, lon_lat p, std::int64_t t, std::size_t line = 0) {
  gps_record r;
  r.truck_id = id;
  r.lon = p.lon;
  r.lat = p.lat;
  r.timestamp = t;
  r.source_line = line;
  return r;
}

std::size_t count_reason(const std::vector<rejection_record>& v, rejection_reason why) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](const auto& r) { return r.reason == why; }));
}

std::string to_csv(const std::vector<gps_record>& rs, std::int64_t tz) {
  std::ostringstream os;
  synth::write_gps(os, rs, tz);
  return os.str();
}

// Re-serialises the cleaned segments as raw input rows.
std::string cleaned_as_raw(const std::vector<trajectory>& segs) {
  std::vector<gps_record> all;
  for (const auto& s : segs) all.insert(all.end(), s.records.begin(), s.records.end());
  return to_csv(all, 0);
}

pipeline::cleaned_data clean(const std::string& text, const thresholds& th = {}) {
  std::istringstream in(text);
  return pipeline::clean_records(in, parse_options{',', false, 0}, bounding_region::china(), th, 1);
}

} // namespace

TEST(Parse, SampleRowBecomesRecord) {
  const auto r = parse_records(sample_rows, parse_options{',', false, 8 * 3600});
  ASSERT_EQ(r.records.size(), 5u);
  EXPECT_TRUE(r.rejections.empty());
  const auto& first = r.records.front();
  EXPECT_EQ(first.truck_id, "60817be2749c77");
  EXPECT_EQ(first.lon, 119.786484);
  EXPECT_EQ(first.lat, 34.387562);
  EXPECT_EQ(first.reported_speed, 0.0);
  EXPECT_EQ(first.heading, 132.0);
  EXPECT_EQ(first.timestamp, *parse_local_timestamp("2018-05-19 12:03:20", 8 * 3600));
  EXPECT_EQ(first.source_line, 1u);
}

TEST(Parse, UnparseableFieldIsMalformed) {
  const auto r = parse_records("t1,119.78,abc,0,2018-05-19 12:03:20,132\n");
  EXPECT_TRUE(r.records.empty());
  ASSERT_EQ(r.rejections.size(), 1u);
  EXPECT_EQ(r.rejections[0].reason, rejection_reason::malformed);
  EXPECT_EQ(r.rejections[0].source_line, 1u);
  EXPECT_EQ(r.rows, 1u);
}

TEST(Parse, MissingMandatoryFieldsAreMalformed) {
  const auto r = parse_records(
      ",119.78,34.38,0,2018-05-19 12:03:20,132\n"
      "t1,,34.38,0,2018-05-19 12:03:20,132\n"
      "t1,119.78,34.38,0,,132\n"
      "t1,119.78,34.38\n"
      "t1,200.0,34.38,0,2018-05-19 12:03:20,132\n"
      "t1,119.78,34.38,-3,2018-05-19 12:03:20,132\n"
      "t1,119.78,34.38,,2018-05-19 12:03:20,\n");
  EXPECT_EQ(r.rows, 7u);
  EXPECT_EQ(r.rejections.size(), 6u);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_FALSE(r.records[0].reported_speed.has_value());
  EXPECT_FALSE(r.records[0].heading.has_value());
}

TEST(Parse, EmptyInputGivesNothing) {
  const auto r = parse_records("");
  EXPECT_TRUE(r.records.empty());
  EXPECT_TRUE(r.rejections.empty());
  EXPECT_EQ(r.rows, 0u);
}

TEST(Parse, HeaderAndDelimiterOptions) {
  const auto r = parse_records("id;lon;lat;speed;time;dir\nt1;119.78;34.38;0;2018-05-19 12:03:20;132\n",
                               parse_options{';', true, 0});
  EXPECT_EQ(r.rows, 1u);
  EXPECT_EQ(r.records.size(), 1u);
}

TEST(Dedupe, IdenticalRowsKeepOne) {
  const auto a = rec("t", {113.0, 32.0}, 100, 1);
  const auto out = dedupe_and_sort({a, a});
  EXPECT_EQ(out.kept.size(), 1u);
  ASSERT_EQ(out.rejected.size(), 1u);
  EXPECT_EQ(out.rejected[0].reason, rejection_reason::duplicate);
}

TEST(Dedupe, OutOfOrderRowsAreSortedNotRejected) {
  const auto out = dedupe_and_sort(
      {rec("t", {113.0, 32.0}, 300), rec("t", {113.0, 32.0}, 100), rec("t", {113.0, 32.0}, 200)});
  EXPECT_TRUE(out.rejected.empty());
  ASSERT_EQ(out.kept.size(), 3u);
  EXPECT_EQ(out.kept[0].timestamp, 100);
  EXPECT_EQ(out.kept[2].timestamp, 300);
}

TEST(Dedupe, SameTimestampDifferentPlaceFirstWinsAgreesWithScan) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> t(0, 40);
  std::uniform_real_distribution<double> off(-0.01, 0.01);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<gps_record> rs;
    for (std::size_t i = 0; i < 60; ++i) rs.push_back(rec("t", {113.0 + off(rng), 32.0 + off(rng)}, t(rng) * 30, i + 1));
    // Brute force: a row is a duplicate iff an earlier row has its timestamp.
    std::size_t dupes = 0;
    std::map<std::int64_t, std::size_t> first_line;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      bool seen = false;
      for (std::size_t j = 0; j < i; ++j) seen = seen || rs[j].timestamp == rs[i].timestamp;
      if (seen) ++dupes;
      else first_line[rs[i].timestamp] = rs[i].source_line;
    }
    const auto out = dedupe_and_sort(rs);
    ASSERT_EQ(out.rejected.size(), dupes);
    for (const auto& k : out.kept) ASSERT_EQ(k.source_line, first_line.at(k.timestamp));
  }
}

TEST(Bounds, OriginIsOutsideChina) {
  const auto out = bounds_filter({rec("t", {0.0, 0.0}, 0)}, bounding_region::china());
  EXPECT_TRUE(out.kept.empty());
  ASSERT_EQ(out.rejected.size(), 1u);
  EXPECT_EQ(out.rejected[0].reason, rejection_reason::out_of_bounds);
}

TEST(Bounds, SampleRowIsInside) {
  const auto out = bounds_filter({rec("t", {119.786484, 34.387562}, 0)}, bounding_region::china());
  EXPECT_EQ(out.kept.size(), 1u);
}

TEST(Bounds, BoundaryIsClosed) {
  const auto box = bounding_region::rectangle(110.0, 30.0, 120.0, 40.0);
  EXPECT_EQ(bounds_filter({rec("t", {110.0, 35.0}, 0)}, box).kept.size(), 1u);
  EXPECT_EQ(bounds_filter({rec("t", {120.0, 40.0}, 0)}, box).kept.size(), 1u);
  const auto poly = bounding_region::polygon({{{110, 30}, {120, 30}, {120, 40}, {110, 40}, {110, 30}}});
  EXPECT_EQ(bounds_filter({rec("t", {115.0, 30.0}, 0)}, poly).kept.size(), 1u);
  EXPECT_EQ(bounds_filter({rec("t", {109.999, 35.0}, 0)}, poly).kept.size(), 0u);
}

TEST(Jumps, FastDisplacementIsSpeedJump) {
  const lon_lat a{113.0, 32.0};
  const auto out = jump_filter(
      {rec("t", a, 0), rec("t", a, 30), rec("t", destination_point(a, 0.0, 2000.0), 60)}, thresholds{});
  EXPECT_EQ(out.kept.size(), 2u);
  ASSERT_EQ(out.rejected.size(), 1u);
  EXPECT_EQ(out.rejected[0].reason, rejection_reason::speed_jump);
}

TEST(Jumps, StationaryPairsAreKept) {
  const lon_lat a{113.0, 32.0};
  const auto out = jump_filter({rec("t", a, 0), rec("t", a, 30), rec("t", a, 60), rec("t", a, 90)}, thresholds{});
  EXPECT_EQ(out.kept.size(), 4u);
  EXPECT_TRUE(out.rejected.empty());
}

TEST(Jumps, SuddenAccelerationIsAccelJump) {
  // 0 m/s then 160 m/s over 30 s: (160 - 0) / 30 = 5.33 m/s^2 > 5.
  const lon_lat a{113.0, 32.0};
  const lon_lat c = destination_point(a, 90.0, 160.0 * 30.0);
  EXPECT_NEAR((160.0 - 0.0) / 30.0, 5.333, 1e-3);
  const auto out = jump_filter({rec("t", a, 0), rec("t", a, 30), rec("t", c, 60)}, thresholds{});
  ASSERT_EQ(out.rejected.size(), 1u);
  EXPECT_EQ(out.rejected[0].reason, rejection_reason::accel_jump);
}

TEST(Jumps, ScanContinuesFromLastKeptRecord) {
  const lon_lat a{113.0, 32.0};
  const auto far = destination_point(a, 45.0, 15'000.0);
  const auto out = jump_filter(
      {rec("t", a, 0), rec("t", a, 30), rec("t", far, 60), rec("t", a, 90), rec("t", a, 120)}, thresholds{});
  EXPECT_EQ(out.kept.size(), 4u);
  ASSERT_EQ(out.rejected.size(), 1u);
  EXPECT_EQ(out.rejected[0].timestamp, 60);
}

TEST(Jumps, BadFirstFixDoesNotAnchor) {
  const lon_lat a{113.0, 32.0};
  const auto far = destination_point(a, 45.0, 15'000.0);
  const auto out = jump_filter({rec("t", far, 0), rec("t", a, 30), rec("t", a, 60), rec("t", a, 90)}, thresholds{});
  EXPECT_EQ(out.kept.size(), 3u);
  ASSERT_EQ(out.rejected.size(), 1u);
  EXPECT_EQ(out.rejected[0].timestamp, 0);
}

TEST(Gaps, SplitsOnlyOnStrictlyLongerGaps) {
  const lon_lat a{113.0, 32.0};
  std::vector<gps_record> even;
  for (int i = 0; i < 10; ++i) even.push_back(rec("t", a, i * 30));
  EXPECT_EQ(split_on_gaps(even, 3600).size(), 1u);

  auto with_gap = even;
  for (auto& r : with_gap)
    if (r.timestamp >= 150) r.timestamp += 3601 - 30;
  const auto split = split_on_gaps(with_gap, 3600);
  ASSERT_EQ(split.size(), 2u);
  EXPECT_EQ(split[0].segment_id, 0u);
  EXPECT_EQ(split[1].segment_id, 1u);

  auto exact = even;
  for (auto& r : exact)
    if (r.timestamp >= 150) r.timestamp += 3600 - 30;
  EXPECT_EQ(split_on_gaps(exact, 3600).size(), 1u);

  EXPECT_EQ(split_on_gaps({rec("t", a, 0)}, 3600).size(), 1u);
}

TEST(Cascade, ConservationIdempotenceAndOrderingOnNoisyFleet) {
  synth::fleet_plan plan;
  plan.n_trucks = 6;
  plan.horizon_s = 2 * 86400;
  plan.noise = synth::noise_model::standard();
  plan.noise.jump_prob = 0.01;
  plan.noise.duplicate_prob = 0.02;
  auto f = synth::generate_fleet(plan, 1);
  // Out-of-region rows to exercise the bounds rule as well.
  for (std::size_t i = 0; i < f.records.size(); i += 997) f.records[i].lon = 10.0;
  std::string text = to_csv(f.records, plan.tz_offset_s);
  text += "garbage line\n" + std::string("T0001,113.0,32.0,0,2018-02-30 00:00:00,0\n");

  std::istringstream in(text);
  const auto first = pipeline::clean_records(in, parse_options{',', false, plan.tz_offset_s}, bounding_region::china(),
                                             thresholds{}, 1);
  EXPECT_EQ(first.summary.rows, f.records.size() + 2);
  EXPECT_EQ(first.summary.accepted + first.rejections.size(), first.summary.rows);
  EXPECT_GT(count_reason(first.rejections, rejection_reason::duplicate), 0u);
  EXPECT_GT(count_reason(first.rejections, rejection_reason::out_of_bounds), 0u);
  EXPECT_GT(count_reason(first.rejections, rejection_reason::speed_jump) +
                count_reason(first.rejections, rejection_reason::accel_jump),
            0u);
  EXPECT_EQ(count_reason(first.rejections, rejection_reason::malformed), 2u);

  std::set<std::size_t> lines;
  for (const auto& r : first.rejections) EXPECT_TRUE(lines.insert(r.source_line).second);
  for (const auto& s : first.segments)
    for (const auto& r : s.records) EXPECT_TRUE(lines.insert(r.source_line).second);
  EXPECT_EQ(lines.size(), first.summary.rows);

  for (const auto& s : first.segments)
    for (std::size_t i = 1; i < s.records.size(); ++i) {
      ASSERT_LT(s.records[i - 1].timestamp, s.records[i].timestamp);
      ASSERT_LE(s.records[i].timestamp - s.records[i - 1].timestamp, 3600);
      ASSERT_EQ(s.records[i].truck_id, s.truck_id);
    }

  const auto second = clean(cleaned_as_raw(first.segments));
  EXPECT_TRUE(second.rejections.empty());
  EXPECT_EQ(second.summary.accepted, first.summary.accepted);
}

TEST(Cascade, ConservationAndIdempotenceOnAdversarialCorpora) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int corpus = 0; corpus < 20; ++corpus) {
    std::ostringstream os;
    std::size_t rows = 0;
    for (int truck = 0; truck < 4; ++truck) {
      lon_lat p{113.0, 32.0};
      std::int64_t t = 1'526'227'200;
      for (int i = 0; i < 300; ++i) {
        const double x = u(rng);
        t += x < 0.02 ? 4000 : x < 0.05 ? -60 : x < 0.08 ? 0 : 30;
        if (u(rng) < 0.5) p = destination_point(p, u(rng) * 360.0, u(rng) * (u(rng) < 0.03 ? 20'000.0 : 400.0));
        const lon_lat q = u(rng) < 0.01 ? lon_lat{-70.0, 10.0} : p;
        os << "k" << truck << ',' << text::fmt_double(q.lon) << ',' << text::fmt_double(q.lat) << ",0,"
           << format_local_timestamp(t, 0) << ",0\n";
        ++rows;
        if (u(rng) < 0.01) {
          os << "k" << truck << ",x,y,z\n";
          ++rows;
        }
      }
    }
    const auto first = clean(os.str());
    ASSERT_EQ(first.summary.rows, rows);
    ASSERT_EQ(first.summary.accepted + first.rejections.size(), rows);
    const auto second = clean(cleaned_as_raw(first.segments));
    ASSERT_TRUE(second.rejections.empty()) << "corpus " << corpus;
    ASSERT_EQ(second.summary.accepted, first.summary.accepted);
  }
}

TEST(Cascade, WorkerCountDoesNotChangeOutput) {
  synth::fleet_plan plan;
  plan.n_trucks = 5;
  plan.horizon_s = 86400;
  plan.noise = synth::noise_model::standard();
  const auto f = synth::generate_fleet(plan, 1);
  const std::string text = to_csv(f.records, 0);
  std::istringstream a(text), b(text);
  const auto one = pipeline::clean_records(a, {}, bounding_region::china(), thresholds{}, 1);
  const auto four = pipeline::clean_records(b, {}, bounding_region::china(), thresholds{}, 4);
  EXPECT_EQ(cleaned_as_raw(one.segments), cleaned_as_raw(four.segments));
  ASSERT_EQ(one.rejections.size(), four.rejections.size());
  for (std::size_t i = 0; i < one.rejections.size(); ++i)
    EXPECT_EQ(one.rejections[i].source_line, four.rejections[i].source_line);
}

TEST(CleanedFile, RoundTripPreservesSegmentsAndValues) {
  const auto data = clean(sample_rows);
  std::ostringstream os;
  write_cleaned_records(os, data.segments, parse_options{',', true, 0});
  std::istringstream in(os.str());
  const auto back = read_cleaned_records(in, parse_options{',', true, 0});
  ASSERT_EQ(back.size(), data.segments.size());
  for (std::size_t s = 0; s < back.size(); ++s) {
    ASSERT_EQ(back[s].records.size(), data.segments[s].records.size());
    for (std::size_t i = 0; i < back[s].records.size(); ++i) {
      EXPECT_EQ(back[s].records[i].lon, data.segments[s].records[i].lon);
      EXPECT_EQ(back[s].records[i].lat, data.segments[s].records[i].lat);
      EXPECT_EQ(back[s].records[i].timestamp, data.segments[s].records[i].timestamp);
    }
  }
}
