#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace freight;

namespace {

truck_stop make_stop(lon_lat c, stop_class cls, std::int64_t t_start = 0, std::int64_t t_end = 3600,
                     std::uint32_t segment = 0, std::uint32_t seq = 0) {
  truck_stop s;
  s.truck_id = "t";
  s.segment_id = segment;
  s.seq = seq;
  s.centroid_lon = c.lon;
  s.centroid_lat = c.lat;
  s.t_start = t_start;
  s.t_end = t_end;
  s.dwell = t_end - t_start;
  s.cls = cls;
  return s;
}

trip_end make_end(lon_lat c, std::int64_t t_start, std::int64_t t_end, std::uint32_t segment, std::uint32_t seq) {
  trip_end e;
  e.stop = make_stop(c, stop_class::long_term, t_start, t_end, segment, seq);
  return e;
}

// A north-south road through `p`, long enough to dominate the neighbourhood.
road_segment road_through(const std::string& id, lon_lat p, road_class cls = road_class::primary) {
  return {id, cls, {{p.lon, p.lat - 0.01}, {p.lon, p.lat + 0.01}}, half_width_m(cls)};
}

struct random_world {
  std::vector<poi> pois;
  std::vector<road_segment> roads;
  std::vector<truck_stop> stops;
};

random_world make_world(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.05, 0.05), ring(0.0, 1.0);
  const lon_lat centre{114.0, 30.0};
  random_world w;
  for (int i = 0; i < 60; ++i)
    w.pois.push_back({"p" + std::to_string(i), all_poi_categories[static_cast<std::size_t>(i) % poi_category_count],
                      centre.lon + u(rng), centre.lat + u(rng)});
  for (int i = 0; i < 15; ++i) {
    const lon_lat p{centre.lon + u(rng), centre.lat + u(rng)};
    w.roads.push_back({"r" + std::to_string(i), road_class::secondary, {p, destination_point(p, 360.0 * ring(rng), 4000.0)},
                       8.75});
  }
  for (int i = 0; i < 400; ++i) {
    const auto& anchor = w.pois[static_cast<std::size_t>(i) % w.pois.size()];
    lon_lat c = destination_point(anchor.position(), 360.0 * ring(rng), 1500.0 * ring(rng));
    // Put some stops right on a road.
    if (i % 10 == 0) {
      const auto& r = w.roads[static_cast<std::size_t>(i / 10) % w.roads.size()];
      c = {0.5 * (r.centerline[0].lon + r.centerline[1].lon), 0.5 * (r.centerline[0].lat + r.centerline[1].lat)};
    }
    const auto cls = static_cast<stop_class>(i % 3);
    w.stops.push_back(make_stop(c, cls, i * 100'000, i * 100'000 + 5000, 0, static_cast<std::uint32_t>(i)));
  }
  return w;
}

} // namespace

TEST(SelectTripEnds, MediumStopInsideFactoryBoundaryOffRoad) {
  const lon_lat factory{113.0, 32.0};
  const lon_lat stop = destination_point(factory, 0.0, 300.0);
  const poi_index pois({{"f1", poi_category::factory, factory.lon, factory.lat}});
  const road_index roads({road_through("r", destination_point(stop, 90.0, 50.0))});
  const auto sel = select_trip_ends({make_stop(stop, stop_class::medium_term)}, pois, roads);
  ASSERT_EQ(sel.ends.size(), 1u);
  EXPECT_EQ(sel.ends[0].reason, validity_reason::medium_in_poi);
  EXPECT_EQ(sel.ends[0].category, poi_category::factory);
  EXPECT_EQ(sel.ends[0].poi_id, "f1");
  EXPECT_LE(*sel.ends[0].poi_distance_m, 670.0);
}

TEST(SelectTripEnds, MediumStopOnPrimaryRoadIsRejected) {
  const lon_lat factory{113.0, 32.0};
  const lon_lat stop = destination_point(factory, 0.0, 300.0);
  const poi_index pois({{"f1", poi_category::factory, factory.lon, factory.lat}});
  const road_index roads({road_through("r", destination_point(stop, 90.0, 5.0))});
  const auto sel = select_trip_ends({make_stop(stop, stop_class::medium_term)}, pois, roads);
  EXPECT_TRUE(sel.ends.empty());
  EXPECT_EQ(sel.counts.rejected_on_road, 1u);
}

TEST(SelectTripEnds, LongStopIsAcceptedAnywhere) {
  const lon_lat factory{113.0, 32.0};
  const poi_index pois({{"f1", poi_category::factory, factory.lon, factory.lat}});
  const lon_lat far = destination_point(factory, 45.0, 10'000.0);
  const road_index roads({road_through("r", far)});
  const auto sel = select_trip_ends({make_stop(far, stop_class::long_term)}, pois, roads);
  ASSERT_EQ(sel.ends.size(), 1u);
  EXPECT_EQ(sel.ends[0].reason, validity_reason::long_term);
  EXPECT_FALSE(sel.ends[0].category.has_value());
}

TEST(SelectTripEnds, ShortAndOutsideStopsAreRejected) {
  const poi_index pois({{"f1", poi_category::factory, 113.0, 32.0}});
  const road_index roads;
  const auto sel = select_trip_ends({make_stop({113.0, 32.0}, stop_class::short_term),
                                     make_stop(destination_point({113.0, 32.0}, 0.0, 700.0), stop_class::medium_term)},
                                    pois, roads);
  EXPECT_TRUE(sel.ends.empty());
  EXPECT_EQ(sel.counts.rejected_short, 1u);
  EXPECT_EQ(sel.counts.rejected_outside_poi, 1u);
}

TEST(SelectTripEnds, CategoryWithSmallestRadiusRatioWins) {
  const auto table = default_category_params();
  const lon_lat stop{113.0, 32.0};
  // Equal distances to two categories: the larger POI radius gives the
  // smaller ratio.
  const poi_category a = poi_category::factory, b = poi_category::mining_company;
  const lon_lat pa = destination_point(stop, 0.0, 300.0), pb = destination_point(stop, 180.0, 300.0);
  const poi_index pois({{"a", a, pa.lon, pa.lat}, {"b", b, pb.lon, pb.lat}});
  const auto sel = select_trip_ends({make_stop(stop, stop_class::medium_term)}, pois, road_index{});
  ASSERT_EQ(sel.ends.size(), 1u);
  const double ra = table[index_of(a)].poi_radius_m, rb = table[index_of(b)].poi_radius_m;
  ASSERT_NE(ra, rb);
  EXPECT_EQ(sel.ends[0].category, ra > rb ? a : b);
}

TEST(SelectTripEnds, AcceptedEndsSatisfyTheirReasonAndCountsBalance) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto w = make_world(seed);
    const poi_index pois(w.pois);
    const road_index roads(w.roads);
    const auto sel = select_trip_ends(w.stops, pois, roads);
    EXPECT_EQ(sel.counts.accepted() + sel.counts.rejected(), w.stops.size());
    EXPECT_EQ(sel.counts.accepted(), sel.ends.size());
    EXPECT_GT(sel.counts.accepted_medium, 0u);
    EXPECT_GT(sel.counts.rejected_on_road, 0u);
    for (const auto& e : sel.ends) {
      if (e.reason == validity_reason::long_term) {
        EXPECT_EQ(e.stop.cls, stop_class::long_term);
        continue;
      }
      EXPECT_EQ(e.stop.cls, stop_class::medium_term);
      ASSERT_TRUE(e.category.has_value());
      const auto scan = oracle::scan_nearest_poi(w.pois, e.stop.centroid(), *e.category);
      ASSERT_TRUE(scan.has_value());
      EXPECT_EQ(*e.poi_id, scan->id);
      EXPECT_LE(scan->distance_m, pois.params(*e.category).poi_radius_m);
      EXPECT_FALSE(roads.is_on_road(e.stop.centroid()));
    }
  }
}

TEST(SelectTripEnds, RemovingPoisRejectsEveryMediumStopButKeepsLongOnes) {
  const auto w = make_world(9);
  const road_index roads(w.roads);
  const auto with = select_trip_ends(w.stops, poi_index(w.pois), roads);
  const auto without = select_trip_ends(w.stops, poi_index{}, roads);
  EXPECT_EQ(without.counts.accepted_medium, 0u);
  EXPECT_EQ(without.counts.accepted_long, with.counts.accepted_long);
  for (const auto& e : without.ends) EXPECT_EQ(e.reason, validity_reason::long_term);
}

TEST(SelectTripEnds, RoadThroughAcceptedCentroidFlipsOnlyThatStop) {
  const auto w = make_world(10);
  const poi_index pois(w.pois);
  const auto base = select_trip_ends(w.stops, pois, road_index(w.roads));
  std::vector<std::string> base_ids;
  for (const auto& e : base.ends) base_ids.push_back(e.id());
  int flipped = 0;
  for (const auto& target : base.ends) {
    if (target.reason != validity_reason::medium_in_poi) continue;
    // A short road exactly through the centroid, too short to reach others.
    auto roads = w.roads;
    const lon_lat c = target.stop.centroid();
    roads.push_back({"new", road_class::tertiary, {destination_point(c, 0.0, -0.5), destination_point(c, 0.0, 0.5)},
                     half_width_m(road_class::tertiary)});
    const auto after = select_trip_ends(w.stops, pois, road_index(roads));
    std::vector<std::string> expected;
    for (const auto& id : base_ids)
      if (id != target.id()) expected.push_back(id);
    std::vector<std::string> got;
    for (const auto& e : after.ends) got.push_back(e.id());
    ASSERT_EQ(got, expected) << "flipping " << target.id();
    if (++flipped == 20) break;
  }
  EXPECT_GT(flipped, 0);
}

TEST(ChainTrips, ConsecutiveEndsInOneSegment) {
  trajectory seg;
  seg.truck_id = "t";
  for (int i = 0; i <= 100; ++i) {
    gps_record r;
    r.truck_id = "t";
    r.lon = 113.0 + 0.001 * i;
    r.lat = 32.0;
    r.timestamp = i * 60;
    seg.records.push_back(r);
  }
  const std::vector<trip_end> ends{make_end({113.0, 32.0}, 0, 600, 0, 0), make_end({113.05, 32.0}, 3000, 3600, 0, 1),
                                   make_end({113.1, 32.0}, 5400, 6000, 0, 2)};
  const auto trips = chain_trips(ends, {seg});
  ASSERT_EQ(trips.size(), 2u);
  EXPECT_EQ(trips[0].origin.stop.seq, 0u);
  EXPECT_EQ(trips[0].destination.stop.seq, 1u);
  EXPECT_EQ(trips[1].origin.stop.seq, 1u);
  EXPECT_EQ(trips[1].destination.stop.seq, 2u);
  EXPECT_EQ(trips[0].departure_ts, 600);
  EXPECT_EQ(trips[0].arrival_ts, 3000);
  EXPECT_EQ(trips[0].duration, 2400);
}

TEST(ChainTrips, PairAcrossSegmentSplitIsDropped) {
  trajectory a, b;
  a.truck_id = b.truck_id = "t";
  b.segment_id = 1;
  const auto trips =
      chain_trips({make_end({113.0, 32.0}, 0, 600, 0, 0), make_end({113.05, 32.0}, 9000, 9600, 1, 1)}, {a, b});
  EXPECT_TRUE(trips.empty());
}

TEST(ChainTrips, StraightRunPathEqualsEndpointDistance) {
  trajectory seg;
  seg.truck_id = "t";
  const lon_lat start{113.0, 32.0};
  const double step = 600.0; // 72 km/h at 30 s
  for (int i = 0; i <= 200; ++i) {
    gps_record r;
    r.truck_id = "t";
    const lon_lat p = destination_point(start, 60.0, step * i);
    r.lon = p.lon;
    r.lat = p.lat;
    r.timestamp = i * 30;
    seg.records.push_back(r);
  }
  const double d = path_distance(seg, 0, 200 * 30);
  const double straight = great_circle_distance(seg.records.front().position(), seg.records.back().position());
  EXPECT_NEAR(d, straight, 1e-3 * straight);
  EXPECT_NEAR(d, 200 * step, 1e-3 * 200 * step);
  EXPECT_NEAR(path_distance(seg, 300, 600), 10 * step, 1e-6 * step);
}

TEST(ChainTrips, TripsAreOrderedAndDisjoint) {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> gap(1, 20'000), seg_change(0, 9);
  std::vector<trip_end> ends;
  std::vector<trajectory> segments(1);
  segments[0].truck_id = "t";
  std::int64_t t = 0;
  std::uint32_t segment = 0;
  for (std::uint32_t k = 0; k < 300; ++k) {
    if (seg_change(rng) == 0) {
      ++segment;
      segments.emplace_back();
      segments.back().truck_id = "t";
      segments.back().segment_id = segment;
    }
    const std::int64_t start = t + gap(rng);
    const std::int64_t end = start + gap(rng);
    ends.push_back(make_end({113.0, 32.0}, start, end, segment, k));
    t = end;
  }
  const auto trips = chain_trips(ends, segments);
  EXPECT_FALSE(trips.empty());
  for (std::size_t i = 0; i < trips.size(); ++i) {
    ASSERT_LT(trips[i].departure_ts, trips[i].arrival_ts);
    ASSERT_EQ(trips[i].duration, trips[i].arrival_ts - trips[i].departure_ts);
    ASSERT_EQ(trips[i].origin.stop.segment_id, trips[i].destination.stop.segment_id);
    if (i > 0) {
      ASSERT_LE(trips[i - 1].arrival_ts, trips[i].departure_ts);
    }
  }
}

TEST(Intercity, ResolvedDifferentSameAndUnresolved) {
  const city_index cities({{"A", {{{113, 32}, {114, 32}, {114, 33}, {113, 33}, {113, 32}}}},
                           {"B", {{{114.5, 32}, {115.5, 32}, {115.5, 33}, {114.5, 33}, {114.5, 32}}}}});
  auto make_trip = [](lon_lat o, lon_lat d) {
    trip t;
    t.origin = make_end(o, 0, 10, 0, 0);
    t.destination = make_end(d, 100, 110, 0, 1);
    return t;
  };
  std::vector<trip> trips{make_trip({113.5, 32.5}, {115.0, 32.5}), make_trip({113.2, 32.5}, {113.8, 32.5}),
                          make_trip({113.5, 32.5}, {117.0, 32.5})};
  mark_intercity(trips, cities);
  EXPECT_EQ(trips[0].intercity, intercity_status::intercity);
  EXPECT_EQ(trips[1].intercity, intercity_status::intracity);
  EXPECT_EQ(trips[2].intercity, intercity_status::unresolved);
}
