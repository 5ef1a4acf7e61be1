// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "freight/freight.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace freight;

namespace {

struct outcome {
  bool pass = false;
  std::string detail;
};

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

outcome dwell_classes() {
  const double dwell[] = {600, 1439, 1440, 46799, 46800, 72000};
  const stop_class want[] = {stop_class::short_term,  stop_class::short_term, stop_class::medium_term,
                             stop_class::medium_term, stop_class::long_term,  stop_class::long_term};
  std::string got;
  bool ok = true;
  for (int i = 0; i < 6; ++i) {
    const auto c = classify_stop(dwell[i], 1440.0, 46800.0);
    ok = ok && c == want[i];
    got += std::string(to_string(c)) + (i < 5 ? "," : "");
  }
  return {ok, got};
}

outcome power_law_recovery() {
  const auto t0 = clock_type::now();
  oracle::two_segment_power_law draw(1.3, 0.6, 1440.0, 60.0, 46800.0);
  std::mt19937_64 rng(1);
  std::vector<double> xs(100'000);
  for (auto& x : xs) x = draw(rng);
  const auto fit = fit_broken_power_law(xs);
  const double secs = seconds_since(t0);
  const bool ok = std::abs(fit.break_point - 1440.0) <= 0.15 * 1440.0 && std::abs(fit.alpha1 - 1.3) <= 0.1 &&
                  std::abs(fit.alpha2 - 0.6) <= 0.1 && secs < 10.0;
  return {ok, fmt("break %.1f s, alpha1 %.3f, alpha2 %.3f, %.2f s", fit.break_point, fit.alpha1, fit.alpha2, secs)};
}

outcome radius_recovery() {
  const auto t0 = clock_type::now();
  const std::size_t n = 200'000;
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = oracle::rayleigh_quantile(350.0, (static_cast<double>(i) + 0.5) / n);
  const auto d = detect_poi_radii(poi_category::factory, xs);
  const double secs = seconds_since(t0);
  auto at_most = [&](double r) { return std::count_if(xs.begin(), xs.end(), [r](double x) { return x <= r; }); };
  const auto at_valid = at_most(d.params.valid_radius_m);
  // Smallest sample radius whose empirical CDF reaches twice the CDF at the valid radius.
  std::vector<double> sorted(xs);
  std::sort(sorted.begin(), sorted.end());
  double want = -1.0;
  for (double r : sorted)
    if (at_most(r) >= 2 * at_valid) {
      want = r;
      break;
    }
  const bool ok = std::abs(d.params.valid_radius_m - 350.0) <= 5.0 && d.params.poi_radius_m == want && secs < 5.0;
  return {ok, fmt("valid %.1f m, poi %.2f m (scan %.2f m), %.2f s", d.params.valid_radius_m, d.params.poi_radius_m,
                  want, secs)};
}

outcome road_filter() {
  std::mt19937_64 rng(3);
  std::vector<road_segment> roads;
  for (int i = 0; i < 20; ++i) {
    const auto cls = static_cast<road_class>(i % 4);
    const double lon = 113.0 + i * 0.0106;
    roads.push_back({"r" + std::to_string(i), cls, {{lon, 32.0}, {lon, 32.05}}, half_width_m(cls)});
  }
  const road_index idx(roads);
  std::uniform_int_distribution<int> pick(0, 19), mm(0, 15'000);
  std::uniform_real_distribution<double> along(32.001, 32.049);
  int mismatches = 0, on = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto& r = roads[static_cast<std::size_t>(pick(rng))];
    int units = mm(rng);
    while (units == 8750 || units == 5250) units = mm(rng);
    const double d = units / 1000.0;
    const lon_lat q = destination_point({r.centerline[0].lon, along(rng)}, k % 2 ? 90.0 : 270.0, d);
    const bool want = d < r.half_width;
    mismatches += idx.is_on_road(q) != want;
    on += want;
  }
  return {mismatches == 0, fmt("%d mismatches in 1000 points (%d planted on-road)", mismatches, on)};
}

outcome spatial_lookups() {
  const auto t0 = clock_type::now();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5), bearing(0.0, 360.0), len(50.0, 3000.0);
  const lon_lat centre{114.0, 30.0};

  std::vector<poi> pois;
  for (std::size_t i = 0; i < 10'000; ++i)
    pois.push_back({"p" + std::to_string(i), all_poi_categories[i % 3], centre.lon + u(rng), centre.lat + u(rng)});
  std::vector<road_segment> roads;
  for (std::size_t i = 0; i < 2000; ++i) {
    road_segment r;
    r.id = "r" + std::to_string(i);
    r.cls = static_cast<road_class>(i % 4);
    r.half_width = half_width_m(r.cls);
    lon_lat p{centre.lon + u(rng), centre.lat + u(rng)};
    r.centerline.push_back(p);
    for (int k = 0, extra = 1 + static_cast<int>(rng() % 4); k < extra; ++k) {
      p = destination_point(p, bearing(rng), len(rng));
      r.centerline.push_back(p);
    }
    roads.push_back(std::move(r));
  }
  std::vector<city_region> cities;
  std::uniform_real_distribution<double> spoke(0.02, 0.05);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const lon_lat c{centre.lon - 0.5 + 0.1 * i + 0.05, centre.lat - 0.5 + 0.1 * j + 0.05};
      ring outer;
      const int spokes = 5 + static_cast<int>(rng() % 12);
      for (int k = 0; k < spokes; ++k) {
        const double a = 2.0 * std::numbers::pi * k / spokes, rr = spoke(rng);
        outer.push_back({c.lon + rr * std::cos(a), c.lat + rr * std::sin(a)});
      }
      outer.push_back(outer.front());
      cities.push_back({"c" + std::to_string(i * 10 + j), {outer}});
    }

  const poi_index pidx(pois, default_category_params());
  const road_index ridx(roads);
  const city_index cidx(cities);
  int poi_bad = 0, road_bad = 0, city_bad = 0;
  for (int k = 0; k < 10'000; ++k) {
    const lon_lat q{centre.lon + 1.1 * u(rng), centre.lat + 1.1 * u(rng)};
    const auto cat = all_poi_categories[static_cast<std::size_t>(k % 3)];
    const auto p = pidx.nearest(q, cat);
    const auto pw = oracle::scan_nearest_poi(pois, q, cat);
    poi_bad += !p || !pw || p->site->id != pw->id;
    const auto r = ridx.nearest(q);
    const auto rw = oracle::scan_nearest_road(roads, q);
    road_bad += !r || !rw || r->segment->id != rw->id;
    city_bad += cidx.locate(q) != oracle::scan_city(cities, q);
  }
  const double secs = seconds_since(t0);
  return {poi_bad + road_bad + city_bad == 0 && secs < 60.0,
          fmt("10000 queries: %d POI, %d road, %d city mismatches, %.2f s", poi_bad, road_bad, city_bad, secs)};
}

struct fleet_run {
  synth::fleet fleet;
  pipeline::extraction ex;
  synth::score score;
  double seconds = 0.0;
};

fleet_run run_fleet(const synth::noise_model& noise) {
  const auto t0 = clock_type::now();
  fleet_run out;
  synth::fleet_plan plan;
  plan.n_trucks = 200;
  plan.horizon_s = 7 * 86400;
  plan.sampling_interval_s = 30;
  plan.noise = noise;
  out.fleet = synth::generate_fleet(plan, 0);
  std::ostringstream os;
  synth::write_gps(os, out.fleet.records, plan.tz_offset_s);
  std::istringstream in(os.str());
  const auto clean = pipeline::clean_records(in, parse_options{',', false, plan.tz_offset_s},
                                             bounding_region::china(), thresholds{}, 0);
  out.ex = pipeline::extract(clean.segments, thresholds{}, poi_index(out.fleet.pois, plan.radii),
                             road_index(out.fleet.roads), city_index(out.fleet.cities), 0);
  std::vector<synth::predicted_end> preds;
  for (const auto& e : out.ex.ends) preds.push_back(synth::to_prediction(e));
  out.score = synth::score_trip_ends(preds, out.fleet.truth);
  out.seconds = seconds_since(t0);
  return out;
}

outcome end_to_end(const fleet_run& clean, const fleet_run& noisy) {
  auto p = [](const synth::score& s) { return s.precision.value_or(0.0); };
  auto r = [](const synth::score& s) { return s.recall.value_or(0.0); };
  const bool ok = p(clean.score) >= 0.99 && r(clean.score) >= 0.99 && p(noisy.score) >= 0.90 &&
                  r(noisy.score) >= 0.90 && clean.seconds < 300.0 && noisy.seconds < 300.0;
  return {ok, fmt("noiseless P %.4f R %.4f (%.1f s); standard noise P %.4f R %.4f (%.1f s)", p(clean.score),
                  r(clean.score), clean.seconds, p(noisy.score), r(noisy.score), noisy.seconds)};
}

outcome lognormal_recovery(const fleet_run& clean) {
  const auto t0 = clock_type::now();
  std::mt19937_64 rng(2);
  std::lognormal_distribution<double> draw(4.5, 0.8);
  std::vector<double> xs(100'000);
  for (auto& x : xs) x = draw(rng);
  const auto f = fit_lognormal(xs);
  std::vector<double> dist, dur;
  for (const auto& t : clean.ex.trips) {
    dist.push_back(t.path_distance_m);
    dur.push_back(static_cast<double>(t.duration));
  }
  const double dist_mode = fit_lognormal(dist).mode(), dur_mode = fit_lognormal(dur).mode();
  const double secs = seconds_since(t0);
  const bool ok = std::abs(f.mu - 4.5) <= 0.02 * 4.5 && std::abs(f.sigma - 0.8) <= 0.02 * 0.8 &&
                  std::abs(dist_mode - 90'000.0) <= 9'000.0 && std::abs(dur_mode - 10'800.0) <= 1'080.0 && secs < 10.0;
  return {ok, fmt("mu %.4f, sigma %.4f; %zu extracted trips: distance mode %.1f km, duration mode %.2f h, %.2f s", f.mu,
                  f.sigma, dist.size(), dist_mode / 1000.0, dur_mode / 3600.0, secs)};
}

std::string raw_text(const std::vector<gps_record>& rs, std::int64_t tz) {
  std::ostringstream os;
  synth::write_gps(os, rs, tz);
  return os.str();
}

outcome ingest_invariants() {
  synth::fleet_plan plan;
  plan.n_trucks = 20;
  plan.horizon_s = 2 * 86400;
  plan.noise = synth::noise_model::standard();
  auto f = synth::generate_fleet(plan, 0);
  for (std::size_t i = 0; i < f.records.size(); i += 997) f.records[i].lat = -5.0;
  const auto text = raw_text(f.records, plan.tz_offset_s) + "not,a,record\n";
  std::istringstream in(text);
  const parse_options opts{',', false, plan.tz_offset_s};
  const auto first = pipeline::clean_records(in, opts, bounding_region::china(), thresholds{}, 0);
  const bool conserved = first.summary.accepted + first.rejections.size() == first.summary.rows &&
                         first.summary.rows == f.records.size() + 1;
  std::vector<gps_record> kept;
  for (const auto& s : first.segments) kept.insert(kept.end(), s.records.begin(), s.records.end());
  std::istringstream again(raw_text(kept, plan.tz_offset_s));
  const auto second = pipeline::clean_records(again, opts, bounding_region::china(), thresholds{}, 0);
  std::vector<gps_record> kept2;
  for (const auto& s : second.segments) kept2.insert(kept2.end(), s.records.begin(), s.records.end());
  const bool idempotent = second.rejections.empty() && raw_text(kept2, 0) == raw_text(kept, 0);
  return {conserved && idempotent, fmt("%zu rows = %zu accepted + %zu rejected; re-ingest rejects %zu", first.summary.rows,
                                       first.summary.accepted, first.rejections.size(), second.rejections.size())};
}

outcome throughput(const fleet_run& clean) {
  const synth::fleet_plan plan;
  const auto text = raw_text(clean.fleet.records, plan.tz_offset_s);
  const auto t0 = clock_type::now();
  std::istringstream in(text);
  const auto data = pipeline::clean_records(in, parse_options{',', false, plan.tz_offset_s}, bounding_region::china(),
                                            thresholds{}, 0);
  const auto stops = pipeline::detect_all_stops(data.segments, thresholds{}, 0);
  const double secs = seconds_since(t0);
  const double per_min = static_cast<double>(data.summary.rows) / secs * 60.0;
  return {per_min >= 1e6, fmt("%zu records, %zu stops in %.2f s: %.2f M records/min", data.summary.rows, stops.size(),
                              secs, per_min / 1e6)};
}

} // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<outcome()>& fn) {
    outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %d %s: %s (%s)\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "dwell classification", dwell_classes);
  report(2, "broken power law recovery", power_law_recovery);
  report(3, "POI radius recovery", radius_recovery);
  report(4, "road filter", road_filter);
  report(5, "spatial lookups against scans", spatial_lookups);
  const auto clean = run_fleet(synth::noise_model{});
  const auto noisy = run_fleet(synth::noise_model::standard());
  report(6, "end-to-end synthetic validation", [&] { return end_to_end(clean, noisy); });
  report(7, "lognormal recovery", [&] { return lognormal_recovery(clean); });
  report(8, "ingest conservation and idempotence", ingest_invariants);
  report(9, "ingest and stop detection throughput", [&] { return throughput(clean); });
  return failed == 0 ? 0 : 1;
}
