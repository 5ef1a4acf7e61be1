// Library walkthrough: generate a labelled fleet, clean its GPS records,
// extract trip ends and trips, score them and summarise the trips.

#include "freight/freight.hpp"

#include <iostream>
#include <sstream>

int main() {
  using namespace freight;

  synth::fleet_plan plan;
  plan.n_trucks = 10;
  plan.horizon_s = 3 * 86400;
  plan.noise = synth::noise_model::standard();
  const auto fleet = synth::generate_fleet(plan);

  // Raw records travel as CSV text, exactly as a GPS export would.
  std::ostringstream raw;
  synth::write_gps(raw, fleet.records, plan.tz_offset_s);
  std::istringstream in(raw.str());
  const thresholds th; // 1.1 km/h, 24 min, 13 h
  const auto cleaned =
      pipeline::clean_records(in, parse_options{',', false, plan.tz_offset_s}, bounding_region::china(), th, 0);
  std::cout << cleaned.summary.rows << " rows, " << cleaned.summary.accepted << " kept, "
            << cleaned.summary.rejected_total() << " rejected\n";

  const auto ex = pipeline::extract(cleaned.segments, th, poi_index(fleet.pois, plan.radii), road_index(fleet.roads),
                                    city_index(fleet.cities), 0);
  std::cout << ex.stops.size() << " stops, " << ex.ends.size() << " trip ends, " << ex.trips.size() << " trips\n";

  std::vector<synth::predicted_end> predicted;
  for (const auto& e : ex.ends) predicted.push_back(synth::to_prediction(e));
  const auto s = synth::score_trip_ends(predicted, fleet.truth);
  std::cout << "precision " << s.precision.value_or(0.0) << ", recall " << s.recall.value_or(0.0) << '\n';

  const auto shares = category_shares(ex.ends);
  for (poi_category c : all_poi_categories)
    std::cout << "  " << to_string(c) << ' ' << text::fmt_fixed(100.0 * shares.share(c), 1) << "%\n";

  std::vector<double> km, hours;
  for (const auto& t : ex.trips) {
    km.push_back(t.path_distance_m / 1000.0);
    hours.push_back(static_cast<double>(t.duration) / 3600.0);
  }
  if (km.size() >= 2) {
    std::cout << "distance mode " << text::fmt_fixed(fit_lognormal(km).mode(), 1) << " km, duration mode "
              << text::fmt_fixed(fit_lognormal(hours).mode(), 2) << " h\n";
  }
  return 0;
}
