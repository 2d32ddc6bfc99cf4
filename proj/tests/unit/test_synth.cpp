#include <gtest/gtest.h>

#include <random>

#include "busvar/csv.hpp"
#include "busvar/synth.hpp"
#include "busvar/variability.hpp"
#include "oracles.hpp"

using namespace busvar;

namespace {

synth_config small(std::uint64_t seed = 1) {
  synth_config c;
  c.seed = seed;
  c.n_riders = 300;
  c.extent_max = {8000, 8000};
  c.n_stops = 1200;
  c.residential_cells = 40;
  c.employment_cells = 30;
  return c;
}

ingest_result run_ingest(synth_city const& city, unsigned threads = 1) {
  auto const p = parse_transactions(format_transactions(city.transactions, city.fault_rows),
                                    city.stops, threads);
  return build_period_sets(p.rows, city.stops, {}, threads);
}

// Mean distance between two independent uniform points on a disc, by
// rejection sampling from the bounding square.
double disc_mean_distance(double radius) {
  std::mt19937_64 rng{2024};
  std::uniform_real_distribution<double> u{-radius, radius};
  auto const draw = [&] {
    for (;;) {
      point const p{u(rng), u(rng)};
      if (std::hypot(p.x, p.y) <= radius) return p;
    }
  };
  double s = 0.0;
  constexpr int kN = 400000;
  for (int i = 0; i < kN; ++i) s += distance(draw(), draw());
  return s / kN;
}

}  // namespace

TEST(Synth, SameSeedSameBytes) {
  auto const a = generate_city(small(5));
  auto const b = generate_city(small(5));
  EXPECT_EQ(format_transactions(a.transactions), format_transactions(b.transactions));
  EXPECT_EQ(format_stops(a.stops), format_stops(b.stops));
  EXPECT_EQ(format_cell_inputs(a.cells), format_cell_inputs(b.cells));
  EXPECT_EQ(a.ground_truth.dump(), b.ground_truth.dump());
  auto const c = generate_city(small(6));
  EXPECT_NE(format_transactions(a.transactions), format_transactions(c.transactions));
}

TEST(Synth, OutputPassesIngestValidation) {
  auto const city = generate_city(small());
  auto const p = parse_transactions(format_transactions(city.transactions), city.stops);
  EXPECT_EQ(p.stats.skipped(), 0U);
  EXPECT_EQ(p.rows.size(), city.transactions.size());
  auto const r = build_period_sets(p.rows, city.stops);
  EXPECT_EQ(r.stats.too_short + r.stats.too_long, 0U);
  EXPECT_EQ(r.stats.chain_anomalies, 0U);
  EXPECT_EQ(r.stats.selection.trips_outside, 0U);
  EXPECT_EQ(r.sets.size(), 2 * city.riders.size());
  // the file formats feed straight back into the feature parsers
  EXPECT_EQ(parse_cell_inputs(format_cell_inputs(city.cells)).size(), city.grid.cell_count());
  EXPECT_EQ(parse_centres(format_centres(city.centres)).subcentres.size(), 8U);
}

TEST(Synth, FaultInjectionIsCaught) {
  auto cfg = small();
  cfg.faults = {0.02, 0.02};
  auto const city = generate_city(cfg);
  ASSERT_FALSE(city.fault_rows.empty());
  auto const text = format_transactions(city.transactions, city.fault_rows);
  auto const p = parse_transactions(text, city.stops);
  EXPECT_EQ(p.stats.skipped(), city.fault_rows.size());
  auto const r = build_period_sets(p.rows, city.stops);
  EXPECT_GT(r.stats.too_short, 0U);
  EXPECT_GT(r.stats.too_long, 0U);
}

TEST(Synth, ExtentTooSmallForStops) {
  auto cfg = small();
  cfg.extent_max = {500, 500};
  EXPECT_THROW(generate_city(cfg), config_error);
}

TEST(Synth, ZeroJitterRiderHasZeroVariability) {
  auto cfg = small();
  rider_plan p;
  p.card_id = "Z";
  p.home = {1000, 1000};
  p.work = {5000, 3000};
  p.morning_trips = 12;
  p.evening_trips = 12;
  cfg.explicit_riders = {p};
  auto const city = generate_city(cfg);
  auto const r = run_ingest(city);
  ASSERT_EQ(r.sets.size(), 2U);
  for (auto const& rec : compute_records(r.sets)) {
    EXPECT_EQ(rec.sv, 0.0);
    EXPECT_EQ(rec.tv, 0.0);
    EXPECT_EQ(rec.n_trips, 12);
  }
}

TEST(Synth, DiscJitterMatchesMonteCarlo) {
  auto cfg = small();
  cfg.exact_jitter_stops = true;
  cfg.transfer_share = 0.0;
  rider_plan p;
  p.card_id = "D";
  p.home = {4000, 4000};
  p.work = {6000, 4000};
  p.home_jitter_m = 600;
  p.work_jitter_m = 0;
  p.anchor_share = 0.0;
  p.time_spread_h = 0.0;
  p.morning_trips = 30;
  cfg.explicit_riders = {p};
  auto const city = generate_city(cfg);
  auto const r = run_ingest(city);
  ASSERT_EQ(r.sets.size(), 1U);
  ASSERT_EQ(r.sets[0].trips.size(), 30U);
  auto const rec = compute_record(r.sets[0]);
  auto const expected = disc_mean_distance(600);
  EXPECT_NEAR(expected, 128 * 600 / (45 * std::numbers::pi), 2.0);
  EXPECT_NEAR(rec.sv, expected, 0.10 * expected);
  EXPECT_EQ(rec.tv, 0.0);
}

TEST(Synth, RealisedVariabilityTracksTargets) {
  auto cfg = small(3);
  cfg.n_riders = 600;
  cfg.fixed_trip_count = 20;
  cfg.effects.rider_noise = 0.5;
  auto const city = generate_city(cfg);
  auto const r = run_ingest(city, 2);
  auto const recs = compute_records(r.sets, 2);
  std::map<std::string, rider_plan const*> plans;
  for (auto const& p : city.riders) plans[p.card_id] = &p;
  std::vector<double> sv, sv_t, tv, tv_t;
  for (auto const& rec : recs) {
    if (rec.period != peak_period::morning) continue;
    auto const* p = plans.at(rec.card_id);
    sv.push_back(rec.sv);
    sv_t.push_back(p->sv_target);
    tv.push_back(rec.tv);
    tv_t.push_back(p->time_spread_h);  // target after the spread cap
  }
  ASSERT_GE(sv.size(), 500U);
  EXPECT_GT(oracle::spearman(sv, sv_t), 0.9);
  EXPECT_GT(oracle::spearman(tv, tv_t), 0.9);
}

TEST(Synth, WriteCityFiles) {
  auto const dir = std::filesystem::temp_directory_path() / "busvar_synth_write";
  std::filesystem::remove_all(dir);
  auto const city = generate_city(small());
  auto const paths = write_city(city, dir);
  EXPECT_TRUE(std::filesystem::exists(paths.ground_truth));
  auto const gt = nlohmann::json::parse(csv::read_file(paths.ground_truth));
  EXPECT_EQ(gt["riders"].size(), city.riders.size());
  EXPECT_EQ(read_stops(paths.stops).size(), city.stops.size());
  std::filesystem::remove_all(dir);
}
