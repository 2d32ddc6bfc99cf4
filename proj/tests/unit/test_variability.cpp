#include <gtest/gtest.h>

#include <random>

#include <fmt/format.h>

#include "busvar/variability.hpp"
#include "oracles.hpp"

using namespace busvar;

namespace {

trip at(point o, point d, double start_h = 7.0, double end_h = 7.5) {
  trip t;
  t.card_id = "c";
  t.origin = o;
  t.destination = d;
  t.start_s = static_cast<int>(std::lround(start_h * 3600));
  t.end_s = static_cast<int>(std::lround(end_h * 3600));
  return t;
}

}  // namespace

TEST(SpatialDistance, HandValues) {
  auto const a = at({0, 0}, {1000, 1000});
  EXPECT_EQ(spatial_distance(a, a), 0.0);
  EXPECT_NEAR(spatial_distance(a, at({300, 400}, {1000, 1000})), 500.0, 1e-6);
  EXPECT_NEAR(spatial_distance(a, at({300, 400}, {1300, 1400})), 707.1068, 1e-4);
  EXPECT_NEAR(spatial_distance(a, at({300, 400}, {1300, 1400})), 500.0 * std::sqrt(2.0), 1e-9);
}

TEST(TemporalDistance, HandValues) {
  auto const a = at({}, {}, 7.0, 7.5);
  EXPECT_EQ(temporal_distance(a, a), 0.0);
  EXPECT_NEAR(temporal_distance(a, at({}, {}, 7.5, 8.0)), 0.70711, 1e-5);
  EXPECT_NEAR(temporal_distance(a, at({}, {}, 8.0, 8.5)), 1.41421, 1e-5);
}

TEST(Variability, HandMeans) {
  auto const A = at({0, 0}, {0, 0}, 7.0, 7.5);
  auto const B = at({300, 400}, {0, 0}, 8.0, 8.5);
  std::vector<trip> two{A, B};
  EXPECT_NEAR(spatial_variability(two), 500.0, 1e-9);
  std::vector<trip> aab{A, A, B};
  EXPECT_NEAR(spatial_variability(aab), 1000.0 / 3.0, 1e-9);
  // pairwise T = {0, 1, 1}: start +0.6 h, end +0.8 h
  auto const C = at({}, {}, 7.6, 8.3);
  std::vector<trip> t3{A, A, C};
  EXPECT_NEAR(temporal_variability(t3), 2.0 / 3.0, 1e-9);
  std::vector<trip> same(5, A);
  EXPECT_EQ(spatial_variability(same), 0.0);
  EXPECT_EQ(temporal_variability(same), 0.0);
}

TEST(Variability, RejectsFewerThanTwo) {
  std::vector<trip> one{at({}, {})};
  EXPECT_THROW(spatial_variability(one), invalid_input);
  EXPECT_THROW(temporal_variability(std::span<trip const>{}), invalid_input);
}

TEST(Variability, MatchesBruteForceOracle) {
  std::mt19937_64 rng{42};
  for (int r = 0; r < 200; ++r) {
    std::vector<trip> trips;
    auto const n = std::uniform_int_distribution<int>{2, 40}(rng);
    for (int i = 0; i < n; ++i) {
      trips.push_back(oracle::random_trip(rng));
    }
    ASSERT_NEAR(spatial_variability(trips), oracle::sv(trips), 1e-9);
    ASSERT_NEAR(temporal_variability(trips), oracle::tv(trips), 1e-9);
  }
}

TEST(Variability, PermutationAndTranslationInvariant) {
  std::mt19937_64 rng{7};
  std::vector<trip> trips;
  for (int i = 0; i < 12; ++i) {
    trips.push_back(oracle::random_trip(rng));
  }
  auto const sv = spatial_variability(trips);
  auto const tv = temporal_variability(trips);
  std::shuffle(trips.begin(), trips.end(), rng);
  EXPECT_NEAR(spatial_variability(trips), sv, 1e-9);
  for (auto& t : trips) {
    t.origin.x += 123.0;
    t.destination.x += 123.0;
    t.start_s += 60;
    t.end_s += 60;
  }
  EXPECT_NEAR(spatial_variability(trips), sv, 1e-6);
  EXPECT_NEAR(temporal_variability(trips), tv, 1e-9);
}

TEST(Records, ComputeAndRoundTrip) {
  period_trip_set set{"card7", peak_period::evening,
                      {at({0, 0}, {0, 0}, 17.0, 17.5), at({300, 400}, {0, 0}, 18.0, 18.25)}};
  auto const r = compute_record(set);
  EXPECT_EQ(r.n_trips, 2);
  EXPECT_NEAR(r.sv, 500.0, 1e-9);
  EXPECT_NEAR(r.mean_duration, 0.375, 1e-12);
  EXPECT_EQ(r.trip_frequency, 2.0);
  std::vector const recs{r, r};
  auto const parsed = parse_records(format_records(recs));
  ASSERT_EQ(parsed.size(), 2U);
  EXPECT_EQ(parsed[1].card_id, "card7");
  EXPECT_EQ(parsed[1].period, peak_period::evening);
  EXPECT_EQ(parsed[1].sv, r.sv);  // shortest round-trip text
  EXPECT_EQ(parsed[1].tv, r.tv);
}

TEST(Records, ThreadInvariant) {
  std::mt19937_64 rng{9};
  std::vector<period_trip_set> sets;
  for (int c = 0; c < 300; ++c) {
    period_trip_set s{fmt::format("c{}", c), peak_period::morning, {}};
    for (int i = 0; i < 4 + c % 20; ++i) {
      s.trips.push_back(oracle::random_trip(rng));
    }
    sets.push_back(std::move(s));
  }
  auto const a = compute_records(sets, 1);
  auto const b = compute_records(sets, 5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].sv, b[i].sv);
    EXPECT_EQ(a[i].tv, b[i].tv);
  }
}
