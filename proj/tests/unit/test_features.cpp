#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "busvar/features.hpp"

using namespace busvar;

TEST(PoiEntropy, HandValuesAndProperties) {
  std::vector<long long> two{5, 5};
  EXPECT_NEAR(poi_entropy(two), 0.693147, 1e-6);
  std::vector<long long> one{0, 7, 0};
  EXPECT_EQ(poi_entropy(one), 0.0);
  std::vector<long long> zero{0, 0};
  EXPECT_THROW(poi_entropy(zero), invalid_input);
  std::vector<long long> neg{3, -1};
  EXPECT_THROW(poi_entropy(neg), invalid_input);

  std::mt19937_64 rng{4};
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<long long> c(6);
    for (auto& v : c) v = std::uniform_int_distribution<long long>{0, 40}(rng);
    c[0] += 1;
    auto const h = poi_entropy(c);
    std::shuffle(c.begin(), c.end(), rng);
    EXPECT_NEAR(poi_entropy(c), h, 1e-12);
    EXPECT_LE(h, std::log(6.0) + 1e-12);
    EXPECT_GE(h, 0.0);
  }
  std::vector<long long> uniform(6, 9);
  EXPECT_NEAR(poi_entropy(uniform), std::log(6.0), 1e-12);
}

TEST(NearestDistance, Km) {
  std::vector<point> const centres{{0, 0}, {10000, 0}};
  EXPECT_NEAR(nearest_distance_km({7000, 0}, centres), 3.0, 1e-12);
  EXPECT_THROW(nearest_distance_km({0, 0}, std::span<point const>{}), config_error);
  for (auto const& c : centres) {
    EXPECT_LE(nearest_distance_km({1234, 567}, centres), distance({1234, 567}, c) / 1000.0);
  }
}

TEST(FeatureNames, TableOrder) {
  EXPECT_EQ(kFeatures.size(), 19U);
  EXPECT_EQ(kFeatures[0].abbreviation, "tripfreq");
  EXPECT_EQ(kFeatures[18].abbreviation, "oldage");
  EXPECT_EQ(feature_from_abbreviation("subcendist"), feature::subcendist);
  EXPECT_THROW(feature_from_abbreviation("nope"), invalid_input);
}

TEST(CellInputs, ParseAndValidate) {
  auto const raw = parse_cell_inputs(
      "col,row,popden,houseprice,female,poi_eat,poi_cult\n"
      "0,0,1000,,51,3,1\n"
      "1,0,2000,50000,49,,\n");
  ASSERT_EQ(raw.size(), 2U);
  auto const& a = raw.at({0, 0});
  EXPECT_FALSE(a.values.contains("houseprice"));
  EXPECT_EQ(a.poi.at("eat"), 3);
  EXPECT_EQ(raw.at({1, 0}).values.at("houseprice"), 50000.0);
  EXPECT_THROW(parse_cell_inputs("col,row,female\n0,0,120\n"), invalid_input);
  EXPECT_THROW(parse_cell_inputs("col,row,popden\n0,0,-1\n"), invalid_input);
}

TEST(Centres, Parse) {
  auto const c = parse_centres("kind,x_m,y_m\ncentre,0,0\nsubcentre,5000,0\nsubcentre,0,5000\n");
  EXPECT_EQ(c.centres.size(), 1U);
  EXPECT_EQ(c.subcentres.size(), 2U);
  EXPECT_THROW(parse_centres("kind,x_m,y_m\nmoon,0,0\n"), invalid_input);
}

TEST(TransitSupply, DistinctRoutes) {
  stop_registry stops;
  stops.add("s1", {100, 100});
  stops.add("s2", {200, 100});
  stops.add("s3", {700, 100});
  std::map<std::string, std::set<std::string>> routes{
      {"s1", {"r1"}}, {"s2", {"r1", "r2"}}, {"s3", {"r3"}}};
  auto const sup = compute_transit_supply(stops, routes, {{0, 0}, 500, 2, 1});
  EXPECT_EQ(sup.at({0, 0}).stops, 2);
  EXPECT_EQ(sup.at({0, 0}).routes.size(), 2U);
  EXPECT_EQ(sup.at({1, 0}).stops, 1);
}

TEST(FeatureTable, BuildAssemblesEveryColumn) {
  grid_spec const g{{0, 0}, 500, 4, 1};
  raw_cell_table raw;
  raw[{0, 0}].values = {{"metrosta", 1}, {"popden", 5000}, {"roadden", 8}, {"female", 48},
                        {"juveni", 3}, {"oldage", 6}};
  raw[{0, 0}].poi = {{"eat", 4}, {"recrea", 4}, {"dailyser", 0}, {"finan", 0}, {"cult", 0}};
  raw[{1, 0}].values = {{"houseprice", 70000}};
  std::vector<grid_aggregate> slice{
      {{0, 0}, anchor_role::origin, peak_period::morning, 900, 0.5, 6.0, 0.4, 10},
      {{1, 0}, anchor_role::origin, peak_period::morning, 800, 0.4, 5.0, 0.3, 11},
      {{3, 0}, anchor_role::origin, peak_period::morning, 700, 0.3, 4.0, 0.2, 12}};
  std::map<cell_id, transit_supply> sup;
  sup[{0, 0}] = {3, {"r1", "r2"}};
  centre_set const centres{{{0, 0}}, {{2250, 250}}};
  auto const t = build_feature_table(slice, raw, sup, centres, g);
  ASSERT_EQ(t.rows.size(), 2U);
  EXPECT_EQ(t.dropped_no_inputs, 1U);
  auto const& r = t.rows[0];
  EXPECT_EQ(r[feature::tripfreq], 6.0);
  EXPECT_EQ(r[feature::avedur], 0.4);
  EXPECT_NEAR(r[feature::centdist], std::hypot(250, 250) / 1000, 1e-12);
  EXPECT_NEAR(r[feature::subcendist], 2.0, 1e-12);
  EXPECT_EQ(r[feature::busstop], 3.0);
  EXPECT_EQ(r[feature::busroute], 2.0);
  EXPECT_NEAR(r[feature::poi_entro], std::log(2.0), 1e-12);
  EXPECT_EQ(r[feature::eat], 4.0);
  EXPECT_TRUE(r.missing(feature::houseprice));
  auto const& s = t.rows[1];
  EXPECT_EQ(s[feature::houseprice], 70000.0);
  EXPECT_EQ(s[feature::busstop], 0.0);
  EXPECT_TRUE(s.missing(feature::poi_entro));
  EXPECT_TRUE(s.missing(feature::popden));

  auto const back = parse_feature_table(format_feature_table(t));
  ASSERT_EQ(back.rows.size(), 2U);
  EXPECT_EQ(back.cells[1], (cell_id{1, 0}));
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    auto const x = t.rows[0].values[f];
    auto const y = back.rows[0].values[f];
    EXPECT_TRUE(x == y || (std::isnan(x) && std::isnan(y))) << kFeatures[f].abbreviation;
  }
}
