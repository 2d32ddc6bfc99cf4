#include <gtest/gtest.h>

#include "busvar/fusion.hpp"

using namespace busvar;

namespace {

trip via(std::string o, point op, std::string d, point dp) {
  trip t;
  t.card_id = "c";
  t.origin_stop = std::move(o);
  t.origin = op;
  t.destination_stop = std::move(d);
  t.destination = dp;
  t.start_s = 7 * 3600;
  t.end_s = t.start_s + 600;
  return t;
}

variability_record rec(std::string card, double sv, double tv = 0.5) {
  return {std::move(card), peak_period::morning, 4, sv, tv, 0.25, 4.0};
}

}  // namespace

TEST(Grid, AssignHalfOpen) {
  grid_spec const g{{0, 0}, 500, 4, 4};
  EXPECT_EQ(assign_grid({250, 250}, g), (cell_id{0, 0}));
  EXPECT_EQ(assign_grid({750, 250}, g), (cell_id{1, 0}));
  EXPECT_EQ(assign_grid({500, 0}, g), (cell_id{1, 0}));
  EXPECT_EQ(assign_grid({499.999, 0}, g), (cell_id{0, 0}));
  // the far study boundary closes into the last cell
  EXPECT_EQ(assign_grid({2000, 2000}, g), (cell_id{3, 3}));
  EXPECT_FALSE(assign_grid({2000.001, 10}, g));
  EXPECT_FALSE(assign_grid({-0.001, 10}, g));
}

TEST(Grid, CoveringAndValidate) {
  auto const g = grid_spec::covering({0, 0}, {1001, 500}, 500);
  EXPECT_EQ(g.n_cols, 3);
  EXPECT_EQ(g.n_rows, 1);
  EXPECT_EQ(g.centroid({1, 0}), (point{750, 250}));
  EXPECT_THROW((grid_spec{{0, 0}, 0.0, 1, 1}.validate()), config_error);
  EXPECT_THROW((grid_spec{{0, 0}, 500, 0, 1}.validate()), config_error);
}

TEST(MajorAnchor, ModeTieAndSingle) {
  point const A{0, 0}, B{100, 0}, C{50, 80};
  period_trip_set s{"c", peak_period::morning,
                    {via("A", A, "C", C), via("A", A, "C", C), via("A", A, "C", C),
                     via("B", B, "C", C)}};
  EXPECT_EQ(major_anchor(s, anchor_role::origin), A);
  EXPECT_EQ(major_anchor(s, anchor_role::destination), C);
  s.trips = {via("A", A, "C", C), via("B", B, "C", C), via("A", A, "C", C),
             via("B", B, "C", C)};
  EXPECT_EQ(major_anchor(s, anchor_role::origin), (point{50, 0}));
}

TEST(Aggregate, MinimumIndividualsAndMeans) {
  std::vector<cell_record> rs;
  for (int i = 0; i < 9; ++i) {
    rs.push_back({{0, 0}, anchor_role::origin, peak_period::morning, rec("a", 400)});
  }
  for (int i = 0; i < 10; ++i) {
    rs.push_back({{1, 0}, anchor_role::origin, peak_period::morning, rec("b", 400)});
    rs.push_back({{2, 0}, anchor_role::origin, peak_period::morning,
                  rec("c", 100.0 * (i + 1), 0.1 * i)});
  }
  aggregation_stats st;
  auto const out = aggregate_grid(rs, 10, &st);
  ASSERT_EQ(out.size(), 2U);
  EXPECT_EQ(out[0].cell, (cell_id{1, 0}));
  EXPECT_DOUBLE_EQ(out[0].mean_sv, 400.0);
  EXPECT_DOUBLE_EQ(out[1].mean_sv, 550.0);
  EXPECT_NEAR(out[1].mean_tv, 0.45, 1e-12);
  EXPECT_EQ(out[1].n_individuals, 10);
  EXPECT_EQ(st.groups, 3U);
  EXPECT_EQ(st.groups_dropped, 1U);
  EXPECT_EQ(st.individuals_dropped, 9U);
}

TEST(Aggregate, GroupsKeptApartByRoleAndPeriod) {
  std::vector<cell_record> rs;
  for (int i = 0; i < 10; ++i) {
    rs.push_back({{0, 0}, anchor_role::origin, peak_period::morning, rec("a", 1)});
    rs.push_back({{0, 0}, anchor_role::destination, peak_period::morning, rec("a", 2)});
    rs.push_back({{0, 0}, anchor_role::origin, peak_period::evening, rec("a", 3)});
  }
  auto const out = aggregate_grid(rs);
  ASSERT_EQ(out.size(), 3U);
  for (auto const& a : out) {
    auto const expect = a.period == peak_period::evening ? 3.0
                        : a.role == anchor_role::origin ? 1.0
                                                        : 2.0;
    EXPECT_EQ(a.mean_sv, expect);
  }
}

TEST(AnchorRecords, OutsideExtentDropsBothRoles) {
  grid_spec const g{{0, 0}, 500, 2, 2};
  std::vector<period_trip_set> sets{
      {"in", peak_period::morning, {via("A", {10, 10}, "B", {900, 900})}},
      {"out", peak_period::morning, {via("A", {10, 10}, "Z", {5000, 10})}}};
  std::vector<variability_record> recs{rec("in", 1), rec("out", 2)};
  anchoring_stats st;
  auto const cells = anchor_records(sets, recs, g, &st);
  ASSERT_EQ(cells.size(), 2U);
  EXPECT_EQ(cells[0].rider.card_id, "in");
  EXPECT_EQ(st.individuals, 2U);
  EXPECT_EQ(st.outside_extent, 1U);
}

TEST(Aggregates, TextRoundTrip) {
  std::vector<grid_aggregate> a{
      {{3, 4}, anchor_role::destination, peak_period::evening, 1234.5, 0.4, 6.5, 0.3, 12}};
  auto const back = parse_aggregates(format_aggregates(a));
  ASSERT_EQ(back.size(), 1U);
  EXPECT_EQ(back[0].cell, (cell_id{3, 4}));
  EXPECT_EQ(back[0].role, anchor_role::destination);
  EXPECT_EQ(back[0].mean_sv, 1234.5);
  EXPECT_EQ(back[0].n_individuals, 12);
}
