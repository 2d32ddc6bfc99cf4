#include <gtest/gtest.h>

#include <random>

#include "busvar/boosting.hpp"
#include "oracles.hpp"

using namespace busvar;

namespace {

dataset random_dataset(std::mt19937_64& rng, std::size_t rows, std::size_t features,
                       double missing_share = 0.0, int distinct = 0) {
  dataset d{features};
  std::vector<double> x(features);
  for (std::size_t i = 0; i < rows; ++i) {
    for (auto& v : x) {
      v = distinct > 0 ? std::uniform_int_distribution<int>{0, distinct - 1}(rng)
                       : std::normal_distribution<double>{}(rng);
      if (std::uniform_real_distribution<double>{}(rng) < missing_share) {
        v = std::nan("");
      }
    }
    auto const y = (std::isnan(x[0]) ? 0.5 : std::sin(x[0])) +
                   0.3 * std::normal_distribution<double>{}(rng);
    d.add_row(x, y);
  }
  return d;
}

// Gain of a concrete split recomputed from scratch on the first-round residuals.
double gain_of(dataset const& d, int f, double thr, bool miss_left, double lambda) {
  double mean = 0.0;
  for (auto y : d.targets()) mean += y;
  mean /= static_cast<double>(d.rows());
  double gl = 0, hl = 0, gr = 0, hr = 0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    auto const x = d.value(i, static_cast<std::size_t>(f));
    bool const left = std::isnan(x) ? miss_left : x < thr;
    (left ? gl : gr) += mean - d.targets()[i];
    (left ? hl : hr) += 1;
  }
  return split_gain(gl, hl, gr, hr, lambda, 0.0);
}

}  // namespace

TEST(SplitGain, HandValue) {
  EXPECT_DOUBLE_EQ(split_gain(-2, 2, 2, 2, 0, 0), 2.0);
  EXPECT_DOUBLE_EQ(split_gain(-2, 2, 2, 2, 0, 0.5), 1.5);
}

TEST(Params, Validate) {
  boost_params p;
  EXPECT_NO_THROW(p.validate());
  p.learning_rate = 0;
  EXPECT_THROW(p.validate(), config_error);
  p = {};
  p.subsample = 1.5;
  EXPECT_THROW(p.validate(), config_error);
  p = {};
  p.l2_reg = -1;
  EXPECT_THROW(p.validate(), config_error);
}

TEST(Fit, FourPointStump) {
  dataset d{1};
  double const xs[] = {0, 1, 2, 3};
  double const ys[] = {1, 1, -1, -1};
  for (int i = 0; i < 4; ++i) {
    d.add_row(std::span<double const>{&xs[i], 1}, ys[i]);
  }
  boost_params p;
  p.n_trees = 1;
  p.max_depth = 1;
  p.learning_rate = 1.0;
  p.l2_reg = 0.0;
  fit_report rep;
  auto const m = fit(d, p, &rep);
  ASSERT_EQ(m.trees.size(), 1U);
  auto const& root = m.trees[0].nodes[0];
  EXPECT_EQ(root.feature, 0);
  EXPECT_GT(root.threshold, 1.0);
  EXPECT_LT(root.threshold, 2.0);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(m.predict(std::span<double const>{&xs[i], 1}), ys[i], 1e-12);
  }
  EXPECT_NEAR(rep.training_mse.back(), 0.0, 1e-24);
  // a second round finds nothing to split and stops
  p.n_trees = 5;
  EXPECT_EQ(fit(d, p).trees.size(), 1U);
}

TEST(Fit, MissingFollowsDefaultDirection) {
  dataset d{1};
  for (double x : {0.0, 1.0, 2.0, 3.0}) {
    d.add_row(std::span<double const>{&x, 1}, x < 1.5 ? 2.0 : -2.0);
  }
  auto const nan = std::nan("");
  d.add_row(std::span<double const>{&nan, 1}, 2.0);
  d.add_row(std::span<double const>{&nan, 1}, 2.0);
  boost_params p;
  p.n_trees = 1;
  p.max_depth = 1;
  p.learning_rate = 1.0;
  p.l2_reg = 0.0;
  auto const m = fit(d, p);
  auto const& root = m.trees[0].nodes[0];
  EXPECT_TRUE(root.default_left);
  auto const y = m.predict(std::span<double const>{&nan, 1});
  EXPECT_TRUE(std::isfinite(y));
  EXPECT_NEAR(y, 2.0, 1e-12);
}

TEST(Fit, ConstantDataGivesNoTrees) {
  dataset d{2};
  for (int i = 0; i < 30; ++i) {
    double const x[] = {1.0, 2.0};
    d.add_row(x, 3.0);
  }
  auto const m = fit(d, {});
  EXPECT_TRUE(m.trees.empty());
  EXPECT_EQ(m.base_score, 3.0);
}

TEST(Fit, ExhaustiveRootSplitOptimality) {
  std::mt19937_64 rng{17};
  int checked = 0;
  for (int rep = 0; rep < 400; ++rep) {
    auto const rows = std::uniform_int_distribution<std::size_t>{2, 12}(rng);
    auto const feats = std::uniform_int_distribution<std::size_t>{1, 3}(rng);
    auto const d = random_dataset(rng, rows, feats, rep % 3 == 0 ? 0.2 : 0.0, rep % 2 ? 4 : 0);
    boost_params p;
    p.n_trees = 1;
    p.max_depth = 1;
    p.l2_reg = rep % 4 * 0.5;
    auto const best = oracle::best_root_split(d, p.l2_reg, 0.0);
    auto const m = fit(d, p);
    if (best.feature < 0 || best.gain <= 1e-12) {
      continue;  // nothing worth splitting (or a zero-gain tie)
    }
    ASSERT_EQ(m.trees.size(), 1U);
    auto const& root = m.trees[0].nodes[0];
    ASSERT_FALSE(root.is_leaf());
    auto const got = gain_of(d, root.feature, root.threshold, root.default_left, p.l2_reg);
    ASSERT_NEAR(got, best.gain, 1e-9 * std::max(1.0, best.gain)) << "rep " << rep;
    ++checked;
  }
  EXPECT_GT(checked, 300);
}

TEST(Fit, TieBreaksToLowestFeatureThenSmallestThreshold) {
  // two identical columns; y symmetric so thresholds 0.5 and 2.5 tie
  dataset d{2};
  double const xs[] = {0, 1, 2, 3};
  double const ys[] = {1, 0, 0, 1};
  for (int i = 0; i < 4; ++i) {
    double const row[] = {xs[i], xs[i]};
    d.add_row(row, ys[i]);
  }
  boost_params p;
  p.n_trees = 1;
  p.max_depth = 1;
  p.l2_reg = 0.0;
  auto const m = fit(d, p);
  ASSERT_EQ(m.trees.size(), 1U);
  EXPECT_EQ(m.trees[0].nodes[0].feature, 0);
  EXPECT_EQ(m.trees[0].nodes[0].threshold, 0.5);
}

TEST(Fit, LossMonotoneNonIncreasing) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng{seed};
    auto const d = random_dataset(rng, 150, 4, 0.1);
    boost_params p;
    p.n_trees = 100;
    fit_report rep;
    fit(d, p, &rep);
    for (std::size_t k = 1; k < rep.training_mse.size(); ++k) {
      ASSERT_LE(rep.training_mse[k], rep.training_mse[k - 1] + 1e-12) << seed << " " << k;
    }
  }
}

TEST(Fit, SineRegression) {
  dataset d{1};
  for (int i = 0; i < 200; ++i) {
    double const x = -3.0 + 6.0 * i / 199.0;
    d.add_row(std::span<double const>{&x, 1}, std::sin(x));
  }
  boost_params p;
  p.n_trees = 300;
  p.max_depth = 4;
  p.learning_rate = 0.1;
  fit_report rep;
  auto const m = fit(d, p, &rep);
  EXPECT_LT(std::sqrt(rep.training_mse.back()), 0.05);
  for (auto const& t : m.trees) {
    EXPECT_LE(t.max_depth(), 4);
  }
}

TEST(Fit, LargeLambdaShrinksToBase) {
  std::mt19937_64 rng{3};
  auto const d = random_dataset(rng, 80, 3);
  boost_params p;
  p.n_trees = 20;
  p.l2_reg = 1e12;
  auto const m = fit(d, p);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    EXPECT_NEAR(m.predict(d.row(i)), m.base_score, 1e-6);
  }
}

TEST(Fit, DeterministicWithSubsample) {
  std::mt19937_64 rng{8};
  auto const d = random_dataset(rng, 120, 3);
  boost_params p;
  p.n_trees = 30;
  p.subsample = 0.6;
  p.seed = 99;
  auto const a = to_json(fit(d, p)).dump();
  EXPECT_EQ(a, to_json(fit(d, p)).dump());
  p.seed = 100;
  EXPECT_NE(a, to_json(fit(d, p)).dump());
}

TEST(Model, JsonRoundTrip) {
  std::mt19937_64 rng{12};
  auto const d = random_dataset(rng, 60, 3, 0.1);
  boost_params p;
  p.n_trees = 10;
  auto const m = fit(d, p);
  auto const back = model_from_json(nlohmann::json::parse(to_json(m).dump()));
  ASSERT_EQ(back.trees.size(), m.trees.size());
  for (std::size_t i = 0; i < d.rows(); ++i) {
    EXPECT_EQ(back.predict(d.row(i)), m.predict(d.row(i)));
  }
  EXPECT_THROW(model_from_json(nlohmann::json{{"base_score", 0}}), invalid_input);
}
