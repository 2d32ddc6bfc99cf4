#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "busvar/common.hpp"

namespace busvar {

// Dense row-major feature matrix with NaN as the missing marker.
class dataset {
public:
  explicit dataset(std::size_t n_features = 0) : n_features_{n_features} {}

  void add_row(std::span<double const> features, double target);

  std::size_t rows() const { return y_.size(); }
  std::size_t n_features() const { return n_features_; }
  std::span<double const> row(std::size_t i) const {
    return {x_.data() + i * n_features_, n_features_};
  }
  double value(std::size_t i, std::size_t f) const { return x_[i * n_features_ + f]; }
  std::span<double const> targets() const { return y_; }

private:
  std::size_t n_features_;
  std::vector<double> x_;
  std::vector<double> y_;
};

struct boost_params {
  int n_trees{200};
  int max_depth{4};
  double learning_rate{0.1};
  double l2_reg{1.0};
  double min_split_gain{0.0};
  double subsample{1.0};
  std::uint64_t seed{0};

  void validate() const;  // throws config_error
};

// Rows with x < threshold go left, x >= threshold right, missing follows
// default_left. `cover` is the hessian sum (training rows) seen at the node.
struct tree_node {
  int feature{-1};
  double threshold{0.0};
  bool default_left{true};
  int left{-1};
  int right{-1};
  double value{0.0};  // leaf weight, learning rate already applied
  double cover{0.0};

  bool is_leaf() const { return feature < 0; }
};

class regression_tree {
public:
  std::vector<tree_node> nodes;  // nodes[0] is the root

  // Child index taken by `row` at internal node `node`.
  int next(int node, std::span<double const> row) const {
    auto const& n = nodes[static_cast<std::size_t>(node)];
    auto const x = row[static_cast<std::size_t>(n.feature)];
    if (std::isnan(x)) {
      return n.default_left ? n.left : n.right;
    }
    return x < n.threshold ? n.left : n.right;
  }

  double predict(std::span<double const> row) const;
  int max_depth() const;
  std::size_t leaf_count() const;
};

struct boosted_model {
  double base_score{0.0};
  std::size_t n_features{0};
  std::vector<regression_tree> trees;

  double predict(std::span<double const> row) const;
};

// Second-order split score:
// 1/2 [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma.
double split_gain(double g_left, double h_left, double g_right, double h_right,
                  double lambda, double gamma);

struct fit_report {
  // Mean squared training error; [0] is the base-score model, [k] after
  // k trees.
  std::vector<double> training_mse;
};

// Squared-error gradient boosting with exact greedy split search over
// midpoints of sorted distinct values. Equal-gain candidates resolve to the
// lowest feature index, then the smallest threshold, then missing-left.
// Boosting stops early when the root cannot be split (full-sample rounds).
boosted_model fit(dataset const& data, boost_params const& params,
                  fit_report* report = nullptr);

nlohmann::json to_json(boosted_model const& model);
boosted_model model_from_json(nlohmann::json const& j);

}  // namespace busvar
