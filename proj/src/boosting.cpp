#include "busvar/boosting.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <fmt/format.h>

namespace busvar {

void dataset::add_row(std::span<double const> features, double target) {
  if (features.size() != n_features_) {
    throw invalid_input{fmt::format("dataset: row has {} features, expected {}",
                                    features.size(), n_features_)};
  }
  if (!std::isfinite(target)) {
    throw invalid_input{"dataset: non-finite target"};
  }
  x_.insert(x_.end(), features.begin(), features.end());
  y_.push_back(target);
}

void boost_params::validate() const {
  if (n_trees < 0) {
    throw config_error{"n_trees must be >= 0"};
  }
  if (max_depth < 0) {
    throw config_error{"max_depth must be >= 0"};
  }
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw config_error{fmt::format("learning_rate must be in (0, 1], got {}",
                                   learning_rate)};
  }
  if (!(l2_reg >= 0.0)) {
    throw config_error{"l2_reg must be >= 0"};
  }
  if (!(min_split_gain >= 0.0)) {
    throw config_error{"min_split_gain must be >= 0"};
  }
  if (!(subsample > 0.0 && subsample <= 1.0)) {
    throw config_error{fmt::format("subsample must be in (0, 1], got {}", subsample)};
  }
}

double regression_tree::predict(std::span<double const> row) const {
  int node = 0;
  while (!nodes[static_cast<std::size_t>(node)].is_leaf()) {
    node = next(node, row);
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

int regression_tree::max_depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto const& n = nodes[i];
    best = std::max(best, depth[i]);
    if (!n.is_leaf()) {
      depth[static_cast<std::size_t>(n.left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(n.right)] = depth[i] + 1;
    }
  }
  return best;
}

std::size_t regression_tree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](auto const& n) { return n.is_leaf(); }));
}

double boosted_model::predict(std::span<double const> row) const {
  auto y = base_score;
  for (auto const& t : trees) {
    y += t.predict(row);
  }
  return y;
}

double split_gain(double g_left, double h_left, double g_right, double h_right,
                  double lambda, double gamma) {
  auto const g = g_left + g_right;
  auto const h = h_left + h_right;
  return 0.5 * (g_left * g_left / (h_left + lambda) +
                g_right * g_right / (h_right + lambda) - g * g / (h + lambda)) -
         gamma;
}

namespace {

struct split_candidate {
  double gain{0.0};
  int feature{-1};
  double threshold{0.0};
  bool default_left{true};
};

class tree_builder {
public:
  tree_builder(dataset const& data, std::vector<double> const& grad,
               boost_params const& params)
      : data_{data}, grad_{grad}, params_{params} {}

  regression_tree build(std::vector<std::uint32_t> rows) {
    tree_.nodes.clear();
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

private:
  int grow(std::vector<std::uint32_t> rows, int depth) {
    auto const id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double g = 0.0;
    for (auto r : rows) {
      g += grad_[r];
    }
    auto const h = static_cast<double>(rows.size());
    tree_.nodes.back().cover = h;

    auto const split = depth < params_.max_depth && rows.size() >= 2
                           ? best_split(rows, g, h)
                           : split_candidate{};
    if (split.feature < 0) {
      tree_.nodes[static_cast<std::size_t>(id)].value =
          -params_.learning_rate * g / (h + params_.l2_reg);
      return id;
    }

    std::vector<std::uint32_t> left;
    std::vector<std::uint32_t> right;
    for (auto r : rows) {
      auto const x = data_.value(r, static_cast<std::size_t>(split.feature));
      auto const go_left =
          std::isnan(x) ? split.default_left : x < split.threshold;
      (go_left ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    auto const l = grow(std::move(left), depth + 1);
    auto const r = grow(std::move(right), depth + 1);
    auto& n = tree_.nodes[static_cast<std::size_t>(id)];
    n.feature = split.feature;
    n.threshold = split.threshold;
    n.default_left = split.default_left;
    n.left = l;
    n.right = r;
    return id;
  }

  split_candidate best_split(std::vector<std::uint32_t> const& rows, double g_total,
                             double h_total) const {
    split_candidate best;
    auto const lambda = params_.l2_reg;
    auto const gamma = params_.min_split_gain;
    std::vector<std::pair<double, double>> values;  // (x, g)
    values.reserve(rows.size());
    for (std::size_t f = 0; f < data_.n_features(); ++f) {
      values.clear();
      double g_miss = 0.0;
      for (auto r : rows) {
        auto const x = data_.value(r, f);
        if (std::isnan(x)) {
          g_miss += grad_[r];
        } else {
          values.emplace_back(x, grad_[r]);
        }
      }
      auto const h_miss = h_total - static_cast<double>(values.size());
      if (values.size() < 2) {
        continue;
      }
      std::sort(values.begin(), values.end(),
                [](auto const& a, auto const& b) { return a.first < b.first; });
      auto const g_present = g_total - g_miss;
      double g_left = 0.0;
      for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        g_left += values[i].second;
        auto const lo = values[i].first;
        auto const hi = values[i + 1].first;
        if (lo == hi) {
          continue;
        }
        auto threshold = lo + (hi - lo) / 2.0;
        if (!(threshold > lo)) {
          threshold = hi;
        }
        auto const h_left = static_cast<double>(i + 1);
        auto const g_right = g_present - g_left;
        auto const h_right = static_cast<double>(values.size()) - h_left;

        auto const gain_ml = split_gain(g_left + g_miss, h_left + h_miss, g_right,
                                        h_right, lambda, gamma);
        auto const gain_mr = split_gain(g_left, h_left, g_right + g_miss,
                                        h_right + h_miss, lambda, gamma);
        auto const missing_left = gain_ml >= gain_mr;
        auto const gain = missing_left ? gain_ml : gain_mr;
        if (gain > best.gain) {
          best = {gain, static_cast<int>(f), threshold, missing_left};
        }
      }
    }
    return best;
  }

  dataset const& data_;
  std::vector<double> const& grad_;
  boost_params const& params_;
  regression_tree tree_;
};

double mse(std::span<double const> pred, std::span<double const> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto const d = pred[i] - y[i];
    s += d * d;
  }
  return s / static_cast<double>(y.size());
}

}  // namespace

boosted_model fit(dataset const& data, boost_params const& params,
                  fit_report* report) {
  params.validate();
  auto const n = data.rows();
  if (n == 0) {
    throw invalid_input{"fit: empty dataset"};
  }
  auto const y = data.targets();

  boosted_model model;
  model.n_features = data.n_features();
  model.base_score = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  std::vector<double> pred(n, model.base_score);
  std::vector<double> grad(n);
  if (report != nullptr) {
    report->training_mse.assign(1, mse(pred, y));
  }

  std::vector<std::uint32_t> all(n);
  std::iota(all.begin(), all.end(), 0U);
  auto const sample_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(params.subsample * static_cast<double>(n))));
  auto const full_sample = sample_size >= n;

  tree_builder builder{data, grad, params};
  for (int round = 0; round < params.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] = pred[i] - y[i];
    }
    auto rows = all;
    if (!full_sample) {
      std::seed_seq seq{static_cast<std::uint32_t>(params.seed),
                        static_cast<std::uint32_t>(params.seed >> 32U),
                        static_cast<std::uint32_t>(round)};
      std::mt19937_64 rng{seq};
      std::shuffle(rows.begin(), rows.end(), rng);
      rows.resize(sample_size);
      std::sort(rows.begin(), rows.end());
    }
    auto tree = builder.build(std::move(rows));
    if (tree.nodes.size() == 1) {
      if (full_sample) {
        break;  // nothing left to split on
      }
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] += tree.predict(data.row(i));
    }
    model.trees.push_back(std::move(tree));
    if (report != nullptr) {
      report->training_mse.push_back(mse(pred, y));
    }
  }
  return model;
}

namespace {

nlohmann::json node_to_json(regression_tree const& t, int id) {
  auto const& n = t.nodes[static_cast<std::size_t>(id)];
  if (n.is_leaf()) {
    return {{"cover", n.cover}, {"leaf", n.value}};
  }
  return {{"cover", n.cover},
          {"feature", n.feature},
          {"threshold", n.threshold},
          {"default_left", n.default_left},
          {"left", node_to_json(t, n.left)},
          {"right", node_to_json(t, n.right)}};
}

int node_from_json(nlohmann::json const& j, regression_tree& t,
                   std::size_t n_features) {
  auto const id = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  tree_node n;
  n.cover = j.at("cover").get<double>();
  if (j.contains("leaf")) {
    n.value = j.at("leaf").get<double>();
    if (!std::isfinite(n.value)) {
      throw invalid_input{"model: non-finite leaf weight"};
    }
  } else {
    n.feature = j.at("feature").get<int>();
    if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= n_features) {
      throw invalid_input{fmt::format("model: feature index {} out of range", n.feature)};
    }
    n.threshold = j.at("threshold").get<double>();
    n.default_left = j.at("default_left").get<bool>();
    n.left = node_from_json(j.at("left"), t, n_features);
    n.right = node_from_json(j.at("right"), t, n_features);
  }
  t.nodes[static_cast<std::size_t>(id)] = n;
  return id;
}

}  // namespace

nlohmann::json to_json(boosted_model const& model) {
  auto trees = nlohmann::json::array();
  for (auto const& t : model.trees) {
    trees.push_back(node_to_json(t, 0));
  }
  return {{"format", "busvar-gbt/1"},
          {"base_score", model.base_score},
          {"n_features", model.n_features},
          {"trees", std::move(trees)}};
}

boosted_model model_from_json(nlohmann::json const& j) {
  try {
    boosted_model m;
    m.base_score = j.at("base_score").get<double>();
    m.n_features = j.at("n_features").get<std::size_t>();
    for (auto const& tj : j.at("trees")) {
      regression_tree t;
      node_from_json(tj, t, m.n_features);
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (nlohmann::json::exception const& e) {
    throw invalid_input{fmt::format("model: {}", e.what())};
  }
}

}  // namespace busvar
