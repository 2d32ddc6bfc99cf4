#include "busvar/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "busvar/parallel.hpp"

namespace busvar {

namespace {

double cover_of(regression_tree const& t, int node) {
  return t.nodes[static_cast<std::size_t>(node)].cover;
}

double expected_value(regression_tree const& tree, std::span<double const> row,
                      std::vector<bool> const& active, int node) {
  auto const& n = tree.nodes[static_cast<std::size_t>(node)];
  if (n.is_leaf()) {
    return n.value;
  }
  if (active[static_cast<std::size_t>(n.feature)]) {
    return expected_value(tree, row, active, tree.next(node, row));
  }
  if (!(n.cover > 0.0)) {
    throw config_error{fmt::format("tree node {} has zero cover", node)};
  }
  return (cover_of(tree, n.left) * expected_value(tree, row, active, n.left) +
          cover_of(tree, n.right) * expected_value(tree, row, active, n.right)) /
         n.cover;
}

// One element of the unique-feature path. pweight is the permutation weight
// of subsets of size equal to the element's position.
struct path_element {
  int feature{-1};
  double zero_fraction{0.0};
  double one_fraction{0.0};
  double pweight{0.0};
};

using path = std::vector<path_element>;

void extend_path(path& m, double zero_fraction, double one_fraction, int feature) {
  auto const d = m.size();
  m.push_back({feature, zero_fraction, one_fraction, d == 0 ? 1.0 : 0.0});
  auto const dd = static_cast<double>(d + 1);
  for (auto i = static_cast<std::ptrdiff_t>(d) - 1; i >= 0; --i) {
    auto const iu = static_cast<std::size_t>(i);
    m[iu + 1].pweight += one_fraction * m[iu].pweight * static_cast<double>(i + 1) / dd;
    m[iu].pweight =
        zero_fraction * m[iu].pweight * static_cast<double>(static_cast<std::ptrdiff_t>(d) - i) / dd;
  }
}

void unwind_path(path& m, std::size_t index) {
  auto const d = m.size() - 1;
  auto const one = m[index].one_fraction;
  auto const zero = m[index].zero_fraction;
  auto next_one = m[d].pweight;
  auto const dd = static_cast<double>(d + 1);
  for (auto i = static_cast<std::ptrdiff_t>(d) - 1; i >= 0; --i) {
    auto const iu = static_cast<std::size_t>(i);
    auto const rest = static_cast<double>(static_cast<std::ptrdiff_t>(d) - i);
    if (one != 0.0) {
      auto const tmp = m[iu].pweight;
      m[iu].pweight = next_one * dd / (static_cast<double>(i + 1) * one);
      next_one = tmp - m[iu].pweight * zero * rest / dd;
    } else {
      m[iu].pweight = m[iu].pweight * dd / (zero * rest);
    }
  }
  for (auto i = index; i < d; ++i) {
    m[i].feature = m[i + 1].feature;
    m[i].zero_fraction = m[i + 1].zero_fraction;
    m[i].one_fraction = m[i + 1].one_fraction;
  }
  m.pop_back();
}

// Total permutation weight if element `index` were unwound.
double unwound_path_sum(path const& m, std::size_t index) {
  auto const d = m.size() - 1;
  auto const one = m[index].one_fraction;
  auto const zero = m[index].zero_fraction;
  auto next_one = m[d].pweight;
  auto const dd = static_cast<double>(d + 1);
  double total = 0.0;
  for (auto i = static_cast<std::ptrdiff_t>(d) - 1; i >= 0; --i) {
    auto const iu = static_cast<std::size_t>(i);
    auto const rest = static_cast<double>(static_cast<std::ptrdiff_t>(d) - i);
    if (one != 0.0) {
      auto const tmp = next_one * dd / (static_cast<double>(i + 1) * one);
      total += tmp;
      next_one = m[iu].pweight - tmp * zero * (rest / dd);
    } else if (zero != 0.0) {
      total += (m[iu].pweight / zero) / (rest / dd);
    }
  }
  return total;
}

void tree_shap(regression_tree const& tree, std::span<double const> row,
               std::span<double> phi, int node, path m, double zero_fraction,
               double one_fraction, int feature) {
  extend_path(m, zero_fraction, one_fraction, feature);
  auto const& n = tree.nodes[static_cast<std::size_t>(node)];

  if (n.is_leaf()) {
    for (std::size_t i = 1; i < m.size(); ++i) {
      auto const w = unwound_path_sum(m, i);
      auto const& e = m[i];
      phi[static_cast<std::size_t>(e.feature)] +=
          w * (e.one_fraction - e.zero_fraction) * n.value;
    }
    return;
  }

  if (!(n.cover > 0.0)) {
    throw config_error{fmt::format("tree node {} has zero cover", node)};
  }
  auto const hot = tree.next(node, row);
  auto const cold = hot == n.left ? n.right : n.left;

  double incoming_zero = 1.0;
  double incoming_one = 1.0;
  for (std::size_t k = 1; k < m.size(); ++k) {
    if (m[k].feature == n.feature) {
      incoming_zero = m[k].zero_fraction;
      incoming_one = m[k].one_fraction;
      unwind_path(m, k);
      break;
    }
  }

  tree_shap(tree, row, phi, hot, m, cover_of(tree, hot) / n.cover * incoming_zero,
            incoming_one, n.feature);
  tree_shap(tree, row, phi, cold, std::move(m),
            cover_of(tree, cold) / n.cover * incoming_zero, 0.0, n.feature);
}

}  // namespace

double tree_expected_value(regression_tree const& tree, std::span<double const> row,
                           std::vector<bool> const& active) {
  return expected_value(tree, row, active, 0);
}

shap_row shap_values(boosted_model const& model, std::span<double const> row) {
  if (row.size() != model.n_features) {
    throw invalid_input{fmt::format("shap_values: row has {} features, model {}",
                                    row.size(), model.n_features)};
  }
  shap_row out{std::vector<double>(model.n_features, 0.0), model.base_score};
  std::vector<bool> const none(model.n_features, false);
  path scratch;
  for (auto const& t : model.trees) {
    out.base += tree_expected_value(t, row, none);
    scratch.clear();
    tree_shap(t, row, out.phi, 0, scratch, 1.0, 1.0, -1);
  }
  return out;
}

shap_matrix compute_shap(boosted_model const& model, dataset const& data,
                         unsigned threads) {
  if (data.n_features() != model.n_features) {
    throw invalid_input{"compute_shap: dataset and model feature counts differ"};
  }
  shap_matrix m;
  m.n_features = model.n_features;
  m.phi.assign(data.rows() * model.n_features, 0.0);
  std::vector<bool> const none(model.n_features, false);
  std::vector<double> const blank(model.n_features, std::nan(""));
  m.base = model.base_score;
  for (auto const& t : model.trees) {
    m.base += tree_expected_value(t, blank, none);
  }
  parallel_for(data.rows(), threads, [&](std::size_t i) {
    auto const r = shap_values(model, data.row(i));
    std::copy(r.phi.begin(), r.phi.end(),
              m.phi.begin() + static_cast<std::ptrdiff_t>(i * m.n_features));
  });
  return m;
}

std::vector<double> relative_importance(shap_matrix const& shap) {
  auto const rows = shap.rows();
  if (rows == 0) {
    throw invalid_input{"relative_importance: empty SHAP matrix"};
  }
  std::vector<double> mean_abs(shap.n_features, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t f = 0; f < shap.n_features; ++f) {
      mean_abs[f] += std::abs(shap.at(i, f));
    }
  }
  for (auto& v : mean_abs) {
    v /= static_cast<double>(rows);
  }
  auto const total = std::accumulate(mean_abs.begin(), mean_abs.end(), 0.0);
  if (!(total > 0.0)) {
    throw degenerate_input{"relative_importance: all SHAP values are zero"};
  }
  for (auto& v : mean_abs) {
    v = v / total * 100.0;
  }
  return mean_abs;
}

dependence_data dependence(shap_matrix const& shap, dataset const& data,
                           std::size_t feature) {
  if (feature >= shap.n_features || feature >= data.n_features()) {
    throw invalid_input{fmt::format("dependence: feature index {} out of range", feature)};
  }
  if (shap.rows() != data.rows()) {
    throw invalid_input{"dependence: SHAP matrix and dataset differ in rows"};
  }
  dependence_data d;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto const x = data.value(i, feature);
    if (std::isnan(x)) {
      ++d.excluded_missing;
      continue;
    }
    d.points.emplace_back(x, shap.at(i, feature));
  }
  std::stable_sort(d.points.begin(), d.points.end(),
                   [](auto const& a, auto const& b) { return a.first < b.first; });
  return d;
}

std::string format_dependence(dependence_data const& d) {
  std::string out = "feature_value,shap_value\n";
  for (auto const& [x, phi] : d.points) {
    fmt::format_to(std::back_inserter(out), "{},{}\n", x, phi);
  }
  return out;
}

std::string render_dependence_svg(dependence_data const& d, std::string const& title) {
  constexpr double kW = 480;
  constexpr double kH = 320;
  constexpr double kPad = 40;
  double x0 = 0, x1 = 1, y0 = -1, y1 = 1;
  if (!d.points.empty()) {
    x0 = d.points.front().first;
    x1 = d.points.back().first;
    auto const [lo, hi] = std::minmax_element(
        d.points.begin(), d.points.end(),
        [](auto const& a, auto const& b) { return a.second < b.second; });
    y0 = std::min(lo->second, 0.0);
    y1 = std::max(hi->second, 0.0);
  }
  if (x1 == x0) {
    x1 = x0 + 1;
  }
  if (y1 == y0) {
    y1 = y0 + 1;
  }
  auto const sx = [&](double x) { return kPad + (x - x0) / (x1 - x0) * (kW - 2 * kPad); };
  auto const sy = [&](double y) { return kH - kPad - (y - y0) / (y1 - y0) * (kH - 2 * kPad); };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\">\n"
      "<text x=\"{}\" y=\"20\" font-size=\"14\">{}</text>\n"
      "<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"#999\"/>\n",
      kW, kH, kPad, title, kPad, sy(0.0), kW - kPad, sy(0.0));
  for (auto const& [x, phi] : d.points) {
    fmt::format_to(std::back_inserter(out),
                   "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2\" fill=\"{}\"/>\n",
                   sx(x), sy(phi), phi >= 0 ? "#d62728" : "#1f77b4");
  }
  out += "</svg>\n";
  return out;
}

}  // namespace busvar
