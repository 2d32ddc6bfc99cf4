#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "busvar/boosting.hpp"

namespace busvar {

// E[tree(x) | x_S] under the tree's training covers: splits on features in
// `active` follow the row, other splits average their children weighted by
// cover. `active[f]` flags membership of feature f. Throws config_error on a
// zero-cover internal node.
double tree_expected_value(regression_tree const& tree, std::span<double const> row,
                           std::vector<bool> const& active);

struct shap_row {
  std::vector<double> phi;
  double base{0.0};
};

// Path-dependent TreeSHAP summed over the ensemble. base is the model's
// expectation with no feature known, so base + sum(phi) == predict(row).
shap_row shap_values(boosted_model const& model, std::span<double const> row);

// Rows aligned with the dataset they were computed from.
struct shap_matrix {
  std::size_t n_features{0};
  double base{0.0};
  std::vector<double> phi;  // row-major, rows x n_features

  std::size_t rows() const { return n_features == 0 ? 0 : phi.size() / n_features; }
  double at(std::size_t row, std::size_t f) const { return phi[row * n_features + f]; }
};

shap_matrix compute_shap(boosted_model const& model, dataset const& data,
                         unsigned threads = 1);

// Mean |phi| shares in percent. Throws degenerate_input when every
// attribution is zero and invalid_input for an empty matrix.
std::vector<double> relative_importance(shap_matrix const& shap);

struct dependence_data {
  std::vector<std::pair<double, double>> points;  // (feature value, phi)
  std::size_t excluded_missing{0};
};

// Pairs for one feature over rows where it is present, ascending by value
// (row order among equal values).
dependence_data dependence(shap_matrix const& shap, dataset const& data,
                           std::size_t feature);

std::string format_dependence(dependence_data const& d);

// Minimal standalone SVG scatter of the dependence pairs.
std::string render_dependence_svg(dependence_data const& d, std::string const& title);

}  // namespace busvar
