#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "busvar/common.hpp"

namespace busvar {

struct spatial_field {
  std::vector<point> locations;
  std::vector<double> values;
};

struct moran_options {
  int permutations{0};  // 0 disables the significance test
  std::uint64_t seed{0};
  unsigned threads{1};
};

inline constexpr int kDefaultPermutations = 999;

struct moran_result {
  double statistic{0.0};
  double expected{0.0};  // -1 / (n - 1) under randomisation
  std::optional<double> p_value;
  int permutations{0};
  std::size_t n{0};
};

// Global Moran's I with inverse-distance weights w_ij = 1 / d_ij (i != j), no
// cutoff and no row standardisation. The observed statistic is accumulated
// row by row without materialising the weight matrix.
//
// The p-value is the folded pseudo p-value of a conditional permutation test:
// with k the number of permuted statistics at least as extreme as observed on
// the observed side of the permutation distribution,
// p = (min(k_above, k_below) + 1) / (permutations + 1).
//
// Throws invalid_input for fewer than 3 locations, mismatched sizes,
// non-finite values or coincident locations, and degenerate_input for a
// zero-variance field.
moran_result morans_i(spatial_field const& field, moran_options const& options = {});

}  // namespace busvar
