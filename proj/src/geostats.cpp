#include "busvar/geostats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "busvar/parallel.hpp"

namespace busvar {

namespace {

// Fixed row-block count keeps the reduction order independent of threads.
constexpr std::size_t kRowBlocks = 64;

// Packing the upper triangle costs n(n-1)/2 doubles; beyond this the
// permutation loop recomputes distances instead.
constexpr std::size_t kMaxPackedLocations = 4000;

double inverse_distance(point const& a, point const& b) {
  auto const d = distance(a, b);
  if (d == 0.0) {
    throw invalid_input{fmt::format(
        "coincident locations at ({}, {}): inverse-distance weight undefined",
        a.x, a.y)};
  }
  return 1.0 / d;
}

struct cross_sums {
  double weighted{0.0};  // sum_{i != j} w_ij z_i z_j
  double s0{0.0};        // sum_{i != j} w_ij
};

cross_sums streaming_sums(std::vector<point> const& loc,
                          std::vector<double> const& z, unsigned threads) {
  auto const n = loc.size();
  auto const blocks = std::min(kRowBlocks, n);
  std::vector<cross_sums> partial(blocks);
  parallel_for(blocks, threads, [&](std::size_t b) {
    cross_sums s;
    for (auto i = n * b / blocks; i < n * (b + 1) / blocks; ++i) {
      double row = 0.0;
      double row_w = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) {
          continue;
        }
        auto const w = inverse_distance(loc[i], loc[j]);
        row += w * z[j];
        row_w += w;
      }
      s.weighted += z[i] * row;
      s.s0 += row_w;
    }
    partial[b] = s;
  });
  cross_sums total;
  for (auto const& p : partial) {
    total.weighted += p.weighted;
    total.s0 += p.s0;
  }
  return total;
}

double permuted_cross_sum(std::vector<double> const& packed,
                          std::vector<point> const& loc,
                          std::vector<double> const& z) {
  auto const n = z.size();
  double sum = 0.0;
  if (!packed.empty()) {
    std::size_t k = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      double row = 0.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        row += packed[k++] * z[j];
      }
      sum += z[i] * row;
    }
  } else {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      double row = 0.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        row += z[j] / distance(loc[i], loc[j]);
      }
      sum += z[i] * row;
    }
  }
  return 2.0 * sum;
}

}  // namespace

moran_result morans_i(spatial_field const& field, moran_options const& options) {
  auto const n = field.locations.size();
  if (field.values.size() != n) {
    throw invalid_input{"morans_i: locations and values differ in length"};
  }
  if (n < 3) {
    throw invalid_input{fmt::format("morans_i: need at least 3 locations, got {}", n)};
  }
  for (auto v : field.values) {
    if (!std::isfinite(v)) {
      throw invalid_input{"morans_i: non-finite value"};
    }
  }
  auto const [lo, hi] = std::minmax_element(field.values.begin(), field.values.end());
  if (*lo == *hi) {
    throw degenerate_input{"morans_i: zero-variance field"};
  }

  auto const mean =
      std::accumulate(field.values.begin(), field.values.end(), 0.0) / n;
  std::vector<double> z(n);
  double m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = field.values[i] - mean;
    m2 += z[i] * z[i];
  }

  auto const sums = streaming_sums(field.locations, z, options.threads);
  auto const scale = static_cast<double>(n) / sums.s0 / m2;

  moran_result r;
  r.n = n;
  r.statistic = scale * sums.weighted;
  r.expected = -1.0 / (static_cast<double>(n) - 1.0);
  r.permutations = std::max(0, options.permutations);
  if (r.permutations == 0) {
    return r;
  }

  std::vector<double> packed;
  if (n <= kMaxPackedLocations) {
    packed.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        packed.push_back(1.0 / distance(field.locations[i], field.locations[j]));
      }
    }
  }

  auto const perms = static_cast<std::size_t>(r.permutations);
  std::vector<double> simulated(perms);
  parallel_blocks(perms, options.threads,
                  [&](std::size_t begin, std::size_t end, std::size_t) {
                    auto zp = z;
                    for (auto k = begin; k < end; ++k) {
                      std::seed_seq seq{
                          static_cast<std::uint32_t>(options.seed),
                          static_cast<std::uint32_t>(options.seed >> 32U),
                          static_cast<std::uint32_t>(k)};
                      std::mt19937_64 rng{seq};
                      std::copy(z.begin(), z.end(), zp.begin());
                      std::shuffle(zp.begin(), zp.end(), rng);
                      simulated[k] =
                          scale * permuted_cross_sum(packed, field.locations, zp);
                    }
                  });

  auto const above = static_cast<std::size_t>(
      std::count_if(simulated.begin(), simulated.end(),
                    [&](double s) { return s >= r.statistic; }));
  auto const extreme = std::min(above, perms - above);
  r.p_value = (static_cast<double>(extreme) + 1.0) / (static_cast<double>(perms) + 1.0);
  return r;
}

}  // namespace busvar
