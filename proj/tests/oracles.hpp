#pragma once
// Slow, obviously-correct reference implementations used by the tests.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "busvar/boosting.hpp"
#include "busvar/explain.hpp"
#include "busvar/ingest.hpp"

namespace oracle {

// Mean over every ordered pair i != j, halved back to unordered pairs by
// symmetry. Deliberately not the i<j loop the library uses.
inline double sv(std::span<busvar::trip const> t) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (i == j) continue;
      double const v[4] = {t[i].origin.x - t[j].origin.x, t[i].origin.y - t[j].origin.y,
                           t[i].destination.x - t[j].destination.x,
                           t[i].destination.y - t[j].destination.y};
      s += std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
    }
  }
  auto const n = static_cast<double>(t.size());
  return s / (n * (n - 1));
}

inline double tv(std::span<busvar::trip const> t) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (i == j) continue;
      auto const a = (t[i].start_s - t[j].start_s) / 3600.0;
      auto const b = (t[i].end_s - t[j].end_s) / 3600.0;
      s += std::sqrt(a * a + b * b);
    }
  }
  auto const n = static_cast<double>(t.size());
  return s / (n * (n - 1));
}

// Dense weight matrix, textbook formula.
inline double morans_i(std::vector<busvar::point> const& loc, std::vector<double> const& v) {
  auto const n = loc.size();
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  double s0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) {
        w[i][j] = 1.0 / std::hypot(loc[i].x - loc[j].x, loc[i].y - loc[j].y);
        s0 += w[i][j];
      }
    }
  }
  double mean = 0.0;
  for (auto x : v) mean += x;
  mean /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    den += (v[i] - mean) * (v[i] - mean);
    for (std::size_t j = 0; j < n; ++j) {
      num += w[i][j] * (v[i] - mean) * (v[j] - mean);
    }
  }
  return static_cast<double>(n) / s0 * num / den;
}

struct split {
  double gain{0.0};
  int feature{-1};
  double threshold{0.0};
};

// Root split by trying every (feature, threshold, missing side) and
// recomputing sums from scratch each time. Residuals are taken against the
// target mean, as in the first boosting round.
inline split best_root_split(busvar::dataset const& d, double lambda, double gamma) {
  auto const n = d.rows();
  double mean = 0.0;
  for (auto y : d.targets()) mean += y;
  mean /= static_cast<double>(n);
  split best;
  for (std::size_t f = 0; f < d.n_features(); ++f) {
    std::vector<double> xs;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isnan(d.value(i, f))) xs.push_back(d.value(i, f));
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
      auto const thr = (xs[k] + xs[k + 1]) / 2.0;
      for (bool miss_left : {true, false}) {
        double gl = 0, hl = 0, gr = 0, hr = 0;
        for (std::size_t i = 0; i < n; ++i) {
          auto const x = d.value(i, f);
          auto const g = mean - d.targets()[i];
          bool const left = std::isnan(x) ? miss_left : x < thr;
          (left ? gl : gr) += g;
          (left ? hl : hr) += 1.0;
        }
        auto const gain =
            0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                   (gl + gr) * (gl + gr) / (hl + hr + lambda)) -
            gamma;
        if (gain > best.gain) best = {gain, static_cast<int>(f), thr};
      }
    }
  }
  return best;
}

// Exact Shapley values of v(S) = sum over trees of E[tree | x_S] by
// enumerating all 2^M coalitions.
inline std::vector<double> shapley(busvar::boosted_model const& m,
                                   std::span<double const> row) {
  auto const M = m.n_features;
  auto const value = [&](std::uint32_t mask) {
    std::vector<bool> active(M);
    for (std::size_t f = 0; f < M; ++f) active[f] = (mask >> f) & 1U;
    double s = 0.0;
    for (auto const& t : m.trees) s += busvar::tree_expected_value(t, row, active);
    return s;
  };
  std::vector<double> fact(M + 1, 1.0);
  for (std::size_t i = 1; i <= M; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
  std::vector<double> v(std::size_t{1} << M);
  for (std::uint32_t mask = 0; mask < v.size(); ++mask) v[mask] = value(mask);
  std::vector<double> phi(M, 0.0);
  for (std::size_t f = 0; f < M; ++f) {
    for (std::uint32_t mask = 0; mask < v.size(); ++mask) {
      if ((mask >> f) & 1U) continue;
      auto const s = static_cast<std::size_t>(std::popcount(mask));
      auto const w = fact[s] * fact[M - s - 1] / fact[M];
      phi[f] += w * (v[mask | (1U << f)] - v[mask]);
    }
  }
  return phi;
}

// Random trip with coordinates in a 20 km square and a peak-ish start.
inline busvar::trip random_trip(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> xy{0.0, 20000.0};
  std::uniform_int_distribution<int> start{7 * 3600, 9 * 3600 - 1};
  std::uniform_int_distribution<int> dur{60, 3 * 3600};
  busvar::trip t;
  t.card_id = "C";
  t.service_date = "2016-06-01";
  t.origin = {xy(rng), xy(rng)};
  t.destination = {xy(rng), xy(rng)};
  t.start_s = start(rng);
  t.end_s = t.start_s + dur(rng);
  return t;
}

// Spearman rank correlation, average ranks for ties.
inline double spearman(std::vector<double> const& a, std::vector<double> const& b) {
  auto const ranks = [](std::vector<double> const& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      auto j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (auto k = i; k <= j; ++k) r[idx[k]] = (static_cast<double>(i + j) / 2.0) + 1.0;
      i = j + 1;
    }
    return r;
  };
  auto const ra = ranks(a);
  auto const rb = ranks(b);
  auto const n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) { ma += ra[i]; mb += rb[i]; }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace oracle
