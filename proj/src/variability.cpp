#include "busvar/variability.hpp"

#include <cmath>

#include <fmt/format.h>

#include "busvar/csv.hpp"
#include "busvar/parallel.hpp"

namespace busvar {

double spatial_distance(trip const& a, trip const& b) {
  auto const dx = a.origin.x - b.origin.x;
  auto const dy = a.origin.y - b.origin.y;
  auto const dx2 = a.destination.x - b.destination.x;
  auto const dy2 = a.destination.y - b.destination.y;
  return std::sqrt(dx * dx + dy * dy + dx2 * dx2 + dy2 * dy2);
}

double temporal_distance(trip const& a, trip const& b) {
  auto const ds = a.start_h() - b.start_h();
  auto const de = a.end_h() - b.end_h();
  return std::sqrt(ds * ds + de * de);
}

namespace {

// i < j only: the diagonal contributes nothing and the full double sum counts
// each pair twice, so this equals the halved double sum over C(n, 2).
template <typename Distance>
double mean_pairwise(std::span<trip const> trips, Distance&& dist) {
  auto const n = trips.size();
  if (n < 2) {
    throw invalid_input{
        fmt::format("variability needs at least 2 trips, got {}", n)};
  }
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      sum += dist(trips[i], trips[j]);
    }
  }
  return sum / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

}  // namespace

double spatial_variability(std::span<trip const> trips) {
  return mean_pairwise(trips, spatial_distance);
}

double temporal_variability(std::span<trip const> trips) {
  return mean_pairwise(trips, temporal_distance);
}

variability_record compute_record(period_trip_set const& set) {
  variability_record r;
  r.card_id = set.card_id;
  r.period = set.period;
  r.n_trips = static_cast<int>(set.trips.size());
  r.sv = spatial_variability(set.trips);
  r.tv = temporal_variability(set.trips);
  double dur = 0.0;
  for (auto const& t : set.trips) {
    dur += t.duration_h();
  }
  r.mean_duration = dur / r.n_trips;
  r.trip_frequency = r.n_trips;
  return r;
}

std::vector<variability_record> compute_records(
    std::span<period_trip_set const> sets, unsigned threads) {
  std::vector<variability_record> out(sets.size());
  parallel_for(sets.size(), threads,
               [&](std::size_t i) { out[i] = compute_record(sets[i]); });
  return out;
}

std::string format_records(std::span<variability_record const> records) {
  std::string out{kRecordHeader};
  out += '\n';
  for (auto const& r : records) {
    fmt::format_to(std::back_inserter(out), "{},{},{},{},{},{},{}\n", r.card_id,
                   to_string(r.period), r.n_trips, r.sv, r.tv, r.mean_duration,
                   r.trip_frequency);
  }
  return out;
}

std::vector<variability_record> parse_records(std::string_view text) {
  auto const t = csv::parse_table(text);
  auto const c_card = t.require_column("card_id");
  auto const c_period = t.require_column("period");
  auto const c_n = t.require_column("n_trips");
  auto const c_sv = t.require_column("sv_m");
  auto const c_tv = t.require_column("tv_h");
  auto const c_dur = t.require_column("avedur_h");
  auto const c_freq = t.require_column("tripfreq");
  std::vector<variability_record> out;
  out.reserve(t.rows.size());
  for (auto const& row : t.rows) {
    auto const n = csv::parse_int(row[c_n]);
    auto const sv = csv::parse_double(row[c_sv]);
    auto const tv = csv::parse_double(row[c_tv]);
    auto const dur = csv::parse_double(row[c_dur]);
    auto const freq = csv::parse_double(row[c_freq]);
    if (!n || !sv || !tv || !dur || !freq) {
      throw invalid_input{fmt::format("rider '{}': bad record", row[c_card])};
    }
    out.push_back({row[c_card], parse_period(row[c_period]),
                   static_cast<int>(*n), *sv, *tv, *dur, *freq});
  }
  return out;
}

}  // namespace busvar
