#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "busvar/common.hpp"
#include "busvar/ingest.hpp"

namespace busvar {

// Euclidean distance between the (origin, destination) coordinate 4-vectors
// of two trips, metres.
double spatial_distance(trip const& a, trip const& b);

// Euclidean distance between the (start, end) time 2-vectors, hours.
double temporal_distance(trip const& a, trip const& b);

// Mean spatial distance over all unordered trip pairs. Throws invalid_input
// for fewer than two trips.
double spatial_variability(std::span<trip const> trips);

// Mean temporal distance over all unordered trip pairs.
double temporal_variability(std::span<trip const> trips);

struct variability_record {
  std::string card_id;
  peak_period period{peak_period::morning};
  int n_trips{0};
  double sv{0.0};             // metres
  double tv{0.0};             // hours
  double mean_duration{0.0};  // hours
  double trip_frequency{0.0};  // period trips over the whole input span
};

variability_record compute_record(period_trip_set const& set);

// Records aligned with `sets`.
std::vector<variability_record> compute_records(
    std::span<period_trip_set const> sets, unsigned threads = 1);

inline constexpr std::string_view kRecordHeader =
    "card_id,period,n_trips,sv_m,tv_h,avedur_h,tripfreq";

std::string format_records(std::span<variability_record const> records);
std::vector<variability_record> parse_records(std::string_view text);

}  // namespace busvar
