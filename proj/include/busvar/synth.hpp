#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "busvar/common.hpp"
#include "busvar/features.hpp"
#include "busvar/fusion.hpp"
#include "busvar/ingest.hpp"

namespace busvar {

// Planted rider-level relationships.
//   SV* = sv_base + sv_curvature * (f - sv_vertex)^2   (f: home-cell trip
//                                                        frequency level)
//   TV* = max(tv_floor, tv_intercept - tv_slope * d)   (d: home-cell distance
//                                                        to nearest subcentre,
//                                                        km)
// Each rider's target is multiplied by exp(N(0, rider_noise)).
struct planted_effects {
  double sv_base{800.0};
  double sv_curvature{120.0};
  double sv_vertex{8.0};
  double tv_intercept{0.8};
  double tv_slope{0.07};
  double tv_floor{0.1};
  double rider_noise{0.1};

  double sv(double trip_frequency) const {
    auto const d = trip_frequency - sv_vertex;
    return sv_base + sv_curvature * d * d;
  }
  double tv(double subcentre_km) const {
    return std::max(tv_floor, tv_intercept - tv_slope * subcentre_km);
  }
};

struct fault_injection {
  double malformed_share{0.0};     // extra unparseable rows per valid row
  double bad_duration_share{0.0};  // extra sub-minute / over-3-hour legs
};

// One synthetic rider. Morning trips run home -> work, evening trips
// work -> home. Each trip endpoint stays on its anchor stop with probability
// anchor_share, otherwise it moves to a point uniform on a disc of the given
// radius around the anchor (snapped to the nearest stop, or given its own stop
// when exact_jitter_stops is set). Start times are base + U(-spread, spread);
// in-vehicle time depends only on the home-work anchor distance, so TV is set
// by the spread alone.
struct rider_plan {
  std::string card_id;
  point home;
  point work;
  int morning_trips{0};
  int evening_trips{0};
  double home_jitter_m{0.0};
  double work_jitter_m{0.0};
  double anchor_share{0.5};
  double time_spread_h{0.0};
  int morning_base_s{8 * 3600};
  int evening_base_s{18 * 3600};

  // Ground truth (informational for explicit plans).
  double sv_target{0.0};
  double tv_target{0.0};
  double freq_level{0.0};
  double subcentre_km{0.0};
  cell_id home_cell;
};

struct synth_config {
  std::uint64_t seed{1};
  int n_riders{2000};
  point extent_min{0.0, 0.0};
  point extent_max{16000.0, 16000.0};
  double cell_size{kDefaultCellSizeM};
  int n_stops{4000};
  int n_routes{120};
  int n_centres{2};
  int n_subcentres{8};
  int residential_cells{160};
  int employment_cells{120};
  double work_radius_m{2500.0};
  double freq_min{4.5};
  double freq_max{12.0};
  std::optional<int> fixed_trip_count;
  int study_days{30};
  double anchor_share{0.5};
  double transfer_share{0.3};
  double speed_kmh{20.0};
  bool exact_jitter_stops{false};
  planted_effects effects;
  fault_injection faults;

  // When non-empty these riders replace the planted population.
  std::vector<rider_plan> explicit_riders;

  void validate() const;  // throws config_error
};

struct synth_city {
  grid_spec grid;
  stop_registry stops;
  std::vector<transaction> transactions;
  std::vector<std::string> fault_rows;  // raw text rows, interleaved on output
  centre_set centres;
  raw_cell_table cells;
  std::vector<rider_plan> riders;
  nlohmann::json ground_truth;
};

// Deterministic in the config: same config, byte-identical files.
synth_city generate_city(synth_config const& config);

std::string format_transactions(std::vector<transaction> const& rows,
                                std::vector<std::string> const& fault_rows = {});
std::string format_stops(stop_registry const& stops);
std::string format_centres(centre_set const& centres);
std::string format_cell_inputs(raw_cell_table const& cells);

struct synth_paths {
  std::filesystem::path transactions;
  std::filesystem::path stops;
  std::filesystem::path centres;
  std::filesystem::path cells;
  std::filesystem::path ground_truth;
};

// Writes transactions.csv, stops.csv, centres.csv, cells.csv and
// ground_truth.json under `dir`.
synth_paths write_city(synth_city const& city, std::filesystem::path const& dir);

}  // namespace busvar
