#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "busvar/common.hpp"
#include "busvar/ingest.hpp"
#include "busvar/variability.hpp"

namespace busvar {

struct cell_id {
  int col{0};
  int row{0};

  // Row-major order.
  friend auto operator<=>(cell_id const& a, cell_id const& b) {
    if (auto c = a.row <=> b.row; c != 0) {
      return c;
    }
    return a.col <=> b.col;
  }
  friend bool operator==(cell_id const&, cell_id const&) = default;
};

inline constexpr double kDefaultCellSizeM = 500.0;

// Square-cell grid. Cells are half-open [low, high) except along the top and
// right study boundary, which closes into the last column/row.
struct grid_spec {
  point origin;
  double cell_size{kDefaultCellSizeM};
  int n_cols{0};
  int n_rows{0};

  // Smallest grid anchored at `min` that covers [min, max].
  static grid_spec covering(point min, point max,
                            double cell_size = kDefaultCellSizeM);

  void validate() const;  // throws config_error
  bool contains(cell_id c) const {
    return c.col >= 0 && c.col < n_cols && c.row >= 0 && c.row < n_rows;
  }
  point centroid(cell_id c) const {
    return {origin.x + (c.col + 0.5) * cell_size,
            origin.y + (c.row + 0.5) * cell_size};
  }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(n_cols) * static_cast<std::size_t>(n_rows);
  }
};

// Cell of `p`, or nullopt outside the grid extent.
std::optional<cell_id> assign_grid(point p, grid_spec const& grid);

// Coordinates of the rider's most frequent boarding (origin) or alighting
// (destination) stop; exact ties resolve to the centroid of the tied stops.
// Stops are identified by id.
point major_anchor(period_trip_set const& set, anchor_role role);

// One rider's contribution to one cell under one role.
struct cell_record {
  cell_id cell;
  anchor_role role{anchor_role::origin};
  peak_period period{peak_period::morning};
  variability_record rider;
};

struct grid_aggregate {
  cell_id cell;
  anchor_role role{anchor_role::origin};
  peak_period period{peak_period::morning};
  double mean_sv{0.0};
  double mean_tv{0.0};
  double mean_tripfreq{0.0};
  double mean_avedur{0.0};
  int n_individuals{0};
};

inline constexpr int kDefaultMinIndividuals = 10;

struct aggregation_stats {
  std::size_t groups{0};
  std::size_t groups_dropped{0};
  std::size_t individuals_dropped{0};
};

// Group-by (period, role, cell) means; groups with fewer than
// `min_individuals` riders are dropped. Output ordered by
// (period, role, cell).
std::vector<grid_aggregate> aggregate_grid(
    std::span<cell_record const> records,
    int min_individuals = kDefaultMinIndividuals,
    aggregation_stats* stats = nullptr);

struct anchoring_stats {
  std::size_t individuals{0};
  std::size_t outside_extent{0};
};

// Origin and destination cell records for each rider; `sets` and `records`
// must be aligned. A rider with either anchor outside the grid is excluded
// from both roles and counted.
std::vector<cell_record> anchor_records(
    std::span<period_trip_set const> sets,
    std::span<variability_record const> records, grid_spec const& grid,
    anchoring_stats* stats = nullptr);

inline constexpr std::string_view kAggregateHeader =
    "col,row,role,period,mean_sv,mean_tv,mean_tripfreq,mean_avedur,n_"
    "individuals";

std::string format_aggregates(std::span<grid_aggregate const> aggregates);
std::vector<grid_aggregate> parse_aggregates(std::string_view text);

}  // namespace busvar
