#include "busvar/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include <fmt/format.h>

#include "busvar/csv.hpp"

namespace busvar {

grid_spec grid_spec::covering(point min, point max, double cell_size) {
  if (!(cell_size > 0.0) || !(max.x >= min.x) || !(max.y >= min.y)) {
    throw config_error{"grid: bad extent or cell size"};
  }
  grid_spec g{min, cell_size,
              std::max(1, static_cast<int>(std::ceil((max.x - min.x) / cell_size))),
              std::max(1, static_cast<int>(std::ceil((max.y - min.y) / cell_size)))};
  return g;
}

void grid_spec::validate() const {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw config_error{fmt::format("grid: cell_size must be > 0, got {}", cell_size)};
  }
  if (n_cols <= 0 || n_rows <= 0) {
    throw config_error{fmt::format("grid: need positive dimensions, got {}x{}",
                                   n_cols, n_rows)};
  }
  if (!std::isfinite(origin.x) || !std::isfinite(origin.y)) {
    throw config_error{"grid: non-finite origin"};
  }
}

std::optional<cell_id> assign_grid(point p, grid_spec const& grid) {
  auto const fx = (p.x - grid.origin.x) / grid.cell_size;
  auto const fy = (p.y - grid.origin.y) / grid.cell_size;
  if (!(fx >= 0.0) || !(fy >= 0.0) || fx > grid.n_cols || fy > grid.n_rows) {
    return std::nullopt;
  }
  cell_id c{static_cast<int>(std::floor(fx)), static_cast<int>(std::floor(fy))};
  c.col = std::min(c.col, grid.n_cols - 1);
  c.row = std::min(c.row, grid.n_rows - 1);
  return c;
}

point major_anchor(period_trip_set const& set, anchor_role role) {
  if (set.trips.empty()) {
    throw invalid_input{fmt::format("rider '{}': no trips", set.card_id)};
  }
  struct tally {
    int count{0};
    point where;
  };
  std::map<std::string_view, tally> counts;
  for (auto const& t : set.trips) {
    auto const o = role == anchor_role::origin;
    auto& e = counts[o ? t.origin_stop : t.destination_stop];
    ++e.count;
    e.where = o ? t.origin : t.destination;
  }
  auto const best =
      std::max_element(counts.begin(), counts.end(), [](auto const& a, auto const& b) {
        return a.second.count < b.second.count;
      })->second.count;
  // std::map iteration gives a fixed summation order over tied stops.
  point sum;
  int tied = 0;
  for (auto const& [id, e] : counts) {
    if (e.count == best) {
      sum.x += e.where.x;
      sum.y += e.where.y;
      ++tied;
    }
  }
  return {sum.x / tied, sum.y / tied};
}

std::vector<grid_aggregate> aggregate_grid(std::span<cell_record const> records,
                                           int min_individuals,
                                           aggregation_stats* stats) {
  struct acc {
    double sv{0}, tv{0}, freq{0}, dur{0};
    int n{0};
  };
  std::map<std::tuple<peak_period, anchor_role, cell_id>, acc> groups;
  for (auto const& r : records) {
    auto& a = groups[{r.period, r.role, r.cell}];
    a.sv += r.rider.sv;
    a.tv += r.rider.tv;
    a.freq += r.rider.trip_frequency;
    a.dur += r.rider.mean_duration;
    ++a.n;
  }
  aggregation_stats local;
  std::vector<grid_aggregate> out;
  for (auto const& [key, a] : groups) {
    ++local.groups;
    if (a.n < min_individuals) {
      ++local.groups_dropped;
      local.individuals_dropped += a.n;
      continue;
    }
    auto const [per, role, cell] = key;
    out.push_back({cell, role, per, a.sv / a.n, a.tv / a.n, a.freq / a.n,
                   a.dur / a.n, a.n});
  }
  if (stats != nullptr) {
    *stats = local;
  }
  return out;
}

std::vector<cell_record> anchor_records(std::span<period_trip_set const> sets,
                                        std::span<variability_record const> records,
                                        grid_spec const& grid,
                                        anchoring_stats* stats) {
  if (sets.size() != records.size()) {
    throw invalid_input{"anchor_records: sets and records are not aligned"};
  }
  anchoring_stats local;
  std::vector<cell_record> out;
  out.reserve(2 * sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    ++local.individuals;
    auto const o = assign_grid(major_anchor(sets[i], anchor_role::origin), grid);
    auto const d =
        assign_grid(major_anchor(sets[i], anchor_role::destination), grid);
    if (!o || !d) {
      ++local.outside_extent;
      continue;
    }
    out.push_back({*o, anchor_role::origin, sets[i].period, records[i]});
    out.push_back({*d, anchor_role::destination, sets[i].period, records[i]});
  }
  if (stats != nullptr) {
    *stats = local;
  }
  return out;
}

std::string format_aggregates(std::span<grid_aggregate const> aggregates) {
  std::string out{kAggregateHeader};
  out += '\n';
  for (auto const& a : aggregates) {
    fmt::format_to(std::back_inserter(out), "{},{},{},{},{},{},{},{},{}\n",
                   a.cell.col, a.cell.row, to_string(a.role), to_string(a.period),
                   a.mean_sv, a.mean_tv, a.mean_tripfreq, a.mean_avedur,
                   a.n_individuals);
  }
  return out;
}

std::vector<grid_aggregate> parse_aggregates(std::string_view text) {
  auto const t = csv::parse_table(text);
  std::size_t const c[] = {
      t.require_column("col"),           t.require_column("row"),
      t.require_column("role"),          t.require_column("period"),
      t.require_column("mean_sv"),       t.require_column("mean_tv"),
      t.require_column("mean_tripfreq"), t.require_column("mean_avedur"),
      t.require_column("n_individuals")};
  std::vector<grid_aggregate> out;
  for (auto const& row : t.rows) {
    auto const col = csv::parse_int(row[c[0]]);
    auto const r = csv::parse_int(row[c[1]]);
    auto const sv = csv::parse_double(row[c[4]]);
    auto const tv = csv::parse_double(row[c[5]]);
    auto const fr = csv::parse_double(row[c[6]]);
    auto const du = csv::parse_double(row[c[7]]);
    auto const n = csv::parse_int(row[c[8]]);
    if (!col || !r || !sv || !tv || !fr || !du || !n) {
      throw invalid_input{"grid aggregates: malformed row"};
    }
    out.push_back({{static_cast<int>(*col), static_cast<int>(*r)},
                   parse_anchor_role(row[c[2]]),
                   parse_period(row[c[3]]),
                   *sv, *tv, *fr, *du, static_cast<int>(*n)});
  }
  return out;
}

}  // namespace busvar
