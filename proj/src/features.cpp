#include "busvar/features.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "busvar/csv.hpp"

namespace busvar {

feature feature_from_abbreviation(std::string_view abbreviation) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (kFeatures[i].abbreviation == abbreviation) {
      return static_cast<feature>(i);
    }
  }
  throw invalid_input{fmt::format("unknown feature '{}'", abbreviation)};
}

double poi_entropy(std::span<long long const> counts) {
  long long total = 0;
  for (auto c : counts) {
    if (c < 0) {
      throw invalid_input{"poi_entropy: negative count"};
    }
    total += c;
  }
  if (total == 0) {
    throw invalid_input{"poi_entropy: all category counts are zero"};
  }
  double h = 0.0;
  for (auto c : counts) {
    if (c > 0) {
      auto const p = static_cast<double>(c) / static_cast<double>(total);
      h -= p * std::log(p);
    }
  }
  return std::max(h, 0.0);
}

double nearest_distance_km(point p, std::span<point const> centres) {
  if (centres.empty()) {
    throw config_error{"nearest_distance: empty centre list"};
  }
  auto best = distance(p, centres.front());
  for (auto const& c : centres.subspan(1)) {
    best = std::min(best, distance(p, c));
  }
  return best / 1000.0;
}

centre_set parse_centres(std::string_view text) {
  auto const t = csv::parse_table(text);
  auto const c_kind = t.require_column("kind");
  auto const c_x = t.require_column("x_m");
  auto const c_y = t.require_column("y_m");
  centre_set out;
  for (auto const& row : t.rows) {
    auto const x = csv::parse_double(row[c_x]);
    auto const y = csv::parse_double(row[c_y]);
    if (!x || !y) {
      throw invalid_input{"centres: bad coordinates"};
    }
    if (row[c_kind] == "centre") {
      out.centres.push_back({*x, *y});
    } else if (row[c_kind] == "subcentre") {
      out.subcentres.push_back({*x, *y});
    } else {
      throw invalid_input{fmt::format("centres: unknown kind '{}'", row[c_kind])};
    }
  }
  return out;
}

namespace {

struct value_rule {
  std::string_view name;
  double lo;
  double hi;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr value_rule kRawColumns[] = {
    {"metrosta", 0.0, kInf}, {"popden", 0.0, kInf}, {"roadden", 0.0, kInf},
    {"houseprice", 0.0, kInf}, {"female", 0.0, 100.0}, {"juveni", 0.0, 100.0},
    {"oldage", 0.0, 100.0},
};

constexpr std::string_view kPoiPrefix = "poi_";

}  // namespace

raw_cell_table parse_cell_inputs(std::string_view text) {
  auto const t = csv::parse_table(text);
  auto const c_col = t.require_column("col");
  auto const c_row = t.require_column("row");
  raw_cell_table out;
  for (auto const& row : t.rows) {
    auto const col = csv::parse_int(row[c_col]);
    auto const r = csv::parse_int(row[c_row]);
    if (!col || !r) {
      throw invalid_input{"cell inputs: bad col/row"};
    }
    cell_id const id{static_cast<int>(*col), static_cast<int>(*r)};
    auto& cell = out[id];
    for (std::size_t i = 0; i < t.header.size(); ++i) {
      auto const& name = t.header[i];
      if (i == c_col || i == c_row || row[i].empty()) {
        continue;
      }
      if (name.starts_with(kPoiPrefix)) {
        auto const v = csv::parse_int(row[i]);
        if (!v || *v < 0) {
          throw invalid_input{fmt::format("cell ({},{}): bad {} '{}'", id.col,
                                          id.row, name, row[i])};
        }
        cell.poi[name.substr(kPoiPrefix.size())] = *v;
        continue;
      }
      auto const rule = std::find_if(std::begin(kRawColumns), std::end(kRawColumns),
                                     [&](auto const& c) { return c.name == name; });
      if (rule == std::end(kRawColumns)) {
        continue;  // unknown columns pass through unused
      }
      auto const v = csv::parse_double(row[i]);
      if (!v || *v < rule->lo || *v > rule->hi) {
        throw invalid_input{fmt::format("cell ({},{}): {} '{}' outside [{}, {}]",
                                        id.col, id.row, name, row[i], rule->lo,
                                        rule->hi)};
      }
      cell.values[name] = *v;
    }
  }
  return out;
}

std::map<cell_id, transit_supply> compute_transit_supply(
    stop_registry const& stops,
    std::map<std::string, std::set<std::string>> const& routes_by_stop,
    grid_spec const& grid) {
  std::map<cell_id, transit_supply> out;
  for (auto const& id : stops.ids()) {
    auto const cell = assign_grid(*stops.find(id), grid);
    if (!cell) {
      continue;
    }
    auto& s = out[*cell];
    ++s.stops;
    if (auto const it = routes_by_stop.find(id); it != routes_by_stop.end()) {
      s.routes.insert(it->second.begin(), it->second.end());
    }
  }
  return out;
}

feature_table build_feature_table(std::span<grid_aggregate const> slice,
                                  raw_cell_table const& raw,
                                  std::map<cell_id, transit_supply> const& supply,
                                  centre_set const& centres,
                                  grid_spec const& grid) {
  feature_table out;
  for (auto const& agg : slice) {
    auto const it = raw.find(agg.cell);
    if (it == raw.end()) {
      ++out.dropped_no_inputs;
      continue;
    }
    auto const& in = it->second;
    auto const centroid = grid.centroid(agg.cell);

    feature_vector v;
    v[feature::tripfreq] = agg.mean_tripfreq;
    v[feature::avedur] = agg.mean_avedur;
    v[feature::centdist] = nearest_distance_km(centroid, centres.centres);
    v[feature::subcendist] = nearest_distance_km(centroid, centres.subcentres);

    auto const s = supply.find(agg.cell);
    v[feature::busstop] = s == supply.end() ? 0.0 : s->second.stops;
    v[feature::busroute] =
        s == supply.end() ? 0.0 : static_cast<double>(s->second.routes.size());

    auto const copy = [&](feature f) {
      auto const key = kFeatures[index_of(f)].abbreviation;
      if (auto const val = in.values.find(std::string{key}); val != in.values.end()) {
        v[f] = val->second;
      }
    };
    for (auto f : {feature::metrosta, feature::popden, feature::roadden,
                   feature::houseprice, feature::female, feature::juveni,
                   feature::oldage}) {
      copy(f);
    }

    for (auto f : {feature::eat, feature::recrea, feature::dailyser,
                   feature::finan, feature::cult}) {
      auto const key = kFeatures[index_of(f)].abbreviation;
      if (auto const c = in.poi.find(std::string{key}); c != in.poi.end()) {
        v[f] = static_cast<double>(c->second);
      }
    }
    if (!in.poi.empty()) {
      std::vector<long long> counts;
      for (auto const& [cat, n] : in.poi) {
        counts.push_back(n);
      }
      if (std::any_of(counts.begin(), counts.end(), [](long long n) { return n > 0; })) {
        v[feature::poi_entro] = poi_entropy(counts);
      }
    }

    out.cells.push_back(agg.cell);
    out.rows.push_back(v);
  }
  return out;
}

std::string format_feature_table(feature_table const& table) {
  std::string out = "col,row";
  for (auto const& f : kFeatures) {
    out += ',';
    out += f.abbreviation;
  }
  out += '\n';
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    fmt::format_to(std::back_inserter(out), "{},{}", table.cells[i].col,
                   table.cells[i].row);
    for (auto v : table.rows[i].values) {
      out += ',';
      out += csv::format_optional(v);
    }
    out += '\n';
  }
  return out;
}

feature_table parse_feature_table(std::string_view text) {
  auto const t = csv::parse_table(text);
  auto const c_col = t.require_column("col");
  auto const c_row = t.require_column("row");
  std::array<std::size_t, kFeatureCount> cols{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    cols[f] = t.require_column(kFeatures[f].abbreviation);
  }
  feature_table out;
  for (auto const& row : t.rows) {
    auto const col = csv::parse_int(row[c_col]);
    auto const r = csv::parse_int(row[c_row]);
    if (!col || !r) {
      throw invalid_input{"feature table: bad col/row"};
    }
    feature_vector v;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (row[cols[f]].empty()) {
        continue;
      }
      auto const x = csv::parse_double(row[cols[f]]);
      if (!x) {
        throw invalid_input{fmt::format("feature table: bad {} '{}'",
                                        kFeatures[f].abbreviation, row[cols[f]])};
      }
      v.values[f] = *x;
    }
    out.cells.push_back({static_cast<int>(*col), static_cast<int>(*r)});
    out.rows.push_back(v);
  }
  return out;
}

}  // namespace busvar
