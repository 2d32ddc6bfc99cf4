#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "busvar/common.hpp"
#include "busvar/fusion.hpp"
#include "busvar/ingest.hpp"

namespace busvar {

// Explanatory features in table order: behavioural, built environment,
// socio-demographic.
enum class feature : std::size_t {
  tripfreq,
  avedur,
  centdist,
  subcendist,
  metrosta,
  busstop,
  busroute,
  popden,
  roadden,
  poi_entro,
  eat,
  recrea,
  dailyser,
  finan,
  cult,
  houseprice,
  female,
  juveni,
  oldage,
};

inline constexpr std::size_t kFeatureCount = 19;

struct feature_info {
  std::string_view abbreviation;
  std::string_view label;
};

inline constexpr std::array<feature_info, kFeatureCount> kFeatures{{
    {"tripfreq", "Average trip frequency"},
    {"avedur", "Average trip duration (hour)"},
    {"centdist", "Distance to the nearest urban centre (km)"},
    {"subcendist", "Distance to the nearest subcentre (km)"},
    {"metrosta", "Availability of metro stations"},
    {"busstop", "Availability of bus stops"},
    {"busroute", "Availability of bus routes"},
    {"popden", "Population density (persons/km2)"},
    {"roadden", "Road density (km/km2)"},
    {"poi_entro", "POI entropy"},
    {"eat", "Availability of restaurants"},
    {"recrea", "Availability of recreational facilities"},
    {"dailyser", "Availability of daily services"},
    {"finan", "Availability of financial facilities"},
    {"cult", "Availability of cultural facilities"},
    {"houseprice", "Housing price (RMB)"},
    {"female", "Proportion of female (%)"},
    {"juveni", "Proportion of dependent children (%)"},
    {"oldage", "Proportion of older people (%)"},
}};

constexpr std::size_t index_of(feature f) { return static_cast<std::size_t>(f); }

// Throws invalid_input for an unknown abbreviation.
feature feature_from_abbreviation(std::string_view abbreviation);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct feature_vector {
  std::array<double, kFeatureCount> values;

  feature_vector() { values.fill(kMissing); }

  double& operator[](feature f) { return values[index_of(f)]; }
  double operator[](feature f) const { return values[index_of(f)]; }
  bool missing(feature f) const { return std::isnan((*this)[f]); }
};

// Shannon entropy (nats) of category shares. Throws invalid_input when the
// total is zero or a count is negative.
double poi_entropy(std::span<long long const> counts);

// Minimum Euclidean distance in km (inputs in metres). Throws config_error on
// an empty centre list.
double nearest_distance_km(point p, std::span<point const> centres);

struct centre_set {
  std::vector<point> centres;
  std::vector<point> subcentres;
};

// `kind,x_m,y_m` with kind in {centre, subcentre}.
centre_set parse_centres(std::string_view text);

// Raw per-cell inputs keyed by column name. Absent keys are missing values.
// POI category counts live in `poi` (file columns prefixed `poi_`).
struct cell_inputs {
  std::map<std::string, double> values;
  std::map<std::string, long long> poi;
};

using raw_cell_table = std::map<cell_id, cell_inputs>;

// `col,row,<columns>`; empty cells are missing. Known numeric columns:
// metrosta, popden, roadden, houseprice, female, juveni, oldage.
raw_cell_table parse_cell_inputs(std::string_view text);

// Bus stops and distinct serving routes per cell.
struct transit_supply {
  int stops{0};
  std::set<std::string> routes;
};

std::map<cell_id, transit_supply> compute_transit_supply(
    stop_registry const& stops,
    std::map<std::string, std::set<std::string>> const& routes_by_stop,
    grid_spec const& grid);

struct feature_table {
  std::vector<cell_id> cells;
  std::vector<feature_vector> rows;
  std::size_t dropped_no_inputs{0};
};

// One feature vector per aggregated cell (one period/role slice). Behavioural
// features come from the aggregates; cells absent from `raw` are dropped and
// counted.
feature_table build_feature_table(
    std::span<grid_aggregate const> slice, raw_cell_table const& raw,
    std::map<cell_id, transit_supply> const& supply, centre_set const& centres,
    grid_spec const& grid);

std::string format_feature_table(feature_table const& table);
feature_table parse_feature_table(std::string_view text);

}  // namespace busvar
