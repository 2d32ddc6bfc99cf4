#include "busvar/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "busvar/csv.hpp"
#include "busvar/explain.hpp"
#include "busvar/features.hpp"
#include "busvar/geostats.hpp"
#include "busvar/variability.hpp"

namespace busvar {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string slice_spec::name() const {
  return fmt::format("{}_{}_{}", to_string(target), to_string(period), to_string(role));
}

slice_spec parse_slice(std::string_view name) {
  auto const parts = csv::split(name, '_');
  if (parts.size() != 3) {
    throw config_error{fmt::format("bad slice name '{}'", name)};
  }
  try {
    return {parse_target(parts[0]), parse_period(parts[1]), parse_anchor_role(parts[2])};
  } catch (invalid_input const&) {
    throw config_error{fmt::format("bad slice name '{}'", name)};
  }
}

std::vector<slice_spec> all_slices() {
  std::vector<slice_spec> out;
  for (auto t : {variability_target::sv, variability_target::tv}) {
    for (auto p : {peak_period::morning, peak_period::evening}) {
      for (auto r : {anchor_role::origin, anchor_role::destination}) {
        out.push_back({t, p, r});
      }
    }
  }
  return out;
}

std::string_view to_string(stage s) {
  switch (s) {
    case stage::ingest: return "ingest";
    case stage::variability: return "variability";
    case stage::fuse: return "fuse";
    case stage::moran: return "moran";
    case stage::features: return "features";
    case stage::fit: return "fit";
    case stage::explain: return "explain";
  }
  return "?";
}

stage_error::stage_error(stage s, std::string const& what, json counts)
    : error{fmt::format("stage {} failed: {} (counts so far: {})", to_string(s), what,
                        counts.dump())},
      stage_{s},
      counts_{std::move(counts)} {}

// ---- config ---------------------------------------------------------------

namespace {

std::string format_hhmm(int s) { return fmt::format("{:02}:{:02}", s / 3600, s / 60 % 60); }

std::string format_window(time_window const& w) {
  return format_hhmm(w.start_s) + "-" + format_hhmm(w.end_s);
}

template <typename T>
T scalar(YAML::Node const& n, std::string const& key) {
  try {
    return n.as<T>();
  } catch (YAML::Exception const&) {
    throw config_error{fmt::format("config key '{}': cannot read value '{}'", key,
                                   n.IsScalar() ? n.Scalar() : std::string{"<non-scalar>"})};
  }
}

std::vector<std::string> string_list(YAML::Node const& n, std::string const& key) {
  std::vector<std::string> out;
  if (n.IsScalar()) {
    out.push_back(n.Scalar());
  } else if (n.IsSequence()) {
    for (auto const& e : n) {
      out.push_back(scalar<std::string>(e, key));
    }
  } else if (!n.IsNull()) {
    throw config_error{fmt::format("config key '{}': expected a list", key)};
  }
  return out;
}

YAML::Node load_root(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string{text});
  } catch (YAML::Exception const& e) {
    throw config_error{fmt::format("config: {}", e.what())};
  }
  if (root.IsNull()) {
    return YAML::Node{YAML::NodeType::Map};
  }
  if (!root.IsMap()) {
    throw config_error{"config: expected a flat key: value mapping"};
  }
  return root;
}

int seconds_of(double v, double unit) { return static_cast<int>(std::lround(v * unit)); }

}  // namespace

fs::path pipeline_config::resolve(std::string const& p) const {
  fs::path const path{p};
  return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
}

void pipeline_config::validate(stage last) const {
  auto const need = [&](std::string const& value, std::string_view key) {
    if (value.empty()) {
      throw config_error{fmt::format("config: '{}' is required", key)};
    }
    if (!fs::is_regular_file(resolve(value))) {
      throw config_error{
          fmt::format("config: {} file '{}' does not exist", key, resolve(value).string())};
    }
  };
  need(stops, "stops");
  need(transactions, "transactions");
  if (last >= stage::features) {
    need(centres, "centres");
    need(cells, "cells");
  }
  if (output_dir.empty()) {
    throw config_error{"config: output_dir is required (or pass --out)"};
  }
  if (ingest.transfer_threshold_s < 0) {
    throw config_error{"config: transfer_threshold_min must be >= 0"};
  }
  if (ingest.durations.min_s < 0 || ingest.durations.max_s < ingest.durations.min_s) {
    throw config_error{"config: need 0 <= min_duration <= max_duration"};
  }
  for (auto const p : {peak_period::morning, peak_period::evening}) {
    auto const& w = ingest.windows[p];
    if (w.end_s <= w.start_s) {
      throw config_error{fmt::format("config: empty {} window", to_string(p))};
    }
  }
  if (ingest.min_trips < 2) {
    throw config_error{"config: min_trips must be >= 2 (variability needs a pair)"};
  }
  if (!(cell_size > 0.0)) {
    throw config_error{"config: cell_size must be > 0"};
  }
  if (grid) {
    grid->validate();
  }
  if (min_individuals < 1 || permutations < 0 || min_fit_rows < 1 || cv_folds < 0 ||
      cv_folds == 1 || top_k_dependence < 0) {
    throw config_error{
        "config: need min_individuals >= 1, permutations >= 0, min_fit_rows >= 1, "
        "cv_folds 0 or >= 2, top_k_dependence >= 0"};
  }
  if (threads < 1) {
    throw config_error{"config: threads must be >= 1"};
  }
  if (slices.empty()) {
    throw config_error{"config: no slices selected"};
  }
  for (auto const& f : dependence_features) {
    try {
      feature_from_abbreviation(f);
    } catch (invalid_input const&) {
      throw config_error{fmt::format("config: unknown dependence feature '{}'", f)};
    }
  }
  boost.validate();
}

json pipeline_config::echo() const {
  json j;
  j["transactions"] = transactions;
  j["stops"] = stops;
  j["centres"] = centres;
  j["cells"] = cells;
  if (projection) {
    j["stops_ref_lon"] = projection->ref_lon;
    j["stops_ref_lat"] = projection->ref_lat;
  }
  j["transfer_threshold_min"] = ingest.transfer_threshold_s / 60.0;
  j["min_duration_min"] = ingest.durations.min_s / 60.0;
  j["max_duration_h"] = ingest.durations.max_s / 3600.0;
  j["morning_window"] = format_window(ingest.windows.morning);
  j["evening_window"] = format_window(ingest.windows.evening);
  j["min_trips"] = ingest.min_trips;
  j["cell_size"] = cell_size;
  if (grid) {
    j["grid_origin_x"] = grid->origin.x;
    j["grid_origin_y"] = grid->origin.y;
    j["grid_cols"] = grid->n_cols;
    j["grid_rows"] = grid->n_rows;
  }
  j["min_individuals"] = min_individuals;
  j["permutations"] = permutations;
  j["moran_seed"] = moran_seed;
  j["n_trees"] = boost.n_trees;
  j["max_depth"] = boost.max_depth;
  j["learning_rate"] = boost.learning_rate;
  j["l2_reg"] = boost.l2_reg;
  j["min_split_gain"] = boost.min_split_gain;
  j["subsample"] = boost.subsample;
  j["boost_seed"] = boost.seed;
  j["min_fit_rows"] = min_fit_rows;
  j["cv_folds"] = cv_folds;
  auto names = json::array();
  for (auto const& s : slices) {
    names.push_back(s.name());
  }
  j["slices"] = std::move(names);
  j["top_k_dependence"] = top_k_dependence;
  j["dependence_features"] = dependence_features;
  j["dependence_svg"] = dependence_svg;
  j["write_trips"] = write_trips;
  return j;
}

pipeline_config parse_pipeline_config(std::string_view yaml, fs::path const& base_dir) {
  auto const root = load_root(yaml);
  pipeline_config c;
  c.base_dir = base_dir;
  std::optional<double> origin_x, origin_y;
  std::optional<int> cols, rows;
  std::optional<double> ref_lon, ref_lat;

  for (auto const& kv : root) {
    auto const key = scalar<std::string>(kv.first, "<key>");
    auto const& v = kv.second;
    auto const d = [&] { return scalar<double>(v, key); };
    auto const i = [&] { return scalar<int>(v, key); };
    auto const s = [&] { return scalar<std::string>(v, key); };
    auto const b = [&] { return scalar<bool>(v, key); };

    if (key == "transactions") c.transactions = s();
    else if (key == "stops") c.stops = s();
    else if (key == "centres") c.centres = s();
    else if (key == "cells") c.cells = s();
    else if (key == "stops_ref_lon") ref_lon = d();
    else if (key == "stops_ref_lat") ref_lat = d();
    else if (key == "output_dir") c.output_dir = s();
    else if (key == "threads") c.threads = static_cast<unsigned>(std::max(0, i()));
    else if (key == "transfer_threshold_min") c.ingest.transfer_threshold_s = seconds_of(d(), 60);
    else if (key == "min_duration_min") c.ingest.durations.min_s = seconds_of(d(), 60);
    else if (key == "max_duration_h") c.ingest.durations.max_s = seconds_of(d(), 3600);
    else if (key == "morning_window" || key == "evening_window") {
      time_window w;
      try {
        w = parse_window(s());
      } catch (invalid_input const& e) {
        throw config_error{fmt::format("config key '{}': {}", key, e.what())};
      }
      (key == "morning_window" ? c.ingest.windows.morning : c.ingest.windows.evening) = w;
    }
    else if (key == "min_trips") c.ingest.min_trips = i();
    else if (key == "cell_size") c.cell_size = d();
    else if (key == "grid_origin_x") origin_x = d();
    else if (key == "grid_origin_y") origin_y = d();
    else if (key == "grid_cols") cols = i();
    else if (key == "grid_rows") rows = i();
    else if (key == "min_individuals") c.min_individuals = i();
    else if (key == "permutations") c.permutations = i();
    else if (key == "moran_seed") c.moran_seed = scalar<std::uint64_t>(v, key);
    else if (key == "n_trees") c.boost.n_trees = i();
    else if (key == "max_depth") c.boost.max_depth = i();
    else if (key == "learning_rate") c.boost.learning_rate = d();
    else if (key == "l2_reg") c.boost.l2_reg = d();
    else if (key == "min_split_gain") c.boost.min_split_gain = d();
    else if (key == "subsample") c.boost.subsample = d();
    else if (key == "boost_seed") c.boost.seed = scalar<std::uint64_t>(v, key);
    else if (key == "min_fit_rows") c.min_fit_rows = i();
    else if (key == "cv_folds") c.cv_folds = i();
    else if (key == "slices") {
      auto const names = string_list(v, key);
      if (names.size() == 1 && names[0] == "all") {
        c.slices = all_slices();
      } else {
        c.slices.clear();
        for (auto const& n : names) {
          auto const sl = parse_slice(n);
          if (std::find(c.slices.begin(), c.slices.end(), sl) == c.slices.end()) {
            c.slices.push_back(sl);
          }
        }
      }
    }
    else if (key == "top_k_dependence") c.top_k_dependence = i();
    else if (key == "dependence_features") c.dependence_features = string_list(v, key);
    else if (key == "dependence_svg") c.dependence_svg = b();
    else if (key == "write_trips") c.write_trips = b();
    else throw config_error{fmt::format("config: unknown key '{}'", key)};
  }

  auto const n_grid = origin_x.has_value() + origin_y.has_value() + cols.has_value() +
                      rows.has_value();
  if (n_grid == 4) {
    c.grid = grid_spec{{*origin_x, *origin_y}, c.cell_size, *cols, *rows};
  } else if (n_grid != 0) {
    throw config_error{"config: grid_origin_x/y and grid_cols/rows go together"};
  }
  if (ref_lon.has_value() != ref_lat.has_value()) {
    throw config_error{"config: stops_ref_lon and stops_ref_lat go together"};
  }
  if (ref_lon) {
    c.projection = stop_projection{*ref_lon, *ref_lat};
  }
  return c;
}

pipeline_config load_pipeline_config(fs::path const& path) {
  if (!fs::is_regular_file(path)) {
    throw config_error{fmt::format("config file '{}' does not exist", path.string())};
  }
  return parse_pipeline_config(csv::read_file(path), path.parent_path());
}

std::string format_pipeline_config(pipeline_config const& config) {
  std::string out;
  auto const echo = config.echo();
  if (!config.output_dir.empty()) {
    out += fmt::format("output_dir: {}\n", config.output_dir.string());
  }
  for (auto const& [k, v] : echo.items()) {
    if (v.is_array()) {
      out += k + ": [";
      for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? ", " : "") + v[i].get<std::string>();
      }
      out += "]\n";
    } else if (v.is_string()) {
      out += fmt::format("{}: \"{}\"\n", k, v.get<std::string>());
    } else {
      out += fmt::format("{}: {}\n", k, v.dump());
    }
  }
  return out;
}

synth_config parse_synth_config(std::string_view yaml) {
  auto const root = load_root(yaml);
  synth_config c;
  for (auto const& kv : root) {
    auto const key = scalar<std::string>(kv.first, "<key>");
    auto const& v = kv.second;
    auto const d = [&] { return scalar<double>(v, key); };
    auto const i = [&] { return scalar<int>(v, key); };

    if (key == "seed") c.seed = scalar<std::uint64_t>(v, key);
    else if (key == "n_riders") c.n_riders = i();
    else if (key == "extent_min_x") c.extent_min.x = d();
    else if (key == "extent_min_y") c.extent_min.y = d();
    else if (key == "extent_max_x") c.extent_max.x = d();
    else if (key == "extent_max_y") c.extent_max.y = d();
    else if (key == "cell_size") c.cell_size = d();
    else if (key == "n_stops") c.n_stops = i();
    else if (key == "n_routes") c.n_routes = i();
    else if (key == "n_centres") c.n_centres = i();
    else if (key == "n_subcentres") c.n_subcentres = i();
    else if (key == "residential_cells") c.residential_cells = i();
    else if (key == "employment_cells") c.employment_cells = i();
    else if (key == "work_radius_m") c.work_radius_m = d();
    else if (key == "freq_min") c.freq_min = d();
    else if (key == "freq_max") c.freq_max = d();
    else if (key == "fixed_trip_count") c.fixed_trip_count = i();
    else if (key == "study_days") c.study_days = i();
    else if (key == "anchor_share") c.anchor_share = d();
    else if (key == "transfer_share") c.transfer_share = d();
    else if (key == "speed_kmh") c.speed_kmh = d();
    else if (key == "exact_jitter_stops") c.exact_jitter_stops = scalar<bool>(v, key);
    else if (key == "malformed_share") c.faults.malformed_share = d();
    else if (key == "bad_duration_share") c.faults.bad_duration_share = d();
    else if (key == "sv_base") c.effects.sv_base = d();
    else if (key == "sv_curvature") c.effects.sv_curvature = d();
    else if (key == "sv_vertex") c.effects.sv_vertex = d();
    else if (key == "tv_intercept") c.effects.tv_intercept = d();
    else if (key == "tv_slope") c.effects.tv_slope = d();
    else if (key == "tv_floor") c.effects.tv_floor = d();
    else if (key == "rider_noise") c.effects.rider_noise = d();
    else throw config_error{fmt::format("synth config: unknown key '{}'", key)};
  }
  return c;
}

synth_config load_synth_config(fs::path const& path) {
  if (!fs::is_regular_file(path)) {
    throw config_error{fmt::format("config file '{}' does not exist", path.string())};
  }
  return parse_synth_config(csv::read_file(path));
}

fs::path write_synth_bundle(synth_city const& city, fs::path const& dir) {
  auto const paths = write_city(city, dir);
  pipeline_config c;
  c.transactions = paths.transactions.filename().string();
  c.stops = paths.stops.filename().string();
  c.centres = paths.centres.filename().string();
  c.cells = paths.cells.filename().string();
  c.cell_size = city.grid.cell_size;
  c.grid = city.grid;
  c.output_dir = "out";
  c.dependence_features = {"tripfreq", "subcendist"};
  auto const config_path = dir / "config.yaml";
  csv::write_file(config_path, format_pipeline_config(c));
  return config_path;
}

// ---- run ------------------------------------------------------------------

namespace {

using clock_type = std::chrono::steady_clock;

struct slice_key {
  peak_period period;
  anchor_role role;
  friend auto operator<=>(slice_key const&, slice_key const&) = default;
};

std::string slice_file_stem(slice_key k) {
  return fmt::format("{}_{}", to_string(k.period), to_string(k.role));
}

double rmse(boosted_model const& m, dataset const& d, std::vector<std::size_t> const& rows) {
  double s = 0.0;
  for (auto r : rows) {
    auto const e = m.predict(d.row(r)) - d.targets()[r];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(rows.size()));
}

class runner {
public:
  runner(pipeline_config const& config, run_options const& options)
      : cfg_{config}, opt_{options} {}

  json run() {
    cfg_.validate(opt_.last);
    fs::create_directories(cfg_.output_dir);

    manifest_["format"] = "busvar-manifest/1";
    manifest_["config"] = cfg_.echo();
    manifest_["metadata"] = metadata();
    manifest_["artifacts"] = json::array();
    manifest_["stages"] = json::object();

    step(stage::ingest, [&] { do_ingest(); });
    step(stage::variability, [&] { do_variability(); });
    step(stage::fuse, [&] { do_fuse(); });
    step(stage::moran, [&] { do_moran(); });
    step(stage::features, [&] { do_features(); });
    step(stage::fit, [&] { do_fit(); });
    step(stage::explain, [&] { do_explain(); });

    csv::write_file(cfg_.output_dir / "manifest.json", manifest_.dump(2) + "\n");
    return manifest_;
  }

private:
  template <typename Fn>
  void step(stage s, Fn&& fn) {
    if (s > opt_.last) {
      return;
    }
    counts_ = json::object();
    auto const t0 = clock_type::now();
    try {
      fn();
    } catch (stage_error const&) {
      throw;
    } catch (std::exception const& e) {
      throw stage_error{s, e.what(), counts_};
    }
    auto const ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        clock_type::now() - t0)
                        .count();
    manifest_["stages"][std::string{to_string(s)}] = counts_;
    if (opt_.log) {
      json line{{"stage", to_string(s)}, {"elapsed_ms", ms}, {"threads", cfg_.threads}};
      line["counts"] = counts_;
      std::cerr << line.dump() << '\n';
    }
  }

  void emit(std::string const& name, std::string const& content, std::size_t rows) {
    csv::write_file(cfg_.output_dir / name, content);
    manifest_["artifacts"].push_back({{"path", name}, {"rows", rows}});
  }

  static json metadata() {
    return {
        {"source_constants",
         {"transfer_threshold_min", "min_duration_min", "max_duration_h", "cell_size",
          "min_trips", "min_individuals"}},
        {"assumed_constants",
         {{"peak_windows", "half-open [start, end), membership by trip start"},
          {"boost_params", "chosen defaults; no hyperparameters were given"},
          {"boost_loss", "squared error, exact greedy splits on midpoints"},
          {"shap", "path-dependent TreeSHAP over training covers"},
          {"moran_weights", "inverse distance between cell centroids, no cutoff, no row "
                            "standardisation"},
          {"moran_p_value", "folded pseudo p-value, (min(above, below) + 1) / (perms + 1)"},
          {"poi_entropy", "natural log over all supplied POI categories"},
          {"trip_frequency", "period trips over the whole input span"},
          {"anchor_ties", "centroid of the tied stops"},
          {"explanation_set", "full training table"}}}};
  }

  // ingest -----------------------------------------------------------------
  void do_ingest() {
    stops_ = read_stops(cfg_.resolve(cfg_.stops), cfg_.projection);
    counts_["stops"] = stops_.size();
    auto parsed = read_transactions(cfg_.resolve(cfg_.transactions), stops_, cfg_.threads);
    auto const& ps = parsed.stats;
    counts_["rows"] = ps.rows;
    counts_["rows_accepted"] = ps.accepted;
    counts_["rows_malformed"] = ps.malformed;
    counts_["rows_bad_time"] = ps.bad_time;
    counts_["rows_unknown_stop"] = ps.unknown_stop;
    transactions_ = std::move(parsed.rows);

    auto result = build_period_sets(transactions_, stops_, cfg_.ingest, cfg_.threads);
    auto const& st = result.stats;
    counts_["cards"] = st.cards;
    counts_["legs"] = st.legs;
    counts_["trips_chained"] = st.trips_chained;
    counts_["chain_anomalies"] = st.chain_anomalies;
    counts_["trips_too_short"] = st.too_short;
    counts_["trips_too_long"] = st.too_long;
    counts_["trips_kept"] = st.trips_chained - st.too_short - st.too_long;
    counts_["trips_outside_windows"] = st.selection.trips_outside;
    counts_["rider_periods_below_min_trips"] = st.selection.below_min_trips;
    counts_["rider_periods"] = st.selection.sets;
    sets_ = std::move(result.sets);

    if (cfg_.write_trips) {
      std::string out =
          "card_id,period,date,origin_stop,destination_stop,start,end,legs\n";
      std::size_t n = 0;
      for (auto const& s : sets_) {
        for (auto const& t : s.trips) {
          fmt::format_to(std::back_inserter(out), "{},{},{},{},{},{},{},{}\n", t.card_id,
                         to_string(s.period), t.service_date, t.origin_stop,
                         t.destination_stop, format_clock(t.start_s), format_clock(t.end_s),
                         t.leg_count);
          ++n;
        }
      }
      emit("trips.csv", out, n);
    }
  }

  // variability -------------------------------------------------------------
  void do_variability() {
    records_ = compute_records(sets_, cfg_.threads);
    counts_["records"] = records_.size();
    emit("riders.csv", format_records(records_), records_.size());
  }

  // fuse ------------------------------------------------------------------
  void do_fuse() {
    if (cfg_.grid) {
      grid_ = *cfg_.grid;
    } else {
      if (stops_.size() == 0) {
        throw invalid_input{"empty stop registry, cannot derive the grid"};
      }
      point lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
      point hi{-lo.x, -lo.y};
      for (auto const& id : stops_.ids()) {
        auto const p = *stops_.find(id);
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
      }
      grid_ = grid_spec::covering(lo, hi, cfg_.cell_size);
    }
    counts_["grid_cols"] = grid_.n_cols;
    counts_["grid_rows"] = grid_.n_rows;

    anchoring_stats as;
    auto const cells = anchor_records(sets_, records_, grid_, &as);
    counts_["rider_periods"] = as.individuals;
    counts_["rider_periods_outside_extent"] = as.outside_extent;
    counts_["cell_records"] = cells.size();

    aggregation_stats ag;
    aggregates_ = aggregate_grid(cells, cfg_.min_individuals, &ag);
    counts_["groups"] = ag.groups;
    counts_["groups_dropped"] = ag.groups_dropped;
    counts_["cell_records_dropped"] = ag.individuals_dropped;
    counts_["aggregates"] = aggregates_.size();
    emit("grid_aggregates.csv", format_aggregates(aggregates_), aggregates_.size());
  }

  std::vector<grid_aggregate> slice_of(slice_key k) const {
    std::vector<grid_aggregate> out;
    for (auto const& a : aggregates_) {
      if (a.period == k.period && a.role == k.role) {
        out.push_back(a);
      }
    }
    return out;
  }

  // moran -----------------------------------------------------------------
  void do_moran() {
    auto reports = json::array();
    std::size_t computed = 0;
    for (auto const p : {peak_period::morning, peak_period::evening}) {
      for (auto const r : {anchor_role::origin, anchor_role::destination}) {
        auto const slice = slice_of({p, r});
        for (auto const t : {variability_target::sv, variability_target::tv}) {
          spatial_field f;
          for (auto const& a : slice) {
            f.locations.push_back(grid_.centroid(a.cell));
            f.values.push_back(t == variability_target::sv ? a.mean_sv : a.mean_tv);
          }
          json rep{{"field", to_string(t)},
                   {"period", to_string(p)},
                   {"role", to_string(r)},
                   {"n", f.values.size()}};
          try {
            auto const m = morans_i(f, {cfg_.permutations, cfg_.moran_seed, cfg_.threads});
            rep["morans_i"] = m.statistic;
            rep["expected"] = m.expected;
            rep["p_value"] = m.p_value ? json(*m.p_value) : json(nullptr);
            rep["permutations"] = m.permutations;
            ++computed;
          } catch (error const& e) {
            // too few cells or a flat field: reported, not fatal
            rep["morans_i"] = nullptr;
            rep["p_value"] = nullptr;
            rep["permutations"] = 0;
            rep["error"] = e.what();
          }
          reports.push_back(std::move(rep));
        }
      }
    }
    counts_["fields"] = reports.size();
    counts_["computed"] = computed;
    json doc{{"weights", "inverse_distance"},
             {"cutoff", nullptr},
             {"row_standardised", false},
             {"p_value", "folded_pseudo"},
             {"reports", std::move(reports)}};
    emit("moran.json", doc.dump(2) + "\n", doc["reports"].size());
  }

  std::vector<slice_key> feature_slices() const {
    std::vector<slice_key> keys;
    for (auto const& s : cfg_.slices) {
      slice_key const k{s.period, s.role};
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
        keys.push_back(k);
      }
    }
    std::sort(keys.begin(), keys.end());
    return keys;
  }

  // features --------------------------------------------------------------
  void do_features() {
    auto const raw = parse_cell_inputs(csv::read_file(cfg_.resolve(cfg_.cells)));
    auto const centres = parse_centres(csv::read_file(cfg_.resolve(cfg_.centres)));
    auto const supply = compute_transit_supply(stops_, routes_by_stop(transactions_), grid_);
    counts_["raw_cells"] = raw.size();
    for (auto const k : feature_slices()) {
      auto const slice = slice_of(k);
      auto table = build_feature_table(slice, raw, supply, centres, grid_);
      auto const stem = slice_file_stem(k);
      counts_[stem] = {{"aggregates", slice.size()},
                       {"rows", table.rows.size()},
                       {"dropped_no_inputs", table.dropped_no_inputs}};
      emit("features_" + stem + ".csv", format_feature_table(table), table.rows.size());
      tables_.emplace(k, std::move(table));
      // targets aligned with the table rows
      std::map<cell_id, grid_aggregate> by_cell;
      for (auto const& a : slice) {
        by_cell.emplace(a.cell, a);
      }
      auto& targets = targets_[k];
      for (auto const& c : tables_.at(k).cells) {
        targets.push_back(by_cell.at(c));
      }
    }
  }

  dataset dataset_for(slice_spec const& s) const {
    slice_key const k{s.period, s.role};
    auto const& table = tables_.at(k);
    auto const& targets = targets_.at(k);
    dataset d{kFeatureCount};
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      auto const y = s.target == variability_target::sv ? targets[i].mean_sv : targets[i].mean_tv;
      d.add_row(table.rows[i].values, y);
    }
    return d;
  }

  json cross_validate(dataset const& d) const {
    auto const n = d.rows();
    auto const k = static_cast<std::size_t>(cfg_.cv_folds);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::seed_seq seq{static_cast<std::uint32_t>(cfg_.boost.seed), 0xcf01U};
    std::mt19937_64 rng{seq};
    std::shuffle(order.begin(), order.end(), rng);
    auto folds = json::array();
    double sse = 0.0;
    for (std::size_t f = 0; f < k; ++f) {
      dataset train{d.n_features()};
      std::vector<std::size_t> held;
      dataset test_rows{d.n_features()};
      for (std::size_t i = 0; i < n; ++i) {
        auto const r = order[i];
        if (i % k == f) {
          test_rows.add_row(d.row(r), d.targets()[r]);
        } else {
          train.add_row(d.row(r), d.targets()[r]);
        }
      }
      if (train.rows() == 0 || test_rows.rows() == 0) {
        continue;
      }
      auto const m = fit(train, cfg_.boost);
      held.resize(test_rows.rows());
      std::iota(held.begin(), held.end(), 0);
      auto const e = rmse(m, test_rows, held);
      sse += e * e * static_cast<double>(held.size());
      folds.push_back(e);
    }
    return {{"folds", k},
            {"fold_rmse", std::move(folds)},
            {"rmse", std::sqrt(sse / static_cast<double>(n))}};
  }

  // fit -------------------------------------------------------------------
  void do_fit() {
    for (auto const& s : cfg_.slices) {
      auto const d = dataset_for(s);
      auto const name = s.name();
      if (d.rows() < static_cast<std::size_t>(cfg_.min_fit_rows)) {
        counts_[name] = {{"rows", d.rows()}, {"status", "skipped_too_few_rows"}};
        continue;
      }
      fit_report report;
      auto model = fit(d, cfg_.boost, &report);
      std::vector<std::size_t> all(d.rows());
      std::iota(all.begin(), all.end(), 0);
      json c{{"rows", d.rows()},
             {"status", "fitted"},
             {"trees", model.trees.size()},
             {"training_rmse", rmse(model, d, all)}};
      if (cfg_.cv_folds >= 2) {
        c["cv"] = cross_validate(d);
      }
      counts_[name] = std::move(c);
      emit("model_" + name + ".json", to_json(model).dump() + "\n", model.trees.size());
      models_.emplace(name, std::move(model));
    }
  }

  // explain ---------------------------------------------------------------
  void do_explain() {
    std::vector<std::string> header{"feature", "abbreviation"};
    std::vector<std::vector<double>> columns;
    for (auto const& s : cfg_.slices) {
      auto const name = s.name();
      auto const it = models_.find(name);
      if (it == models_.end()) {
        continue;
      }
      auto const d = dataset_for(s);
      auto const shap = compute_shap(it->second, d, cfg_.threads);

      double worst = 0.0;
      for (std::size_t i = 0; i < d.rows(); ++i) {
        double sum = shap.base;
        for (std::size_t f = 0; f < shap.n_features; ++f) {
          sum += shap.at(i, f);
        }
        worst = std::max(worst, std::abs(sum - it->second.predict(d.row(i))));
      }

      json c{{"rows", d.rows()}, {"base", shap.base}, {"max_local_accuracy_error", worst}};
      std::vector<double> ri;
      try {
        ri = relative_importance(shap);
      } catch (degenerate_input const&) {
        c["status"] = "degenerate_all_zero_shap";
        counts_[name] = std::move(c);
        continue;
      }
      header.push_back(name);
      columns.push_back(ri);

      std::string out = "feature,abbreviation,ri_percent\n";
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        fmt::format_to(std::back_inserter(out), "{},{},{}\n", kFeatures[f].label,
                       kFeatures[f].abbreviation, csv::format_double(ri[f]));
      }
      emit("importance_" + name + ".csv", out, kFeatureCount);

      // top-k by RI (ties: table order), then any requested extras
      std::vector<std::size_t> order(kFeatureCount);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](auto a, auto b) { return ri[a] > ri[b]; });
      std::vector<std::size_t> chosen(
          order.begin(),
          order.begin() + std::min<std::ptrdiff_t>(cfg_.top_k_dependence,
                                                   static_cast<std::ptrdiff_t>(kFeatureCount)));
      for (auto const& abbr : cfg_.dependence_features) {
        auto const f = index_of(feature_from_abbreviation(abbr));
        if (std::find(chosen.begin(), chosen.end(), f) == chosen.end()) {
          chosen.push_back(f);
        }
      }
      auto top = json::array();
      for (std::size_t r = 0; r < static_cast<std::size_t>(std::min<int>(cfg_.top_k_dependence, kFeatureCount)); ++r) {
        top.push_back(kFeatures[order[r]].abbreviation);
      }
      c["top_features"] = std::move(top);
      for (auto const f : chosen) {
        auto const dep = dependence(shap, d, f);
        auto const stem =
            fmt::format("dependence_{}_{}", name, kFeatures[f].abbreviation);
        emit(stem + ".csv", format_dependence(dep), dep.points.size());
        if (cfg_.dependence_svg) {
          emit(stem + ".svg",
               render_dependence_svg(dep, fmt::format("{} / {}", name, kFeatures[f].abbreviation)),
               dep.points.size());
        }
      }
      counts_[name] = std::move(c);
    }

    if (!columns.empty()) {
      std::string out;
      for (std::size_t i = 0; i < header.size(); ++i) {
        out += (i ? "," : "") + header[i];
      }
      out += '\n';
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        out += fmt::format("{},{}", kFeatures[f].label, kFeatures[f].abbreviation);
        for (auto const& col : columns) {
          out += ',' + csv::format_double(col[f]);
        }
        out += '\n';
      }
      emit("importance_table.csv", out, kFeatureCount);
    }
    counts_["importance_tables"] = columns.size();
  }

  pipeline_config const& cfg_;
  run_options const& opt_;
  json manifest_;
  json counts_;

  stop_registry stops_;
  std::vector<transaction> transactions_;
  std::vector<period_trip_set> sets_;
  std::vector<variability_record> records_;
  grid_spec grid_;
  std::vector<grid_aggregate> aggregates_;
  std::map<slice_key, feature_table> tables_;
  std::map<slice_key, std::vector<grid_aggregate>> targets_;
  std::map<std::string, boosted_model> models_;
};

}  // namespace

json run_pipeline(pipeline_config const& config, run_options const& options) {
  return runner{config, options}.run();
}

}  // namespace busvar
