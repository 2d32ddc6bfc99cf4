#include "busvar/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "busvar/csv.hpp"

namespace busvar {

namespace {

using rng_t = std::mt19937_64;

// Stops per square metre above which the extent counts as too small.
constexpr double kMinAreaPerStopM2 = 25.0 * 25.0;

// Mean temporal distance per unit spread when both start and end shift by the
// same U(-a, a) offset: sqrt(2) * E|U1 - U2| = sqrt(2) * 2/3.
constexpr double kTvPerSpread = std::numbers::sqrt2 * 2.0 / 3.0;

constexpr double kMaxTimeSpreadH = 0.9;
constexpr int kAccessOverheadS = 240;

rng_t stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32U),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return rng_t{seq};
}

double uniform(rng_t& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>{lo, hi}(rng);
}

point sample_disc(rng_t& rng, point centre, double radius) {
  auto const r = radius * std::sqrt(uniform(rng, 0.0, 1.0));
  auto const theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  return {centre.x + r * std::cos(theta), centre.y + r * std::sin(theta)};
}

// Bucketed nearest-stop lookup.
class stop_index {
public:
  stop_index(std::vector<point> const& pts, point min, point max, double bucket)
      : pts_{pts}, min_{min}, bucket_{bucket} {
    cols_ = std::max(1, static_cast<int>(std::ceil((max.x - min.x) / bucket)));
    rows_ = std::max(1, static_cast<int>(std::ceil((max.y - min.y) / bucket)));
    buckets_.resize(static_cast<std::size_t>(cols_ * rows_));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      buckets_[slot(pts[i])].push_back(i);
    }
  }

  std::size_t nearest(point p) const {
    auto const [c0, r0] = coords(p);
    std::size_t best = pts_.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (int ring = 0; ring <= std::max(cols_, rows_); ++ring) {
      for (int r = r0 - ring; r <= r0 + ring; ++r) {
        for (int c = c0 - ring; c <= c0 + ring; ++c) {
          if (std::max(std::abs(r - r0), std::abs(c - c0)) != ring || c < 0 ||
              r < 0 || c >= cols_ || r >= rows_) {
            continue;
          }
          for (auto i : buckets_[static_cast<std::size_t>(r * cols_ + c)]) {
            auto const d = distance(p, pts_[i]);
            if (d < best_d || (d == best_d && i < best)) {
              best_d = d;
              best = i;
            }
          }
        }
      }
      // Everything beyond this ring is at least ring * bucket away.
      if (best < pts_.size() && best_d <= ring * bucket_) {
        break;
      }
    }
    return best;
  }

private:
  std::pair<int, int> coords(point p) const {
    auto const c = std::clamp(static_cast<int>(std::floor((p.x - min_.x) / bucket_)), 0,
                              cols_ - 1);
    auto const r = std::clamp(static_cast<int>(std::floor((p.y - min_.y) / bucket_)), 0,
                              rows_ - 1);
    return {c, r};
  }
  std::size_t slot(point p) const {
    auto const [c, r] = coords(p);
    return static_cast<std::size_t>(r * cols_ + c);
  }

  std::vector<point> const& pts_;
  point min_;
  double bucket_;
  int cols_{1};
  int rows_{1};
  std::vector<std::vector<std::size_t>> buckets_;
};

// Mean pairwise 4-d distance per unit jitter radius when each endpoint keeps
// its anchor with probability anchor_share and otherwise lands uniformly on
// the unit disc. Fixed-seed Monte Carlo, so the constant is reproducible.
double spatial_spread_constant(double anchor_share) {
  auto rng = stream(0x5eedULL, 7);
  constexpr int kSamples = 200000;
  auto const draw = [&] {
    if (uniform(rng, 0.0, 1.0) < anchor_share) {
      return point{};
    }
    return sample_disc(rng, {}, 1.0);
  };
  double sum = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    auto const o1 = draw();
    auto const o2 = draw();
    auto const d1 = draw();
    auto const d2 = draw();
    auto const a = distance(o1, o2);
    auto const b = distance(d1, d2);
    sum += std::sqrt(a * a + b * b);
  }
  return sum / kSamples;
}

std::string date_of(int day) { return fmt::format("2016-06-{:02}", day + 1); }

struct city_builder {
  synth_config const& cfg;
  synth_city& city;
  std::vector<point> base_pts;
  std::vector<std::vector<std::string>> stop_routes;  // by stop ordinal
  std::vector<std::string> stop_ids;
  std::map<std::string, std::size_t, std::less<>> ordinal;
  std::optional<stop_index> index;
  int jitter_stops{0};

  std::size_t add_stop(std::string id, point p, std::vector<std::string> routes) {
    city.stops.add(id, p);
    ordinal.emplace(id, stop_ids.size());
    stop_ids.push_back(std::move(id));
    stop_routes.push_back(std::move(routes));
    return stop_ids.size() - 1;
  }

  point where(std::size_t s) const { return *city.stops.find(stop_ids[s]); }

  void place_stops(rng_t& rng) {
    for (int i = 0; i < cfg.n_stops; ++i) {
      point const p{uniform(rng, cfg.extent_min.x, cfg.extent_max.x),
                    uniform(rng, cfg.extent_min.y, cfg.extent_max.y)};
      base_pts.push_back(p);
      auto const n_routes = std::uniform_int_distribution<int>{1, 3}(rng);
      std::vector<std::string> routes;
      for (int k = 0; k < n_routes; ++k) {
        routes.push_back(fmt::format(
            "R{:03}", std::uniform_int_distribution<int>{1, cfg.n_routes}(rng)));
      }
      add_stop(fmt::format("S{:05}", i + 1), p, std::move(routes));
    }
    index.emplace(base_pts, cfg.extent_min, cfg.extent_max, 250.0);
  }

  // Anchor stop for a plan endpoint.
  std::size_t anchor_stop(point p, rng_t& rng) {
    if (cfg.exact_jitter_stops) {
      return add_stop(fmt::format("J{:06}", ++jitter_stops), p,
                      {fmt::format("R{:03}", std::uniform_int_distribution<int>{
                                                 1, cfg.n_routes}(rng))});
    }
    return index->nearest(p);
  }

  std::size_t endpoint(std::size_t anchor, double jitter, double anchor_share,
                       rng_t& rng) {
    if (jitter <= 0.0 || uniform(rng, 0.0, 1.0) < anchor_share) {
      return anchor;
    }
    auto const p = sample_disc(rng, where(anchor), jitter);
    return anchor_stop(p, rng);
  }

  std::string const& pick_route(std::size_t stop, rng_t& rng) const {
    auto const& r = stop_routes[stop];
    return r[std::uniform_int_distribution<std::size_t>{0, r.size() - 1}(rng)];
  }

  void emit_rider(rider_plan const& plan, std::uint64_t rider_no) {
    auto rng = stream(cfg.seed, 1000 + rider_no);
    auto const home = anchor_stop(plan.home, rng);
    auto const work = anchor_stop(plan.work, rng);
    auto const speed = cfg.speed_kmh / 3.6;
    auto const ride_s = kAccessOverheadS +
                        static_cast<int>(std::lround(distance(where(home), where(work)) / speed));

    for (auto const per : {peak_period::morning, peak_period::evening}) {
      auto const morning = per == peak_period::morning;
      auto const n = morning ? plan.morning_trips : plan.evening_trips;
      std::vector<int> days(static_cast<std::size_t>(cfg.study_days));
      std::iota(days.begin(), days.end(), 0);
      std::shuffle(days.begin(), days.end(), rng);
      days.resize(static_cast<std::size_t>(std::min(n, cfg.study_days)));
      std::sort(days.begin(), days.end());

      for (auto day : days) {
        auto const from = morning ? home : work;
        auto const to = morning ? work : home;
        auto const from_jitter = morning ? plan.home_jitter_m : plan.work_jitter_m;
        auto const to_jitter = morning ? plan.work_jitter_m : plan.home_jitter_m;
        auto const o = endpoint(from, from_jitter, plan.anchor_share, rng);
        auto const d = endpoint(to, to_jitter, plan.anchor_share, rng);
        auto const base = morning ? plan.morning_base_s : plan.evening_base_s;
        auto const start =
            base + static_cast<int>(std::lround(
                       uniform(rng, -plan.time_spread_h, plan.time_spread_h) * 3600.0));
        auto const end = start + ride_s;

        auto const date = date_of(day);
        auto const transfer = uniform(rng, 0.0, 1.0) < cfg.transfer_share;
        std::optional<std::size_t> mid;
        if (transfer && ride_s >= 600 && !cfg.exact_jitter_stops) {
          auto const a = where(o);
          auto const b = where(d);
          auto const m = index->nearest({(a.x + b.x) / 2, (a.y + b.y) / 2});
          if (m != o && m != d) {
            mid = m;
          }
        }
        if (mid) {
          auto const gap = std::uniform_int_distribution<int>{60, 300}(rng);
          auto const leg1_end = start + (ride_s - gap) / 2;
          city.transactions.push_back({plan.card_id, date, start, leg1_end,
                                       stop_ids[o], stop_ids[*mid], pick_route(o, rng)});
          city.transactions.push_back({plan.card_id, date, leg1_end + gap, end,
                                       stop_ids[*mid], stop_ids[d],
                                       pick_route(*mid, rng)});
        } else {
          city.transactions.push_back(
              {plan.card_id, date, start, end, stop_ids[o], stop_ids[d], pick_route(o, rng)});
        }
      }
    }
  }
};

int clamp_trips(double level, rng_t& rng, int days) {
  auto const n = static_cast<int>(std::lround(level + uniform(rng, -1.0, 1.0)));
  return std::clamp(n, kDefaultMinTrips, days);
}

}  // namespace

void synth_config::validate() const {
  if (n_riders < 0 || n_stops < 1 || n_routes < 1) {
    throw config_error{"synth: need n_riders >= 0, n_stops >= 1, n_routes >= 1"};
  }
  if (!(extent_max.x > extent_min.x) || !(extent_max.y > extent_min.y)) {
    throw config_error{"synth: empty study extent"};
  }
  auto const area = (extent_max.x - extent_min.x) * (extent_max.y - extent_min.y);
  if (area / n_stops < kMinAreaPerStopM2) {
    throw config_error{fmt::format(
        "synth: extent of {} m2 too small for {} stops (need {} m2 per stop)", area,
        n_stops, kMinAreaPerStopM2)};
  }
  if (!(cell_size > 0.0)) {
    throw config_error{"synth: cell_size must be > 0"};
  }
  if (n_centres < 1 || n_subcentres < 1) {
    throw config_error{"synth: need at least one centre and one subcentre"};
  }
  if (study_days < 1 || study_days > 30) {
    throw config_error{"synth: study_days must be in [1, 30]"};
  }
  if (fixed_trip_count && (*fixed_trip_count < 1 || *fixed_trip_count > study_days)) {
    throw config_error{"synth: fixed_trip_count must be in [1, study_days]"};
  }
  if (explicit_riders.empty() && n_riders > 0 &&
      (residential_cells < 1 || employment_cells < 1)) {
    throw config_error{"synth: need residential and employment cells"};
  }
  if (!(freq_min <= freq_max) || !(anchor_share >= 0.0 && anchor_share <= 1.0) ||
      !(transfer_share >= 0.0 && transfer_share <= 1.0) || !(speed_kmh > 0.0)) {
    throw config_error{"synth: bad frequency range, shares or speed"};
  }
}

synth_city generate_city(synth_config const& cfg) {
  cfg.validate();
  synth_city city;
  city.grid = grid_spec::covering(cfg.extent_min, cfg.extent_max, cfg.cell_size);
  city_builder b{cfg, city, {}, {}, {}, {}, {}, 0};

  auto rng = stream(cfg.seed, 0);
  b.place_stops(rng);

  auto const centre_draw = [&](double inset) {
    auto const w = cfg.extent_max.x - cfg.extent_min.x;
    auto const h = cfg.extent_max.y - cfg.extent_min.y;
    return point{uniform(rng, cfg.extent_min.x + inset * w, cfg.extent_max.x - inset * w),
                 uniform(rng, cfg.extent_min.y + inset * h, cfg.extent_max.y - inset * h)};
  };
  for (int i = 0; i < cfg.n_centres; ++i) {
    city.centres.centres.push_back(centre_draw(0.25));
  }
  for (int i = 0; i < cfg.n_subcentres; ++i) {
    city.centres.subcentres.push_back(centre_draw(0.05));
  }

  // Cells holding at least one base stop.
  std::map<cell_id, std::vector<std::size_t>> stops_in_cell;
  for (std::size_t i = 0; i < b.base_pts.size(); ++i) {
    if (auto const c = assign_grid(b.base_pts[i], city.grid)) {
      stops_in_cell[*c].push_back(i);
    }
  }
  std::vector<cell_id> served;
  for (auto const& [c, s] : stops_in_cell) {
    served.push_back(c);
  }

  std::map<cell_id, double> freq_level;
  if (!cfg.explicit_riders.empty()) {
    city.riders = cfg.explicit_riders;
  } else if (cfg.n_riders > 0) {
    if (static_cast<std::size_t>(std::max(cfg.residential_cells, cfg.employment_cells)) >
        served.size()) {
      throw config_error{fmt::format("synth: only {} cells have stops", served.size())};
    }
    auto residential = served;
    std::shuffle(residential.begin(), residential.end(), rng);
    residential.resize(static_cast<std::size_t>(cfg.residential_cells));
    std::sort(residential.begin(), residential.end());
    auto employment = served;
    std::shuffle(employment.begin(), employment.end(), rng);
    employment.resize(static_cast<std::size_t>(cfg.employment_cells));
    std::sort(employment.begin(), employment.end());
    for (auto const& c : residential) {
      freq_level[c] = uniform(rng, cfg.freq_min, cfg.freq_max);
    }

    auto const k_sv = spatial_spread_constant(cfg.anchor_share);
    auto const random_stop_in = [&](cell_id c, rng_t& r) {
      auto const& list = stops_in_cell.at(c);
      return b.base_pts[list[std::uniform_int_distribution<std::size_t>{
          0, list.size() - 1}(r)]];
    };
    for (int i = 0; i < cfg.n_riders; ++i) {
      auto r = stream(cfg.seed, 500, static_cast<std::uint64_t>(i));
      rider_plan p;
      p.card_id = fmt::format("C{:07}", i + 1);
      p.home_cell = residential[static_cast<std::size_t>(i) % residential.size()];
      p.home = random_stop_in(p.home_cell, r);
      auto const target = sample_disc(r, p.home, cfg.work_radius_m);
      auto const work_cell = *std::min_element(
          employment.begin(), employment.end(), [&](cell_id const& a, cell_id const& c) {
            return distance(city.grid.centroid(a), target) <
                   distance(city.grid.centroid(c), target);
          });
      p.work = random_stop_in(work_cell, r);

      p.freq_level = freq_level.at(p.home_cell);
      p.subcentre_km =
          nearest_distance_km(city.grid.centroid(p.home_cell), city.centres.subcentres);
      std::normal_distribution<double> noise{0.0, cfg.effects.rider_noise};
      p.sv_target = cfg.effects.sv(p.freq_level) * std::exp(noise(r));
      p.tv_target = cfg.effects.tv(p.subcentre_km) * std::exp(noise(r));
      p.morning_trips = cfg.fixed_trip_count.value_or(
          clamp_trips(p.freq_level, r, cfg.study_days));
      p.evening_trips = cfg.fixed_trip_count.value_or(
          clamp_trips(p.freq_level, r, cfg.study_days));
      p.home_jitter_m = p.sv_target / k_sv;
      p.work_jitter_m = p.home_jitter_m;
      p.anchor_share = cfg.anchor_share;
      p.time_spread_h = std::min(kMaxTimeSpreadH, p.tv_target / kTvPerSpread);
      p.morning_base_s = 8 * 3600 + std::uniform_int_distribution<int>{-180, 180}(r);
      p.evening_base_s = 18 * 3600 + std::uniform_int_distribution<int>{-180, 180}(r);
      city.riders.push_back(std::move(p));
    }
  }

  for (std::size_t i = 0; i < city.riders.size(); ++i) {
    b.emit_rider(city.riders[i], i);
  }

  // Faults go on their own cards so planted riders stay intact.
  auto frng = stream(cfg.seed, 2);
  auto const n_valid = city.transactions.size();
  auto const n_bad_duration =
      static_cast<std::size_t>(std::lround(cfg.faults.bad_duration_share * n_valid));
  for (std::size_t i = 0; i < n_bad_duration; ++i) {
    auto const s = std::uniform_int_distribution<std::size_t>{0, b.base_pts.size() - 1}(frng);
    auto const e = (s + 1) % b.base_pts.size();
    auto const start = 7 * 3600 + 600 + static_cast<int>(i % 3000);
    auto const dur = i % 2 == 0 ? 30 : 4 * 3600;
    city.transactions.push_back({fmt::format("F{:07}", i + 1), date_of(static_cast<int>(i % 28)),
                                 start, start + dur, b.stop_ids[s], b.stop_ids[e],
                                 b.stop_routes[s].front()});
  }
  auto const n_malformed =
      static_cast<std::size_t>(std::lround(cfg.faults.malformed_share * n_valid));
  for (std::size_t i = 0; i < n_malformed; ++i) {
    switch (i % 4) {
      case 0:
        city.fault_rows.push_back(fmt::format("M{:07},2016-06-01,07:10:00", i));
        break;
      case 1:
        city.fault_rows.push_back(fmt::format(
            "M{:07},2016-06-01,07:61:00,07:30:00,{},{},R001", i, b.stop_ids[0], b.stop_ids[1]));
        break;
      case 2:
        city.fault_rows.push_back(fmt::format(
            "M{:07},2016-06-01,08:00:00,07:30:00,{},{},R001", i, b.stop_ids[0], b.stop_ids[1]));
        break;
      default:
        city.fault_rows.push_back(
            fmt::format("M{:07},2016-06-01,07:10:00,07:30:00,NOSTOP,{},R001", i, b.stop_ids[1]));
        break;
    }
  }

  // Raw per-cell inputs carry no planted signal.
  auto crng = stream(cfg.seed, 3);
  for (int row = 0; row < city.grid.n_rows; ++row) {
    for (int col = 0; col < city.grid.n_cols; ++col) {
      cell_inputs in;
      in.values["metrosta"] = std::poisson_distribution<int>{0.8}(crng);
      in.values["popden"] = uniform(crng, 20000.0, 110000.0);
      in.values["roadden"] = uniform(crng, 5.0, 28.0);
      auto const price = uniform(crng, 30000.0, 110000.0);
      if (uniform(crng, 0.0, 1.0) >= 0.05) {
        in.values["houseprice"] = price;
      }
      in.values["female"] = uniform(crng, 40.0, 52.0);
      in.values["juveni"] = uniform(crng, 1.0, 5.0);
      in.values["oldage"] = uniform(crng, 2.0, 10.0);
      for (auto const& [cat, mean] :
           {std::pair{"eat", 28.0}, std::pair{"recrea", 45.0}, std::pair{"dailyser", 45.0},
            std::pair{"finan", 5.0}, std::pair{"cult", 12.0}, std::pair{"health", 8.0},
            std::pair{"retail", 30.0}}) {
        in.poi[cat] = std::poisson_distribution<long long>{mean}(crng);
      }
      city.cells[{col, row}] = std::move(in);
    }
  }

  auto& gt = city.ground_truth;
  gt["seed"] = cfg.seed;
  gt["n_riders"] = city.riders.size();
  gt["planted"] = {
      {"sv",
       {{"driver", "tripfreq"},
        {"shape", "convex"},
        {"base", cfg.effects.sv_base},
        {"curvature", cfg.effects.sv_curvature},
        {"vertex", cfg.effects.sv_vertex}}},
      {"tv",
       {{"driver", "subcendist"},
        {"shape", "decreasing"},
        {"intercept", cfg.effects.tv_intercept},
        {"slope", cfg.effects.tv_slope},
        {"floor", cfg.effects.tv_floor}}},
      {"rider_noise", cfg.effects.rider_noise}};
  auto riders = nlohmann::json::array();
  for (auto const& p : city.riders) {
    riders.push_back({{"card_id", p.card_id},
                      {"home_cell", {p.home_cell.col, p.home_cell.row}},
                      {"freq_level", p.freq_level},
                      {"subcentre_km", p.subcentre_km},
                      {"sv_target_m", p.sv_target},
                      {"tv_target_h", p.tv_target},
                      {"jitter_m", p.home_jitter_m},
                      {"time_spread_h", p.time_spread_h},
                      {"morning_trips", p.morning_trips},
                      {"evening_trips", p.evening_trips}});
  }
  gt["riders"] = std::move(riders);
  auto cells = nlohmann::json::array();
  for (auto const& [c, f] : freq_level) {
    cells.push_back({{"col", c.col}, {"row", c.row}, {"freq_level", f}});
  }
  gt["residential_cells"] = std::move(cells);
  gt["faults"] = {{"malformed_rows", city.fault_rows.size()},
                  {"bad_duration_legs", n_bad_duration}};
  return city;
}

std::string format_transactions(std::vector<transaction> const& rows,
                                std::vector<std::string> const& fault_rows) {
  std::string out{kTransactionHeader};
  out += '\n';
  out.reserve(rows.size() * 64);
  std::size_t next_fault = 0;
  auto const n = rows.size();
  auto const m = fault_rows.size();
  for (std::size_t i = 0; i <= n; ++i) {
    while (next_fault < m && (next_fault + 1) * n / (m + 1) <= i) {
      out += fault_rows[next_fault++];
      out += '\n';
    }
    if (i == n) {
      break;
    }
    auto const& t = rows[i];
    fmt::format_to(std::back_inserter(out), "{},{},{},{},{},{},{}\n", t.card_id,
                   t.service_date, format_clock(t.board_time), format_clock(t.alight_time),
                   t.board_stop, t.alight_stop, t.route);
  }
  return out;
}

std::string format_stops(stop_registry const& stops) {
  std::string out = "stop_id,x_m,y_m\n";
  for (auto const& id : stops.ids()) {
    auto const p = *stops.find(id);
    fmt::format_to(std::back_inserter(out), "{},{},{}\n", id, p.x, p.y);
  }
  return out;
}

std::string format_centres(centre_set const& centres) {
  std::string out = "kind,x_m,y_m\n";
  for (auto const& p : centres.centres) {
    fmt::format_to(std::back_inserter(out), "centre,{},{}\n", p.x, p.y);
  }
  for (auto const& p : centres.subcentres) {
    fmt::format_to(std::back_inserter(out), "subcentre,{},{}\n", p.x, p.y);
  }
  return out;
}

std::string format_cell_inputs(raw_cell_table const& cells) {
  static constexpr std::string_view kValueCols[] = {
      "metrosta", "popden", "roadden", "houseprice", "female", "juveni", "oldage"};
  std::set<std::string> poi_cols;
  for (auto const& [c, in] : cells) {
    for (auto const& [cat, n] : in.poi) {
      poi_cols.insert(cat);
    }
  }
  std::string out = "col,row";
  for (auto c : kValueCols) {
    out += ',';
    out += c;
  }
  for (auto const& c : poi_cols) {
    out += ",poi_" + c;
  }
  out += '\n';
  for (auto const& [c, in] : cells) {
    fmt::format_to(std::back_inserter(out), "{},{}", c.col, c.row);
    for (auto name : kValueCols) {
      out += ',';
      if (auto const it = in.values.find(std::string{name}); it != in.values.end()) {
        out += csv::format_double(it->second);
      }
    }
    for (auto const& cat : poi_cols) {
      out += ',';
      if (auto const it = in.poi.find(cat); it != in.poi.end()) {
        out += std::to_string(it->second);
      }
    }
    out += '\n';
  }
  return out;
}

synth_paths write_city(synth_city const& city, std::filesystem::path const& dir) {
  std::filesystem::create_directories(dir);
  synth_paths p{dir / "transactions.csv", dir / "stops.csv", dir / "centres.csv",
                dir / "cells.csv", dir / "ground_truth.json"};
  csv::write_file(p.transactions, format_transactions(city.transactions, city.fault_rows));
  csv::write_file(p.stops, format_stops(city.stops));
  csv::write_file(p.centres, format_centres(city.centres));
  csv::write_file(p.cells, format_cell_inputs(city.cells));
  csv::write_file(p.ground_truth, city.ground_truth.dump(1) + "\n");
  return p;
}

}  // namespace busvar
