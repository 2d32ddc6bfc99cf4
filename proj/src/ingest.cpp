#include "busvar/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <tuple>

#include <fmt/format.h>

#include "busvar/csv.hpp"
#include "busvar/parallel.hpp"

namespace busvar {

peak_period parse_period(std::string_view s) {
  if (s == "morning") {
    return peak_period::morning;
  }
  if (s == "evening") {
    return peak_period::evening;
  }
  throw invalid_input{fmt::format("unknown period '{}'", s)};
}

anchor_role parse_anchor_role(std::string_view s) {
  if (s == "origin") {
    return anchor_role::origin;
  }
  if (s == "destination") {
    return anchor_role::destination;
  }
  throw invalid_input{fmt::format("unknown role '{}'", s)};
}

variability_target parse_target(std::string_view s) {
  if (s == "sv" || s == "SV") {
    return variability_target::sv;
  }
  if (s == "tv" || s == "TV") {
    return variability_target::tv;
  }
  throw invalid_input{fmt::format("unknown target '{}'", s)};
}

point project_equirectangular(double lon, double lat, double ref_lon,
                              double ref_lat) {
  constexpr auto kDeg = std::numbers::pi / 180.0;
  return {kEarthRadiusM * (lon - ref_lon) * kDeg * std::cos(ref_lat * kDeg),
          kEarthRadiusM * (lat - ref_lat) * kDeg};
}

void stop_registry::add(std::string id, point p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw invalid_input{fmt::format("stop '{}': non-finite coordinates", id)};
  }
  if (stops_.contains(id)) {
    throw invalid_input{fmt::format("duplicate stop id '{}'", id)};
  }
  stops_.emplace(id, p);
  ids_.push_back(std::move(id));
}

point const* stop_registry::find(std::string_view id) const {
  auto const it = stops_.find(id);
  return it == stops_.end() ? nullptr : &it->second;
}

stop_registry parse_stops(std::string_view text,
                          std::optional<stop_projection> projection) {
  auto const t = csv::parse_table(text);
  auto const id_col = t.require_column("stop_id");
  auto const a_col = t.require_column(projection ? "lon" : "x_m");
  auto const b_col = t.require_column(projection ? "lat" : "y_m");
  stop_registry reg;
  for (auto const& row : t.rows) {
    auto const a = csv::parse_double(row[a_col]);
    auto const b = csv::parse_double(row[b_col]);
    if (row[id_col].empty() || !a || !b) {
      throw invalid_input{fmt::format("stop '{}': bad coordinates", row[id_col])};
    }
    auto const p = projection ? project_equirectangular(*a, *b, projection->ref_lon,
                                                        projection->ref_lat)
                              : point{*a, *b};
    reg.add(row[id_col], p);
  }
  return reg;
}

stop_registry read_stops(std::filesystem::path const& path,
                         std::optional<stop_projection> projection) {
  return parse_stops(csv::read_file(path), projection);
}

std::optional<int> parse_clock(std::string_view s) {
  auto const parts = csv::split(s, ':');
  if (parts.size() != 3) {
    return std::nullopt;
  }
  auto const h = csv::parse_int(parts[0]);
  auto const m = csv::parse_int(parts[1]);
  auto const sec = csv::parse_int(parts[2]);
  if (!h || !m || !sec || *h < 0 || *h > 47 || *m < 0 || *m > 59 ||
      *sec < 0 || *sec > 59) {
    return std::nullopt;
  }
  return static_cast<int>(*h * 3600 + *m * 60 + *sec);
}

std::string format_clock(int seconds) {
  return fmt::format("{:02}:{:02}:{:02}", seconds / 3600, seconds / 60 % 60,
                     seconds % 60);
}

parse_stats& parse_stats::operator+=(parse_stats const& o) {
  rows += o.rows;
  accepted += o.accepted;
  malformed += o.malformed;
  bad_time += o.bad_time;
  unknown_stop += o.unknown_stop;
  return *this;
}

namespace {

struct column_map {
  std::size_t card, date, board_time, alight_time, board_stop, alight_stop,
      route, width;
};

column_map map_columns(std::string_view header) {
  auto const names = csv::split(header);
  auto const find = [&](std::string_view name) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) {
        return i;
      }
    }
    throw invalid_input{
        fmt::format("transactions: missing column '{}' (expected header {})",
                    name, kTransactionHeader)};
  };
  return {find("card_id"),    find("date"),        find("board_time"),
          find("alight_time"), find("board_stop"), find("alight_stop"),
          find("route"),       names.size()};
}

void parse_chunk(std::string_view text, column_map const& cols,
                 stop_registry const& stops, std::vector<transaction>& out,
                 parse_stats& stats) {
  std::vector<std::string_view> f;
  csv::for_each_line(text, [&](std::string_view line) {
    if (line.empty() || line == "\r") {
      return;
    }
    ++stats.rows;
    csv::split_into(line, f);
    if (f.size() != cols.width) {
      ++stats.malformed;
      return;
    }
    auto const board = parse_clock(f[cols.board_time]);
    auto const alight = parse_clock(f[cols.alight_time]);
    if (!board || !alight || f[cols.card].empty() || f[cols.date].empty() ||
        f[cols.board_stop].empty() || f[cols.alight_stop].empty()) {
      ++stats.malformed;
      return;
    }
    if (*board >= *alight) {
      ++stats.bad_time;
      return;
    }
    if (!stops.contains(f[cols.board_stop]) ||
        !stops.contains(f[cols.alight_stop])) {
      ++stats.unknown_stop;
      return;
    }
    ++stats.accepted;
    out.push_back(transaction{std::string{f[cols.card]},
                              std::string{f[cols.date]}, *board, *alight,
                              std::string{f[cols.board_stop]},
                              std::string{f[cols.alight_stop]},
                              std::string{f[cols.route]}});
  });
}

}  // namespace

parsed_transactions parse_transactions(std::string_view text,
                                       stop_registry const& stops,
                                       unsigned threads) {
  auto const header_end = text.find('\n');
  auto const header = text.substr(0, header_end);
  if (header.empty()) {
    throw invalid_input{"transactions: missing header row"};
  }
  auto const cols = map_columns(header.back() == '\r'
                                    ? header.substr(0, header.size() - 1)
                                    : header);
  auto const body = header_end == std::string_view::npos
                        ? std::string_view{}
                        : text.substr(header_end + 1);

  // Chunk boundaries snap forward to the next line start.
  auto const blocks = block_count(body.size() / 4096 + 1, threads);
  std::vector<std::size_t> cuts(blocks + 1, body.size());
  cuts[0] = 0;
  for (std::size_t b = 1; b < blocks; ++b) {
    auto const guess = std::max(cuts[b - 1], body.size() * b / blocks);
    auto const nl = guess == 0 ? 0 : body.find('\n', guess - 1);
    cuts[b] = nl == std::string_view::npos ? body.size() : nl + 1;
  }

  std::vector<std::vector<transaction>> parts(blocks);
  std::vector<parse_stats> part_stats(blocks);
  parallel_for(blocks, threads, [&](std::size_t b) {
    parse_chunk(body.substr(cuts[b], cuts[b + 1] - cuts[b]), cols, stops,
                parts[b], part_stats[b]);
  });

  parsed_transactions result;
  auto const total = std::accumulate(
      parts.begin(), parts.end(), std::size_t{0},
      [](std::size_t n, auto const& p) { return n + p.size(); });
  result.rows.reserve(total);
  for (std::size_t b = 0; b < blocks; ++b) {
    std::move(parts[b].begin(), parts[b].end(), std::back_inserter(result.rows));
    result.stats += part_stats[b];
  }
  return result;
}

parsed_transactions read_transactions(std::filesystem::path const& path,
                                      stop_registry const& stops,
                                      unsigned threads) {
  return parse_transactions(csv::read_file(path), stops, threads);
}

chain_result chain_trips(std::span<transaction const> legs,
                         stop_registry const& stops, int transfer_threshold_s) {
  chain_result out;
  auto const coords = [&](std::string const& id) {
    auto const* p = stops.find(id);
    if (p == nullptr) {
      throw invalid_input{fmt::format("stop '{}' not in registry", id)};
    }
    return *p;
  };
  auto const open_trip = [&](transaction const& t) {
    out.trips.push_back(trip{t.card_id, t.service_date, t.board_stop,
                             t.alight_stop, coords(t.board_stop),
                             coords(t.alight_stop), t.board_time,
                             t.alight_time, 1});
  };

  transaction const* prev = nullptr;
  for (auto const& leg : legs) {
    if (prev == nullptr || leg.service_date != prev->service_date ||
        leg.card_id != prev->card_id) {
      open_trip(leg);
      prev = &leg;
      continue;
    }
    auto const gap = leg.board_time - prev->alight_time;
    if (gap < 0) {
      ++out.anomalies;
      open_trip(leg);
    } else if (gap <= transfer_threshold_s) {
      auto& cur = out.trips.back();
      cur.destination_stop = leg.alight_stop;
      cur.destination = coords(leg.alight_stop);
      cur.end_s = leg.alight_time;
      ++cur.leg_count;
    } else {
      open_trip(leg);
    }
    prev = &leg;
  }
  return out;
}

filter_result filter_trips(std::vector<trip> trips,
                           duration_bounds const& bounds) {
  filter_result out;
  out.trips.reserve(trips.size());
  for (auto& t : trips) {
    auto const d = t.end_s - t.start_s;
    if (d < bounds.min_s) {
      ++out.too_short;
    } else if (d > bounds.max_s) {
      ++out.too_long;
    } else {
      out.trips.push_back(std::move(t));
    }
  }
  return out;
}

time_window parse_window(std::string_view s) {
  auto parse_hm = [&](std::string_view hm) -> int {
    auto const parts = csv::split(hm, ':');
    auto const h = parts.empty() ? std::nullopt : csv::parse_int(parts[0]);
    auto const m = parts.size() == 2 ? csv::parse_int(parts[1]) : std::nullopt;
    if (!h || !m || *h < 0 || *h > 48 || *m < 0 || *m > 59) {
      throw config_error{fmt::format("bad window '{}' (want HH:MM-HH:MM)", s)};
    }
    return static_cast<int>(*h * 3600 + *m * 60);
  };
  std::string_view sep = "-";
  auto pos = s.find(sep);
  if (auto const en = s.find("–"); en != std::string_view::npos) {
    sep = "–";
    pos = en;
  }
  if (pos == std::string_view::npos) {
    throw config_error{fmt::format("bad window '{}' (want HH:MM-HH:MM)", s)};
  }
  time_window w{parse_hm(s.substr(0, pos)), parse_hm(s.substr(pos + sep.size()))};
  if (w.start_s >= w.end_s) {
    throw config_error{fmt::format("empty window '{}'", s)};
  }
  return w;
}

selection_stats& selection_stats::operator+=(selection_stats const& o) {
  riders += o.riders;
  trips_outside += o.trips_outside;
  sets += o.sets;
  below_min_trips += o.below_min_trips;
  return *this;
}

namespace {

// Selection for trips that all belong to one card.
void select_card(std::vector<trip const*>& card_trips,
                 period_windows const& windows, int min_trips,
                 std::vector<period_trip_set>& out, selection_stats& stats) {
  std::stable_sort(card_trips.begin(), card_trips.end(),
                   [](trip const* a, trip const* b) {
                     return std::tie(a->service_date, a->start_s, a->end_s) <
                            std::tie(b->service_date, b->start_s, b->end_s);
                   });
  ++stats.riders;
  period_trip_set sets[2] = {
      {card_trips.front()->card_id, peak_period::morning, {}},
      {card_trips.front()->card_id, peak_period::evening, {}}};
  for (auto const* t : card_trips) {
    if (windows.morning.contains(t->start_s)) {
      sets[0].trips.push_back(*t);
    } else if (windows.evening.contains(t->start_s)) {
      sets[1].trips.push_back(*t);
    } else {
      ++stats.trips_outside;
    }
  }
  for (auto& s : sets) {
    if (s.trips.empty()) {
      continue;
    }
    if (static_cast<int>(s.trips.size()) < min_trips) {
      ++stats.below_min_trips;
      continue;
    }
    ++stats.sets;
    out.push_back(std::move(s));
  }
}

}  // namespace

std::vector<period_trip_set> select_period(std::span<trip const> trips,
                                           period_windows const& windows,
                                           int min_trips,
                                           selection_stats* stats) {
  std::map<std::string_view, std::vector<trip const*>> by_card;
  for (auto const& t : trips) {
    by_card[t.card_id].push_back(&t);
  }
  std::vector<period_trip_set> out;
  selection_stats local;
  for (auto& [card, list] : by_card) {
    select_card(list, windows, min_trips, out, local);
  }
  if (stats != nullptr) {
    *stats += local;
  }
  return out;
}

ingest_stats& ingest_stats::operator+=(ingest_stats const& o) {
  cards += o.cards;
  legs += o.legs;
  trips_chained += o.trips_chained;
  chain_anomalies += o.chain_anomalies;
  too_short += o.too_short;
  too_long += o.too_long;
  selection += o.selection;
  return *this;
}

ingest_result build_period_sets(std::span<transaction const> transactions,
                                stop_registry const& stops,
                                ingest_config const& config, unsigned threads) {
  // Partition by card hash; each bucket is independent.
  auto const buckets = block_count(transactions.size(), threads) * 8;
  std::vector<std::vector<std::uint32_t>> members(buckets);
  {
    std::hash<std::string_view> h;
    for (std::uint32_t i = 0; i < transactions.size(); ++i) {
      members[h(transactions[i].card_id) % buckets].push_back(i);
    }
  }

  std::vector<std::vector<period_trip_set>> parts(buckets);
  std::vector<ingest_stats> part_stats(buckets);
  parallel_for(buckets, threads, [&](std::size_t b) {
    auto& idx = members[b];
    std::sort(idx.begin(), idx.end(), [&](std::uint32_t x, std::uint32_t y) {
      auto const& a = transactions[x];
      auto const& c = transactions[y];
      return std::tie(a.card_id, a.service_date, a.board_time, a.alight_time, x) <
             std::tie(c.card_id, c.service_date, c.board_time, c.alight_time, y);
    });
    auto& st = part_stats[b];
    std::vector<transaction> legs;
    std::vector<trip const*> ptrs;
    for (std::size_t i = 0; i < idx.size();) {
      auto j = i;
      legs.clear();
      while (j < idx.size() &&
             transactions[idx[j]].card_id == transactions[idx[i]].card_id) {
        legs.push_back(transactions[idx[j]]);
        ++j;
      }
      ++st.cards;
      st.legs += legs.size();
      auto chained = chain_trips(legs, stops, config.transfer_threshold_s);
      st.trips_chained += chained.trips.size();
      st.chain_anomalies += chained.anomalies;
      auto filtered = filter_trips(std::move(chained.trips), config.durations);
      st.too_short += filtered.too_short;
      st.too_long += filtered.too_long;
      if (!filtered.trips.empty()) {
        ptrs.clear();
        for (auto const& t : filtered.trips) {
          ptrs.push_back(&t);
        }
        select_card(ptrs, config.windows, config.min_trips, parts[b],
                    st.selection);
      }
      i = j;
    }
  });

  ingest_result result;
  for (std::size_t b = 0; b < buckets; ++b) {
    result.stats += part_stats[b];
    std::move(parts[b].begin(), parts[b].end(), std::back_inserter(result.sets));
  }
  std::sort(result.sets.begin(), result.sets.end(),
            [](period_trip_set const& a, period_trip_set const& b) {
              return std::tie(a.card_id, a.period) < std::tie(b.card_id, b.period);
            });
  return result;
}

std::map<std::string, std::set<std::string>> routes_by_stop(
    std::span<transaction const> transactions) {
  std::map<std::string, std::set<std::string>> out;
  for (auto const& t : transactions) {
    if (t.route.empty()) {
      continue;
    }
    out[t.board_stop].insert(t.route);
    out[t.alight_stop].insert(t.route);
  }
  return out;
}

}  // namespace busvar
