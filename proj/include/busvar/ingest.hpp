#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "busvar/common.hpp"

namespace busvar {

// One smart-card tap pair: boarding and alighting of a single bus leg.
struct transaction {
  std::string card_id;
  std::string service_date;
  int board_time{0};   // seconds since midnight
  int alight_time{0};  // seconds since midnight
  std::string board_stop;
  std::string alight_stop;
  std::string route;
};

// Mean Earth radius used by the equirectangular helper, metres.
inline constexpr double kEarthRadiusM = 6371008.8;

// Equirectangular projection of (lon, lat) degrees to metres about a
// reference point. Adequate at city scale.
point project_equirectangular(double lon, double lat, double ref_lon,
                              double ref_lat);

struct stop_projection {
  double ref_lon{0.0};
  double ref_lat{0.0};
};

class stop_registry {
public:
  // Throws invalid_input on a duplicate id or non-finite coordinates.
  void add(std::string id, point p);

  point const* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }
  std::size_t size() const { return ids_.size(); }

  // Ids in insertion order.
  std::vector<std::string> const& ids() const { return ids_; }

private:
  struct string_hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::unordered_map<std::string, point, string_hash, std::equal_to<>> stops_;
  std::vector<std::string> ids_;
};

// `stop_id,x_m,y_m`, or `stop_id,lon,lat` when a projection is given.
stop_registry parse_stops(std::string_view text,
                          std::optional<stop_projection> projection = {});
stop_registry read_stops(std::filesystem::path const& path,
                         std::optional<stop_projection> projection = {});

// "HH:MM:SS" to seconds since midnight; hours up to 47 for after-midnight
// service.
std::optional<int> parse_clock(std::string_view s);
std::string format_clock(int seconds);

struct parse_stats {
  std::size_t rows{0};
  std::size_t accepted{0};
  std::size_t malformed{0};     // field count, empty ids, bad clock strings
  std::size_t bad_time{0};      // board_time >= alight_time
  std::size_t unknown_stop{0};  // stop id absent from the registry

  std::size_t skipped() const { return malformed + bad_time + unknown_stop; }
  parse_stats& operator+=(parse_stats const& o);
};

struct parsed_transactions {
  std::vector<transaction> rows;
  parse_stats stats;
};

inline constexpr std::string_view kTransactionHeader =
    "card_id,date,board_time,alight_time,board_stop,alight_stop,route";

// Parses the transaction table (header row first, columns located by name).
// Invalid rows are skipped and counted; valid rows keep input order
// regardless of `threads`.
parsed_transactions parse_transactions(std::string_view text,
                                       stop_registry const& stops,
                                       unsigned threads = 1);
parsed_transactions read_transactions(std::filesystem::path const& path,
                                      stop_registry const& stops,
                                      unsigned threads = 1);

// A chained journey. Times are whole seconds since local midnight; the
// fractional-hour views are what the variability indices consume.
struct trip {
  std::string card_id;
  std::string service_date;
  std::string origin_stop;
  std::string destination_stop;
  point origin;
  point destination;
  int start_s{0};
  int end_s{0};
  int leg_count{1};

  double start_h() const { return start_s / 3600.0; }
  double end_h() const { return end_s / 3600.0; }
  double duration_h() const { return (end_s - start_s) / 3600.0; }
};

struct chain_result {
  std::vector<trip> trips;
  std::size_t anomalies{0};  // overlapping legs (negative gap)
};

inline constexpr int kDefaultTransferThresholdS = 30 * 60;

// Chains one card's legs, sorted by (service_date, board_time). A leg joins
// the current trip when it is on the same service date and
// 0 <= board_time - previous alight_time <= threshold.
chain_result chain_trips(std::span<transaction const> legs,
                         stop_registry const& stops,
                         int transfer_threshold_s = kDefaultTransferThresholdS);

struct duration_bounds {
  int min_s{60};
  int max_s{3 * 3600};
};

struct filter_result {
  std::vector<trip> trips;
  std::size_t too_short{0};
  std::size_t too_long{0};
};

// Removes trips shorter than min_s or longer than max_s; both bounds are
// themselves allowed.
filter_result filter_trips(std::vector<trip> trips,
                           duration_bounds const& bounds = {});

// Half-open [start_s, end_s) clock window.
struct time_window {
  int start_s{0};
  int end_s{0};

  bool contains(int s) const { return s >= start_s && s < end_s; }
};

struct period_windows {
  time_window morning{7 * 3600, 9 * 3600};
  time_window evening{17 * 3600, 19 * 3600};

  time_window const& operator[](peak_period p) const {
    return p == peak_period::morning ? morning : evening;
  }
};

// Parses "HH:MM-HH:MM" (either '-' or en dash accepted).
time_window parse_window(std::string_view s);

// A rider's trips starting inside one peak window.
struct period_trip_set {
  std::string card_id;
  peak_period period{peak_period::morning};
  std::vector<trip> trips;
};

struct selection_stats {
  std::size_t riders{0};
  std::size_t trips_outside{0};
  std::size_t sets{0};
  std::size_t below_min_trips{0};  // (rider, period) pairs dropped

  selection_stats& operator+=(selection_stats const& o);
};

inline constexpr int kDefaultMinTrips = 4;

// Groups trips by card and assigns each to the window containing its start.
// Output is ordered by card_id, then morning before evening; trips within a
// set by (service_date, start).
std::vector<period_trip_set> select_period(std::span<trip const> trips,
                                           period_windows const& windows = {},
                                           int min_trips = kDefaultMinTrips,
                                           selection_stats* stats = nullptr);

struct ingest_config {
  int transfer_threshold_s{kDefaultTransferThresholdS};
  duration_bounds durations;
  period_windows windows;
  int min_trips{kDefaultMinTrips};
};

struct ingest_stats {
  std::size_t cards{0};
  std::size_t legs{0};
  std::size_t trips_chained{0};
  std::size_t chain_anomalies{0};
  std::size_t too_short{0};
  std::size_t too_long{0};
  selection_stats selection;

  ingest_stats& operator+=(ingest_stats const& o);
};

struct ingest_result {
  std::vector<period_trip_set> sets;
  ingest_stats stats;
};

// chain -> filter -> select for every card. Cards are hash-partitioned over
// `threads` workers; the result is ordered by (card_id, period) whatever the
// thread count.
ingest_result build_period_sets(std::span<transaction const> transactions,
                                stop_registry const& stops,
                                ingest_config const& config = {},
                                unsigned threads = 1);

// Distinct routes observed boarding or alighting at each stop.
std::map<std::string, std::set<std::string>> routes_by_stop(
    std::span<transaction const> transactions);

}  // namespace busvar
