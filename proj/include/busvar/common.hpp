#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace busvar {

// Planar coordinates in metres.
struct point {
  double x{0.0};
  double y{0.0};

  friend bool operator==(point const&, point const&) = default;
};

inline double distance(point const& a, point const& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

enum class peak_period { morning, evening };
enum class anchor_role { origin, destination };
enum class variability_target { sv, tv };

inline std::string_view to_string(peak_period p) {
  return p == peak_period::morning ? "morning" : "evening";
}
inline std::string_view to_string(anchor_role r) {
  return r == anchor_role::origin ? "origin" : "destination";
}
inline std::string_view to_string(variability_target t) {
  return t == variability_target::sv ? "sv" : "tv";
}

// Inverse of to_string; throw invalid_input on unknown names.
peak_period parse_period(std::string_view s);
anchor_role parse_anchor_role(std::string_view s);
variability_target parse_target(std::string_view s);

// Base of every error the library raises.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Input outside an operation's domain (n < 2 trips, all-zero counts, ...).
class invalid_input : public error {
public:
  using error::error;
};

// Statistic or model undefined for the given data (zero variance, all-zero
// attributions).
class degenerate_input : public error {
public:
  using error::error;
};

class config_error : public error {
public:
  using error::error;
};

class io_error : public error {
public:
  using error::error;
};

}  // namespace busvar
