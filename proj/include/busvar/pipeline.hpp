#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "busvar/boosting.hpp"
#include "busvar/common.hpp"
#include "busvar/fusion.hpp"
#include "busvar/geostats.hpp"
#include "busvar/ingest.hpp"
#include "busvar/synth.hpp"

namespace busvar {

// One of the eight (target, period, role) models.
struct slice_spec {
  variability_target target{variability_target::sv};
  peak_period period{peak_period::morning};
  anchor_role role{anchor_role::origin};

  std::string name() const;  // e.g. "sv_morning_origin"
  friend bool operator==(slice_spec const&, slice_spec const&) = default;
};

// Throws config_error on anything but "<sv|tv>_<morning|evening>_<origin|destination>".
slice_spec parse_slice(std::string_view name);
std::vector<slice_spec> all_slices();

enum class stage { ingest, variability, fuse, moran, features, fit, explain };
std::string_view to_string(stage s);

struct pipeline_config {
  // Inputs. Relative paths are resolved against `base_dir`.
  std::filesystem::path base_dir;
  std::string transactions;
  std::string stops;
  std::string centres;
  std::string cells;
  std::optional<stop_projection> projection;  // stops given as lon/lat

  std::filesystem::path output_dir;
  unsigned threads{1};

  ingest_config ingest;
  double cell_size{kDefaultCellSizeM};
  std::optional<grid_spec> grid;  // unset: smallest grid covering all stops
  int min_individuals{kDefaultMinIndividuals};
  int permutations{kDefaultPermutations};
  std::uint64_t moran_seed{0};
  boost_params boost;
  int min_fit_rows{20};
  int cv_folds{0};  // 0 disables k-fold RMSE reporting
  std::vector<slice_spec> slices{all_slices()};
  int top_k_dependence{5};
  std::vector<std::string> dependence_features;  // always emitted as well
  bool dependence_svg{false};
  bool write_trips{false};

  std::filesystem::path resolve(std::string const& p) const;
  // Checks ranges and that every input the stages up to `last` read exists;
  // throws config_error.
  void validate(stage last = stage::explain) const;
  // Effective settings without output_dir or threads (neither affects results).
  nlohmann::json echo() const;
};

// Flat YAML mapping; unknown keys are rejected. `base_dir` becomes the file's
// directory.
pipeline_config load_pipeline_config(std::filesystem::path const& path);
pipeline_config parse_pipeline_config(std::string_view yaml,
                                      std::filesystem::path const& base_dir = {});
std::string format_pipeline_config(pipeline_config const& config);

synth_config load_synth_config(std::filesystem::path const& path);
synth_config parse_synth_config(std::string_view yaml);

// Raised when a stage fails; the message carries the stage name and the
// counts gathered so far.
class stage_error : public error {
public:
  stage_error(stage s, std::string const& what, nlohmann::json counts);
  stage which() const { return stage_; }
  nlohmann::json const& counts() const { return counts_; }

private:
  stage stage_;
  nlohmann::json counts_;
};

struct run_options {
  stage last{stage::explain};
  bool log{true};  // structured lines on stderr
};

// Runs every stage up to `options.last`, writing artifacts and manifest.json
// into config.output_dir. Returns the manifest.
nlohmann::json run_pipeline(pipeline_config const& config, run_options const& options = {});

// Writes the city plus a ready-to-run config.yaml under `dir`.
std::filesystem::path write_synth_bundle(synth_city const& city,
                                         std::filesystem::path const& dir);

}  // namespace busvar
