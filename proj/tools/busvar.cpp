// busvar command-line driver.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "busvar/pipeline.hpp"
#include "busvar/synth.hpp"

namespace {

struct common_opts {
  std::string config;
  std::optional<unsigned> threads;
  std::string out;
  bool quiet{false};
};

void add_common(CLI::App* cmd, common_opts& o, bool config_required) {
  auto* c = cmd->add_option("--config", o.config, "configuration file (flat YAML)");
  if (config_required) {
    c->required()->check(CLI::ExistingFile);
  }
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--quiet", o.quiet, "no stage log lines on stderr");
}

int run_stage(common_opts const& o, busvar::stage last) {
  auto cfg = busvar::load_pipeline_config(o.config);
  if (!o.out.empty()) {
    cfg.output_dir = o.out;
  } else if (cfg.output_dir.is_relative()) {
    cfg.output_dir = cfg.base_dir / cfg.output_dir;
  }
  if (o.threads) {
    cfg.threads = *o.threads;
  }
  busvar::run_pipeline(cfg, {last, !o.quiet});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"busvar: bus-use variability pipeline"};
  app.require_subcommand(1);

  common_opts synth_o;
  std::optional<std::uint64_t> seed;
  std::optional<int> riders;
  auto* synth = app.add_subcommand("synth", "generate a synthetic city and its config.yaml");
  add_common(synth, synth_o, false);
  synth->add_option("--seed", seed, "override the generator seed");
  synth->add_option("--riders", riders, "override the rider count");

  struct verb {
    char const* name;
    char const* help;
    busvar::stage last;
  };
  constexpr verb verbs[] = {
      {"ingest", "parse, chain, filter and select peak-period trips", busvar::stage::ingest},
      {"variability", "per-rider SV/TV", busvar::stage::variability},
      {"fuse", "anchor riders to grid cells and aggregate", busvar::stage::fuse},
      {"moran", "global Moran's I of the cell fields", busvar::stage::moran},
      {"features", "per-cell feature tables", busvar::stage::features},
      {"fit", "boosted models per slice", busvar::stage::fit},
      {"explain", "SHAP importance and dependence data", busvar::stage::explain},
      {"run-all", "every stage", busvar::stage::explain},
  };
  common_opts stage_o;
  std::optional<busvar::stage> chosen;
  for (auto const& v : verbs) {
    auto* cmd = app.add_subcommand(v.name, v.help);
    add_common(cmd, stage_o, true);
    auto const last = v.last;
    cmd->callback([&chosen, last] { chosen = last; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      if (synth_o.out.empty()) {
        throw busvar::config_error{"synth: --out is required"};
      }
      auto cfg = synth_o.config.empty() ? busvar::synth_config{}
                                        : busvar::load_synth_config(synth_o.config);
      if (seed) {
        cfg.seed = *seed;
      }
      if (riders) {
        cfg.n_riders = *riders;
      }
      auto const city = busvar::generate_city(cfg);
      auto const path = busvar::write_synth_bundle(city, synth_o.out);
      if (!synth_o.quiet) {
        std::cerr << fmt::format(
            "{{\"stage\":\"synth\",\"riders\":{},\"transactions\":{},\"stops\":{},"
            "\"config\":\"{}\"}}\n",
            city.riders.size(), city.transactions.size(), city.stops.size(),
            path.generic_string());
      }
      return 0;
    }
    return run_stage(stage_o, *chosen);
  } catch (busvar::config_error const& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (std::exception const& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
