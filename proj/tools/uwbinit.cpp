#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "uwbinit/commands.hpp"
#include "uwbinit/error.hpp"

namespace {

uwbinit::io::ToolConfig resolve(const std::string& config_path, const std::optional<std::uint64_t>& seed) {
  uwbinit::io::ToolConfig cfg = config_path.empty() ? uwbinit::io::ToolConfig{} : uwbinit::io::load_config(config_path);
  if (seed) {
    cfg.explicit_keys.erase("seed");
    cfg.set("seed", std::to_string(*seed));
  }
  cfg.finalize();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online UWB anchor initialization: simulate, replay, evaluate."};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "base seed, overrides the config");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
  };

  auto* simulate = app.add_subcommand("simulate", "write poses.csv, ranges.csv, truth.csv");
  common(simulate);

  uwbinit::cli::RunInputs inputs;
  std::string data_dir, poses, ranges, truth;
  auto* run = app.add_subcommand("run", "replay logs through the initializer (exit 0: all anchors initialized, 2: some declined)");
  common(run);
  run->add_option("--data", data_dir, "directory holding poses.csv, ranges.csv and optionally truth.csv");
  run->add_option("--poses", poses, "pose CSV (t,x,y,z)");
  run->add_option("--ranges", ranges, "range CSV (t,anchor_id,range)");
  run->add_option("--truth", truth, "ground-truth CSV (anchor_id,x,y,z,bias)");

  auto* evaluate = app.add_subcommand("evaluate", "Monte Carlo strategy comparison");
  common(evaluate);
  auto* sweep = app.add_subcommand("sweep", "PDOP and error over growing sample prefixes");
  common(sweep);

  auto* keys = app.add_subcommand("config-keys", "list config keys with defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (keys->parsed()) {
      for (const auto& k : uwbinit::io::config_keys()) std::printf("%-28s %s\n", k.key.c_str(), k.help.c_str());
      return 0;
    }
    const auto cfg = resolve(config_path, seed);
    if (simulate->parsed()) {
      uwbinit::cli::cmd_simulate(cfg, out_dir);
      return 0;
    }
    if (run->parsed()) {
      if (!data_dir.empty()) {
        inputs.poses = std::filesystem::path(data_dir) / "poses.csv";
        inputs.ranges = std::filesystem::path(data_dir) / "ranges.csv";
        if (std::filesystem::exists(std::filesystem::path(data_dir) / "truth.csv"))
          inputs.truth = std::filesystem::path(data_dir) / "truth.csv";
      }
      if (!poses.empty()) inputs.poses = poses;
      if (!ranges.empty()) inputs.ranges = ranges;
      if (!truth.empty()) inputs.truth = truth;
      if (inputs.poses.empty() || inputs.ranges.empty()) {
        std::cerr << "error: run needs --data or both --poses and --ranges\n";
        return 1;
      }
      return uwbinit::cli::cmd_run(cfg, inputs, out_dir);
    }
    if (evaluate->parsed()) {
      const auto rep = uwbinit::cli::cmd_evaluate(cfg, out_dir);
      std::printf("%-8s %10s %10s %6s %6s %9s\n", "method", "avg_m", "med_m", "init", "gt1m", "ratio_pct");
      for (const auto& r : rep.rows) {
        std::printf("%-8s %10.4f %10.4f %6llu %6llu %9.2f\n", r.method.c_str(), r.avg_m, r.med_m,
                    static_cast<unsigned long long>(r.init), static_cast<unsigned long long>(r.gt1m), r.ratio_pct);
      }
      return 0;
    }
    if (sweep->parsed()) {
      uwbinit::cli::cmd_sweep(cfg, out_dir);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
