#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "uwbinit/io.hpp"

namespace uwbinit::cli {

namespace fs = std::filesystem;

/// Writes poses.csv, ranges.csv and truth.csv into out_dir.
void cmd_simulate(const io::ToolConfig& cfg, const fs::path& out_dir);

struct RunInputs {
  fs::path poses;
  fs::path ranges;
  std::optional<fs::path> truth;
};

/// Replays the streams through the anchor manager.
nlohmann::json build_run_report(const io::ToolConfig& cfg, const RunInputs& in);

/// Writes report.json and summary.csv. Returns 0 if every discovered anchor
/// initialized, 2 otherwise.
int cmd_run(const io::ToolConfig& cfg, const RunInputs& in, const fs::path& out_dir);

/// Monte Carlo strategy comparison: evaluate.csv (method,avg_m,med_m,init,gt1m,ratio_pct)
/// and evaluate.json.
sim::MCReport cmd_evaluate(const io::ToolConfig& cfg, const fs::path& out_dir);

/// Growing-prefix PDOP / error study written to sweep.csv.
void cmd_sweep(const io::ToolConfig& cfg, const fs::path& out_dir);

}  // namespace uwbinit::cli
