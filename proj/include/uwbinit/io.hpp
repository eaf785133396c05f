#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwbinit/initializer.hpp"
#include "uwbinit/sim.hpp"
#include "uwbinit/types.hpp"

namespace uwbinit::io {

inline constexpr const char* kVersion = "0.1.0";

struct RangeRecord {
  double t{0.0};
  std::string anchor_id;
  double range{0.0};
};

struct TruthRecord {
  std::string anchor_id;
  Vec3 position{Vec3::Zero()};
  double bias{0.0};
};

// Loaders throw Error(Errc::Parse) with "path:line: ..." on malformed input.

/// `t,x,y,z`; strictly increasing t.
PoseBuffer load_poses(const std::filesystem::path& path);
/// `t,anchor_id,range`; non-decreasing t, range >= 0.
std::vector<RangeRecord> load_ranges(const std::filesystem::path& path);
/// `anchor_id,x,y,z,bias`; unique ids.
std::vector<TruthRecord> load_truth(const std::filesystem::path& path);

void save_poses(const std::filesystem::path& path, const PoseBuffer& poses);
void save_ranges(const std::filesystem::path& path, const std::vector<RangeRecord>& ranges);
void save_truth(const std::filesystem::path& path, const std::vector<TruthRecord>& truth);

/// Shortest round-trip text for a double ("%.17g"), "nan"/"inf" otherwise.
std::string format_double(double v);

/// Sorted keys, two-space indent, doubles with 17 significant digits,
/// non-finite doubles as null. Ends with a newline.
std::string canonical_json(const nlohmann::json& j);

/// Everything the CLI can configure. Parsed from flat `key = value` text;
/// `#` starts a comment, unknown keys are rejected.
struct ToolConfig {
  InitializerConfig init;
  sim::NoiseModel noise;
  sim::TrajectorySpec trajectory;
  int anchor_count{30};
  double max_range{25.0};
  int mc_runs{100};
  std::vector<sim::StrategyKind> strategies{sim::StrategyKind::FixedWindow, sim::StrategyKind::PdopTriggered};
  std::size_t fixed_window{0};
  bool use_filter{true};
  sim::RansacParams ransac;
  int sweep_runs{20};
  std::size_t sweep_stride{10};
  std::size_t sweep_max_samples{400};
  std::uint64_t seed{1};

  /// Keys given explicitly (file or overrides); drives the sigma-derived defaults.
  std::set<std::string> explicit_keys;

  void set(const std::string& key, const std::string& value);
  /// Applies defaults that depend on other keys (tau, kernel scale and
  /// RANSAC threshold follow noise.sigma_d unless set) and validates.
  void finalize();

  nlohmann::json echo() const;
  sim::MCConfig mc_config() const;
  sim::PrefixSweepConfig sweep_config() const;
};

struct ConfigKeyInfo {
  std::string key;
  std::string help;
};

/// Documented keys with their defaults, in file order.
const std::vector<ConfigKeyInfo>& config_keys();

ToolConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
ToolConfig load_config(const std::filesystem::path& path);

}  // namespace uwbinit::io
