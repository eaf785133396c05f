#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "uwbinit/initializer.hpp"
#include "uwbinit/solver.hpp"
#include "uwbinit/types.hpp"

namespace uwbinit::sim {

/// Additive range noise: Gaussian sigma_d, constant bias, and with
/// probability outlier_prob a positive offset in [outlier_low, outlier_high].
struct NoiseModel {
  double sigma_d{0.1};
  double bias{0.0};
  double outlier_prob{0.0};
  double outlier_low{0.5};
  double outlier_high{5.0};
  std::uint64_t seed{1};

  void validate() const;
};

enum class TrajectoryKind { Tunnel, WaypointBox, PlanarAMR, Collinear };
const char* to_string(TrajectoryKind kind);
TrajectoryKind trajectory_kind_from_string(const std::string& s);

struct TrajectorySpec {
  TrajectoryKind kind{TrajectoryKind::Tunnel};
  /// Tunnel: length x width x height. Box / planar area: size of the region.
  Vec3 extents{100.0, 6.0, 4.0};
  double duration{100.0};
  double rate{10.0};
  int waypoint_count{8};
  /// Upper bound of the lateral sway amplitude (tunnel), meters.
  double sway{1.0};
  /// Upper bound of the vertical motion amplitude (tunnel, planar), meters.
  double vertical{1.0};

  void validate() const;
};

PoseBuffer gen_trajectory(const TrajectorySpec& spec, std::uint64_t seed);

/// Independent generator for (seed, stream); used per anchor so that adding
/// anchors does not shift the noise of the others.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

/// Anchor layout matching the trajectory kind: tunnel walls, box faces,
/// around the planar area at 0.9-2.9 m height, or random for Collinear.
std::vector<Vec3> gen_anchors(const TrajectorySpec& spec, int count, std::uint64_t seed);

struct RangeMeasurement {
  double t{0.0};
  double range{0.0};
  bool outlier{false};
};

/// d = |p_U - p_A| + bias + eta (+ outlier offset), one per pose within
/// max_range of the anchor.
std::vector<RangeMeasurement> gen_ranges(const PoseBuffer& poses, const Vec3& anchor, const NoiseModel& noise,
                                         std::mt19937_64& rng,
                                         double max_range = std::numeric_limits<double>::infinity());
std::vector<RangeMeasurement> gen_ranges(const PoseBuffer& poses, const Vec3& anchor, const NoiseModel& noise);

/// Pairs ranges with the pose at the same timestamp (interpolated if needed).
std::vector<SyncedSample> synchronize(const PoseBuffer& poses, const std::vector<RangeMeasurement>& ranges);

/// FNV-1a over the (t, range) bit patterns of a stream.
std::uint64_t stream_checksum(const std::vector<SyncedSample>& stream);

struct BaselineResult {
  AnchorEstimate estimate;
  std::size_t n_used{0};
  bool ok{false};
  std::string diagnostic;
};

/// LS + adaptive refinement on the first `window` filter-accepted samples
/// (window 0 = all), whatever the geometry. Rank loss is reported through
/// estimate.converged = false with the minimum-norm solution.
BaselineResult run_fixed_window(const std::vector<SyncedSample>& stream, std::size_t window,
                                const InitializerConfig& cfg, bool use_filter = true);

struct RansacParams {
  double p{0.95};
  int s{60};
  double e{0.10};
  double inlier_threshold{0.3};
};

/// ceil(ln(1 - p) / ln(1 - (1 - e)^s)), 1 when (1 - e)^s rounds to 1.
std::int64_t ransac_iterations(double p, int s, double e);

struct RansacResult {
  BaselineResult fit;
  std::vector<std::size_t> inliers;
  std::int64_t rounds{0};
};

RansacResult run_ransac(const std::vector<SyncedSample>& stream, const RansacParams& params,
                        const SolverConfig& solver, std::mt19937_64& rng);

enum class StrategyKind { PdopTriggered, FixedWindow, Ransac };

struct Strategy {
  StrategyKind kind{StrategyKind::PdopTriggered};
  std::size_t window{0};
  RansacParams ransac{};

  std::string label() const;
};

struct MCConfig {
  int runs{100};
  std::uint64_t base_seed{1};
  std::vector<Strategy> strategies{{StrategyKind::FixedWindow}, {StrategyKind::PdopTriggered}};
  NoiseModel noise{};
  TrajectorySpec trajectory{};
  /// Fixed anchor layout; when empty, `anchor_count` anchors are drawn per run.
  std::vector<Vec3> anchors;
  int anchor_count{30};
  double max_range{25.0};
  InitializerConfig init{};
  bool use_filter{true};

  void validate() const;
};

struct StrategyMetrics {
  std::string method;
  double avg_m{0.0};
  double med_m{0.0};
  std::uint64_t init{0};
  std::uint64_t gt1m{0};
  double ratio_pct{0.0};
  std::uint64_t candidates{0};
  std::uint64_t stream_checksum{0};
  std::vector<double> errors;  // sorted ascending
};

/// Conservativeness audit of the online PDOP at every trigger evaluation.
struct PdopAudit {
  std::uint64_t evaluations{0};
  std::uint64_t condition_held{0};
  std::uint64_t violations{0};
};

struct MCReport {
  std::vector<StrategyMetrics> rows;
  PdopAudit audit;
  int runs{0};
};

MCReport run_mc(const MCConfig& cfg);

/// Growing-prefix study of true, closest-point, LS and NLS PDOP together
/// with the LS/NLS initialization errors.
struct PrefixSweepConfig {
  int runs{20};
  std::uint64_t base_seed{1};
  NoiseModel noise{};
  TrajectorySpec trajectory{TrajectoryKind::WaypointBox, Vec3(4.0, 6.5, 7.0), 60.0, 10.0, 12};
  std::size_t stride{10};
  std::size_t max_samples{400};
  InitializerConfig init{};
};

struct PrefixPoint {
  int run{0};
  std::size_t n{0};
  double pdop_true{0.0};
  double pdop_closest{0.0};
  double pdop_ls{0.0};
  double pdop_nls{0.0};
  double err_ls{0.0};
  double err_nls{0.0};
};

std::vector<PrefixPoint> run_prefix_sweep(const PrefixSweepConfig& cfg);

}  // namespace uwbinit::sim
