#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uwbinit/filter.hpp"
#include "uwbinit/geometry.hpp"
#include "uwbinit/solver.hpp"
#include "uwbinit/types.hpp"

namespace uwbinit {

struct TimedPose {
  double t{0.0};
  Vec3 position{Vec3::Zero()};
};

/// Time-ordered tag positions. Append-only; readers see a consistent prefix.
class PoseBuffer {
 public:
  PoseBuffer() = default;
  explicit PoseBuffer(std::vector<TimedPose> poses);

  /// Throws OutOfOrder unless t is strictly later than the last pose.
  void push_back(double t, const Vec3& position);

  const std::vector<TimedPose>& poses() const { return poses_; }
  std::size_t size() const { return poses_.size(); }
  bool empty() const { return poses_.empty(); }
  const TimedPose& operator[](std::size_t i) const { return poses_[i]; }

 private:
  std::vector<TimedPose> poses_;
};

/// Linear interpolation between the poses bracketing t.
Vec3 interpolate(const PoseBuffer& poses, double t, double max_gap);

struct TriggerConfig {
  double pdop_threshold{1.0};
  std::size_t min_samples{10};
  std::size_t max_buffer{10000};
  double pose_max_gap{1.0};
  /// Re-run the refinement every K accepted samples after initialization; 0 disables.
  std::size_t rerefine_every{0};

  void validate() const;
};

/// Everything a session needs besides the data streams.
struct InitializerConfig {
  TriggerConfig trigger;
  FilterConfig filter;
  SolverConfig solver;
  /// Scale c of the adaptive kernel, meters.
  double kernel_scale{0.1};
};

enum class Phase { Collecting, Initialized, Degenerate };
const char* to_string(Phase phase);

enum class EventKind { None, Rejected, PdopUpdated, Initialized, Dropped };
const char* to_string(EventKind kind);

struct Event {
  std::string anchor_id;
  double t{0.0};
  EventKind kind{EventKind::None};
  double pdop{std::numeric_limits<double>::infinity()};
  std::string detail;
};

/// Per-anchor lifecycle: filter, buffer, PDOP tracking and the trigger.
class AnchorSession {
 public:
  explicit AnchorSession(std::string anchor_id) : anchor_id_(std::move(anchor_id)) {}

  const std::string& anchor_id() const { return anchor_id_; }
  Phase phase() const { return phase_; }
  const std::deque<SyncedSample>& buffer() const { return pdop_.samples(); }
  const FilterState& filter_state() const { return filter_; }
  const ClosestPointTracker& tracker() const { return pdop_.tracker(); }
  const GeometrySummary& summary() const { return pdop_.summary(); }
  double current_pdop() const { return current_pdop_; }
  const std::optional<AnchorEstimate>& estimate() const { return estimate_; }
  std::optional<double> t_init() const { return t_init_; }
  std::optional<double> pdop_at_init() const { return pdop_at_init_; }
  /// Buffer size handed to the solver at initialization.
  std::size_t samples_at_init() const { return samples_at_init_; }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t buffer_evictions() const { return evictions_; }
  const std::string& last_diagnostic() const { return diagnostic_; }

  /// Feeds one range (already paired with a tag position).
  Event ingest(const SyncedSample& sample, const InitializerConfig& cfg);

  /// Records a sample that never reached the filter (e.g. interpolation failure).
  Event drop(double t, std::string why);

  /// End of stream: an anchor that never reached finite PDOP is Degenerate.
  void finish();

 private:
  void initialize(double t, const InitializerConfig& cfg);

  std::string anchor_id_;
  Phase phase_{Phase::Collecting};
  FilterState filter_;
  ClosestPointPdop<double> pdop_;
  double current_pdop_{std::numeric_limits<double>::infinity()};
  std::optional<AnchorEstimate> estimate_;
  std::optional<double> t_init_;
  std::optional<double> pdop_at_init_;
  std::size_t samples_at_init_{0};
  std::uint64_t dropped_{0};
  std::uint64_t evictions_{0};
  std::size_t since_refine_{0};
  std::string diagnostic_;
};

/// Interpolates the tag position at t and feeds the session. Interpolation
/// failures become a Dropped event.
Event ingest_range(AnchorSession& session, const PoseBuffer& poses, double t, double range,
                   const InitializerConfig& cfg);

/// Routes ranges to per-anchor sessions, creating a session on first contact.
class AnchorManager {
 public:
  explicit AnchorManager(InitializerConfig cfg);

  Event ingest(const PoseBuffer& poses, double t, const std::string& anchor_id, double range);
  void finish();

  const std::map<std::string, AnchorSession>& sessions() const { return sessions_; }
  const InitializerConfig& config() const { return cfg_; }

 private:
  InitializerConfig cfg_;
  std::map<std::string, AnchorSession> sessions_;
};

}  // namespace uwbinit
