#include "uwbinit/initializer.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "uwbinit/error.hpp"

namespace uwbinit {

PoseBuffer::PoseBuffer(std::vector<TimedPose> poses) {
  poses_.reserve(poses.size());
  for (const auto& p : poses) push_back(p.t, p.position);
}

void PoseBuffer::push_back(double t, const Vec3& position) {
  if (!std::isfinite(t) || !position.allFinite()) throw Error(Errc::InvalidArgument, "non-finite pose");
  if (!poses_.empty() && !(t > poses_.back().t)) throw Error(Errc::OutOfOrder, "pose timestamps must increase");
  poses_.push_back({t, position});
}

Vec3 interpolate(const PoseBuffer& poses, double t, double max_gap) {
  if (poses.empty()) throw Error(Errc::NoBracketingPoses, "pose buffer is empty");
  const auto& v = poses.poses();
  if (t < v.front().t || t > v.back().t) throw Error(Errc::NoBracketingPoses);
  auto hi = std::lower_bound(v.begin(), v.end(), t, [](const TimedPose& p, double x) { return p.t < x; });
  if (hi->t == t) return hi->position;
  auto lo = std::prev(hi);
  const double gap = hi->t - lo->t;
  if (gap > max_gap) throw Error(Errc::PoseGap);
  const double s = (t - lo->t) / gap;
  return lo->position + s * (hi->position - lo->position);
}

void TriggerConfig::validate() const {
  if (!(pdop_threshold > 0.0)) throw Error(Errc::Config, "trigger.pdop_threshold must be positive");
  if (min_samples < 4) throw Error(Errc::Config, "trigger.min_samples must be >= 4");
  if (max_buffer < min_samples) throw Error(Errc::Config, "trigger.max_buffer must be >= min_samples");
  if (!(pose_max_gap > 0.0)) throw Error(Errc::Config, "trigger.pose_max_gap must be positive");
}

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::Collecting: return "collecting";
    case Phase::Initialized: return "initialized";
    case Phase::Degenerate: return "degenerate";
  }
  return "?";
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::None: return "none";
    case EventKind::Rejected: return "rejected";
    case EventKind::PdopUpdated: return "pdop_updated";
    case EventKind::Initialized: return "initialized";
    case EventKind::Dropped: return "dropped";
  }
  return "?";
}

Event AnchorSession::drop(double t, std::string why) {
  ++dropped_;
  diagnostic_ = why;
  return {anchor_id_, t, EventKind::Dropped, current_pdop_, std::move(why)};
}

Event AnchorSession::ingest(const SyncedSample& sample, const InitializerConfig& cfg) {
  if (phase_ == Phase::Degenerate) throw Error(Errc::InvalidArgument, "session already finished");
  if (!(sample.range > 0.0) || !std::isfinite(sample.range)) return drop(sample.t, "non-positive range");
  if (filter_.last_ingested_t && !(sample.t > *filter_.last_ingested_t))
    return drop(sample.t, "out-of-order timestamp");

  if (!uwbinit::ingest(filter_, sample, cfg.filter)) {
    return {anchor_id_, sample.t, EventKind::Rejected, current_pdop_, {}};
  }

  pdop_.push(sample);
  while (pdop_.size() > cfg.trigger.max_buffer) {
    pdop_.pop_front();
    ++evictions_;
  }
  current_pdop_ = pdop_.pdop();

  if (phase_ == Phase::Collecting) {
    if (pdop_.size() >= cfg.trigger.min_samples && current_pdop_ < cfg.trigger.pdop_threshold) {
      initialize(sample.t, cfg);
      if (phase_ == Phase::Initialized) {
        return {anchor_id_, sample.t, EventKind::Initialized, current_pdop_, {}};
      }
    }
  } else if (cfg.trigger.rerefine_every > 0 && ++since_refine_ >= cfg.trigger.rerefine_every) {
    since_refine_ = 0;
    const std::vector<SyncedSample> data(pdop_.samples().begin(), pdop_.samples().end());
    try {
      estimate_ = refine(data, *estimate_, kernel::Adaptive{cfg.kernel_scale}, cfg.solver);
    } catch (const Error& e) {
      diagnostic_ = e.what();
    }
  }
  return {anchor_id_, sample.t, EventKind::PdopUpdated, current_pdop_, {}};
}

void AnchorSession::initialize(double t, const InitializerConfig& cfg) {
  const std::vector<SyncedSample> data(pdop_.samples().begin(), pdop_.samples().end());
  try {
    const AnchorEstimate coarse = solve_ls(data);
    estimate_ = refine(data, coarse, kernel::Adaptive{cfg.kernel_scale}, cfg.solver);
  } catch (const Error& e) {
    // Stay in Collecting; a later sample may fix the geometry.
    diagnostic_ = e.what();
    return;
  }
  phase_ = Phase::Initialized;
  t_init_ = t;
  pdop_at_init_ = current_pdop_;
  samples_at_init_ = data.size();
  since_refine_ = 0;
}

void AnchorSession::finish() {
  if (phase_ == Phase::Collecting && !std::isfinite(current_pdop_)) phase_ = Phase::Degenerate;
}

Event ingest_range(AnchorSession& session, const PoseBuffer& poses, double t, double range,
                   const InitializerConfig& cfg) {
  Vec3 p;
  try {
    p = interpolate(poses, t, cfg.trigger.pose_max_gap);
  } catch (const Error& e) {
    return session.drop(t, e.what());
  }
  return session.ingest(SyncedSample{t, p, range}, cfg);
}

AnchorManager::AnchorManager(InitializerConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.trigger.validate();
  cfg_.solver.validate();
  if (!(cfg_.filter.tau >= 0.0)) throw Error(Errc::Config, "filter.tau must be >= 0");
  if (!(cfg_.kernel_scale > 0.0)) throw Error(Errc::Config, "kernel scale must be positive");
}

Event AnchorManager::ingest(const PoseBuffer& poses, double t, const std::string& anchor_id, double range) {
  auto it = sessions_.try_emplace(anchor_id, anchor_id).first;
  return ingest_range(it->second, poses, t, range, cfg_);
}

void AnchorManager::finish() {
  for (auto& [id, s] : sessions_) s.finish();
}

}  // namespace uwbinit
