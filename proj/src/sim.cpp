#include "uwbinit/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <functional>
#include <numeric>

#include "uwbinit/error.hpp"
#include "uwbinit/filter.hpp"
#include "uwbinit/geometry.hpp"

namespace uwbinit::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv_mix(std::uint64_t h, std::uint64_t word) {
  for (int i = 0; i < 8; ++i) {
    h ^= (word >> (8 * i)) & 0xffU;
    h *= kFnvPrime;
  }
  return h;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t pose_count(const TrajectorySpec& spec) {
  return static_cast<std::size_t>(std::floor(spec.duration * spec.rate)) + 1;
}

// Smoothstep-eased path through waypoints; stays in their convex hull.
PoseBuffer waypoint_path(const std::vector<Vec3>& waypoints, const TrajectorySpec& spec,
                         const std::function<Vec3(double, const Vec3&)>& perturb) {
  PoseBuffer out;
  const std::size_t n = pose_count(spec);
  const double seg = spec.duration / static_cast<double>(waypoints.size() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / spec.rate;
    const auto k = std::min(static_cast<std::size_t>(t / seg), waypoints.size() - 2);
    const double tau = std::clamp((t - static_cast<double>(k) * seg) / seg, 0.0, 1.0);
    const double s = tau * tau * (3.0 - 2.0 * tau);
    const Vec3 p = waypoints[k] + s * (waypoints[k + 1] - waypoints[k]);
    out.push_back(t, perturb(t, p));
  }
  return out;
}

}  // namespace

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) { return std::mt19937_64(mix_seed(seed, stream, 0x9a)); }

void NoiseModel::validate() const {
  if (!(sigma_d >= 0.0)) throw Error(Errc::Config, "noise.sigma_d must be >= 0");
  if (!(outlier_prob >= 0.0 && outlier_prob < 1.0)) throw Error(Errc::Config, "noise.outlier_prob must be in [0,1)");
  if (!(outlier_low > 0.0) || !(outlier_low <= outlier_high))
    throw Error(Errc::Config, "noise outlier magnitudes must satisfy 0 < low <= high");
}

const char* to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::Tunnel: return "tunnel";
    case TrajectoryKind::WaypointBox: return "waypoint_box";
    case TrajectoryKind::PlanarAMR: return "planar_amr";
    case TrajectoryKind::Collinear: return "collinear";
  }
  return "?";
}

TrajectoryKind trajectory_kind_from_string(const std::string& s) {
  if (s == "tunnel") return TrajectoryKind::Tunnel;
  if (s == "waypoint_box") return TrajectoryKind::WaypointBox;
  if (s == "planar_amr") return TrajectoryKind::PlanarAMR;
  if (s == "collinear") return TrajectoryKind::Collinear;
  throw Error(Errc::Config, "unknown trajectory kind '" + s + "'");
}

void TrajectorySpec::validate() const {
  if (!(extents.array() > 0.0).all()) throw Error(Errc::Config, "trajectory extents must be positive");
  if (!(duration > 0.0) || !(rate > 0.0)) throw Error(Errc::Config, "trajectory duration and rate must be positive");
  if (waypoint_count < 2) throw Error(Errc::Config, "trajectory needs >= 2 waypoints");
  if (!(sway >= 0.0) || !(vertical >= 0.0)) throw Error(Errc::Config, "trajectory amplitudes must be >= 0");
}

PoseBuffer gen_trajectory(const TrajectorySpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(mix_seed(seed, 0x7a11));
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const Vec3& ext = spec.extents;

  switch (spec.kind) {
    case TrajectoryKind::Tunnel: {
      // Constant forward speed along x, sinusoidal sway in y, small vertical motion.
      const double amp_y = uniform(rng, 0.0, std::min(spec.sway, std::max(0.0, 0.5 * ext.y() - 0.5)));
      const double z0 = 0.5 * ext.z();
      const double amp_z = uniform(rng, 0.0, std::min(spec.vertical, std::max(0.0, z0 - 0.3)));
      const double f_y = uniform(rng, 0.05, 0.3);
      const double f_z = uniform(rng, 0.05, 0.3);
      const double ph_y = uniform(rng, 0.0, two_pi);
      const double ph_z = uniform(rng, 0.0, two_pi);
      PoseBuffer out;
      const std::size_t n = pose_count(spec);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / spec.rate;
        out.push_back(t, Vec3(ext.x() * t / spec.duration, amp_y * std::sin(two_pi * f_y * t + ph_y),
                              z0 + amp_z * std::sin(two_pi * f_z * t + ph_z)));
      }
      return out;
    }
    case TrajectoryKind::WaypointBox: {
      std::vector<Vec3> wps;
      for (int i = 0; i < spec.waypoint_count; ++i) {
        wps.emplace_back(uniform(rng, 0.0, ext.x()), uniform(rng, 0.0, ext.y()), uniform(rng, 0.0, ext.z()));
      }
      return waypoint_path(wps, spec, [](double, const Vec3& p) { return p; });
    }
    case TrajectoryKind::PlanarAMR: {
      std::vector<Vec3> wps;
      for (int i = 0; i < spec.waypoint_count; ++i) {
        wps.emplace_back(uniform(rng, 0.0, ext.x()), uniform(rng, 0.0, ext.y()), ext.z());
      }
      const double amp_z = uniform(rng, 0.0, spec.vertical);
      const double f_z = uniform(rng, 0.05, 0.2);
      const double ph_z = uniform(rng, 0.0, two_pi);
      return waypoint_path(wps, spec, [=](double t, const Vec3& p) {
        return Vec3(p.x(), p.y(), p.z() + amp_z * std::sin(two_pi * f_z * t + ph_z));
      });
    }
    case TrajectoryKind::Collinear: {
      const Vec3 p0(uniform(rng, 0.0, ext.x()), uniform(rng, 0.0, ext.y()), uniform(rng, 0.0, ext.z()));
      Vec3 v(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
      v.normalize();
      const double length = ext.minCoeff();
      PoseBuffer out;
      const std::size_t n = pose_count(spec);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / spec.rate;
        out.push_back(t, p0 + (length * t / spec.duration) * v);
      }
      return out;
    }
  }
  return {};
}

std::vector<Vec3> gen_anchors(const TrajectorySpec& spec, int count, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 0xa4c4));
  const Vec3& ext = spec.extents;
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    switch (spec.kind) {
      case TrajectoryKind::Tunnel: {
        const double x = (i + uniform(rng, 0.25, 0.75)) * ext.x() / count;
        const double y = (i % 2 ? 0.5 : -0.5) * ext.y();
        out.emplace_back(x, y, uniform(rng, 0.5, ext.z() - 0.5));
        break;
      }
      case TrajectoryKind::WaypointBox: {
        Vec3 p(uniform(rng, 0.0, ext.x()), uniform(rng, 0.0, ext.y()), uniform(rng, 0.0, ext.z()));
        const int face = std::uniform_int_distribution<int>(0, 5)(rng);
        p(face / 2) = (face % 2) ? ext(face / 2) : 0.0;
        out.push_back(p);
        break;
      }
      case TrajectoryKind::PlanarAMR: {
        const double margin = 2.0;
        const double perim = 2.0 * (ext.x() + ext.y() + 4.0 * margin);
        double s = uniform(rng, 0.0, perim);
        const double wx = ext.x() + 2.0 * margin;
        const double wy = ext.y() + 2.0 * margin;
        Vec3 p;
        if (s < wx) p = Vec3(-margin + s, -margin, 0.0);
        else if ((s -= wx) < wy) p = Vec3(ext.x() + margin, -margin + s, 0.0);
        else if ((s -= wy) < wx) p = Vec3(ext.x() + margin - s, ext.y() + margin, 0.0);
        else p = Vec3(-margin, ext.y() + margin - (s - wx), 0.0);
        p.z() = uniform(rng, 0.9, 2.9);
        out.push_back(p);
        break;
      }
      case TrajectoryKind::Collinear:
        out.emplace_back(uniform(rng, 0.0, ext.x()), uniform(rng, 0.0, ext.y()), uniform(rng, 0.0, ext.z()));
        break;
    }
  }
  return out;
}

std::vector<RangeMeasurement> gen_ranges(const PoseBuffer& poses, const Vec3& anchor, const NoiseModel& noise,
                                         std::mt19937_64& rng, double max_range) {
  noise.validate();
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<RangeMeasurement> out;
  out.reserve(poses.size());
  for (const auto& pose : poses.poses()) {
    const double dist = (pose.position - anchor).norm();
    if (dist > max_range) continue;
    double d = dist + noise.bias + noise.sigma_d * gauss(rng);
    const double u = unit(rng);
    const double mag = noise.outlier_low + (noise.outlier_high - noise.outlier_low) * unit(rng);
    const bool outlier = u < noise.outlier_prob;
    if (outlier) d += mag;  // NLOS and multipath only lengthen the path
    // Noise close to the anchor can still push a range below zero.
    out.push_back({pose.t, std::max(d, 0.0), outlier});
  }
  return out;
}

std::vector<RangeMeasurement> gen_ranges(const PoseBuffer& poses, const Vec3& anchor, const NoiseModel& noise) {
  std::mt19937_64 rng(mix_seed(noise.seed, 0x4a6e));
  return gen_ranges(poses, anchor, noise, rng);
}

std::vector<SyncedSample> synchronize(const PoseBuffer& poses, const std::vector<RangeMeasurement>& ranges) {
  std::vector<SyncedSample> out;
  out.reserve(ranges.size());
  for (const auto& r : ranges) {
    out.push_back({r.t, interpolate(poses, r.t, std::numeric_limits<double>::infinity()), r.range});
  }
  return out;
}

std::uint64_t stream_checksum(const std::vector<SyncedSample>& stream) {
  std::uint64_t h = kFnvOffset;
  for (const auto& s : stream) {
    h = fnv_mix(h, std::bit_cast<std::uint64_t>(s.t));
    h = fnv_mix(h, std::bit_cast<std::uint64_t>(s.range));
  }
  return h;
}

BaselineResult run_fixed_window(const std::vector<SyncedSample>& stream, std::size_t window,
                                const InitializerConfig& cfg, bool use_filter) {
  BaselineResult res;
  std::vector<SyncedSample> used;
  FilterState state;
  for (const auto& s : stream) {
    if (window != 0 && used.size() >= window) break;
    if (!(s.range > 0.0)) continue;
    if (!use_filter || ingest(state, s, cfg.filter)) used.push_back(s);
  }
  res.n_used = used.size();
  if (window != 0 && used.size() < window) {
    res.diagnostic = "window " + std::to_string(window) + " larger than data; used " + std::to_string(used.size());
  }
  if (used.size() < 5) {
    res.diagnostic = "insufficient samples";
    return res;
  }
  AnchorEstimate coarse;
  bool full_rank = true;
  try {
    coarse = solve_ls(used);
  } catch (const DegenerateGeometryError& e) {
    coarse = solve_ls_min_norm(used);
    full_rank = false;
    res.diagnostic = e.what();
  }
  try {
    res.estimate = refine(used, coarse, kernel::Adaptive{cfg.kernel_scale}, cfg.solver);
  } catch (const Error& e) {
    res.estimate = coarse;
    res.estimate.converged = false;
    res.diagnostic = e.what();
  }
  if (!full_rank) res.estimate.converged = false;
  res.ok = true;
  return res;
}

std::int64_t ransac_iterations(double p, int s, double e) {
  if (!(p > 0.0 && p < 1.0) || !(e >= 0.0 && e < 1.0) || s < 1)
    throw Error(Errc::InvalidArgument, "ransac parameters out of range");
  const double q = std::pow(1.0 - e, s);
  if (q >= 1.0) return 1;
  const double n = std::log(1.0 - p) / std::log1p(-q);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(n)));
}

RansacResult run_ransac(const std::vector<SyncedSample>& stream, const RansacParams& params,
                        const SolverConfig& solver, std::mt19937_64& rng) {
  RansacResult out;
  const auto s = static_cast<std::size_t>(params.s);
  if (stream.size() < s || s < 5) {
    out.fit.diagnostic = "data smaller than sample size";
    return out;
  }
  out.rounds = ransac_iterations(params.p, params.s, params.e);
  std::vector<std::size_t> idx(stream.size());
  std::vector<SyncedSample> subset(s);
  std::size_t best_count = 0;
  std::vector<std::size_t> best;

  auto fit = [&](const std::vector<SyncedSample>& data) -> std::optional<AnchorEstimate> {
    try {
      return refine(data, solve_ls(data), kernel::None{}, solver);
    } catch (const Error&) {
      return std::nullopt;
    }
  };

  for (std::int64_t round = 0; round < out.rounds; ++round) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < s; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
      subset[i] = stream[idx[i]];
    }
    const auto est = fit(subset);
    if (!est) continue;
    std::vector<std::size_t> inliers;
    for (std::size_t k = 0; k < stream.size(); ++k) {
      const double r = (stream[k].tag_pos - est->position).norm() + est->bias - stream[k].range;
      if (std::abs(r) < params.inlier_threshold) inliers.push_back(k);
    }
    if (inliers.size() > best_count) {
      best_count = inliers.size();
      best = std::move(inliers);
    }
  }
  if (best_count < s) {
    out.fit.diagnostic = "no consensus set";
    return out;
  }
  std::vector<SyncedSample> consensus;
  consensus.reserve(best.size());
  for (std::size_t k : best) consensus.push_back(stream[k]);
  const auto est = fit(consensus);
  if (!est) {
    out.fit.diagnostic = "consensus refit failed";
    return out;
  }
  out.fit.estimate = *est;
  out.fit.n_used = consensus.size();
  out.fit.ok = true;
  out.inliers = std::move(best);
  return out;
}

std::string Strategy::label() const {
  switch (kind) {
    case StrategyKind::PdopTriggered: return "Our";
    case StrategyKind::FixedWindow: return "Fixed";
    case StrategyKind::Ransac: return "Ransac";
  }
  return "?";
}

void MCConfig::validate() const {
  if (runs < 1) throw Error(Errc::Config, "mc.runs must be >= 1");
  if (strategies.empty()) throw Error(Errc::Config, "mc.strategies must not be empty");
  if (anchors.empty() && anchor_count < 1) throw Error(Errc::Config, "sim.anchors must be >= 1");
  noise.validate();
  trajectory.validate();
  init.trigger.validate();
  init.solver.validate();
}

namespace {

// Tracks the true information matrix and the closest-point distance
// condition alongside one session, so every trigger evaluation can be
// compared with the PDOP at the true anchor.
class ConservativenessProbe {
 public:
  explicit ConservativenessProbe(const Vec3& anchor) : anchor_(anchor) {}

  void on_accepted(const AnchorSession& session, std::size_t min_samples, PdopAudit& audit) {
    const auto& buf = session.buffer();
    const SyncedSample& s = buf.back();
    const Vec3 u = (s.tag_pos - anchor_) / s.range;
    info_.noalias() += u * u.transpose();

    const SyncedSample& c = *session.tracker().closest;
    if (!closest_t_ || *closest_t_ != c.t) {
      closest_t_ = c.t;
      holds_ = std::all_of(buf.begin(), buf.end(), [&](const SyncedSample& k) { return satisfied(k, c); });
    } else {
      holds_ = holds_ && satisfied(s, c);
    }
    if (buf.size() < min_samples) return;
    ++audit.evaluations;
    if (!holds_) return;
    ++audit.condition_held;
    if (session.current_pdop() < pdop_from_information(info_) - 1e-9) ++audit.violations;
  }

 private:
  bool satisfied(const SyncedSample& k, const SyncedSample& c) const {
    return (k.tag_pos - c.tag_pos).norm() <= (k.tag_pos - anchor_).norm();
  }

  Vec3 anchor_;
  Mat3 info_{Mat3::Zero()};
  std::optional<double> closest_t_;
  bool holds_{true};
};

void finalize(StrategyMetrics& m) {
  std::sort(m.errors.begin(), m.errors.end());
  m.init = m.errors.size();
  m.gt1m = static_cast<std::uint64_t>(std::count_if(m.errors.begin(), m.errors.end(), [](double e) { return e > 1.0; }));
  if (m.errors.empty()) return;
  m.avg_m = std::accumulate(m.errors.begin(), m.errors.end(), 0.0) / static_cast<double>(m.errors.size());
  const std::size_t n = m.errors.size();
  m.med_m = n % 2 ? m.errors[n / 2] : 0.5 * (m.errors[n / 2 - 1] + m.errors[n / 2]);
  m.ratio_pct = 100.0 * static_cast<double>(m.gt1m) / static_cast<double>(m.init);
}

}  // namespace

MCReport run_mc(const MCConfig& cfg) {
  cfg.validate();
  MCReport report;
  report.runs = cfg.runs;
  report.rows.resize(cfg.strategies.size());
  for (std::size_t i = 0; i < cfg.strategies.size(); ++i) {
    report.rows[i].method = cfg.strategies[i].label();
    report.rows[i].stream_checksum = kFnvOffset;
  }

  for (int run = 0; run < cfg.runs; ++run) {
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(run);
    const PoseBuffer poses = gen_trajectory(cfg.trajectory, seed);
    const std::vector<Vec3> anchors =
        cfg.anchors.empty() ? gen_anchors(cfg.trajectory, cfg.anchor_count, seed) : cfg.anchors;

    for (std::size_t ai = 0; ai < anchors.size(); ++ai) {
      const Vec3& truth = anchors[ai];
      std::mt19937_64 rng = make_rng(seed, ai);
      const auto ranges = gen_ranges(poses, truth, cfg.noise, rng, cfg.max_range);
      if (ranges.size() < cfg.init.trigger.min_samples) continue;
      const std::vector<SyncedSample> stream = synchronize(poses, ranges);

      for (std::size_t si = 0; si < cfg.strategies.size(); ++si) {
        const Strategy& strat = cfg.strategies[si];
        StrategyMetrics& row = report.rows[si];
        ++row.candidates;
        row.stream_checksum = fnv_mix(row.stream_checksum, stream_checksum(stream));

        std::optional<AnchorEstimate> est;
        switch (strat.kind) {
          case StrategyKind::PdopTriggered: {
            InitializerConfig icfg = cfg.init;
            if (!cfg.use_filter) icfg.filter.tau = std::numeric_limits<double>::infinity();
            AnchorSession session(std::to_string(ai));
            ConservativenessProbe probe(truth);
            for (const auto& s : stream) {
              const Event ev = session.ingest(s, icfg);
              if (ev.kind == EventKind::PdopUpdated || ev.kind == EventKind::Initialized) {
                probe.on_accepted(session, icfg.trigger.min_samples, report.audit);
              }
              if (ev.kind == EventKind::Initialized) break;
            }
            if (session.estimate()) est = session.estimate();
            break;
          }
          case StrategyKind::FixedWindow: {
            const BaselineResult r = run_fixed_window(stream, strat.window, cfg.init, cfg.use_filter);
            if (r.ok) est = r.estimate;
            break;
          }
          case StrategyKind::Ransac: {
            std::mt19937_64 rrng(mix_seed(seed, ai, 0x7a5c));
            const RansacResult r = run_ransac(stream, strat.ransac, cfg.init.solver, rrng);
            if (r.fit.ok) est = r.fit.estimate;
            break;
          }
        }
        if (est) row.errors.push_back((est->position - truth).norm());
      }
    }
  }
  for (auto& row : report.rows) finalize(row);
  return report;
}

std::vector<PrefixPoint> run_prefix_sweep(const PrefixSweepConfig& cfg) {
  std::vector<PrefixPoint> out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int run = 0; run < cfg.runs; ++run) {
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(run);
    const PoseBuffer poses = gen_trajectory(cfg.trajectory, seed);
    const Vec3 anchor = gen_anchors(cfg.trajectory, 1, seed).front();
    std::mt19937_64 rng = make_rng(seed, 0);
    const auto stream = synchronize(poses, gen_ranges(poses, anchor, cfg.noise, rng));

    std::vector<SyncedSample> accepted;
    FilterState state;
    for (const auto& s : stream) {
      if (accepted.size() >= cfg.max_samples) break;
      if (s.range > 0.0 && ingest(state, s, cfg.init.filter)) accepted.push_back(s);
    }
    for (std::size_t n = cfg.stride; n <= accepted.size(); n += cfg.stride) {
      if (n < 5) continue;
      const std::span<const SyncedSample> prefix(accepted.data(), n);
      PrefixPoint pt{run, n, nan, nan, nan, nan, nan, nan};
      try {
        pt.pdop_true = pdop_true(prefix, anchor);
        pt.pdop_closest = pdop_closest_point(prefix);
        const AnchorEstimate ls = solve_ls(prefix);
        pt.err_ls = (ls.position - anchor).norm();
        pt.pdop_ls = pdop_at(prefix, ls.position);
        const AnchorEstimate nls = refine(prefix, ls, kernel::None{}, cfg.init.solver);
        pt.err_nls = (nls.position - anchor).norm();
        pt.pdop_nls = pdop_at(prefix, nls.position);
      } catch (const Error&) {
        // Degenerate prefixes keep NaN for whatever could not be computed.
      }
      out.push_back(pt);
    }
  }
  return out;
}

}  // namespace uwbinit::sim
