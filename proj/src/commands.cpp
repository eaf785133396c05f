#include "uwbinit/commands.hpp"

#include <cstdio>
#include <fstream>

#include "uwbinit/error.hpp"

namespace uwbinit::cli {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t fnv_double(std::uint64_t h, double v) { return fnv(h, &v, sizeof v); }

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::Io, "write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(Errc::Io, "cannot create directory " + dir.string());
}

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

std::string anchor_label(int i, int count) {
  const int width = count > 100 ? 3 : 2;
  char buf[16];
  std::snprintf(buf, sizeof buf, "A%0*d", width, i);
  return buf;
}

}  // namespace

void cmd_simulate(const io::ToolConfig& cfg, const fs::path& out_dir) {
  ensure_dir(out_dir);
  const PoseBuffer poses = sim::gen_trajectory(cfg.trajectory, cfg.seed);
  const auto anchors = sim::gen_anchors(cfg.trajectory, cfg.anchor_count, cfg.seed);

  std::vector<io::TruthRecord> truth;
  std::vector<std::vector<sim::RangeMeasurement>> per_anchor;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    truth.push_back({anchor_label(static_cast<int>(i), cfg.anchor_count), anchors[i], cfg.noise.bias});
    auto rng = sim::make_rng(cfg.seed, i);
    per_anchor.push_back(sim::gen_ranges(poses, anchors[i], cfg.noise, rng, cfg.max_range));
  }

  // Interleave by timestamp, anchors in index order within one epoch.
  std::vector<io::RangeRecord> ranges;
  std::vector<std::size_t> cursor(anchors.size(), 0);
  for (const auto& pose : poses.poses()) {
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      auto& c = cursor[i];
      if (c < per_anchor[i].size() && per_anchor[i][c].t == pose.t) {
        ranges.push_back({pose.t, truth[i].anchor_id, per_anchor[i][c].range});
        ++c;
      }
    }
  }

  io::save_poses(out_dir / "poses.csv", poses);
  io::save_ranges(out_dir / "ranges.csv", ranges);
  io::save_truth(out_dir / "truth.csv", truth);
}

nlohmann::json build_run_report(const io::ToolConfig& cfg, const RunInputs& in) {
  const PoseBuffer poses = io::load_poses(in.poses);
  const auto ranges = io::load_ranges(in.ranges);
  std::optional<std::vector<io::TruthRecord>> truth;
  if (in.truth) truth = io::load_truth(*in.truth);

  AnchorManager manager(cfg.init);
  for (const auto& r : ranges) manager.ingest(poses, r.t, r.anchor_id, r.range);
  manager.finish();

  std::uint64_t pose_sum = kFnvOffset;
  for (const auto& p : poses.poses()) {
    pose_sum = fnv_double(pose_sum, p.t);
    for (int k = 0; k < 3; ++k) pose_sum = fnv_double(pose_sum, p.position(k));
  }
  std::uint64_t range_sum = kFnvOffset;
  for (const auto& r : ranges) {
    range_sum = fnv_double(range_sum, r.t);
    range_sum = fnv(range_sum, r.anchor_id.data(), r.anchor_id.size());
    range_sum = fnv_double(range_sum, r.range);
  }

  nlohmann::json anchors = nlohmann::json::array();
  std::size_t initialized = 0;
  for (const auto& [id, s] : manager.sessions()) {
    nlohmann::json a;
    a["anchor_id"] = id;
    a["phase"] = to_string(s.phase());
    a["n_accepted"] = s.filter_state().accepted;
    a["n_rejected"] = s.filter_state().rejected;
    a["n_dropped"] = s.dropped();
    a["diagnostic"] = s.last_diagnostic();
    if (s.phase() == Phase::Initialized) {
      ++initialized;
      const auto& est = *s.estimate();
      a["t_init"] = *s.t_init();
      a["pdop_at_init"] = *s.pdop_at_init();
      a["position"] = vec_json(est.position);
      a["bias"] = est.bias;
      a["n_samples_used"] = s.samples_at_init();
      a["converged"] = est.converged;
      a["alpha_final"] = est.alpha_final ? nlohmann::json(*est.alpha_final) : nlohmann::json();
    } else {
      a["t_init"] = nullptr;
      a["pdop_at_init"] = nullptr;
      a["position"] = nullptr;
      a["bias"] = nullptr;
      a["n_samples_used"] = 0;
      a["final_pdop"] = s.current_pdop();
    }
    if (truth) {
      nlohmann::json err;  // null unless both an estimate and a truth row exist
      for (const auto& t : *truth) {
        if (t.anchor_id == id && s.estimate()) err = (s.estimate()->position - t.position).norm();
      }
      a["error_vs_truth"] = err;
    }
    anchors.push_back(std::move(a));
  }

  nlohmann::json report;
  report["version"] = io::kVersion;
  report["config"] = cfg.echo();
  report["checksums"] = {{"poses", hex64(pose_sum)}, {"ranges", hex64(range_sum)}};
  report["anchors"] = std::move(anchors);
  report["summary"] = {{"discovered", manager.sessions().size()},
                       {"initialized", initialized},
                       {"declined", manager.sessions().size() - initialized}};
  return report;
}

int cmd_run(const io::ToolConfig& cfg, const RunInputs& in, const fs::path& out_dir) {
  const nlohmann::json report = build_run_report(cfg, in);
  ensure_dir(out_dir);
  write_text(out_dir / "report.json", io::canonical_json(report));

  auto num = [](const nlohmann::json& v) {
    return v.is_number() ? io::format_double(v.get<double>()) : std::string();
  };
  std::string csv = "anchor_id,phase,t_init,pdop_at_init,x,y,z,bias,n_samples_used,n_rejected,error_m\n";
  for (const auto& a : report["anchors"]) {
    const auto& pos = a["position"];
    csv += a["anchor_id"].get<std::string>() + "," + a["phase"].get<std::string>() + "," + num(a["t_init"]) + "," +
           num(a["pdop_at_init"]) + "," + (pos.is_array() ? num(pos[0]) + "," + num(pos[1]) + "," + num(pos[2]) : ",,") +
           "," + num(a["bias"]) + "," + std::to_string(a["n_samples_used"].get<std::uint64_t>()) + "," +
           std::to_string(a["n_rejected"].get<std::uint64_t>()) + "," +
           (a.contains("error_vs_truth") ? num(a["error_vs_truth"]) : std::string()) + "\n";
  }
  write_text(out_dir / "summary.csv", csv);
  return report["summary"]["declined"].get<std::size_t>() == 0 ? 0 : 2;
}

sim::MCReport cmd_evaluate(const io::ToolConfig& cfg, const fs::path& out_dir) {
  const sim::MCReport rep = sim::run_mc(cfg.mc_config());
  ensure_dir(out_dir);

  std::string csv = "method,avg_m,med_m,init,gt1m,ratio_pct\n";
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    csv += r.method + "," + io::format_double(r.avg_m) + "," + io::format_double(r.med_m) + "," +
           std::to_string(r.init) + "," + std::to_string(r.gt1m) + "," + io::format_double(r.ratio_pct) + "\n";
    rows.push_back({{"method", r.method},
                    {"avg_m", r.avg_m},
                    {"med_m", r.med_m},
                    {"init", r.init},
                    {"gt1m", r.gt1m},
                    {"ratio_pct", r.ratio_pct},
                    {"candidates", r.candidates},
                    {"stream_checksum", hex64(r.stream_checksum)}});
  }
  nlohmann::json j;
  j["version"] = io::kVersion;
  j["config"] = cfg.echo();
  j["runs"] = rep.runs;
  j["rows"] = std::move(rows);
  j["pdop_audit"] = {{"evaluations", rep.audit.evaluations},
                     {"condition_held", rep.audit.condition_held},
                     {"violations", rep.audit.violations}};
  write_text(out_dir / "evaluate.csv", csv);
  write_text(out_dir / "evaluate.json", io::canonical_json(j));
  return rep;
}

void cmd_sweep(const io::ToolConfig& cfg, const fs::path& out_dir) {
  const auto points = sim::run_prefix_sweep(cfg.sweep_config());
  ensure_dir(out_dir);
  std::string csv = "run,n,pdop_true,pdop_closest,pdop_ls,pdop_nls,err_ls,err_nls\n";
  for (const auto& p : points) {
    csv += std::to_string(p.run) + "," + std::to_string(p.n) + "," + io::format_double(p.pdop_true) + "," +
           io::format_double(p.pdop_closest) + "," + io::format_double(p.pdop_ls) + "," +
           io::format_double(p.pdop_nls) + "," + io::format_double(p.err_ls) + "," + io::format_double(p.err_nls) +
           "\n";
  }
  write_text(out_dir / "sweep.csv", csv);
}

}  // namespace uwbinit::cli
