#include "uwbinit/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "uwbinit/error.hpp"

namespace uwbinit::io {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Line-oriented CSV reader that owns the error context.
class CsvReader {
 public:
  CsvReader(const fs::path& path, std::string_view header) : path_(path.string()), in_(path) {
    if (!in_) throw Error(Errc::Io, "cannot open " + path_);
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!trim(line).empty()) break;
      line.clear();
    }
    if (trim(line) != header) fail("expected header '" + std::string(header) + "'");
  }

  bool next(std::vector<std::string_view>& fields, std::size_t expected) {
    while (std::getline(in_, line_)) {
      ++line_no_;
      if (trim(line_).empty()) continue;
      fields = split(line_);
      if (fields.size() != expected) {
        fail("expected " + std::to_string(expected) + " columns, got " + std::to_string(fields.size()));
      }
      return true;
    }
    return false;
  }

  double number(std::string_view s) const {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      fail("invalid number '" + std::string(s) + "'");
    }
    return v;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::Parse, path_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::string path_;
  std::ifstream in_;
  std::string line_;
  std::size_t line_no_{0};
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  return out;
}

void dump(const nlohmann::json& j, std::string& out, int indent) {
  using nlohmann::json;
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map keeps keys sorted
        if (!first) out += ",\n";
        first = false;
        out += pad + json(it.key()).dump() + ": ";
        dump(it.value(), out, indent + 2);
      }
      out += "\n" + close + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        dump(j[i], out, indent + 2);
      }
      out += "\n" + close + "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_double(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string canonical_json(const nlohmann::json& j) {
  std::string out;
  dump(j, out, 0);
  out += '\n';
  return out;
}

PoseBuffer load_poses(const fs::path& path) {
  CsvReader csv(path, "t,x,y,z");
  PoseBuffer poses;
  std::vector<std::string_view> f;
  while (csv.next(f, 4)) {
    const double t = csv.number(f[0]);
    const Vec3 p(csv.number(f[1]), csv.number(f[2]), csv.number(f[3]));
    if (!poses.empty()) {
      const double last = poses.poses().back().t;
      if (t == last) csv.fail("duplicate timestamp");
      if (t < last) csv.fail("timestamps must increase");
    }
    poses.push_back(t, p);
  }
  return poses;
}

std::vector<RangeRecord> load_ranges(const fs::path& path) {
  CsvReader csv(path, "t,anchor_id,range");
  std::vector<RangeRecord> out;
  std::vector<std::string_view> f;
  while (csv.next(f, 3)) {
    RangeRecord r{csv.number(f[0]), std::string(f[1]), csv.number(f[2])};
    if (r.anchor_id.empty()) csv.fail("empty anchor_id");
    if (r.range < 0.0) csv.fail("negative range");
    if (!out.empty() && r.t < out.back().t) csv.fail("timestamps must not decrease");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TruthRecord> load_truth(const fs::path& path) {
  CsvReader csv(path, "anchor_id,x,y,z,bias");
  std::vector<TruthRecord> out;
  std::set<std::string> seen;
  std::vector<std::string_view> f;
  while (csv.next(f, 5)) {
    TruthRecord r{std::string(f[0]), Vec3(csv.number(f[1]), csv.number(f[2]), csv.number(f[3])), csv.number(f[4])};
    if (r.anchor_id.empty()) csv.fail("empty anchor_id");
    if (!seen.insert(r.anchor_id).second) csv.fail("duplicate anchor_id '" + r.anchor_id + "'");
    out.push_back(std::move(r));
  }
  return out;
}

void save_poses(const fs::path& path, const PoseBuffer& poses) {
  auto out = open_out(path);
  out << "t,x,y,z\n";
  for (const auto& p : poses.poses()) {
    out << format_double(p.t) << ',' << format_double(p.position.x()) << ',' << format_double(p.position.y())
        << ',' << format_double(p.position.z()) << '\n';
  }
  if (!out) throw Error(Errc::Io, "write failed: " + path.string());
}

void save_ranges(const fs::path& path, const std::vector<RangeRecord>& ranges) {
  auto out = open_out(path);
  out << "t,anchor_id,range\n";
  for (const auto& r : ranges) out << format_double(r.t) << ',' << r.anchor_id << ',' << format_double(r.range) << '\n';
  if (!out) throw Error(Errc::Io, "write failed: " + path.string());
}

void save_truth(const fs::path& path, const std::vector<TruthRecord>& truth) {
  auto out = open_out(path);
  out << "anchor_id,x,y,z,bias\n";
  for (const auto& r : truth) {
    out << r.anchor_id << ',' << format_double(r.position.x()) << ',' << format_double(r.position.y()) << ','
        << format_double(r.position.z()) << ',' << format_double(r.bias) << '\n';
  }
  if (!out) throw Error(Errc::Io, "write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

double parse_real(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    throw Error(Errc::Config, key + ": expected a number, got '" + v + "'");
  return x;
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    throw Error(Errc::Config, key + ": expected an integer, got '" + v + "'");
  return x;
}

std::size_t parse_count(const std::string& key, const std::string& v) {
  const auto x = parse_int(key, v);
  if (x < 0) throw Error(Errc::Config, key + ": must be >= 0");
  return static_cast<std::size_t>(x);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(Errc::Config, key + ": expected true/false, got '" + v + "'");
}

sim::StrategyKind parse_strategy(const std::string& s) {
  if (s == "fixed") return sim::StrategyKind::FixedWindow;
  if (s == "our" || s == "pdop") return sim::StrategyKind::PdopTriggered;
  if (s == "ransac") return sim::StrategyKind::Ransac;
  throw Error(Errc::Config, "mc.strategies: unknown strategy '" + s + "'");
}

const char* strategy_key(sim::StrategyKind k) {
  switch (k) {
    case sim::StrategyKind::FixedWindow: return "fixed";
    case sim::StrategyKind::PdopTriggered: return "our";
    case sim::StrategyKind::Ransac: return "ransac";
  }
  return "?";
}

struct Entry {
  const char* key;
  const char* help;
  std::function<void(ToolConfig&, const std::string&)> set;
  std::function<nlohmann::json(const ToolConfig&)> get;
};

#define REAL(KEY, FIELD, HELP)                                                                  \
  Entry {                                                                                       \
    KEY, HELP, [](ToolConfig& c, const std::string& v) { c.FIELD = parse_real(KEY, v); },      \
        [](const ToolConfig& c) { return nlohmann::json(c.FIELD); }                             \
  }
#define COUNT(KEY, FIELD, HELP)                                                                 \
  Entry {                                                                                       \
    KEY, HELP,                                                                                  \
        [](ToolConfig& c, const std::string& v) {                                               \
          c.FIELD = static_cast<decltype(c.FIELD)>(parse_count(KEY, v));                        \
        },                                                                                      \
        [](const ToolConfig& c) { return nlohmann::json(c.FIELD); }                             \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      REAL("filter.tau", init.filter.tau, "triangle-rule slack tau (m); default 2*noise.sigma_d if that is set, else 0.1"),
      REAL("trigger.pdop_threshold", init.trigger.pdop_threshold, "initialize once PDOP drops below this (1.0)"),
      COUNT("trigger.min_samples", init.trigger.min_samples, "accepted samples required before triggering (10)"),
      COUNT("trigger.max_buffer", init.trigger.max_buffer, "per-anchor buffer cap, oldest evicted first (10000)"),
      REAL("trigger.pose_max_gap", init.trigger.pose_max_gap, "largest pose gap bridged by interpolation, s (1.0)"),
      COUNT("trigger.rerefine_every", init.trigger.rerefine_every, "re-refine every K samples after init, 0 = off (0)"),
      COUNT("solver.max_iterations", init.solver.max_iterations, "LM iteration cap (100)"),
      REAL("solver.gradient_tolerance", init.solver.gradient_tolerance, "stop when |g|_inf falls below (1e-10)"),
      REAL("solver.step_tolerance", init.solver.step_tolerance, "relative step stop criterion (1e-9)"),
      REAL("solver.lm_lambda_init", init.solver.lm_lambda_init, "initial Marquardt damping (1e-3)"),
      REAL("solver.lm_lambda_factor", init.solver.lm_lambda_factor, "damping growth/shrink factor (10)"),
      REAL("solver.alpha_min", init.solver.alpha_min, "lower end of the alpha search; at or below it the loss is Welsch (-10)"),
      COUNT("solver.alpha_update_period", init.solver.alpha_update_period, "re-fit alpha every K iterations (1)"),
      REAL("solver.trunc_bound", init.solver.trunc_bound, "partition-function truncation bound in units of c (10)"),
      REAL("solver.kernel_scale", init.kernel_scale, "robust kernel scale c (m); default noise.sigma_d if set, else 0.1"),
      REAL("noise.sigma_d", noise.sigma_d, "range noise standard deviation (0.1)"),
      REAL("noise.bias", noise.bias, "constant range bias (0)"),
      REAL("noise.outlier_prob", noise.outlier_prob, "per-sample outlier probability (0)"),
      REAL("noise.outlier_low", noise.outlier_low, "smallest outlier magnitude (0.5)"),
      REAL("noise.outlier_high", noise.outlier_high, "largest outlier magnitude (5)"),
      Entry{"traj.kind", "tunnel | waypoint_box | planar_amr | collinear (tunnel)",
            [](ToolConfig& c, const std::string& v) { c.trajectory.kind = sim::trajectory_kind_from_string(v); },
            [](const ToolConfig& c) { return nlohmann::json(sim::to_string(c.trajectory.kind)); }},
      REAL("traj.extent_x", trajectory.extents.x(), "length / box size along x (100)"),
      REAL("traj.extent_y", trajectory.extents.y(), "width / box size along y (6)"),
      REAL("traj.extent_z", trajectory.extents.z(), "height / box size along z (4)"),
      REAL("traj.duration", trajectory.duration, "seconds (100)"),
      REAL("traj.rate", trajectory.rate, "pose and range rate, Hz (10)"),
      COUNT("traj.waypoints", trajectory.waypoint_count, "waypoints for box and planar paths (8)"),
      REAL("traj.sway", trajectory.sway, "max lateral sway amplitude in the tunnel (1)"),
      REAL("traj.vertical", trajectory.vertical, "max vertical motion amplitude (1)"),
      COUNT("sim.anchors", anchor_count, "anchors per simulated environment (30)"),
      REAL("sim.max_range", max_range, "ranges are only produced within this distance (25)"),
      COUNT("mc.runs", mc_runs, "Monte Carlo runs M (100)"),
      Entry{"mc.strategies", "comma list of fixed, our, ransac (fixed,our)",
            [](ToolConfig& c, const std::string& v) {
              c.strategies.clear();
              for (auto tok : split(v)) c.strategies.push_back(parse_strategy(std::string(tok)));
            },
            [](const ToolConfig& c) {
              std::string s;
              for (auto k : c.strategies) s += (s.empty() ? "" : ",") + std::string(strategy_key(k));
              return nlohmann::json(s);
            }},
      COUNT("mc.fixed_window", fixed_window, "samples used by the fixed-window baseline, 0 = all (0)"),
      Entry{"mc.use_filter", "run the triangle filter in all strategies (true)",
            [](ToolConfig& c, const std::string& v) { c.use_filter = parse_bool("mc.use_filter", v); },
            [](const ToolConfig& c) { return nlohmann::json(c.use_filter); }},
      REAL("ransac.p", ransac.p, "success probability (0.95)"),
      COUNT("ransac.s", ransac.s, "sample size per round (60)"),
      REAL("ransac.e", ransac.e, "assumed outlier fraction (0.1)"),
      REAL("ransac.inlier_threshold", ransac.inlier_threshold, "inlier residual bound (m); default 3*noise.sigma_d"),
      COUNT("sweep.runs", sweep_runs, "runs of the prefix sweep (20)"),
      COUNT("sweep.stride", sweep_stride, "prefix length step (10)"),
      COUNT("sweep.max_samples", sweep_max_samples, "longest prefix (400)"),
      Entry{"seed", "base seed; --seed overrides (1)",
            [](ToolConfig& c, const std::string& v) {
              const auto s = parse_int("seed", v);
              if (s < 0) throw Error(Errc::Config, "seed must be >= 0");
              c.seed = static_cast<std::uint64_t>(s);
            },
            [](const ToolConfig& c) { return nlohmann::json(c.seed); }},
  };
  return table;
}

#undef REAL
#undef COUNT

}  // namespace

const std::vector<ConfigKeyInfo>& config_keys() {
  static const std::vector<ConfigKeyInfo> keys = [] {
    std::vector<ConfigKeyInfo> out;
    for (const auto& e : entries()) out.push_back({e.key, e.help});
    return out;
  }();
  return keys;
}

void ToolConfig::set(const std::string& key, const std::string& value) {
  for (const auto& e : entries()) {
    if (key == e.key) {
      e.set(*this, value);
      explicit_keys.insert(key);
      return;
    }
  }
  throw Error(Errc::Config, "unknown key '" + key + "'");
}

void ToolConfig::finalize() {
  const bool sigma_set = explicit_keys.count("noise.sigma_d") > 0;
  if (!explicit_keys.count("filter.tau")) init.filter = FilterConfig::from_sigma(sigma_set ? std::optional(noise.sigma_d) : std::nullopt);
  if (!explicit_keys.count("solver.kernel_scale")) init.kernel_scale = sigma_set && noise.sigma_d > 0.0 ? noise.sigma_d : 0.1;
  if (!explicit_keys.count("ransac.inlier_threshold")) ransac.inlier_threshold = 3.0 * (noise.sigma_d > 0.0 ? noise.sigma_d : 0.1);

  if (!(init.filter.tau >= 0.0)) throw Error(Errc::Config, "filter.tau must be >= 0");
  if (!(init.kernel_scale > 0.0)) throw Error(Errc::Config, "solver.kernel_scale must be positive");
  if (anchor_count < 1) throw Error(Errc::Config, "sim.anchors must be >= 1");
  if (!(max_range > 0.0)) throw Error(Errc::Config, "sim.max_range must be positive");
  if (mc_runs < 1) throw Error(Errc::Config, "mc.runs must be >= 1");
  if (strategies.empty()) throw Error(Errc::Config, "mc.strategies must not be empty");
  if (!(ransac.inlier_threshold > 0.0)) throw Error(Errc::Config, "ransac.inlier_threshold must be positive");
  if (sweep_runs < 1 || sweep_stride < 1) throw Error(Errc::Config, "sweep.runs and sweep.stride must be >= 1");
  sim::ransac_iterations(ransac.p, ransac.s, ransac.e);
  init.trigger.validate();
  init.solver.validate();
  noise.validate();
  trajectory.validate();
}

nlohmann::json ToolConfig::echo() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& e : entries()) j[e.key] = e.get(*this);
  return j;
}

sim::MCConfig ToolConfig::mc_config() const {
  sim::MCConfig mc;
  mc.runs = mc_runs;
  mc.base_seed = seed;
  mc.strategies.clear();
  for (auto k : strategies) mc.strategies.push_back({k, fixed_window, ransac});
  mc.noise = noise;
  mc.noise.seed = seed;
  mc.trajectory = trajectory;
  mc.anchor_count = anchor_count;
  mc.max_range = max_range;
  mc.init = init;
  mc.use_filter = use_filter;
  return mc;
}

sim::PrefixSweepConfig ToolConfig::sweep_config() const {
  sim::PrefixSweepConfig sc;
  sc.runs = sweep_runs;
  sc.base_seed = seed;
  sc.noise = noise;
  const bool traj_set = std::any_of(explicit_keys.begin(), explicit_keys.end(),
                                    [](const std::string& k) { return k.rfind("traj.", 0) == 0; });
  if (traj_set) sc.trajectory = trajectory;
  sc.stride = sweep_stride;
  sc.max_samples = sweep_max_samples;
  sc.init = init;
  return sc;
}

ToolConfig parse_config_text(const std::string& text, const std::string& origin) {
  ToolConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const auto where = origin + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw Error(Errc::Config, where + "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (cfg.explicit_keys.count(key)) throw Error(Errc::Config, where + "duplicate key '" + key + "'");
    try {
      cfg.set(key, value);
    } catch (const Error& e) {
      throw Error(Errc::Config, where + e.what());
    }
  }
  return cfg;
}

ToolConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

}  // namespace uwbinit::io
