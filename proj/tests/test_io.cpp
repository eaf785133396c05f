#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "uwbinit/commands.hpp"
#include "uwbinit/error.hpp"
#include "uwbinit/io.hpp"

using namespace uwbinit;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("uwbinit_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Csv, LoadsExamples) {
  TempDir d;
  write(d / "p.csv", "t,x,y,z\n0,0,0,0\n0.5,1,2,3\n");
  write(d / "r.csv", "t,anchor_id,range\n0,7435,2.5\n0,A01,1\n0.5,7435,2.75\n");
  write(d / "g.csv", "anchor_id,x,y,z,bias\n7435,1,2,3,0.25\n");
  const auto p = io::load_poses(d / "p.csv");
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[1].position, Vec3(1, 2, 3));
  const auto r = io::load_ranges(d / "r.csv");
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[1].anchor_id, "A01");
  EXPECT_DOUBLE_EQ(r[2].range, 2.75);
  const auto g = io::load_truth(d / "g.csv");
  ASSERT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g[0].bias, 0.25);
}

TEST(Csv, ErrorsCarryLineNumbers) {
  TempDir d;
  write(d / "p.csv", "t,x,y,z\n0,0,0,0\n1,2,3\n");
  const auto msg = error_of([&] { io::load_poses(d / "p.csv"); });
  EXPECT_NE(msg.find("p.csv:3:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("columns"), std::string::npos);

  write(d / "r.csv", "t,anchor_id,range\n0,a,1\n1,a,-0.5\n");
  EXPECT_NE(error_of([&] { io::load_ranges(d / "r.csv"); }).find(":3: negative range"), std::string::npos);

  write(d / "r2.csv", "t,anchor_id,range\n1,a,1\n0.5,a,1\n");
  EXPECT_NE(error_of([&] { io::load_ranges(d / "r2.csv"); }).find(":3:"), std::string::npos);

  write(d / "p2.csv", "t,x,y,z\n0,0,0,0\n0,1,1,1\n");
  EXPECT_NE(error_of([&] { io::load_poses(d / "p2.csv"); }).find("duplicate"), std::string::npos);

  write(d / "h.csv", "time,x,y,z\n");
  EXPECT_NE(error_of([&] { io::load_poses(d / "h.csv"); }).find(":1:"), std::string::npos);

  write(d / "n.csv", "t,x,y,z\n0,abc,0,0\n");
  EXPECT_NE(error_of([&] { io::load_poses(d / "n.csv"); }).find("invalid number"), std::string::npos);

  write(d / "g.csv", "anchor_id,x,y,z,bias\na,0,0,0,0\na,1,1,1,0\n");
  EXPECT_NE(error_of([&] { io::load_truth(d / "g.csv"); }).find("duplicate anchor_id"), std::string::npos);

  EXPECT_THROW(io::load_poses(d / "missing.csv"), Error);
}

TEST(Csv, RoundTripIsExact) {
  TempDir d;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 10.0);
  PoseBuffer poses;
  std::vector<io::RangeRecord> ranges;
  for (int k = 0; k < 200; ++k) {
    const double t = 0.1 * k + 1e-7 * n(rng);
    poses.push_back(t, Vec3(n(rng), n(rng), n(rng)));
    ranges.push_back({t, k % 3 ? "x" : "7435", std::abs(n(rng))});
  }
  io::save_poses(d / "p.csv", poses);
  io::save_ranges(d / "r.csv", ranges);
  const auto p2 = io::load_poses(d / "p.csv");
  const auto r2 = io::load_ranges(d / "r.csv");
  ASSERT_EQ(p2.size(), poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    EXPECT_EQ(p2[i].t, poses[i].t);
    EXPECT_EQ(p2[i].position, poses[i].position);
    EXPECT_EQ(r2[i].range, ranges[i].range);
    EXPECT_EQ(r2[i].anchor_id, ranges[i].anchor_id);
  }
  io::save_poses(d / "p3.csv", p2);
  EXPECT_EQ(read(d / "p.csv"), read(d / "p3.csv"));
}

TEST(Csv, MillionRowsLoadQuickly) {
  TempDir d;
  {
    std::ofstream out(d / "r.csv");
    out << "t,anchor_id,range\n";
    for (int k = 0; k < 1000000; ++k) out << 0.01 * k << ",A" << k % 30 << "," << 1.0 + 1e-3 * (k % 997) << "\n";
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = io::load_ranges(d / "r.csv");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(r.size(), 1000000u);
  // Loose bound; the single-core sandbox is far from dedicated.
  EXPECT_LT(secs, 10.0);
}

TEST(Json, Canonical) {
  nlohmann::json j;
  j["b"] = {1, 0.1, std::nan(""), -std::numeric_limits<double>::infinity()};
  j["a"] = {{"z", true}, {"c", "x"}, {"e", nlohmann::json::object()}};
  j["n"] = nullptr;
  const std::string expect =
      "{\n"
      "  \"a\": {\n"
      "    \"c\": \"x\",\n"
      "    \"e\": {},\n"
      "    \"z\": true\n"
      "  },\n"
      "  \"b\": [\n"
      "    1,\n"
      "    0.10000000000000001,\n"
      "    null,\n"
      "    null\n"
      "  ],\n"
      "  \"n\": null\n"
      "}\n";
  EXPECT_EQ(io::canonical_json(j), expect);
  EXPECT_EQ(io::format_double(1.0 / 3.0), "0.33333333333333331");
  EXPECT_EQ(std::stod(io::format_double(0.1)), 0.1);
}

TEST(Config, ParsesFlatKeys) {
  const auto cfg = io::parse_config_text(
      "# comment\n"
      "noise.sigma_d = 0.5   # trailing\n"
      "\n"
      "mc.strategies = fixed, our, ransac\n"
      "traj.kind = waypoint_box\n"
      "seed=42\n");
  EXPECT_DOUBLE_EQ(cfg.noise.sigma_d, 0.5);
  EXPECT_EQ(cfg.strategies.size(), 3u);
  EXPECT_EQ(cfg.trajectory.kind, sim::TrajectoryKind::WaypointBox);
  EXPECT_EQ(cfg.seed, 42u);
}

TEST(Config, RejectsBadInput) {
  const auto unknown = error_of([] { io::parse_config_text("noise.sigma = 1\n", "f.cfg"); });
  EXPECT_NE(unknown.find("f.cfg:1:"), std::string::npos) << unknown;
  EXPECT_NE(unknown.find("unknown key 'noise.sigma'"), std::string::npos);
  EXPECT_NE(error_of([] { io::parse_config_text("seed = 1\nseed = 2\n"); }).find(":2: duplicate"), std::string::npos);
  EXPECT_THROW(io::parse_config_text("seed 1\n"), Error);
  EXPECT_THROW(io::parse_config_text("noise.sigma_d = abc\n"), Error);
  EXPECT_THROW(io::parse_config_text("mc.strategies = best\n"), Error);
  EXPECT_THROW(io::parse_config_text("mc.use_filter = maybe\n"), Error);
  auto cfg = io::parse_config_text("noise.outlier_prob = 1.5\n");
  EXPECT_THROW(cfg.finalize(), Error);
}

TEST(Config, SigmaDerivedDefaults) {
  auto a = io::parse_config_text("noise.sigma_d = 0.5\n");
  a.finalize();
  EXPECT_DOUBLE_EQ(a.init.filter.tau, 1.0);
  EXPECT_DOUBLE_EQ(a.init.kernel_scale, 0.5);
  EXPECT_DOUBLE_EQ(a.ransac.inlier_threshold, 1.5);

  auto b = io::parse_config_text("");
  b.finalize();
  EXPECT_DOUBLE_EQ(b.init.filter.tau, 0.1);
  EXPECT_DOUBLE_EQ(b.init.kernel_scale, 0.1);

  auto c = io::parse_config_text("noise.sigma_d = 0.5\nfilter.tau = 0.7\nsolver.kernel_scale = 0.2\n");
  c.finalize();
  EXPECT_DOUBLE_EQ(c.init.filter.tau, 0.7);
  EXPECT_DOUBLE_EQ(c.init.kernel_scale, 0.2);
}

TEST(Config, EchoCoversEveryKey) {
  auto cfg = io::parse_config_text("");
  cfg.finalize();
  const auto echo = cfg.echo();
  EXPECT_EQ(echo.size(), io::config_keys().size());
  for (const auto& k : io::config_keys()) EXPECT_TRUE(echo.contains(k.key)) << k.key;
}

TEST(Evaluate, WritesTableWithExactHeader) {
  TempDir d;
  auto cfg = io::parse_config_text(
      "mc.runs = 2\nsim.anchors = 2\ntraj.kind = waypoint_box\ntraj.extent_x = 4\ntraj.extent_y = 6.5\n"
      "traj.extent_z = 7\ntraj.duration = 30\nmc.strategies = fixed,our,ransac\nransac.s = 20\n");
  cfg.finalize();
  cli::cmd_evaluate(cfg, d.path());
  std::istringstream csv(read(d / "evaluate.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "method,avg_m,med_m,init,gt1m,ratio_pct");
  std::vector<std::string> methods;
  while (std::getline(csv, line)) methods.push_back(line.substr(0, line.find(',')));
  EXPECT_EQ(methods, (std::vector<std::string>{"Fixed", "Our", "Ransac"}));
  const auto j = nlohmann::json::parse(read(d / "evaluate.json"));
  EXPECT_EQ(j["rows"].size(), 3u);
  EXPECT_TRUE(j.contains("pdop_audit"));
  EXPECT_EQ(j["version"], io::kVersion);
}
