#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("uwbinit_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int cli(const std::string& args) {
    const std::string cmd = std::string(UWBINIT_CLI) + " " + args + " >" + (dir_ / "stdout").string() + " 2>" +
                            (dir_ / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path config(const std::string& text) {
    const fs::path p = dir_ / ("c" + std::to_string(n_++) + ".cfg");
    std::ofstream(p) << text;
    return p;
  }

  static std::string read(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
  int n_{0};
};

const char* kBox =
    "traj.kind = waypoint_box\n"
    "traj.extent_x = 4\ntraj.extent_y = 6.5\ntraj.extent_z = 7\n"
    "traj.duration = 60\ntraj.waypoints = 12\n"
    "sim.anchors = 4\n"
    "noise.sigma_d = 0.05\n";

}  // namespace

TEST_F(CliTest, SimulateThenRunInitializesEverything) {
  const auto cfg = config(kBox);
  ASSERT_EQ(cli("simulate --config " + cfg.string() + " --seed 3 --out " + p("data")), 0) << read(dir_ / "stderr");
  EXPECT_EQ(read(dir_ / "data/poses.csv").substr(0, 8), "t,x,y,z\n");
  EXPECT_EQ(read(dir_ / "data/truth.csv").substr(0, 21), "anchor_id,x,y,z,bias\n");
  ASSERT_EQ(cli("run --config " + cfg.string() + " --data " + p("data") + " --out " + p("out")), 0)
      << read(dir_ / "stderr");
  const auto j = nlohmann::json::parse(read(dir_ / "out/report.json"));
  EXPECT_EQ(j["summary"]["discovered"], 4);
  EXPECT_EQ(j["summary"]["initialized"], 4);
  for (const auto& a : j["anchors"]) {
    EXPECT_LT(a["pdop_at_init"].get<double>(), 1.0);
    EXPECT_LT(a["error_vs_truth"].get<double>(), 1.0);
  }
  const auto summary = read(dir_ / "out/summary.csv");
  EXPECT_EQ(summary.substr(0, summary.find('\n')),
            "anchor_id,phase,t_init,pdop_at_init,x,y,z,bias,n_samples_used,n_rejected,error_m");
}

TEST_F(CliTest, CollinearDeclines) {
  const auto line = config(
      "traj.kind = collinear\ntraj.extent_x = 20\ntraj.extent_y = 5\ntraj.extent_z = 3\n"
      "traj.duration = 30\nsim.anchors = 3\n");
  ASSERT_EQ(cli("simulate --config " + line.string() + " --out " + p("data")), 0);
  EXPECT_EQ(cli("run --config " + line.string() + " --data " + p("data") + " --out " + p("out")), 2);
  const auto j = nlohmann::json::parse(read(dir_ / "out/report.json"));
  EXPECT_EQ(j["summary"]["initialized"], 0);
  for (const auto& a : j["anchors"]) {
    EXPECT_TRUE(a["position"].is_null());
    EXPECT_EQ(a["phase"], "degenerate");
  }
}

TEST_F(CliTest, RunIsByteIdentical) {
  const auto cfg = config(kBox);
  ASSERT_EQ(cli("simulate --config " + cfg.string() + " --out " + p("data")), 0);
  ASSERT_EQ(cli("run --config " + cfg.string() + " --data " + p("data") + " --out " + p("a")), 0);
  ASSERT_EQ(cli("run --config " + cfg.string() + " --data " + p("data") + " --out " + p("b")), 0);
  EXPECT_EQ(read(dir_ / "a/report.json"), read(dir_ / "b/report.json"));
  EXPECT_EQ(read(dir_ / "a/summary.csv"), read(dir_ / "b/summary.csv"));
}

TEST_F(CliTest, EvaluateIsByteIdentical) {
  const auto ok = config(
      "traj.kind = waypoint_box\ntraj.extent_x = 4\ntraj.extent_y = 6.5\ntraj.extent_z = 7\n"
      "traj.duration = 30\nsim.anchors = 3\nmc.runs = 2\n");
  ASSERT_EQ(cli("evaluate --config " + ok.string() + " --seed 5 --out " + p("a")), 0) << read(dir_ / "stderr");
  ASSERT_EQ(cli("evaluate --config " + ok.string() + " --seed 5 --out " + p("b")), 0);
  EXPECT_EQ(read(dir_ / "a/evaluate.csv"), read(dir_ / "b/evaluate.csv"));
  EXPECT_EQ(read(dir_ / "a/evaluate.json"), read(dir_ / "b/evaluate.json"));
  EXPECT_EQ(read(dir_ / "a/evaluate.csv").substr(0, 39), "method,avg_m,med_m,init,gt1m,ratio_pct\n");
  ASSERT_EQ(cli("evaluate --config " + ok.string() + " --seed 6 --out " + p("c")), 0);
  EXPECT_NE(read(dir_ / "a/evaluate.json"), read(dir_ / "c/evaluate.json"));
}

TEST_F(CliTest, SweepWritesCsv) {
  const auto cfg = config("sweep.runs = 2\nsweep.max_samples = 60\n");
  ASSERT_EQ(cli("sweep --config " + cfg.string() + " --out " + p("s")), 0) << read(dir_ / "stderr");
  const auto csv = read(dir_ / "s/sweep.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "run,n,pdop_true,pdop_closest,pdop_ls,pdop_nls,err_ls,err_nls");
}

TEST_F(CliTest, ErrorsExitOne) {
  const auto bad = config("noise.sigma = 0.1\n");
  EXPECT_EQ(cli("simulate --config " + bad.string() + " --out " + p("x")), 1);
  EXPECT_NE(read(dir_ / "stderr").find("unknown key"), std::string::npos);
  const auto dup = config(std::string(kBox) + "traj.duration = 30\n");
  EXPECT_EQ(cli("evaluate --config " + dup.string() + " --out " + p("x")), 1);
  EXPECT_NE(read(dir_ / "stderr").find("duplicate key"), std::string::npos);
  EXPECT_EQ(cli("simulate --config " + p("nope.cfg")), 1);
  EXPECT_EQ(cli("frobnicate"), 1);
  EXPECT_EQ(cli("run --out " + p("x")), 1);
  EXPECT_EQ(cli("run --poses " + p("missing.csv") + " --ranges " + p("missing.csv")), 1);
  EXPECT_EQ(cli("--help"), 0);
}
