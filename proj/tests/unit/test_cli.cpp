#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  fs::path out;
  json report;
  std::string stderr_text;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

CliRun run_cli(const std::string& sub, const fs::path& config, const std::string& tag) {
  CliRun r;
  r.out = testing_support::scratch_dir("cli-" + tag);
  const fs::path err = r.out / "stderr.txt";
  const std::string cmd = std::string("'") + RQA_CLI_PATH + "' " + sub + " --config '" + config.string() +
                          "' --out '" + r.out.string() + "' 2> '" + err.string() + "' > /dev/null";
  const int status = std::system(cmd.c_str());
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.stderr_text = slurp(err);
  if (fs::exists(r.out / "report.json")) r.report = json::parse(slurp(r.out / "report.json"));
  return r;
}

fs::path shipped(const std::string& name) { return fs::path(RQA_CONFIG_DIR) / name; }

fs::path write_config(const std::string& name, const std::string& body) {
  const fs::path p = testing_support::scratch_dir("cli-configs") / name;
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST(Cli, SphereReport) {
  const CliRun r = run_cli("geometry-report", shipped("sphere.cfg"), "sphere");
  ASSERT_EQ(r.code, 0) << r.stderr_text;
  EXPECT_EQ(r.report["status"], "ok");
  EXPECT_EQ(r.report["exit_code"], 0);
  EXPECT_NEAR(r.report["result"]["scalar_curvature"].get<double>(), 2.0, 1e-4);
  EXPECT_NEAR(r.report["result"]["ricci_contraction_scalar"].get<double>(), -2.0, 1e-4);
  EXPECT_EQ(r.report["config"]["chart"], "unit-sphere");
  EXPECT_TRUE(fs::exists(r.out / "run_info.json"));
  EXPECT_TRUE(json::parse(slurp(r.out / "run_info.json")).contains("wall_time_seconds"));
}

TEST(Cli, SpectrumOneDimensional) {
  const CliRun r = run_cli("kg-spectrum", shipped("spectrum_1d.cfg"), "spectrum");
  ASSERT_EQ(r.code, 0) << r.stderr_text;
  const auto ev = r.report["result"]["eigenvalues"];
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_NEAR(ev[0].get<double>(), 9.3725830020304901, 1e-10);
  EXPECT_EQ(r.report["result"]["solver"], "dense");
}

TEST(Cli, ReportIsDeterministic) {
  const CliRun a = run_cli("kg-spectrum", shipped("spectrum_1d.cfg"), "det-a");
  const CliRun b = run_cli("kg-spectrum", shipped("spectrum_1d.cfg"), "det-b");
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(slurp(a.out / "report.json"), slurp(b.out / "report.json"));
}

TEST(Cli, UnstableStepExitsWithOne) {
  const CliRun r = run_cli("kg-evolve", shipped("evolve_unstable.cfg"), "unstable");
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.report["error"]["kind"], "stability");
  const std::string msg = r.report["error"]["message"];
  EXPECT_NE(msg.find("dt = 0.05"), std::string::npos) << msg;
  EXPECT_NE(msg.find("stability bound"), std::string::npos) << msg;
  EXPECT_NE(r.stderr_text.find("stability bound"), std::string::npos);
}

TEST(Cli, BadConfigExitsWithTwo) {
  const CliRun r = run_cli("kg-spectrum", write_config("bad.cfg", "scenario = kg-spectrum\ngrid_n = 9\nm = -1\n"), "bad");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.report["status"], "error");
  EXPECT_EQ(r.report["error"]["kind"], "config");
  bool line3 = false;
  for (const auto& i : r.report["error"]["issues"]) line3 = line3 || i["line"] == 3;
  EXPECT_TRUE(line3) << r.report.dump();
  EXPECT_NE(r.stderr_text.find("line 3"), std::string::npos) << r.stderr_text;
}

TEST(Cli, SubcommandMustMatchScenario) {
  const CliRun r = run_cli("kg-evolve", shipped("spectrum_1d.cfg"), "mismatch");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.report["error"]["message"].get<std::string>().find("does not match"), std::string::npos);
}

TEST(Cli, MissingConfigFile) {
  const CliRun r = run_cli("kg-spectrum", "/nonexistent/none.cfg", "missing");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.report["error"]["kind"], "io");
}
