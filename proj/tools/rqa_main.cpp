#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rqa/scenario.hpp"

namespace fs = std::filesystem;

namespace {

int finish(const fs::path& out_dir, const rqa::json& report, int code, double seconds) {
  try {
    fs::create_directories(out_dir);
    rqa::write_report(out_dir / "report.json", report);
    rqa::json info = {{"wall_time_seconds", seconds}, {"report", "report.json"}, {"exit_code", code}};
    rqa::write_report(out_dir / "run_info.json", info);
  } catch (const std::exception& e) {
    std::cerr << "rqa: cannot write report: " << e.what() << '\n';
    std::cerr << report.dump(2) << '\n';
    return 2;
  }
  if (code != 0) {
    std::cerr << "rqa: " << report.value("status", "error");
    if (report.contains("error")) std::cerr << ": " << report["error"].value("message", "");
    std::cerr << '\n';
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curvature, action and flat-limit field solvers driven by a scenario config"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = ".";
  bool dump = false;
  for (const char* name : {"geometry-report", "action-eval", "kg-spectrum", "kg-evolve", "einstein-fit"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " scenario");
    sub->add_option("--config", config_path, "flat key = value config file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("--dump-integrands", dump, "write per-node CSV dumps");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  std::ifstream in(config_path);
  if (!in) {
    return finish(out_dir, rqa::error_report(nullptr, "io", "cannot read config '" + config_path + "'", 2), 2,
                  elapsed());
  }
  std::stringstream text;
  text << in.rdbuf();
  const rqa::ConfigParse parsed = rqa::parse_config(text.str());
  if (!parsed.ok()) {
    std::string msg = "config '" + config_path + "' has " + std::to_string(parsed.issues.size()) + " error(s)";
    for (const auto& i : parsed.issues) std::cerr << config_path << ": " << i.format() << '\n';
    return finish(out_dir, rqa::error_report(nullptr, "config", msg, 2, parsed.issues), 2, elapsed());
  }
  if (subcommand != rqa::to_string(parsed.config.scenario)) {
    return finish(out_dir,
                  rqa::error_report(&parsed.config, "config",
                                    "subcommand '" + subcommand + "' does not match scenario '" +
                                        rqa::to_string(parsed.config.scenario) + "' in the config",
                                    2),
                  2, elapsed());
  }
  try {
    fs::create_directories(out_dir);
  } catch (const std::exception& e) {
    std::cerr << "rqa: cannot create output directory '" << out_dir << "': " << e.what() << '\n';
    return 2;
  }
  const rqa::RunOutcome outcome = rqa::run_scenario(parsed.config, {out_dir, dump});
  return finish(out_dir, outcome.report, outcome.exit_code, elapsed());
}
