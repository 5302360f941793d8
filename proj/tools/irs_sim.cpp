// irs_sim: run experiment plans and invariant checks.
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "irs/experiments.hpp"
#include "verify_suites.hpp"

namespace {

int run_command(const std::string& plan_path, int workers, const std::string& out, const std::string& format) {
  std::ifstream f(plan_path);
  if (!f) {
    std::cerr << "error: cannot open plan " << plan_path << "\n";
    return 2;
  }
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    std::cerr << "error: " << plan_path << ": " << e.what() << "\n";
    return 2;
  }
  const irs::ExperimentPlan plan = irs::ExperimentPlan::from_json(j);
  irs::RunOptions opt;
  opt.workers = workers;
  if (!out.empty()) opt.out_dir = out;
  const std::filesystem::path dir = opt.out_dir.value_or(std::filesystem::path(plan.outputs));
  if (format == "json") opt.write_files = false;

  const auto rows = irs::run_plan(plan, opt);
  if (format == "json") irs::emit_outputs(rows, plan, dir, irs::OutputFormat::json);

  int flagged = 0;
  for (const auto& r : rows) flagged += r.flagged ? 1 : 0;
  std::cout << rows.size() << " rows written to " << dir.string() << "\n";
  if (flagged > 0) std::cout << flagged << " grid points flagged for failed trials above 10%\n";
  return 0;
}

int verify_command(bool quick) {
  bool ok = true;
  for (const auto& s : irs::tools::run_verify_suites(quick)) {
    std::cout << (s.passed ? "PASS " : "FAIL ") << s.name << ": " << s.detail << "\n";
    ok = ok && s.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IRS channel autocorrelation estimation experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment plan");
  std::string plan_path;
  int workers = 0;
  std::string out;
  std::string format = "csv";
  run->add_option("--plan", plan_path, "plan JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--workers", workers, "worker threads (default: $IRS_SIM_WORKERS or 1)")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--out", out, "output directory (default: plan.outputs)");
  run->add_option("--format", format, "metrics format")->check(CLI::IsMember({"csv", "json"}));

  auto* verify = app.add_subcommand("verify", "run invariant checks; nonzero exit on violation");
  bool quick = false;
  verify->add_flag("--quick", quick, "smaller trial counts");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return run_command(plan_path, workers, out, format);
    if (*verify) return verify_command(quick);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
