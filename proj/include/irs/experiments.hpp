#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "irs/channel_model.hpp"
#include "irs/estimators.hpp"

namespace irs {

enum class Algorithm { lra, alra, robust_lra, robust_alra, tm, rms, csm, ub };

const char* to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);
// LRA, ALRA, R-LRA, R-ALRA and TM produce a matrix estimate; the rest only a reflection.
bool produces_estimate(Algorithm a);

struct EstimatorSettings {
  double epsilon = 0.95;
  double rho_lra = 10.0;   // R-LRA and robust TM
  double rho_alra = 0.1;   // R-ALRA
  int lra_max_iters = 100;
  int alra_max_iters = 1000;
  double alra_stall_tol = 1e-8;
};

struct ExperimentPlan {
  ScenarioConfig scenario;
  std::vector<int> bits;                        // default: {scenario.b}
  std::vector<int> tp_values;
  std::vector<std::optional<double>> noise_dbm{std::nullopt};  // nullopt: noiseless powers
  std::vector<int> n0_values{1};
  std::vector<double> quantizer_db{0.0};         // 0: no quantization
  std::vector<Algorithm> algorithms;
  int trials = 100;
  std::uint64_t seed = 1;
  std::string outputs = "results";
  bool enforce_rank = false;
  bool record_timing = false;  // off keeps metrics.csv byte-stable across runs
  bool write_traces = false;
  EstimatorSettings settings;

  void validate() const;
  static ExperimentPlan from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// One measurement configuration; algorithms at the same point share channels,
// training and noise draws trial by trial.
struct GridPoint {
  int b = 1;
  int t_p = 0;
  std::optional<double> sigma2_dbm;
  int n0 = 0;  // 0 for noiseless points
  double d_db = 0.0;

  bool noiseless() const { return !sigma2_dbm.has_value(); }
  auto key() const {
    return std::make_tuple(b, t_p, sigma2_dbm.has_value(), sigma2_dbm.value_or(0.0), n0, d_db);
  }
};

// Whether an algorithm is run at a point: LRA and ALRA need exact powers.
bool applicable(Algorithm a, const GridPoint& p);

std::vector<GridPoint> expand_grid(const ExperimentPlan& plan);

struct MetricsRow {
  std::string algorithm;
  int b = 1;
  int t_p = 0;
  std::optional<double> sigma2_dbm;
  int n0 = 0;
  double d_db = 0.0;
  int trial_count = 0;
  double mean_nmse = 0.0;  // NaN for algorithms without a matrix estimate
  double mean_gain = 0.0;
  double mean_gain_fraction_of_ub = 0.0;
  double mean_iterations = 0.0;
  double mean_wall_time = 0.0;
  int failed_trials = 0;
  bool flagged = false;

  bool operator==(const MetricsRow& o) const;
};

struct TrialRecord {
  GridPoint point;
  int trial = 0;
  Algorithm algorithm = Algorithm::ub;
  bool failed = false;
  std::string error;
  double gain = 0.0;
  double ub_gain = 0.0;
  std::optional<EstimationResult> estimation;
};

struct RunOptions {
  int workers = 0;  // 0: IRS_SIM_WORKERS or 1
  std::optional<std::filesystem::path> out_dir;  // overrides plan.outputs
  bool write_files = true;
  // Called once per (point, trial, algorithm), serialized across workers.
  std::function<void(const TrialRecord&)> observer;
};

// Runs every trial of one grid point; exposed for tests and tooling.
std::vector<TrialRecord> run_trial(const ExperimentPlan& plan, const GridPoint& point, int trial);

std::vector<MetricsRow> run_plan(const ExperimentPlan& plan, const RunOptions& opt = {});

int default_worker_count();

enum class OutputFormat { csv, json };

const std::vector<std::string>& metrics_columns();
void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const MetricsRow& row);
std::vector<MetricsRow> parse_metrics_csv(std::istream& is);
nlohmann::ordered_json metrics_to_json(const std::vector<MetricsRow>& rows);

// Writes metrics.csv or metrics.json plus plan.json into dir.
void emit_outputs(const std::vector<MetricsRow>& rows, const ExperimentPlan& plan, const std::filesystem::path& dir,
                  OutputFormat format = OutputFormat::csv);

}  // namespace irs
