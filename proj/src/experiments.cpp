#include "irs/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "irs/errors.hpp"
#include "irs/format.hpp"
#include "irs/measurement.hpp"
#include "irs/reflection_design.hpp"

namespace irs {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kChannelStream = 1;
constexpr std::uint64_t kTrainingStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct AlgorithmName {
  Algorithm a;
  const char* name;
};
constexpr AlgorithmName kAlgorithmNames[] = {
    {Algorithm::lra, "LRA"}, {Algorithm::alra, "ALRA"}, {Algorithm::robust_lra, "R-LRA"},
    {Algorithm::robust_alra, "R-ALRA"}, {Algorithm::tm, "TM"}, {Algorithm::rms, "RMS"},
    {Algorithm::csm, "CSM"}, {Algorithm::ub, "UB"},
};

template <typename T>
std::vector<T> sorted_unique(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Robust estimators accept exact powers as zero-width intervals with no noise floor.
MeasurementSet as_noisy(const MeasurementSet& ms) {
  if (ms.kind != MeasurementKind::exact) return ms;
  MeasurementSet out = ms;
  out.kind = MeasurementKind::noisy;
  out.sigma2 = 0.0;
  return out;
}

std::string point_tag(const GridPoint& p) {
  std::ostringstream os;
  os << "b" << p.b << "_T" << p.t_p << "_s" << (p.sigma2_dbm ? format_double(*p.sigma2_dbm) : "none") << "_N0"
     << p.n0 << "_D" << format_double(p.d_db);
  return os.str();
}

bool same_double(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

MetricsRow aggregate(const GridPoint& p, Algorithm a, const std::vector<const TrialRecord*>& recs,
                     bool record_timing) {
  MetricsRow row;
  row.algorithm = to_string(a);
  row.b = p.b;
  row.t_p = p.t_p;
  row.sigma2_dbm = p.sigma2_dbm;
  row.n0 = p.n0;
  row.d_db = p.d_db;
  double nm = 0.0, gain = 0.0, frac = 0.0, iters = 0.0, wall = 0.0;
  for (const TrialRecord* r : recs) {
    if (r->failed) {
      ++row.failed_trials;
      continue;
    }
    ++row.trial_count;
    gain += r->gain;
    frac += r->ub_gain > 0 ? r->gain / r->ub_gain : 1.0;
    if (r->estimation) {
      nm += r->estimation->nmse.value_or(kNaN);
      iters += r->estimation->iterations;
      wall += r->estimation->wall_time;
    }
  }
  const double n = row.trial_count;
  const bool est = produces_estimate(a);
  row.mean_nmse = est && n > 0 ? nm / n : kNaN;
  row.mean_gain = n > 0 ? gain / n : kNaN;
  row.mean_gain_fraction_of_ub = n > 0 ? frac / n : kNaN;
  row.mean_iterations = n > 0 ? iters / n : kNaN;
  row.mean_wall_time = record_timing && n > 0 ? wall / n : 0.0;
  row.flagged = row.failed_trials * 10 > static_cast<int>(recs.size());
  return row;
}

void write_trace(const std::filesystem::path& dir, const TrialRecord& r) {
  if (!r.estimation) return;
  const auto path = dir / (point_tag(r.point) + "_" + to_string(r.algorithm) + "_trial" + std::to_string(r.trial) +
                           ".json");
  nlohmann::json j = r.estimation->to_json();
  j.erase("wall_time");
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(1) << '\n';
}

}  // namespace

const char* to_string(Algorithm a) {
  for (const auto& n : kAlgorithmNames) {
    if (n.a == a) return n.name;
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  for (const auto& n : kAlgorithmNames) {
    if (name == n.name) return n.a;
  }
  throw DomainError("unknown algorithm '" + name + "'");
}

bool produces_estimate(Algorithm a) {
  return a == Algorithm::lra || a == Algorithm::alra || a == Algorithm::robust_lra ||
         a == Algorithm::robust_alra || a == Algorithm::tm;
}

bool applicable(Algorithm a, const GridPoint& p) {
  if (a == Algorithm::lra || a == Algorithm::alra) return p.noiseless() && p.d_db == 0.0;
  return true;
}

void ExperimentPlan::validate() const {
  scenario.validate();
  if (trials < 1) throw DomainError("trials must be >= 1");
  if (tp_values.empty()) throw DomainError("sweep.T_p must not be empty");
  if (noise_dbm.empty()) throw DomainError("sweep.sigma2_dbm must not be empty");
  if (n0_values.empty()) throw DomainError("sweep.N0 must not be empty");
  if (quantizer_db.empty()) throw DomainError("sweep.D_db must not be empty");
  if (algorithms.empty()) throw DomainError("sweep.algorithms must not be empty");
  const std::vector<int> bs = bits.empty() ? std::vector<int>{scenario.b} : bits;
  for (int b : bs) {
    if (b < 1 || b > 5) throw DomainError("b must be in 1..5");
    for (int t : tp_values) {
      if (t < 1) throw DomainError("T_p must be >= 1");
      if (enforce_rank && t > dimension_bound(scenario.n(), b)) {
        throw DomainError("T_p = " + std::to_string(t) + " exceeds the dimension bound " +
                          std::to_string(dimension_bound(scenario.n(), b)) + " with rank enforcement");
      }
    }
  }
  for (const auto& s : noise_dbm) {
    if (s && !std::isfinite(*s)) throw DomainError("sigma2_dbm must be finite or null");
  }
  for (int n0 : n0_values) {
    if (n0 < 1) throw DomainError("N0 must be >= 1");
  }
  for (double d : quantizer_db) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw DomainError("D_db must be >= 0");
    if (d > 0.0) QuantizerConfig::from_width(d);
  }
  if (!(settings.epsilon > 0.0 && settings.epsilon <= 1.0)) throw DomainError("epsilon must be in (0, 1]");
  if (!(settings.rho_lra > 0.0) || !(settings.rho_alra > 0.0)) throw DomainError("rho must be positive");
  if (settings.lra_max_iters < 0 || settings.alra_max_iters < 0) throw DomainError("max_iters must be >= 0");
}

ExperimentPlan ExperimentPlan::from_json(const nlohmann::json& j) {
  ExperimentPlan p;
  if (j.contains("scenario")) p.scenario = ScenarioConfig::from_json(j.at("scenario"));
  const nlohmann::json sweep = j.value("sweep", nlohmann::json::object());
  if (sweep.contains("b")) p.bits = sweep.at("b").get<std::vector<int>>();
  if (sweep.contains("T_p")) p.tp_values = sweep.at("T_p").get<std::vector<int>>();
  if (sweep.contains("sigma2_dbm")) {
    p.noise_dbm.clear();
    for (const auto& s : sweep.at("sigma2_dbm")) {
      if (s.is_null()) {
        p.noise_dbm.emplace_back(std::nullopt);
      } else {
        p.noise_dbm.emplace_back(s.get<double>());
      }
    }
  } else {
    p.noise_dbm = {std::nullopt};
  }
  if (sweep.contains("N0")) p.n0_values = sweep.at("N0").get<std::vector<int>>();
  if (sweep.contains("D_db")) p.quantizer_db = sweep.at("D_db").get<std::vector<double>>();
  if (sweep.contains("algorithms")) {
    for (const auto& a : sweep.at("algorithms")) p.algorithms.push_back(parse_algorithm(a.get<std::string>()));
  }
  p.trials = j.value("trials", p.trials);
  p.seed = j.value("seed", p.scenario.seed);
  p.outputs = j.value("outputs", p.outputs);
  p.enforce_rank = j.value("enforce_rank", p.enforce_rank);
  p.record_timing = j.value("record_timing", p.record_timing);
  p.write_traces = j.value("write_traces", p.write_traces);
  if (j.contains("estimators")) {
    const auto& e = j.at("estimators");
    auto& s = p.settings;
    s.epsilon = e.value("epsilon", s.epsilon);
    s.rho_lra = e.value("rho", s.rho_lra);
    s.rho_alra = e.value("rho_alra", s.rho_alra);
    s.lra_max_iters = e.value("lra_max_iters", s.lra_max_iters);
    s.alra_max_iters = e.value("alra_max_iters", s.alra_max_iters);
    s.alra_stall_tol = e.value("alra_stall_tol", s.alra_stall_tol);
  }
  p.validate();
  return p;
}

nlohmann::json ExperimentPlan::to_json() const {
  nlohmann::json noise = nlohmann::json::array();
  for (const auto& s : noise_dbm) noise.push_back(s ? nlohmann::json(*s) : nlohmann::json(nullptr));
  nlohmann::json algos = nlohmann::json::array();
  for (Algorithm a : algorithms) algos.push_back(to_string(a));
  return {
      {"scenario", scenario.to_json()},
      {"sweep",
       {{"b", bits.empty() ? std::vector<int>{scenario.b} : bits},
        {"T_p", tp_values},
        {"sigma2_dbm", noise},
        {"N0", n0_values},
        {"D_db", quantizer_db},
        {"algorithms", algos}}},
      {"trials", trials},
      {"seed", seed},
      {"outputs", outputs},
      {"enforce_rank", enforce_rank},
      {"record_timing", record_timing},
      {"write_traces", write_traces},
      {"estimators",
       {{"epsilon", settings.epsilon},
        {"rho", settings.rho_lra},
        {"rho_alra", settings.rho_alra},
        {"lra_max_iters", settings.lra_max_iters},
        {"alra_max_iters", settings.alra_max_iters},
        {"alra_stall_tol", settings.alra_stall_tol}}},
  };
}

std::vector<GridPoint> expand_grid(const ExperimentPlan& plan) {
  std::vector<GridPoint> pts;
  const std::vector<int> bs = plan.bits.empty() ? std::vector<int>{plan.scenario.b} : plan.bits;
  for (int b : bs) {
    for (int t : plan.tp_values) {
      for (const auto& s : plan.noise_dbm) {
        for (int n0 : plan.n0_values) {
          for (double d : plan.quantizer_db) {
            pts.push_back({b, t, s, s ? n0 : 0, d});
          }
        }
      }
    }
  }
  std::sort(pts.begin(), pts.end(), [](const GridPoint& x, const GridPoint& y) { return x.key() < y.key(); });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const GridPoint& x, const GridPoint& y) { return x.key() == y.key(); }),
            pts.end());
  return pts;
}

std::vector<TrialRecord> run_trial(const ExperimentPlan& plan, const GridPoint& point, int trial) {
  const ScenarioConfig& sc = plan.scenario;
  const auto tr = static_cast<std::uint64_t>(trial);
  const auto b = static_cast<std::uint64_t>(point.b);
  const auto tp = static_cast<std::uint64_t>(point.t_p);
  const std::vector<Algorithm> algos = sorted_unique(plan.algorithms);

  std::vector<TrialRecord> out;
  auto record = [&](Algorithm a) -> TrialRecord& {
    TrialRecord r;
    r.point = point;
    r.trial = trial;
    r.algorithm = a;
    out.push_back(std::move(r));
    return out.back();
  };

  ChannelRealization ch;
  MeasurementSet ms;
  double ub = 0.0;
  try {
    Rng ch_rng = make_stream(plan.seed, {kChannelStream, tr});
    const Point3 pos = sample_user_position(sc, ch_rng);
    ch = sample_channels(sc, pos, ch_rng);
    Rng train_rng = make_stream(plan.seed, {kTrainingStream, b, tp, tr});
    const auto refl = generate_training(sc.n_irs(), point.b, point.t_p, train_rng, plan.enforce_rank);
    if (point.noiseless()) {
      ms = measure_exact(ch, refl, sc.p0_watts());
    } else {
      Rng noise_rng = make_stream(plan.seed, {kNoiseStream, b, tp, std::bit_cast<std::uint64_t>(*point.sigma2_dbm),
                                              static_cast<std::uint64_t>(point.n0), tr});
      ms = measure_noisy(ch, refl, sc.p0_watts(), dbm_to_watts(*point.sigma2_dbm), point.n0, noise_rng);
    }
    if (point.d_db > 0.0) ms = quantize_set(ms, QuantizerConfig::from_width(point.d_db));
    ub = upper_bound_gain(ch.h_bar, point.b).gain;
  } catch (const std::exception& e) {
    for (Algorithm a : algos) {
      if (!applicable(a, point)) continue;
      TrialRecord& r = record(a);
      r.failed = true;
      r.error = std::string("data generation: ") + e.what();
    }
    return out;
  }

  const EstimatorSettings& s = plan.settings;
  for (Algorithm a : algos) {
    if (!applicable(a, point)) continue;
    TrialRecord& r = record(a);
    r.ub_gain = ub;
    try {
      std::optional<EstimationResult> est;
      switch (a) {
        case Algorithm::lra: {
          LraOptions o;
          o.epsilon = s.epsilon;
          o.max_iters = s.lra_max_iters;
          est = lra_estimate(ms, point.b, o);
          break;
        }
        case Algorithm::alra: {
          AlraOptions o;
          o.max_iters = s.alra_max_iters;
          o.stall_tol = s.alra_stall_tol;
          est = alra_estimate(ms, point.b, o);
          break;
        }
        case Algorithm::robust_lra: {
          RobustLraOptions o;
          o.rho = s.rho_lra;
          o.epsilon = s.epsilon;
          o.max_iters = s.lra_max_iters;
          est = robust_lra_estimate(as_noisy(ms), point.b, o);
          break;
        }
        case Algorithm::robust_alra: {
          RobustAlraOptions o;
          o.rho = s.rho_alra;
          o.max_iters = s.alra_max_iters;
          o.stall_tol = s.alra_stall_tol;
          est = robust_alra_estimate(as_noisy(ms), point.b, o);
          break;
        }
        case Algorithm::tm:
          est = tracemin_baseline(ms, point.b, s.rho_lra);
          break;
        case Algorithm::rms:
          r.gain = effective_gain(ch.h_bar, rms_design(ms));
          break;
        case Algorithm::csm:
          r.gain = effective_gain(ch.h_bar, csm_design(ms, point.b));
          break;
        case Algorithm::ub:
          r.gain = ub;
          break;
      }
      if (est) {
        est->nmse = nmse_for_bits(est->estimate, ch.H_bar, point.b);
        if (!plan.record_timing) est->wall_time = 0.0;
        r.gain = effective_gain(ch.h_bar, design_from_estimate(est->estimate, point.b));
        r.estimation = std::move(est);
      }
    } catch (const std::exception& e) {
      r.failed = true;
      r.error = e.what();
      r.estimation.reset();
    }
  }
  return out;
}

int default_worker_count() {
  if (const char* env = std::getenv("IRS_SIM_WORKERS")) {
    try {
      const int k = std::stoi(env);
      if (k >= 1) return k;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

std::vector<MetricsRow> run_plan(const ExperimentPlan& plan, const RunOptions& opt) {
  plan.validate();
  const std::vector<GridPoint> grid = expand_grid(plan);
  const std::vector<Algorithm> algos = sorted_unique(plan.algorithms);
  const int trials = plan.trials;
  const size_t n_tasks = grid.size() * static_cast<size_t>(trials);
  const int workers = std::max(1, std::min<int>(opt.workers > 0 ? opt.workers : default_worker_count(),
                                                 static_cast<int>(n_tasks)));

  const std::filesystem::path dir = opt.out_dir.value_or(std::filesystem::path(plan.outputs));
  std::ofstream csv;
  if (opt.write_files) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
    if (plan.write_traces) {
      std::filesystem::create_directories(dir / "traces", ec);
      if (ec) throw std::runtime_error("cannot create " + (dir / "traces").string() + ": " + ec.message());
    }
    {
      std::ofstream pj(dir / "plan.json");
      if (!pj) throw std::runtime_error("cannot write " + (dir / "plan.json").string());
      pj << plan.to_json().dump(2) << '\n';
    }
    csv.open(dir / "metrics.csv");
    if (!csv) throw std::runtime_error("cannot write " + (dir / "metrics.csv").string());
    write_metrics_header(csv);
    csv.flush();
  }

  std::vector<std::vector<TrialRecord>> results(n_tasks);
  std::vector<int> done(grid.size(), 0);
  size_t next_emit = 0;
  std::vector<MetricsRow> rows;
  std::mutex mu;
  std::atomic<size_t> next_task{0};
  std::exception_ptr fatal;

  // Emits rows for every leading grid point whose trials are all finished.
  auto flush_ready = [&] {
    while (next_emit < grid.size() && done[next_emit] == trials) {
      const GridPoint& p = grid[next_emit];
      for (Algorithm a : algos) {
        if (!applicable(a, p)) continue;
        std::vector<const TrialRecord*> recs;
        for (int t = 0; t < trials; ++t) {
          for (const auto& r : results[next_emit * static_cast<size_t>(trials) + static_cast<size_t>(t)]) {
            if (r.algorithm == a) recs.push_back(&r);
          }
        }
        rows.push_back(aggregate(p, a, recs, plan.record_timing));
        if (csv.is_open()) write_metrics_row(csv, rows.back());
      }
      if (csv.is_open()) {
        csv.flush();
        if (!csv) throw std::runtime_error("write failed: " + (dir / "metrics.csv").string());
      }
      for (int t = 0; t < trials; ++t) {
        results[next_emit * static_cast<size_t>(trials) + static_cast<size_t>(t)].clear();
      }
      ++next_emit;
    }
  };

  auto worker = [&] {
    for (;;) {
      const size_t task = next_task.fetch_add(1);
      if (task >= n_tasks) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (fatal) return;
      }
      const size_t pi = task / static_cast<size_t>(trials);
      const int trial = static_cast<int>(task % static_cast<size_t>(trials));
      try {
        std::vector<TrialRecord> recs = run_trial(plan, grid[pi], trial);
        if (opt.write_files && plan.write_traces) {
          for (const auto& r : recs) write_trace(dir / "traces", r);
        }
        std::lock_guard<std::mutex> lock(mu);
        if (opt.observer) {
          for (const auto& r : recs) opt.observer(r);
        }
        results[task] = std::move(recs);
        ++done[pi];
        flush_ready();
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!fatal) fatal = std::current_exception();
        return;
      }
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (fatal) std::rethrow_exception(fatal);
  return rows;
}

bool MetricsRow::operator==(const MetricsRow& o) const {
  return algorithm == o.algorithm && b == o.b && t_p == o.t_p && sigma2_dbm == o.sigma2_dbm && n0 == o.n0 &&
         d_db == o.d_db && trial_count == o.trial_count && same_double(mean_nmse, o.mean_nmse) &&
         same_double(mean_gain, o.mean_gain) && same_double(mean_gain_fraction_of_ub, o.mean_gain_fraction_of_ub) &&
         same_double(mean_iterations, o.mean_iterations) && same_double(mean_wall_time, o.mean_wall_time) &&
         failed_trials == o.failed_trials && flagged == o.flagged;
}

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols = {
      "algorithm",  "b",         "T_p",       "sigma2_dbm",      "N0",
      "D_db",       "trial_count", "mean_nmse", "mean_gain",     "mean_gain_fraction_of_ub",
      "mean_iterations", "mean_wall_time", "failed_trials", "flagged"};
  return cols;
}

void write_metrics_header(std::ostream& os) {
  const auto& cols = metrics_columns();
  for (size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
}

void write_metrics_row(std::ostream& os, const MetricsRow& r) {
  os << r.algorithm << ',' << r.b << ',' << r.t_p << ','
     << (r.sigma2_dbm ? format_double(*r.sigma2_dbm) : std::string("none")) << ',' << r.n0 << ','
     << format_double(r.d_db) << ',' << r.trial_count << ',' << format_double(r.mean_nmse) << ','
     << format_double(r.mean_gain) << ',' << format_double(r.mean_gain_fraction_of_ub) << ','
     << format_double(r.mean_iterations) << ',' << format_double(r.mean_wall_time) << ',' << r.failed_trials << ','
     << (r.flagged ? 1 : 0) << '\n';
}

std::vector<MetricsRow> parse_metrics_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DomainError("metrics CSV is empty");
  {
    std::ostringstream hdr;
    write_metrics_header(hdr);
    if (line + "\n" != hdr.str()) throw DomainError("unexpected metrics CSV header: " + line);
  }
  std::vector<MetricsRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != metrics_columns().size()) {
      throw DomainError("line " + std::to_string(lineno) + ": expected " +
                        std::to_string(metrics_columns().size()) + " fields");
    }
    try {
      MetricsRow r;
      r.algorithm = f[0];
      r.b = std::stoi(f[1]);
      r.t_p = std::stoi(f[2]);
      if (f[3] != "none") r.sigma2_dbm = parse_double(f[3]);
      r.n0 = std::stoi(f[4]);
      r.d_db = parse_double(f[5]);
      r.trial_count = std::stoi(f[6]);
      r.mean_nmse = parse_double(f[7]);
      r.mean_gain = parse_double(f[8]);
      r.mean_gain_fraction_of_ub = parse_double(f[9]);
      r.mean_iterations = parse_double(f[10]);
      r.mean_wall_time = parse_double(f[11]);
      r.failed_trials = std::stoi(f[12]);
      r.flagged = f[13] == "1";
      rows.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      throw DomainError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

nlohmann::ordered_json metrics_to_json(const std::vector<MetricsRow>& rows) {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(nullptr); };
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    arr.push_back({{"algorithm", r.algorithm},
                   {"b", r.b},
                   {"T_p", r.t_p},
                   {"sigma2_dbm", r.sigma2_dbm ? nlohmann::ordered_json(*r.sigma2_dbm) : nlohmann::ordered_json(nullptr)},
                   {"N0", r.n0},
                   {"D_db", r.d_db},
                   {"trial_count", r.trial_count},
                   {"mean_nmse", num(r.mean_nmse)},
                   {"mean_gain", num(r.mean_gain)},
                   {"mean_gain_fraction_of_ub", num(r.mean_gain_fraction_of_ub)},
                   {"mean_iterations", num(r.mean_iterations)},
                   {"mean_wall_time", num(r.mean_wall_time)},
                   {"failed_trials", r.failed_trials},
                   {"flagged", r.flagged}});
  }
  return arr;
}

void emit_outputs(const std::vector<MetricsRow>& rows, const ExperimentPlan& plan, const std::filesystem::path& dir,
                  OutputFormat format) {
  if (rows.empty()) throw DomainError("no metrics rows to emit");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  const auto metrics_path = dir / (format == OutputFormat::csv ? "metrics.csv" : "metrics.json");
  {
    std::ofstream f(metrics_path);
    if (!f) throw std::runtime_error("cannot write " + metrics_path.string());
    if (format == OutputFormat::csv) {
      write_metrics_header(f);
      for (const auto& r : rows) write_metrics_row(f, r);
    } else {
      f << metrics_to_json(rows).dump(2) << '\n';
    }
    if (!f) throw std::runtime_error("write failed: " + metrics_path.string());
  }
  const auto plan_path = dir / "plan.json";
  std::ofstream pj(plan_path);
  if (!pj) throw std::runtime_error("cannot write " + plan_path.string());
  pj << plan.to_json().dump(2) << '\n';
}

}  // namespace irs
