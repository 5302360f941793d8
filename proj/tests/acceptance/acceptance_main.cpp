// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "irs/channel_model.hpp"
#include "irs/estimators.hpp"
#include "irs/experiments.hpp"
#include "irs/hermitian_space.hpp"
#include "irs/measurement.hpp"
#include "irs/reflection_design.hpp"
#include "test_support.hpp"

using namespace irs;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// Closed-form dimension count, kept independent of the library.
int dimension_oracle(int n, int b) { return b == 1 ? (n * n - n) / 2 + 1 : n * n - n + 1; }

// Every estimator run from criteria 3, 6 and 7 lands here for criterion 4.
struct TraceLedger {
  int runs = 0;
  int violations = 0;
  int rejections = 0;
  double max_rejected_drop = 0.0;
  std::string first_violation;

  void add(const TrialRecord& r) {
    if (!r.estimation) return;
    const auto& e = *r.estimation;
    ++runs;
    const bool ratio_family = r.algorithm == Algorithm::lra || r.algorithm == Algorithm::robust_lra;
    const bool distance_family = r.algorithm == Algorithm::alra || r.algorithm == Algorithm::robust_alra;
    if (ratio_family) {
      for (size_t i = 1; i < e.ratio_trace.size(); ++i) {
        if (e.ratio_trace[i] < e.ratio_trace[i - 1] - 1e-9) note(r, i);
      }
      if (!std::isnan(e.rejected_value) && !e.ratio_trace.empty()) {
        ++rejections;
        max_rejected_drop = std::max(max_rejected_drop, e.ratio_trace.back() - e.rejected_value);
      }
    }
    if (distance_family && !e.distance_trace.empty()) {
      const double scale = std::max(e.distance_trace.front(), 1e-300);
      for (size_t i = 1; i < e.distance_trace.size(); ++i) {
        if (e.distance_trace[i] > e.distance_trace[i - 1] + 1e-9 * scale) note(r, i);
      }
      if (!std::isnan(e.rejected_value)) ++rejections;
    }
  }

  void note(const TrialRecord& r, size_t i) {
    if (violations++ == 0) {
      first_violation = std::string(to_string(r.algorithm)) + " b=" + std::to_string(r.point.b) +
                        " T_p=" + std::to_string(r.point.t_p) + " trial " + std::to_string(r.trial) + " step " +
                        std::to_string(i);
    }
  }
};

TraceLedger g_traces;

RunOptions quiet_run(std::map<std::string, std::vector<TrialRecord>>* sink = nullptr) {
  RunOptions opt;
  opt.workers = 1;
  opt.write_files = false;
  opt.observer = [sink](const TrialRecord& r) {
    g_traces.add(r);
    if (sink) {
      TrialRecord copy = r;
      if (copy.estimation) copy.estimation->estimate = HermitianMatrix();
      (*sink)[to_string(r.algorithm)].push_back(std::move(copy));
    }
  };
  return opt;
}

const MetricsRow& find_row(const std::vector<MetricsRow>& rows, const std::string& algo, int t_p, double d_db = 0.0) {
  for (const auto& r : rows) {
    if (r.algorithm == algo && r.t_p == t_p && r.d_db == d_db) return r;
  }
  throw std::runtime_error("missing metrics row " + algo + " T_p=" + std::to_string(t_p));
}

// 1. tr(AB) = <vec A, vec B>
Outcome criterion1() {
  auto g = test::rng_for(101);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const int n = 2 + k % 9;
    const CMatrix a = test::random_hermitian_matrix(n, g);
    const CMatrix b = test::random_hermitian_matrix(n, g);
    const double tr = (a * b).trace().real();
    const double ip = vectorize(HermitianMatrix(a)).coords.dot(vectorize(HermitianMatrix(b)).coords);
    worst = std::max(worst, std::abs(ip - tr) / (a.norm() * b.norm()));
  }
  return {worst <= 1e-10, "worst relative error " + fmt("%.2e", worst)};
}

// 2. Exhaustive V-set rank equals the dimension formula.
Outcome criterion2() {
  std::vector<std::pair<int, int>> cases = {{2, 1}, {3, 1}, {4, 1}, {2, 2}, {3, 2}, {4, 2}, {5, 1}};
  bool ok = true;
  std::ostringstream os;
  auto g = test::rng_for(202);
  for (auto [n, b] : cases) {
    const auto vs = test::all_phase_vectors(n, b);
    std::vector<CMatrix> mats;
    std::vector<HermitianMatrix> hs;
    for (const auto& v : vs) {
      mats.push_back(v * v.adjoint());
      hs.push_back(HermitianMatrix::outer(v));
    }
    const int want = dimension_oracle(n, b);
    const int raw = test::real_span_rank(mats);
    const int lib = empirical_dimension(hs);
    ok = ok && raw == want && lib == want && dimension_bound(n, b) == want;
    os << "N=" << n << ",b=" << b << ":" << raw << "/" << want << " ";
    // random subsets
    std::uniform_int_distribution<size_t> pick(0, mats.size() - 1);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<CMatrix> sub;
      const int size = 1 + rep * 3;
      for (int i = 0; i < size; ++i) sub.push_back(mats[pick(g)]);
      if (test::real_span_rank(sub) > want) ok = false;
    }
  }
  return {ok, os.str()};
}

// 3. Noiseless recovery at T_p = D with rank-enforced training.
Outcome criterion3() {
  struct Case {
    int n, b, nx, nz;
  };
  const std::vector<Case> cases = {{5, 2, 2, 2}, {6, 2, 5, 1}, {6, 1, 5, 1}, {7, 1, 3, 2}};
  bool ok = true;
  std::ostringstream os;
  for (const auto& c : cases) {
    ExperimentPlan plan;
    plan.scenario.nx = c.nx;
    plan.scenario.nz = c.nz;
    plan.bits = {c.b};
    plan.tp_values = {dimension_oracle(c.n, c.b)};
    plan.algorithms = {Algorithm::lra};
    plan.trials = 100;
    plan.seed = 303;
    plan.enforce_rank = true;
    plan.settings.epsilon = 1.0 - 1e-6;
    std::map<std::string, std::vector<TrialRecord>> recs;
    run_plan(plan, quiet_run(&recs));
    int good = 0;
    for (const auto& r : recs["LRA"]) {
      if (!r.failed && r.estimation && r.estimation->nmse && *r.estimation->nmse <= 1e-6) ++good;
    }
    ok = ok && good >= 95;
    os << "N=" << c.n << ",b=" << c.b << ":" << good << "/100 ";
  }
  return {ok, os.str()};
}

// 4. Monotone traces across every run recorded by criteria 3, 6 and 7.
Outcome criterion4() {
  std::ostringstream os;
  os << g_traces.runs << " runs, " << g_traces.violations << " violations, " << g_traces.rejections
     << " safeguard stops, largest rejected ratio drop " << fmt("%.2e", g_traces.max_rejected_drop);
  if (g_traces.violations > 0) os << "; first: " << g_traces.first_violation;
  return {g_traces.runs > 0 && g_traces.violations == 0, os.str()};
}

// 5. Breakpoint sweep against brute force.
Outcome criterion5() {
  auto g = test::rng_for(505);
  double worst = 0.0;
  int count = 0;
  for (int b = 1; b <= 2; ++b) {
    for (int n = 2; n <= 8; ++n) {
      const auto all = test::all_phase_vectors(n, b);
      for (int rep = 0; rep < 200; ++rep) {
        const CVector x = test::random_cvector(n, g);
        double best = 0.0;
        for (const auto& v : all) best = std::max(best, std::abs(x.dot(v)));
        const double got = std::abs(x.dot(discrete_align(x, b).values()));
        worst = std::max(worst, std::abs(best - got));
        ++count;
      }
    }
  }
  return {worst <= 1e-12, std::to_string(count) + " instances, worst gap " + fmt("%.2e", worst)};
}

// 6. Noiseless gain ordering at N = 17, b = 1.
Outcome criterion6() {
  ExperimentPlan base;
  base.bits = {1};
  base.trials = 100;
  base.seed = 606;
  base.algorithms = {Algorithm::lra, Algorithm::alra, Algorithm::tm, Algorithm::rms, Algorithm::csm, Algorithm::ub};
  ExperimentPlan ranked = base;
  ranked.tp_values = {50, 137};
  ranked.enforce_rank = true;
  ExperimentPlan over = base;
  over.tp_values = {170};
  auto rows = run_plan(ranked, quiet_run());
  for (auto& r : run_plan(over, quiet_run())) rows.push_back(r);

  auto gain = [&](const std::string& a, int t) { return find_row(rows, a, t).mean_gain; };
  bool ok = true;
  for (const auto& r : rows) ok = ok && !r.flagged;
  const bool small_tp = gain("LRA", 50) >= gain("TM", 50) && gain("LRA", 50) >= gain("ALRA", 50);
  bool large_tp = true;
  for (const char* e : {"LRA", "ALRA", "TM"}) {
    for (const char* bm : {"RMS", "CSM"}) large_tp = large_tp && gain(e, 170) >= gain(bm, 170);
  }
  const double frac137 = gain("LRA", 137) / gain("UB", 137);
  ok = ok && small_tp && large_tp && frac137 >= 0.99;
  std::ostringstream os;
  os << "T_p=50 LRA/TM/ALRA " << fmt("%.3f", gain("LRA", 50) / gain("UB", 50)) << "/"
     << fmt("%.3f", gain("TM", 50) / gain("UB", 50)) << "/" << fmt("%.3f", gain("ALRA", 50) / gain("UB", 50))
     << " of UB; T_p=170 min(est) " << fmt("%.3f", std::min({gain("LRA", 170), gain("ALRA", 170), gain("TM", 170)}) / gain("UB", 170))
     << " vs max(RMS,CSM) " << fmt("%.3f", std::max(gain("RMS", 170), gain("CSM", 170)) / gain("UB", 170))
     << "; LRA at T_p=137 " << fmt("%.4f", frac137) << " of UB";
  return {ok, os.str()};
}

// 7. Robust estimators under noise and 1 dB quantization.
Outcome criterion7() {
  ExperimentPlan plan;
  plan.bits = {1};
  plan.tp_values = {140};
  plan.noise_dbm = {-90.0};
  plan.n0_values = {8};
  plan.quantizer_db = {0.0, 1.0};
  plan.algorithms = {Algorithm::robust_lra, Algorithm::robust_alra, Algorithm::rms, Algorithm::csm, Algorithm::ub};
  plan.trials = 100;
  plan.seed = 707;
  const auto rows = run_plan(plan, quiet_run());
  auto gain = [&](const std::string& a, double d) { return find_row(rows, a, 140, d).mean_gain; };
  bool ok = true;
  for (const auto& r : rows) ok = ok && !r.flagged;
  std::ostringstream os;
  for (const char* a : {"R-LRA", "R-ALRA"}) {
    const double f0 = gain(a, 0.0) / gain("UB", 0.0);
    const double f1 = gain(a, 1.0) / gain("UB", 1.0);
    const double loss = (gain(a, 0.0) - gain(a, 1.0)) / gain(a, 0.0);
    ok = ok && f0 >= 0.95 && gain(a, 0.0) >= gain("RMS", 0.0) && gain(a, 0.0) >= gain("CSM", 0.0);
    ok = ok && loss <= 0.03;
    os << a << " " << fmt("%.3f", f0) << " of UB (D=1: " << fmt("%.3f", f1) << ", loss " << fmt("%.2f", 100 * loss)
       << "%); ";
  }
  os << "RMS " << fmt("%.3f", gain("RMS", 0.0) / gain("UB", 0.0)) << ", CSM "
     << fmt("%.3f", gain("CSM", 0.0) / gain("UB", 0.0));
  return {ok, os.str()};
}

// 8. Woodbury form against a direct inverse.
Outcome criterion8() {
  auto g = test::rng_for(808);
  const double rhos[] = {0.1, 10.0, 1000.0};
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int n = 3 + k % 4;
    const int d = n * n;
    const int t = std::max(1, d - 1 - k % 5);
    RMatrix C(d, t);
    for (Eigen::Index i = 0; i < C.size(); ++i) C.data()[i] = test::normal(g);
    const double rho = rhos[k % 3];
    const RVector y = test::random_rvector(d, g);
    const RMatrix direct = RMatrix::Identity(d, d) + rho * C * C.transpose();
    const RVector want = direct.inverse() * y;
    const RVector got = WoodburyOperator(C, rho).apply(y);
    worst = std::max(worst, (got - want).norm() / want.norm());
  }
  return {worst <= 1e-8, "worst relative error " + fmt("%.2e", worst)};
}

// 9. Mean and variance of averaged noisy powers.
Outcome criterion9() {
  auto g = test::rng_for(909);
  const CVector h = test::random_cvector(6, g) * 1e-5;
  Rng rng = make_stream(909, {});
  const auto v = random_reflection(5, 2, rng);
  const double p0 = 1.0, s2 = 1e-10;
  const double p = std::norm(v.values().dot(h)) * p0;
  bool ok = true;
  std::ostringstream os;
  {
    const int draws = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int k = 0; k < draws; ++k) {
      const double q = noisy_power(h, v, p0, s2, 1, rng);
      sum += q;
      sum2 += q * q;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum2 / draws - mean * mean) / draws);
    const double z = std::abs(mean - (p + s2)) / se;
    ok = ok && z <= 3.0;
    os << "mean offset " << fmt("%.2f", z) << " SE; ";
  }
  for (int n0 : {1, 8, 100}) {
    const int draws = 20000;
    double sum = 0.0, sum2 = 0.0;
    for (int k = 0; k < draws; ++k) {
      const double q = noisy_power(h, v, p0, s2, n0, rng);
      sum += q;
      sum2 += q * q;
    }
    const double mean = sum / draws;
    const double var = (sum2 - draws * mean * mean) / (draws - 1);
    const double theory = (2.0 * p * s2 + s2 * s2) / n0;
    ok = ok && std::abs(var / theory - 1.0) <= 0.2;
    os << "N0=" << n0 << " var/theory " << fmt("%.3f", var / theory) << " ";
  }
  return {ok, os.str()};
}

// 10. Same plan twice gives byte-identical CSV.
Outcome criterion10() {
  ExperimentPlan plan;
  plan.scenario.nx = 3;
  plan.scenario.nz = 2;
  plan.bits = {1, 2};
  plan.tp_values = {10, 20};
  plan.noise_dbm = {std::nullopt, -90.0};
  plan.n0_values = {4};
  plan.quantizer_db = {0.0, 1.0};
  plan.algorithms = {Algorithm::lra, Algorithm::alra, Algorithm::robust_lra, Algorithm::robust_alra,
                     Algorithm::tm, Algorithm::rms, Algorithm::csm, Algorithm::ub};
  plan.trials = 4;
  plan.seed = 1010;
  const fs::path root = fs::temp_directory_path() / "irs_acceptance_determinism";
  fs::remove_all(root);
  auto run_into = [&](const std::string& name, int workers) {
    RunOptions opt;
    opt.out_dir = root / name;
    opt.workers = workers;
    run_plan(plan, opt);
    std::ifstream f(root / name / "metrics.csv", std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  const std::string a = run_into("first", 1);
  const std::string b = run_into("second", 1);
  const std::string c = run_into("threaded", 2);
  fs::remove_all(root);
  const bool ok = !a.empty() && a == b && a == c;
  return {ok, std::to_string(a.size()) + " bytes, repeat " + (a == b ? "identical" : "differs") + ", 2 workers " +
                  (a == c ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  struct Entry {
    int id;
    double budget_s;  // 0: none stated
    std::function<Outcome()> fn;
  };
  // Criterion 4 reads traces from 3, 6 and 7, so it runs after them.
  const std::vector<Entry> entries = {{1, 5, criterion1},     {2, 30, criterion2},  {3, 1200, criterion3},
                                      {5, 0, criterion5},     {6, 1800, criterion6}, {7, 1800, criterion7},
                                      {4, 0, criterion4},     {8, 10, criterion8},  {9, 10, criterion9},
                                      {10, 0, criterion10}};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

  std::map<int, std::string> lines;
  bool all = true;
  for (const auto& e : entries) {
    if (!only.empty() && !only.count(e.id)) continue;
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = e.fn();
    } catch (const std::exception& ex) {
      out = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = e.budget_s <= 0 || secs < e.budget_s;
    const bool pass = out.pass && in_time;
    all = all && pass;
    std::ostringstream os;
    os << "criterion " << e.id << ": " << (pass ? "PASS" : "FAIL") << " (" << out.detail << "; "
       << fmt("%.1f", secs) << " s";
    if (!in_time) os << ", over the " << e.budget_s << " s budget";
    os << ")";
    lines[e.id] = os.str();
    std::fprintf(stderr, "%s\n", lines[e.id].c_str());
  }
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  return all ? 0 : 1;
}
