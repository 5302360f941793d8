#include "verify_suites.hpp"

#include <cmath>
#include <exception>
#include <sstream>

#include "irs/channel_model.hpp"
#include "irs/estimators.hpp"
#include "irs/hermitian_space.hpp"
#include "irs/measurement.hpp"
#include "irs/reflection_design.hpp"
#include "irs/rng.hpp"

namespace irs::tools {

namespace {

// All reflections of length n with the last entry fixed to 1.
std::vector<ReflectionVector> all_reflections(int n, int b) {
  const int levels = 1 << b;
  std::vector<ReflectionVector> out;
  std::vector<std::uint8_t> idx(static_cast<size_t>(n), 0);
  for (;;) {
    out.emplace_back(b, idx);
    int i = 0;
    while (i < n - 1 && ++idx[static_cast<size_t>(i)] == levels) idx[static_cast<size_t>(i++)] = 0;
    if (i == n - 1) break;
  }
  return out;
}

SuiteResult dimension_law() {
  SuiteResult r{"dimension-law", true, ""};
  std::ostringstream os;
  const std::pair<int, int> cases[] = {{2, 1}, {3, 1}, {4, 1}, {5, 1}, {2, 2}, {3, 2}, {4, 2}};
  for (auto [n, b] : cases) {
    const auto vs = all_reflections(n, b);
    RMatrix cols(hermitian_coord_count(n), static_cast<Eigen::Index>(vs.size()));
    for (size_t t = 0; t < vs.size(); ++t) cols.col(static_cast<Eigen::Index>(t)) = vectorize_outer(vs[t].values());
    const int rank = numerical_rank(cols);
    const int bound = dimension_bound(n, b);
    if (rank != bound) {
      r.passed = false;
      os << "N=" << n << " b=" << b << " rank " << rank << " != " << bound << "; ";
    }
  }
  r.detail = r.passed ? "7 (N, b) cases" : os.str();
  return r;
}

SuiteResult monotonicity(bool quick) {
  SuiteResult r{"monotonicity", true, ""};
  ScenarioConfig cfg;
  cfg.nx = 2;
  cfg.nz = 2;
  const int trials = quick ? 3 : 10;
  int runs = 0;
  int violations = 0;
  int failures = 0;
  auto check = [&](const EstimationResult& e) {
    ++runs;
    for (size_t i = 1; i < e.ratio_trace.size(); ++i) {
      if (e.ratio_trace[i] < e.ratio_trace[i - 1] - 1e-9) ++violations;
    }
    if (!e.distance_trace.empty()) {
      const double scale = std::max(1.0, std::abs(e.distance_trace.front()));
      for (size_t i = 1; i < e.distance_trace.size(); ++i) {
        if (e.distance_trace[i] > e.distance_trace[i - 1] + 1e-9 * scale) ++violations;
      }
    }
  };
  for (int b = 1; b <= 2; ++b) {
    const int t_p = dimension_bound(cfg.n(), b);
    for (int trial = 0; trial < trials; ++trial) {
      Rng rng = make_stream(7, {static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(trial)});
      const auto ch = sample_channels(cfg, sample_user_position(cfg, rng), rng);
      const auto refl = generate_training(cfg.n_irs(), b, t_p, rng, true);
      const auto exact = measure_exact(ch, refl, cfg.p0_watts());
      const auto noisy = measure_noisy(ch, refl, cfg.p0_watts(), cfg.sigma2_watts(), 8, rng);
      try {
        check(lra_estimate(exact, b));
        check(alra_estimate(exact, b));
        check(robust_lra_estimate(noisy, b));
        check(robust_alra_estimate(noisy, b));
      } catch (const std::exception&) {
        ++failures;
      }
    }
  }
  r.passed = violations == 0 && failures == 0;
  std::ostringstream os;
  os << runs << " runs, " << violations << " violations, " << failures << " solver failures";
  r.detail = os.str();
  return r;
}

SuiteResult align_optimality(bool quick) {
  SuiteResult r{"align-optimality", true, ""};
  const int per_case = quick ? 20 : 100;
  int mismatches = 0;
  int cases = 0;
  Rng rng = make_stream(11, {});
  for (int b = 1; b <= 2; ++b) {
    for (int n = 2; n <= 6; ++n) {
      const auto all = all_reflections(n, b);
      for (int k = 0; k < per_case; ++k) {
        CVector x(n);
        for (int i = 0; i < n; ++i) x(i) = complex_normal(rng, 1.0);
        const double got = std::abs(x.dot(discrete_align(x, b).values()));
        double best = 0.0;
        for (const auto& v : all) best = std::max(best, std::abs(x.dot(v.values())));
        ++cases;
        if (std::abs(got - best) > 1e-12 * std::max(1.0, best)) ++mismatches;
      }
    }
  }
  r.passed = mismatches == 0;
  r.detail = std::to_string(cases) + " instances, " + std::to_string(mismatches) + " mismatches";
  return r;
}

SuiteResult woodbury(bool quick) {
  SuiteResult r{"woodbury", true, ""};
  const int reps = quick ? 10 : 100;
  const double rhos[] = {0.1, 10.0, 1000.0};
  Rng rng = make_stream(13, {});
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int k = 0; k < reps; ++k) {
    const double rho = rhos[k % 3];
    RMatrix C(25, 20);
    for (Eigen::Index i = 0; i < C.size(); ++i) C.data()[i] = nd(rng);
    RVector y(25);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = nd(rng);
    const RMatrix direct = RMatrix::Identity(25, 25) + rho * C * C.transpose();
    const RVector want = direct.partialPivLu().solve(y);
    const RVector got = WoodburyOperator(C, rho).apply(y);
    worst = std::max(worst, (got - want).norm() / want.norm());
  }
  r.passed = worst <= 1e-8;
  std::ostringstream os;
  os << reps << " draws, worst relative error " << worst;
  r.detail = os.str();
  return r;
}

}  // namespace

std::vector<SuiteResult> run_verify_suites(bool quick) {
  std::vector<SuiteResult> out;
  for (auto suite : {+[](bool) { return dimension_law(); }, +[](bool q) { return monotonicity(q); },
                     +[](bool q) { return align_optimality(q); }, +[](bool q) { return woodbury(q); }}) {
    try {
      out.push_back(suite(quick));
    } catch (const std::exception& e) {
      out.push_back({"suite", false, e.what()});
    }
  }
  return out;
}

}  // namespace irs::tools
