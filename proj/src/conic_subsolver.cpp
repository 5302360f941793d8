#include "irs/conic_subsolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conic_ipm.hpp"
#include "irs/errors.hpp"

namespace irs {

using detail::ConicProblem;
using detail::IpmOptions;
using detail::IpmResult;
using detail::solve_conic;

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iter: return "max-iter";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "?";
}

double Residuals::worst() const { return std::max({primal, dual, gap}); }

void LinearMeasurementConstraints::validate() const {
  if (vs.empty()) throw DomainError("no measurement constraints");
  const auto n = vs.front().size();
  for (const auto& v : vs) {
    if (v.size() != n) throw DomainError("constraint vectors have inconsistent dimensions");
    if (symmetry == SymmetryClass::real_symmetric && v.imag().cwiseAbs().maxCoeff() > 0.0) {
      throw DomainError("real-symmetric constraints need real reflection vectors");
    }
  }
  if (has_intervals()) {
    if (intervals.size() != vs.size()) throw DomainError("interval count differs from T_p");
    for (const auto& iv : intervals) {
      if (!(iv.lower <= iv.upper)) throw DomainError("interval bounds out of order");
    }
  } else if (equalities.size() != vs.size()) {
    throw DomainError("equality count differs from T_p");
  }
  if (!(p0 > 0)) throw DomainError("p0 must be positive");
}

LinearMeasurementConstraints LinearMeasurementConstraints::from_measurements(const MeasurementSet& ms,
                                                                             SymmetryClass sym) {
  ms.validate();
  LinearMeasurementConstraints c;
  c.p0 = ms.p0;
  c.sigma2 = ms.sigma2;
  c.symmetry = sym;
  for (const auto& r : ms.reflections) c.vs.push_back(r.values());
  switch (ms.kind) {
    case MeasurementKind::exact: c.equalities = ms.powers; break;
    case MeasurementKind::noisy:
      for (double q : ms.powers) c.intervals.push_back({q, q});
      break;
    case MeasurementKind::quantized:
      for (const auto& l : ms.levels) c.intervals.push_back({l.lower, l.upper});
      break;
  }
  c.validate();
  return c;
}

double power_scale(const LinearMeasurementConstraints& cons) {
  double s = 0.0;
  if (cons.has_intervals()) {
    for (const auto& iv : cons.intervals) s += 0.5 * (iv.lower + iv.upper);
  } else {
    for (double p : cons.equalities) s += p;
  }
  s /= std::max(1, cons.size());
  return s > 0 ? s : cons.p0;
}

namespace {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
Vec<Scalar> as_scalar(const CVector& v) {
  if constexpr (std::is_same_v<Scalar, double>) {
    return v.real();
  } else {
    return v;
  }
}

template <typename Scalar>
Mat<Scalar> as_scalar(const CMatrix& a) {
  if constexpr (std::is_same_v<Scalar, double>) {
    return a.real();
  } else {
    return a;
  }
}

template <typename Scalar>
HermitianMatrix to_hermitian(const Mat<Scalar>& a) {
  return HermitianMatrix(CMatrix(a.template cast<cdouble>()), 1e-6);
}

template <typename Scalar>
ConicProblem<Scalar> base_problem(const LinearMeasurementConstraints& cons, int n_lin, int m) {
  ConicProblem<Scalar> p;
  p.n = cons.dim();
  p.n_lin = n_lin;
  p.U.resize(p.n, 0);
  p.b = RVector::Zero(m);
  p.c_lin = RVector::Zero(n_lin);
  p.q_lin = RVector::Zero(n_lin);
  return p;
}

template <typename Scalar>
void add_trace_row(ConicProblem<Scalar>& p, int row) {
  for (int k = 0; k < p.n; ++k) p.add_factor(Vec<Scalar>::Unit(p.n, k), row, 1.0);
}

IpmOptions ipm_options(double tol) { return IpmOptions{tol, std::max(tol, 1e-8), 120}; }

double kappa_for(const LinearMeasurementConstraints& cons) { return power_scale(cons) / cons.p0; }

template <typename Scalar>
ConicSolution ratio_impl(const HermitianMatrix& X, const LinearMeasurementConstraints& cons, double tol) {
  const int T = cons.size();
  const double kappa = kappa_for(cons);
  auto p = base_problem<Scalar>(cons, 1, T + 1);
  for (int t = 0; t < T; ++t) {
    p.add_factor(as_scalar<Scalar>(cons.vs[static_cast<size_t>(t)]), t, 1.0);
    p.lin_entries.emplace_back(t, 0, -cons.equalities[static_cast<size_t>(t)] / (cons.p0 * kappa));
  }
  add_trace_row(p, T);
  p.b(T) = 1.0;
  p.C = -as_scalar<Scalar>(X.matrix());
  p.reduce_rows = true;
  const IpmResult<Scalar> r = solve_conic(p, ipm_options(tol));

  ConicSolution sol;
  sol.G = to_hermitian<Scalar>(r.X);
  sol.gamma = r.x(0) / kappa;
  sol.objective = -r.pobj;
  sol.status = r.status;
  sol.residuals = r.residuals;
  sol.iterations = r.iterations;
  return sol;
}

template <typename Scalar>
TraceMinSolution trace_min_impl(const LinearMeasurementConstraints& cons, double tol) {
  const int T = cons.size();
  const double kappa = kappa_for(cons);
  auto p = base_problem<Scalar>(cons, 0, T);
  for (int t = 0; t < T; ++t) {
    p.add_factor(as_scalar<Scalar>(cons.vs[static_cast<size_t>(t)]), t, 1.0);
    p.b(t) = cons.equalities[static_cast<size_t>(t)] / (cons.p0 * kappa);
  }
  p.C = Mat<Scalar>::Identity(p.n, p.n);
  p.reduce_rows = true;
  const IpmResult<Scalar> r = solve_conic(p, ipm_options(tol));

  TraceMinSolution sol;
  sol.H = to_hermitian<Scalar>(Mat<Scalar>(r.X * kappa));
  sol.delta = RVector::Zero(T);
  sol.objective = r.pobj * kappa;
  sol.status = r.status;
  sol.residuals = r.residuals;
  sol.iterations = r.iterations;
  return sol;
}

// Linear variables: delta (T), lower slack (T), upper slack (T).
template <typename Scalar>
TraceMinSolution robust_trace_min_impl(const LinearMeasurementConstraints& cons, double rho, double tol) {
  const int T = cons.size();
  const double kappa = kappa_for(cons);
  const double unit = cons.p0 * kappa;
  auto p = base_problem<Scalar>(cons, 3 * T, 2 * T);
  for (int t = 0; t < T; ++t) {
    const auto& iv = cons.intervals[static_cast<size_t>(t)];
    const double lo = (iv.lower - cons.sigma2) / unit;
    const double hi = (iv.upper - cons.sigma2) / unit;
    p.add_factor(as_scalar<Scalar>(cons.vs[static_cast<size_t>(t)]), t, 1.0);
    p.lin_entries.emplace_back(t, t, 1.0);
    p.lin_entries.emplace_back(t, T + t, -1.0);
    p.b(t) = lo;
    p.lin_entries.emplace_back(T + t, T + t, 1.0);
    p.lin_entries.emplace_back(T + t, 2 * T + t, 1.0);
    p.lin_entries.emplace_back(T + t, t, -2.0);
    p.b(T + t) = hi - lo;
    p.q_lin(t) = 2.0 * rho;
  }
  p.C = Mat<Scalar>::Identity(p.n, p.n);
  const IpmResult<Scalar> r = solve_conic(p, ipm_options(tol));

  TraceMinSolution sol;
  sol.H = to_hermitian<Scalar>(Mat<Scalar>(r.X * kappa));
  sol.delta = r.x.head(T).cwiseMax(0.0) * unit;
  sol.objective = r.pobj;
  sol.status = r.status;
  sol.residuals = r.residuals;
  sol.iterations = r.iterations;
  return sol;
}

template <typename Scalar>
ConicSolution g_step_impl(const HermitianMatrix& X, const LinearMeasurementConstraints& cons,
                          const RVector& delta, double tol) {
  const int T = cons.size();
  const double kappa = kappa_for(cons);
  const double unit = cons.p0 * kappa;
  std::vector<double> lo(static_cast<size_t>(T)), hi(static_cast<size_t>(T));
  std::vector<int> slack_of(static_cast<size_t>(T), -1);
  int n_slack = 0;
  for (int t = 0; t < T; ++t) {
    const auto& iv = cons.intervals[static_cast<size_t>(t)];
    lo[static_cast<size_t>(t)] = (iv.lower - delta(t) - cons.sigma2) / unit;
    hi[static_cast<size_t>(t)] = (iv.upper + delta(t) - cons.sigma2) / unit;
    const double width = hi[static_cast<size_t>(t)] - lo[static_cast<size_t>(t)];
    const double mag = std::abs(hi[static_cast<size_t>(t)]) + std::abs(lo[static_cast<size_t>(t)]);
    if (width > 1e-13 * std::max(mag, 1e-300)) slack_of[static_cast<size_t>(t)] = n_slack++;
  }
  // Variables: gamma', then (lower, upper) slack pairs.
  const int n_lin = 1 + 2 * n_slack;
  auto p = base_problem<Scalar>(cons, n_lin, T + n_slack + 1);
  int extra_row = T;
  for (int t = 0; t < T; ++t) {
    const int s = slack_of[static_cast<size_t>(t)];
    p.add_factor(as_scalar<Scalar>(cons.vs[static_cast<size_t>(t)]), t, 1.0);
    p.lin_entries.emplace_back(t, 0, -lo[static_cast<size_t>(t)]);
    if (s < 0) continue;
    p.lin_entries.emplace_back(t, 1 + 2 * s, -1.0);
    p.lin_entries.emplace_back(extra_row, 1 + 2 * s, 1.0);
    p.lin_entries.emplace_back(extra_row, 2 + 2 * s, 1.0);
    p.lin_entries.emplace_back(extra_row, 0, -(hi[static_cast<size_t>(t)] - lo[static_cast<size_t>(t)]));
    ++extra_row;
  }
  add_trace_row(p, extra_row);
  p.b(extra_row) = 1.0;
  p.C = -as_scalar<Scalar>(X.matrix());
  p.reduce_rows = n_slack < T;
  const IpmResult<Scalar> r = solve_conic(p, ipm_options(tol));

  ConicSolution sol;
  sol.G = to_hermitian<Scalar>(r.X);
  sol.gamma = r.x(0) / kappa;
  sol.delta = delta;
  sol.objective = -r.pobj;
  sol.status = r.status;
  sol.residuals = r.residuals;
  sol.iterations = r.iterations;
  return sol;
}

// Exact minimizer over tau > 0 of sum_t dist(a_t tau, [lo_t, hi_t])^2.
struct TauRange {
  double lo = 0.0;
  double hi = 0.0;
};

TauRange best_tau(const std::vector<double>& a, const std::vector<double>& lo, const std::vector<double>& hi) {
  auto slope = [&](double tau) {
    double s = 0.0;
    for (size_t t = 0; t < a.size(); ++t) {
      const double h = a[t] * tau;
      if (h > hi[t]) s += 2.0 * a[t] * (h - hi[t]);
      if (h < lo[t]) s -= 2.0 * a[t] * (lo[t] - h);
    }
    return s;
  };
  std::vector<double> br{0.0};
  for (size_t t = 0; t < a.size(); ++t) {
    if (a[t] <= 0) continue;
    if (lo[t] / a[t] > 0) br.push_back(lo[t] / a[t]);
    if (hi[t] / a[t] > 0) br.push_back(hi[t] / a[t]);
  }
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  std::vector<double> f(br.size());
  for (size_t i = 0; i < br.size(); ++i) f[i] = slope(br[i]);

  double tail_slope = 0.0;
  for (double at : a) tail_slope += 2.0 * at * at;
  auto root_after = [&](size_t i) {
    if (i + 1 < br.size()) {
      const double df = f[i + 1] - f[i];
      return df > 0 ? br[i] - f[i] * (br[i + 1] - br[i]) / df : br[i];
    }
    return tail_slope > 0 ? br[i] - f[i] / tail_slope : br[i];
  };

  TauRange r;
  size_t first_nonneg = br.size();
  for (size_t i = 0; i < br.size(); ++i) {
    if (f[i] >= 0) {
      first_nonneg = i;
      break;
    }
  }
  if (first_nonneg == 0) {
    r.lo = 0.0;
  } else if (first_nonneg == br.size()) {
    r.lo = root_after(br.size() - 1);
  } else {
    r.lo = root_after(first_nonneg - 1);
  }
  size_t last_nonpos = br.size();
  for (size_t i = br.size(); i-- > 0;) {
    if (f[i] <= 0) {
      last_nonpos = i;
      break;
    }
  }
  r.hi = last_nonpos == br.size() ? r.lo : std::max(r.lo, root_after(last_nonpos));
  return r;
}

ConicSolution delta_step(const LinearMeasurementConstraints& cons, double rho, const ConicSolution& warm) {
  const int T = cons.size();
  const double kappa = kappa_for(cons);
  const double unit = cons.p0 * kappa;
  const CMatrix& G = warm.G.matrix();
  std::vector<double> a(static_cast<size_t>(T)), lo(static_cast<size_t>(T)), hi(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    const CVector& v = cons.vs[static_cast<size_t>(t)];
    a[static_cast<size_t>(t)] = std::max(0.0, std::real(v.dot(G * v)));
    lo[static_cast<size_t>(t)] = (cons.intervals[static_cast<size_t>(t)].lower - cons.sigma2) / unit;
    hi[static_cast<size_t>(t)] = (cons.intervals[static_cast<size_t>(t)].upper - cons.sigma2) / unit;
  }
  const TauRange range = best_tau(a, lo, hi);
  double tau = range.hi;
  if (warm.gamma > 0) tau = std::clamp(1.0 / (kappa * warm.gamma), range.lo, range.hi);
  if (!(tau > 0)) tau = range.hi > 0 ? range.hi : 1.0;

  ConicSolution sol;
  sol.G = warm.G;
  sol.gamma = 1.0 / (tau * kappa);
  sol.delta = RVector::Zero(T);
  double obj = 0.0;
  for (int t = 0; t < T; ++t) {
    const double h = a[static_cast<size_t>(t)] * tau;
    const double d = std::max({0.0, lo[static_cast<size_t>(t)] - h, h - hi[static_cast<size_t>(t)]});
    sol.delta(t) = d * unit;
    obj += d * d;
  }
  sol.objective = rho * obj;
  sol.status = SolveStatus::optimal;
  return sol;
}

}  // namespace

ConicSolution solve_ratio_sdp(const HermitianMatrix& X, const LinearMeasurementConstraints& cons, double tol) {
  cons.validate();
  if (cons.has_intervals()) throw DomainError("solve_ratio_sdp needs equality constraints");
  if (X.dim() != cons.dim()) throw DomainError("X dimension differs from constraints");
  if (cons.symmetry == SymmetryClass::real_symmetric) return ratio_impl<double>(X, cons, tol);
  return ratio_impl<cdouble>(X, cons, tol);
}

TraceMinSolution solve_trace_min(const LinearMeasurementConstraints& cons, double tol) {
  cons.validate();
  if (cons.has_intervals()) throw DomainError("solve_trace_min needs equality constraints");
  if (cons.symmetry == SymmetryClass::real_symmetric) return trace_min_impl<double>(cons, tol);
  return trace_min_impl<cdouble>(cons, tol);
}

TraceMinSolution solve_robust_trace_min(const LinearMeasurementConstraints& cons, double rho, double tol) {
  cons.validate();
  if (!cons.has_intervals()) throw DomainError("robust trace-min needs interval constraints");
  if (!(rho > 0)) throw DomainError("rho must be positive");
  if (cons.symmetry == SymmetryClass::real_symmetric) return robust_trace_min_impl<double>(cons, rho, tol);
  return robust_trace_min_impl<cdouble>(cons, rho, tol);
}

ConicSolution solve_robust_ratio(const HermitianMatrix& X, const LinearMeasurementConstraints& cons, double rho,
                                 RobustPhase phase, const ConicSolution& warm, double tol) {
  cons.validate();
  if (!cons.has_intervals()) throw DomainError("robust ratio step needs interval constraints");
  if (!(rho > 0)) throw DomainError("rho must be positive");
  if (phase == RobustPhase::delta_step) {
    if (warm.G.dim() != cons.dim()) throw DomainError("delta-step needs a fixed G");
    return delta_step(cons, rho, warm);
  }
  if (X.dim() != cons.dim()) throw DomainError("X dimension differs from constraints");
  RVector delta = warm.delta.size() == cons.size() ? warm.delta : RVector::Zero(cons.size());
  if (delta.minCoeff() < 0) throw DomainError("slack vector must be nonnegative");
  if (cons.symmetry == SymmetryClass::real_symmetric) return g_step_impl<double>(X, cons, delta, tol);
  return g_step_impl<cdouble>(X, cons, delta, tol);
}

}  // namespace irs
