#include "irs/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "irs/errors.hpp"

namespace irs {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Real coordinates of the estimation class: full Hermitian layout for b >= 2,
// the real-symmetric sub-layout for b = 1.
struct CoordSpace {
  int n = 0;
  bool real = false;

  RVector lift(const ReflectionVector& v) const {
    return real ? vectorize_outer_symmetric(v.real_values()) : vectorize_outer(v.values());
  }
  RVector outer(const CVector& x) const {
    return real ? vectorize_outer_symmetric(x.real()) : vectorize_outer(x);
  }
  HermitianMatrix matrix(const RVector& w) const {
    if (real) return HermitianMatrix(devectorize_symmetric(w, n));
    return HermitianMatrix(devectorize_raw(w, n));
  }
};

CoordSpace space_for(const MeasurementSet& ms, int b) {
  if (ms.bits() != b) throw DomainError("measurement bits differ from the requested estimation class");
  return CoordSpace{ms.dim(), b == 1};
}

RMatrix lifted_columns(const MeasurementSet& ms, const CoordSpace& sp) {
  const int d = sp.real ? symmetric_coord_count(sp.n) : hermitian_coord_count(sp.n);
  RMatrix C(d, ms.size());
  for (int t = 0; t < ms.size(); ++t) C.col(t) = sp.lift(ms.reflections[static_cast<size_t>(t)]);
  return C;
}

// Top-k eigenvectors of the current iterate, as complex vectors (real for b = 1).
std::vector<CVector> top_vectors(const HermitianMatrix& h, int k, bool real) {
  std::vector<CVector> out;
  if (real) {
    for (auto& p : top_eigenpairs(h.real_part(), k)) out.push_back(p.vector.cast<cdouble>());
  } else {
    for (auto& p : top_eigenpairs(h, k)) out.push_back(p.vector);
  }
  return out;
}

HermitianMatrix projector_sum(const std::vector<CVector>& xs, int n) {
  CMatrix X = CMatrix::Zero(n, n);
  for (const auto& x : xs) X += x * x.adjoint();
  return HermitianMatrix(X);
}

double ratio_of(const HermitianMatrix& h, int k, bool real) {
  return real ? eigen_ratio(h.real_part(), k) : eigen_ratio(h, k);
}

void check_status(const std::string& who, int iteration, SolveStatus status, const Residuals& r) {
  if (status == SolveStatus::infeasible) {
    throw SolverError(who + ": subproblem infeasible at iteration " + std::to_string(iteration));
  }
  if (status != SolveStatus::optimal && r.worst() > 1e-6) {
    throw SolverError(who + ": subproblem did not converge at iteration " + std::to_string(iteration) +
                      " (residual " + std::to_string(r.worst()) + ")");
  }
}

// k x k pseudo-inverse solve with a relative eigenvalue cutoff.
RVector small_pinv_solve(const RMatrix& A, const RVector& rhs, double rel_tol = 1e-12) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (A + A.transpose()));
  const RVector& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  RVector out = RVector::Zero(rhs.size());
  if (!(top > 0)) return out;
  const RVector proj = es.eigenvectors().transpose() * rhs;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) > rel_tol * top) out += es.eigenvectors().col(i) * (proj(i) / ev(i));
  }
  return out;
}

}  // namespace

nlohmann::json EstimationResult::to_json() const {
  nlohmann::json j;
  j["algorithm"] = algorithm;
  j["parameters"] = parameters;
  j["iterations"] = iterations;
  j["ratio_trace"] = ratio_trace;
  j["distance_trace"] = distance_trace;
  j["converged"] = converged;
  j["stop_reason"] = stop_reason;
  if (!std::isnan(rejected_value)) j["rejected_value"] = rejected_value;
  j["warnings"] = warnings;
  j["wall_time"] = wall_time;
  if (nmse) j["nmse"] = *nmse;
  return j;
}

double nmse(const HermitianMatrix& estimate, const HermitianMatrix& truth) {
  if (estimate.dim() != truth.dim()) throw DomainError("nmse dimension mismatch");
  const double den = truth.matrix().squaredNorm();
  if (!(den > 0)) throw DomainError("nmse of a zero truth matrix is undefined");
  return (estimate.matrix() - truth.matrix()).squaredNorm() / den;
}

double nmse_for_bits(const HermitianMatrix& estimate, const HermitianMatrix& truth, int b) {
  if (b == 1) return nmse(estimate, HermitianMatrix(truth.real_part()));
  return nmse(estimate, truth);
}

HermitianMatrix clip_negative_eigenvalues(const HermitianMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a.matrix());
  const RVector ev = es.eigenvalues().cwiseMax(0.0);
  CMatrix out = es.eigenvectors() * ev.cast<cdouble>().asDiagonal() * es.eigenvectors().adjoint();
  if (a.is_real()) out = out.real().cast<cdouble>();
  return HermitianMatrix(out, 1e-8);
}

WoodburyOperator::WoodburyOperator(const RMatrix& C, double rho, double max_condition) : C_(C) {
  if (!(rho > 0)) throw DomainError("rho must be positive");
  RMatrix K = C.transpose() * C;
  K.diagonal().array() += 1.0 / rho;
  Eigen::SelfAdjointEigenSolver<RMatrix> es(K, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  condition_ = lo > 0 ? es.eigenvalues().maxCoeff() / lo : std::numeric_limits<double>::infinity();
  if (!(condition_ <= max_condition)) {
    throw SolverError("rho^-1 I + C^T C is ill-conditioned (condition " + std::to_string(condition_) +
                      "); use a smaller rho or fewer measurements");
  }
  chol_.compute(K);
}

RVector WoodburyOperator::apply(const RVector& y) const { return y - C_ * chol_.solve(C_.transpose() * y); }

RMatrix WoodburyOperator::apply(const RMatrix& Y) const { return Y - C_ * chol_.solve(C_.transpose() * Y); }

EstimationResult lra_estimate(const MeasurementSet& ms, int b, const LraOptions& opt) {
  const auto t0 = Clock::now();
  if (ms.kind != MeasurementKind::exact) throw DomainError("LRA expects exact power measurements");
  const CoordSpace sp = space_for(ms, b);
  const int k = rank_target(b);
  const auto cons = LinearMeasurementConstraints::from_measurements(ms, symmetry_for_bits(b));

  EstimationResult res;
  res.algorithm = "LRA";
  res.parameters = {{"b", b}, {"epsilon", opt.epsilon}, {"max_iters", opt.max_iters}};

  HermitianMatrix h;
  if (opt.initial) {
    h = *opt.initial;
  } else {
    const TraceMinSolution tm = solve_trace_min(cons, opt.solver_tol);
    check_status("LRA initialization", 0, tm.status, tm.residuals);
    h = tm.H;
  }
  double g = ratio_of(h, k, sp.real);
  res.ratio_trace.push_back(g);
  res.stop_reason = "max_iters";
  while (g <= opt.epsilon) {
    if (res.iterations >= opt.max_iters) break;
    const HermitianMatrix X = projector_sum(top_vectors(h, k, sp.real), sp.n);
    const ConicSolution sol = solve_ratio_sdp(X, cons, opt.solver_tol);
    ++res.iterations;
    check_status("LRA", res.iterations, sol.status, sol.residuals);
    if (!(sol.gamma > 0)) throw SolverError("LRA: ratio subproblem returned gamma <= 0");
    const double g_new = ratio_of(sol.G, k, sp.real);
    if (g_new < g) {
      res.rejected_value = g_new;
      res.stop_reason = "ratio_decreased";
      break;
    }
    h = sol.G * (1.0 / sol.gamma);
    const double gain = g_new - g;
    g = g_new;
    res.ratio_trace.push_back(g);
    if (g <= opt.epsilon && gain < opt.stall_tol) {
      res.stop_reason = "stalled";
      break;
    }
  }
  res.converged = g > opt.epsilon;
  if (res.converged) res.stop_reason = "ratio_above_epsilon";
  res.estimate = h;
  res.wall_time = seconds_since(t0);
  return res;
}

EstimationResult robust_lra_estimate(const MeasurementSet& ms, int b, const RobustLraOptions& opt) {
  const auto t0 = Clock::now();
  if (ms.kind == MeasurementKind::exact) throw DomainError("robust LRA expects noisy or quantized measurements");
  const CoordSpace sp = space_for(ms, b);
  const int k = rank_target(b);
  const auto cons = LinearMeasurementConstraints::from_measurements(ms, symmetry_for_bits(b));

  EstimationResult res;
  res.algorithm = "R-LRA";
  res.parameters = {{"b", b}, {"rho", opt.rho}, {"epsilon", opt.epsilon}, {"max_iters", opt.max_iters}};

  const TraceMinSolution tm = solve_robust_trace_min(cons, opt.rho, opt.solver_tol);
  check_status("R-LRA initialization", 0, tm.status, tm.residuals);
  const double tr0 = tm.H.trace();
  if (!(tr0 > 0)) {
    res.estimate = tm.H;
    res.stop_reason = "zero_initialization";
    res.wall_time = seconds_since(t0);
    return res;
  }
  ConicSolution cur;
  cur.G = tm.H * (1.0 / tr0);
  cur.gamma = 1.0 / tr0;
  cur.delta = tm.delta;
  double g = ratio_of(cur.G, k, sp.real);
  res.ratio_trace.push_back(g);
  res.parameters["initial_delta_norm"] = tm.delta.norm();
  res.stop_reason = "max_iters";
  while (g <= opt.epsilon) {
    if (res.iterations >= opt.max_iters) break;
    const HermitianMatrix X = projector_sum(top_vectors(cur.G, k, sp.real), sp.n);
    const ConicSolution gs = solve_robust_ratio(X, cons, opt.rho, RobustPhase::g_step, cur, opt.solver_tol);
    ++res.iterations;
    check_status("R-LRA", res.iterations, gs.status, gs.residuals);
    const double g_new = ratio_of(gs.G, k, sp.real);
    if (g_new < g) {
      res.rejected_value = g_new;
      res.stop_reason = "ratio_decreased";
      break;
    }
    cur = solve_robust_ratio(X, cons, opt.rho, RobustPhase::delta_step, gs, opt.solver_tol);
    const double gain = g_new - g;
    g = g_new;
    res.ratio_trace.push_back(g);
    if (g <= opt.epsilon && gain < opt.stall_tol) {
      res.stop_reason = "stalled";
      break;
    }
  }
  res.converged = g > opt.epsilon;
  if (res.converged) res.stop_reason = "ratio_above_epsilon";
  res.parameters["final_delta_norm"] = cur.delta.norm();
  res.estimate = cur.G * (1.0 / cur.gamma);
  res.wall_time = seconds_since(t0);
  return res;
}

namespace {

// Shared ALRA loop. `update` maps the eigen-step columns W_X to (w, distance).
template <typename Update>
void alra_loop(EstimationResult& res, const CoordSpace& sp, int k, int max_iters, double stall_tol, RVector w,
               double dist, double kappa, double scale, Update update) {
  res.distance_trace.push_back(dist * scale);
  res.stop_reason = "max_iters";
  while (res.iterations < max_iters) {
    const HermitianMatrix h = sp.matrix(w);
    if (h.frobenius_norm() == 0.0) {
      res.stop_reason = "zero_iterate";
      break;
    }
    const auto xs = top_vectors(h, k, sp.real);
    RMatrix WX(w.size(), static_cast<Eigen::Index>(xs.size()));
    for (size_t j = 0; j < xs.size(); ++j) WX.col(static_cast<Eigen::Index>(j)) = sp.outer(xs[j]);
    auto [w_new, d_new] = update(WX);
    ++res.iterations;
    if (d_new > dist) {
      res.rejected_value = d_new * scale;
      res.stop_reason = "distance_increased";
      break;
    }
    const double rel = dist > 0 ? (dist - d_new) / dist : 0.0;
    w = std::move(w_new);
    dist = d_new;
    res.distance_trace.push_back(dist * scale);
    if (rel < stall_tol) {
      res.converged = true;
      res.stop_reason = "stalled";
      break;
    }
  }
  res.estimate = clip_negative_eigenvalues(sp.matrix(w) * kappa);
}

}  // namespace

EstimationResult alra_estimate(const MeasurementSet& ms, int b, const AlraOptions& opt) {
  const auto t0 = Clock::now();
  if (ms.kind != MeasurementKind::exact) throw DomainError("ALRA expects exact power measurements");
  const CoordSpace sp = space_for(ms, b);
  const int k = rank_target(b);

  EstimationResult res;
  res.algorithm = "ALRA";
  res.parameters = {{"b", b}, {"max_iters", opt.max_iters}, {"stall_tol", opt.stall_tol}};

  // Normalized units: powers divided by their mean, p0 absorbed.
  const RMatrix C = lifted_columns(ms, sp);
  double kappa = 0.0;
  for (double p : ms.powers) kappa += p;
  kappa /= ms.size() * ms.p0;
  if (!(kappa > 0)) kappa = 1.0;
  RVector p(ms.size());
  for (int t = 0; t < ms.size(); ++t) p(t) = ms.powers[static_cast<size_t>(t)] / (ms.p0 * kappa);

  Eigen::BDCSVD<RMatrix> svd(C, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& s = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > kRankTol * s(0)) ++rank;
  }
  if (rank == 0) throw SolverError("ALRA: design matrix is zero");
  if (rank < ms.size()) {
    res.warnings.push_back("design matrix rank " + std::to_string(rank) + " < T_p = " +
                           std::to_string(ms.size()) + "; using the pseudo-inverse");
  }
  const RMatrix Ur = svd.matrixU().leftCols(rank);
  const RVector Dp =
      Ur * (svd.matrixV().leftCols(rank).transpose() * p).cwiseQuotient(s.head(rank));
  auto project = [&](const RMatrix& Y) -> RMatrix { return Ur * (Ur.transpose() * Y); };

  auto update = [&](const RMatrix& WX) {
    const RMatrix PW = project(WX);
    RVector mu = RVector::Zero(WX.cols());
    if (PW.norm() > 1e-12 * WX.norm()) mu = small_pinv_solve(WX.transpose() * PW, WX.transpose() * Dp);
    RVector w = Dp + (WX - PW) * mu;
    const double d = (Dp - PW * mu).norm();
    return std::make_pair(std::move(w), d);
  };
  alra_loop(res, sp, k, opt.max_iters, opt.stall_tol, Dp, Dp.norm(), kappa, kappa, update);
  res.wall_time = seconds_since(t0);
  return res;
}

EstimationResult robust_alra_estimate(const MeasurementSet& ms, int b, const RobustAlraOptions& opt) {
  const auto t0 = Clock::now();
  if (ms.kind == MeasurementKind::exact) throw DomainError("robust ALRA expects noisy or quantized measurements");
  const CoordSpace sp = space_for(ms, b);
  const int k = rank_target(b);
  if (!(opt.rho > 0)) throw DomainError("rho must be positive");

  EstimationResult res;
  res.algorithm = "R-ALRA";
  res.parameters = {{"b", b}, {"rho", opt.rho}, {"max_iters", opt.max_iters}, {"stall_tol", opt.stall_tol}};

  const RMatrix C = lifted_columns(ms, sp);
  const std::vector<double> qhat = ms.representative_powers();
  double kappa = 0.0;
  for (double q : qhat) kappa += q;
  kappa /= ms.size() * ms.p0;
  if (!(kappa > 0)) kappa = 1.0;
  RVector r(ms.size());
  for (int t = 0; t < ms.size(); ++t) r(t) = (qhat[static_cast<size_t>(t)] - ms.sigma2) / (ms.p0 * kappa);

  const WoodburyOperator ups(C, opt.rho);
  const double rho = opt.rho;
  const RVector a = rho * ups.apply(RVector(C * r));  // w at X = 0
  auto phi = [&](const RVector& w, const RVector& v) {
    return (w - v).squaredNorm() + rho * (C.transpose() * w - r).squaredNorm();
  };

  auto update = [&](const RMatrix& WX) {
    const RMatrix UW = ups.apply(WX);
    const RMatrix Psi = WX - UW;
    RVector mu = RVector::Zero(WX.cols());
    if (Psi.norm() > 1e-12 * WX.norm()) mu = small_pinv_solve(WX.transpose() * Psi, WX.transpose() * a);
    RVector w = a + UW * mu;
    const double d = phi(w, WX * mu);
    return std::make_pair(std::move(w), d);
  };
  alra_loop(res, sp, k, opt.max_iters, opt.stall_tol, a, phi(a, RVector::Zero(a.size())), kappa, kappa * kappa,
            update);
  res.wall_time = seconds_since(t0);
  return res;
}

EstimationResult tracemin_baseline(const MeasurementSet& ms, int b, std::optional<double> rho) {
  const auto t0 = Clock::now();
  const CoordSpace sp = space_for(ms, b);
  const auto cons = LinearMeasurementConstraints::from_measurements(ms, symmetry_for_bits(b));
  EstimationResult res;
  res.algorithm = "TM";
  res.parameters = {{"b", b}};
  TraceMinSolution tm;
  if (ms.kind == MeasurementKind::exact) {
    tm = solve_trace_min(cons);
  } else {
    const double r = rho.value_or(10.0);
    res.parameters["rho"] = r;
    tm = solve_robust_trace_min(cons, r);
  }
  check_status("TM", 0, tm.status, tm.residuals);
  res.estimate = tm.H;
  res.iterations = tm.iterations;
  res.converged = tm.status == SolveStatus::optimal;
  res.stop_reason = to_string(tm.status);
  if (tm.H.trace() > 0) res.ratio_trace.push_back(ratio_of(tm.H, rank_target(b), sp.real));
  res.wall_time = seconds_since(t0);
  return res;
}

}  // namespace irs
