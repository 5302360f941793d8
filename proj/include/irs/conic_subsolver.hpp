#pragma once

#include <optional>
#include <vector>

#include "irs/hermitian_space.hpp"
#include "irs/measurement.hpp"

namespace irs {

enum class SymmetryClass { hermitian, real_symmetric };
enum class SolveStatus { optimal, max_iter, infeasible };
enum class RobustPhase { g_step, delta_step };

const char* to_string(SolveStatus s);

struct PowerInterval {
  double lower = 0.0;
  double upper = 0.0;
};

// Constraints p0 tr(H V_t) = p_t (equalities) or
// zeta_t - delta_t <= p0 tr(H V_t) + sigma2 <= xi_t + delta_t (intervals),
// with V_t = v_t v_t^H.
struct LinearMeasurementConstraints {
  std::vector<CVector> vs;
  double p0 = 1.0;
  std::vector<double> equalities;
  std::vector<PowerInterval> intervals;
  double sigma2 = 0.0;
  SymmetryClass symmetry = SymmetryClass::hermitian;

  int size() const { return static_cast<int>(vs.size()); }
  int dim() const { return vs.empty() ? 0 : static_cast<int>(vs.front().size()); }
  bool has_intervals() const { return !intervals.empty(); }
  HermitianMatrix V(int t) const { return HermitianMatrix::outer(vs[static_cast<size_t>(t)]); }
  void validate() const;

  // Equalities from exact powers, intervals from noisy (zero width) or quantized records.
  static LinearMeasurementConstraints from_measurements(const MeasurementSet& ms, SymmetryClass sym);
};

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;

  double worst() const;
};

struct ConicSolution {
  HermitianMatrix G;
  double gamma = 0.0;
  RVector delta;
  double objective = 0.0;
  SolveStatus status = SolveStatus::max_iter;
  Residuals residuals;
  int iterations = 0;
};

struct TraceMinSolution {
  HermitianMatrix H;
  RVector delta;
  double objective = 0.0;
  SolveStatus status = SolveStatus::max_iter;
  Residuals residuals;
  int iterations = 0;
};

inline constexpr double kDefaultSolverTol = 1e-9;

// max tr(G X)  s.t.  p0 tr(G V_t) = p_t gamma,  tr G = 1,  G PSD,  gamma >= 0.
ConicSolution solve_ratio_sdp(const HermitianMatrix& X, const LinearMeasurementConstraints& cons,
                              double tol = kDefaultSolverTol);

// min tr H  s.t.  p0 tr(H V_t) = p_t,  H PSD.
TraceMinSolution solve_trace_min(const LinearMeasurementConstraints& cons, double tol = kDefaultSolverTol);

// min tr H + rho ||delta||^2 over the interval constraints. Slacks are measured
// in units of the mean reported power.
TraceMinSolution solve_robust_trace_min(const LinearMeasurementConstraints& cons, double rho,
                                        double tol = kDefaultSolverTol);

// g-step: (G, gamma) with delta = warm.delta fixed.
// delta-step: (gamma, delta) with G = warm.G fixed; gamma is chosen among the
// minimizers of ||delta|| closest to warm.gamma.
ConicSolution solve_robust_ratio(const HermitianMatrix& X, const LinearMeasurementConstraints& cons, double rho,
                                 RobustPhase phase, const ConicSolution& warm, double tol = kDefaultSolverTol);

// Mean reported power used to normalize robust problems (watts).
double power_scale(const LinearMeasurementConstraints& cons);

}  // namespace irs
