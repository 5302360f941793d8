#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "irs/conic_subsolver.hpp"
#include "irs/hermitian_space.hpp"
#include "irs/measurement.hpp"

namespace irs {

struct EstimationResult {
  std::string algorithm;
  HermitianMatrix estimate;
  int iterations = 0;
  std::vector<double> ratio_trace;
  std::vector<double> distance_trace;
  bool converged = false;
  std::string stop_reason;
  // A candidate iterate that would have broken monotonicity; it is discarded
  // and the loop stops. NaN when no such step occurred.
  double rejected_value = std::numeric_limits<double>::quiet_NaN();
  double wall_time = 0.0;
  std::vector<std::string> warnings;
  nlohmann::json parameters = nlohmann::json::object();
  std::optional<double> nmse;

  nlohmann::json to_json() const;
};

struct LraOptions {
  double epsilon = 0.95;
  int max_iters = 100;
  // Stop when the ratio improves by less than this.
  double stall_tol = 1e-12;
  double solver_tol = kDefaultSolverTol;
  std::optional<HermitianMatrix> initial;
};

struct AlraOptions {
  int max_iters = 1000;
  double stall_tol = 1e-8;
};

struct RobustLraOptions {
  double rho = 10.0;
  double epsilon = 0.95;
  int max_iters = 100;
  double stall_tol = 1e-7;
  double solver_tol = kDefaultSolverTol;
};

struct RobustAlraOptions {
  double rho = 0.1;  // normalized units; larger values pull toward the unregularized pseudo-inverse fit
  int max_iters = 1000;
  double stall_tol = 1e-8;
};

inline int rank_target(int b) { return b == 1 ? 2 : 1; }
inline SymmetryClass symmetry_for_bits(int b) {
  return b == 1 ? SymmetryClass::real_symmetric : SymmetryClass::hermitian;
}

EstimationResult lra_estimate(const MeasurementSet& ms, int b, const LraOptions& opt = {});
EstimationResult alra_estimate(const MeasurementSet& ms, int b, const AlraOptions& opt = {});
EstimationResult robust_lra_estimate(const MeasurementSet& ms, int b, const RobustLraOptions& opt = {});
EstimationResult robust_alra_estimate(const MeasurementSet& ms, int b, const RobustAlraOptions& opt = {});
EstimationResult tracemin_baseline(const MeasurementSet& ms, int b, std::optional<double> rho = std::nullopt);

double nmse(const HermitianMatrix& estimate, const HermitianMatrix& truth);
// Compares against Re(H) for b = 1, where only the real part is identifiable.
double nmse_for_bits(const HermitianMatrix& estimate, const HermitianMatrix& truth, int b);

HermitianMatrix clip_negative_eigenvalues(const HermitianMatrix& a);

// (I + rho C C^T)^{-1} applied through the Woodbury form I - C S C^T with
// S = (rho^{-1} I + C^T C)^{-1}.
class WoodburyOperator {
 public:
  WoodburyOperator(const RMatrix& C, double rho, double max_condition = 1e12);
  RVector apply(const RVector& y) const;
  RMatrix apply(const RMatrix& Y) const;
  double condition() const { return condition_; }

 private:
  RMatrix C_;
  Eigen::LLT<RMatrix> chol_;
  double condition_ = 1.0;
};

}  // namespace irs
