#pragma once

// Primal-dual interior-point solver for
//   min  <C, X> + c'x + 0.5 x' diag(q) x
//   s.t. <A_i, X> + (B x)_i = b_i,   X PSD (n x n),  x >= 0.
// The A_i are given in factored form  sum_k coef_k u_k u_k^H  over columns of U.

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "irs/conic_subsolver.hpp"

namespace irs::detail {

template <typename Scalar>
struct ConicProblem {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  int n = 0;
  int n_lin = 0;
  Mat C;
  RVector c_lin;
  RVector q_lin;
  Mat U;
  std::vector<int> owner;
  RVector coef;
  std::vector<Eigen::Triplet<double>> lin_entries;  // (row, linear variable, value)
  RVector b;
  // Rows may be linearly dependent; they are reduced before solving.
  bool reduce_rows = false;

  int m() const { return static_cast<int>(b.size()); }
  void add_factor(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& u, int row, double c);
};

struct IpmOptions {
  double tol = 1e-9;       // relative duality gap
  double feas_tol = 1e-8;  // relative primal and dual infeasibility
  int max_iters = 120;
};

template <typename Scalar>
struct IpmResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> X;
  RVector x;
  RVector y;
  double pobj = 0.0;
  double dobj = 0.0;
  Residuals residuals;
  int iterations = 0;
  SolveStatus status = SolveStatus::max_iter;
};

template <typename Scalar>
IpmResult<Scalar> solve_conic(const ConicProblem<Scalar>& prob, const IpmOptions& opt);

}  // namespace irs::detail
