#include "conic_ipm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "irs/errors.hpp"

namespace irs::detail {

template <typename Scalar>
void ConicProblem<Scalar>::add_factor(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& u, int row, double c) {
  U.conservativeResize(n, U.cols() + 1);
  U.col(U.cols() - 1) = u;
  owner.push_back(row);
  coef.conservativeResize(coef.size() + 1);
  coef(coef.size() - 1) = c;
}

namespace {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using SpMat = Eigen::SparseMatrix<double>;

template <typename Scalar>
RVector outer_coords(const Vec<Scalar>& u) {
  if constexpr (std::is_same_v<Scalar, double>) {
    return vectorize_outer_symmetric(u);
  } else {
    return vectorize_outer(u);
  }
}

template <typename Scalar>
RVector matrix_coords(const Mat<Scalar>& a) {
  if constexpr (std::is_same_v<Scalar, double>) {
    return vectorize_symmetric(a);
  } else {
    return vectorize_raw(a);
  }
}

template <typename Scalar>
double inner(const Mat<Scalar>& a, const Mat<Scalar>& b) {
  return std::real((a.conjugate().cwiseProduct(b)).sum());
}

template <typename Scalar>
Mat<Scalar> herm(const Mat<Scalar>& a) {
  return (a + a.adjoint()) * 0.5;
}

// Working form of the problem after row reduction and scaling.
template <typename Scalar>
struct Work {
  int n = 0, n_lin = 0, m = 0;
  Mat<Scalar> C;
  RVector c, q;
  Mat<Scalar> U;
  std::vector<int> owner;
  RVector coef;
  SpMat B;
  SpMat Bt;
  RVector b;

  RVector A(const Mat<Scalar>& Y) const {
    RVector out = RVector::Zero(m);
    if (U.cols() == 0) return out;
    const Mat<Scalar> YU = Y * U;
    for (Eigen::Index k = 0; k < U.cols(); ++k) {
      out(owner[k]) += coef(k) * std::real(U.col(k).dot(YU.col(k)));
    }
    return out;
  }

  Mat<Scalar> At(const RVector& y) const {
    if (U.cols() == 0) return Mat<Scalar>::Zero(n, n);
    RVector d(U.cols());
    for (Eigen::Index k = 0; k < U.cols(); ++k) d(k) = coef(k) * y(owner[k]);
    return U * d.asDiagonal() * U.adjoint();
  }

  RMatrix schur(const Mat<Scalar>& X, const Mat<Scalar>& Sinv) const {
    RMatrix M = RMatrix::Zero(m, m);
    const Eigen::Index K = U.cols();
    if (K == 0) return M;
    const Mat<Scalar> P = U.adjoint() * X * U;
    const Mat<Scalar> Q = U.adjoint() * Sinv * U;
    for (Eigen::Index l = 0; l < K; ++l) {
      for (Eigen::Index k = 0; k < K; ++k) {
        M(owner[k], owner[l]) += coef(k) * coef(l) * std::real(P(k, l) * Q(l, k));
      }
    }
    return 0.5 * (M + M.transpose());
  }
};

double max_step_lp(const RVector& x, const RVector& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (dx(i) < 0) a = std::min(a, -x(i) / dx(i));
  }
  return a;
}

template <typename Scalar>
double max_step_psd(const Eigen::LLT<Mat<Scalar>>& chol, const Mat<Scalar>& dX) {
  const Mat<Scalar> Linv_dX = chol.matrixL().solve(dX);
  const Mat<Scalar> T = chol.matrixL().solve(Linv_dX.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(herm<Scalar>(T), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin >= 0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

struct Reduction {
  std::vector<int> kept;
  bool consistent = true;
};

template <typename Scalar>
Reduction reduce_rows(const ConicProblem<Scalar>& p, const RMatrix& rows) {
  Reduction red;
  const int m = p.m();
  Eigen::ColPivHouseholderQR<RMatrix> qr(rows.transpose());
  qr.setThreshold(1e-9);
  const int rank = static_cast<int>(qr.rank());
  const auto& perm = qr.colsPermutation().indices();
  for (int i = 0; i < rank; ++i) red.kept.push_back(perm(i));
  std::sort(red.kept.begin(), red.kept.end());
  if (rank == m) return red;

  RMatrix kept_rows(rank, rows.cols());
  RVector kept_b(rank);
  for (int i = 0; i < rank; ++i) {
    kept_rows.row(i) = rows.row(red.kept[i]);
    kept_b(i) = p.b(red.kept[i]);
  }
  Eigen::ColPivHouseholderQR<RMatrix> kq(kept_rows.transpose());
  std::vector<bool> is_kept(static_cast<size_t>(m), false);
  for (int k : red.kept) is_kept[static_cast<size_t>(k)] = true;
  for (int i = 0; i < m; ++i) {
    if (is_kept[static_cast<size_t>(i)]) continue;
    const RVector alpha = kq.solve(RVector(rows.row(i).transpose()));
    const double pred = alpha.dot(kept_b);
    const double scale = std::abs(p.b(i)) + alpha.cwiseAbs().dot(kept_b.cwiseAbs()) + 1e-300;
    if (std::abs(pred - p.b(i)) > 1e-7 * scale && std::abs(pred - p.b(i)) > 1e-12) red.consistent = false;
  }
  return red;
}

}  // namespace

template <typename Scalar>
IpmResult<Scalar> solve_conic(const ConicProblem<Scalar>& prob, const IpmOptions& opt) {
  const int n = prob.n;
  const int n_lin = prob.n_lin;
  const int m0 = prob.m();
  if (n < 1) throw DomainError("conic problem needs a PSD block");
  IpmResult<Scalar> res;

  // Explicit constraint rows in real coordinates (PSD part, then linear part).
  const int d = static_cast<int>(matrix_coords<Scalar>(Mat<Scalar>::Zero(n, n)).size());
  RMatrix rows = RMatrix::Zero(m0, d + n_lin);
  for (Eigen::Index k = 0; k < prob.U.cols(); ++k) {
    rows.row(prob.owner[k]).head(d) += prob.coef(k) * outer_coords<Scalar>(prob.U.col(k)).transpose();
  }
  for (const auto& t : prob.lin_entries) rows(t.row(), d + t.col()) += t.value();

  std::vector<int> kept(static_cast<size_t>(m0));
  for (int i = 0; i < m0; ++i) kept[static_cast<size_t>(i)] = i;
  if (prob.reduce_rows && m0 > 0) {
    Reduction red = reduce_rows(prob, rows);
    if (!red.consistent) {
      res.status = SolveStatus::infeasible;
      res.X = Mat<Scalar>::Zero(n, n);
      res.x = RVector::Zero(n_lin);
      res.y = RVector::Zero(m0);
      res.residuals.primal = 1.0;
      return res;
    }
    kept = red.kept;
  }

  Work<Scalar> w;
  w.n = n;
  w.n_lin = n_lin;
  w.m = static_cast<int>(kept.size());
  std::vector<int> new_index(static_cast<size_t>(m0), -1);
  RVector row_scale(w.m);
  for (int i = 0; i < w.m; ++i) {
    new_index[static_cast<size_t>(kept[static_cast<size_t>(i)])] = i;
    const double nr = rows.row(kept[static_cast<size_t>(i)]).norm();
    row_scale(i) = nr > 0 ? 1.0 / nr : 1.0;
  }
  w.b.resize(w.m);
  for (int i = 0; i < w.m; ++i) w.b(i) = prob.b(kept[static_cast<size_t>(i)]) * row_scale(i);
  {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index k = 0; k < prob.U.cols(); ++k) {
      if (new_index[static_cast<size_t>(prob.owner[k])] >= 0) cols.push_back(k);
    }
    w.U.resize(n, static_cast<Eigen::Index>(cols.size()));
    w.coef.resize(static_cast<Eigen::Index>(cols.size()));
    for (size_t j = 0; j < cols.size(); ++j) {
      const int r = new_index[static_cast<size_t>(prob.owner[cols[j]])];
      w.U.col(static_cast<Eigen::Index>(j)) = prob.U.col(cols[j]);
      w.owner.push_back(r);
      w.coef(static_cast<Eigen::Index>(j)) = prob.coef(cols[j]) * row_scale(r);
    }
    std::vector<Eigen::Triplet<double>> trip;
    for (const auto& t : prob.lin_entries) {
      const int r = new_index[static_cast<size_t>(t.row())];
      if (r >= 0) trip.emplace_back(r, t.col(), t.value() * row_scale(r));
    }
    w.B.resize(w.m, n_lin);
    w.B.setFromTriplets(trip.begin(), trip.end());
    w.Bt = w.B.transpose();
  }
  w.C = prob.C;
  w.c = prob.c_lin.size() ? prob.c_lin : RVector::Zero(n_lin);
  w.q = prob.q_lin.size() ? prob.q_lin : RVector::Zero(n_lin);
  const bool quadratic = w.q.size() > 0 && w.q.maxCoeff() > 0.0;

  const int m = w.m;
  const double norm_b = w.b.norm();
  const double norm_c = w.C.norm() + w.c.norm();

  // Starting point, following the usual infeasible-start heuristics.
  double xi = std::max(10.0, std::sqrt(static_cast<double>(n)));
  double eta = std::max({10.0, std::sqrt(static_cast<double>(n)), w.C.norm()});
  for (int i = 0; i < m; ++i) xi = std::max(xi, n * (1.0 + std::abs(w.b(i))) / 2.0);
  if (n_lin > 0) eta = std::max(eta, w.c.cwiseAbs().maxCoeff() + 1.0);

  Mat<Scalar> X = Mat<Scalar>::Identity(n, n) * xi;
  Mat<Scalar> S = Mat<Scalar>::Identity(n, n) * eta;
  RVector x = RVector::Constant(n_lin, xi);
  RVector z = RVector::Constant(n_lin, eta);
  RVector y = RVector::Zero(m);
  const double n_tot = n + n_lin;

  struct Snapshot {
    double merit = std::numeric_limits<double>::infinity();
    Mat<Scalar> X;
    RVector x, y;
    double pobj = 0, dobj = 0;
    Residuals residuals;
    int iteration = 0;
  } best;
  int since_best = 0;
  int stalls = 0;
  for (int it = 0; it <= opt.max_iters; ++it) {
    const RVector rp = w.b - w.A(X) - w.B * x;
    const Mat<Scalar> Rd = herm<Scalar>(w.C - S - w.At(y));
    const RVector rd = w.c + w.q.cwiseProduct(x) - z - w.Bt * y;
    const double xs = inner<Scalar>(X, S) + x.dot(z);
    const double quad = 0.5 * x.dot(w.q.cwiseProduct(x));
    res.pobj = inner<Scalar>(w.C, X) + w.c.dot(x) + quad;
    res.dobj = w.b.dot(y) - quad;
    res.residuals.primal = rp.norm() / (1.0 + norm_b);
    res.residuals.dual = (Rd.norm() + rd.norm()) / (1.0 + norm_c);
    res.residuals.gap = std::abs(xs) / (1.0 + std::abs(res.pobj) + std::abs(res.dobj));
    res.iterations = it;
    if (std::getenv("IRS_IPM_DEBUG")) {
      std::fprintf(stderr, "it %d pobj %.6e dobj %.6e pinf %.2e dinf %.2e gap %.2e mu %.2e\n", it, res.pobj, res.dobj,
                   res.residuals.primal, res.residuals.dual, res.residuals.gap, xs / n_tot);
    }
    const bool done = res.residuals.gap < opt.tol && res.residuals.primal < opt.feas_tol &&
                      res.residuals.dual < opt.feas_tol;
    const double merit = std::max(res.residuals.worst(), 0.0);
    if (done || merit < best.merit) {
      best = {merit, X, x, y, res.pobj, res.dobj, res.residuals, it};
      since_best = 0;
    } else {
      ++since_best;
    }
    if (done) {
      res.status = SolveStatus::optimal;
      break;
    }
    if (it == opt.max_iters || stalls >= 3 || since_best >= 10) break;
    const double mu = xs / n_tot;

    Eigen::LLT<Mat<Scalar>> cholS(S);
    Eigen::LLT<Mat<Scalar>> cholX(X);
    if (cholS.info() != Eigen::Success || cholX.info() != Eigen::Success) break;
    const Mat<Scalar> Sinv = cholS.solve(Mat<Scalar>::Identity(n, n));

    const RVector denom = z + x.cwiseProduct(w.q);
    const RVector D = x.cwiseQuotient(denom);
    RMatrix M = w.schur(X, Sinv);
    if (n_lin > 0) M += RMatrix(w.B * D.asDiagonal() * w.Bt);
    Eigen::LLT<RMatrix> cholM(M);
    if (cholM.info() != Eigen::Success) {
      const double reg = 1e-14 * std::max(M.diagonal().maxCoeff(), 1e-300);
      M.diagonal().array() += reg;
      cholM.compute(M);
      if (cholM.info() != Eigen::Success) break;
    }

    const Mat<Scalar> XRdSinv = X * Rd * Sinv;
    auto solve = [&](double sigma_mu, const Mat<Scalar>& K, const RVector& kl, Mat<Scalar>& dX, Mat<Scalar>& dS,
                     RVector& dy, RVector& dx, RVector& dz) {
      Mat<Scalar> G0 = sigma_mu * Sinv - X - XRdSinv;
      if (K.size()) G0 -= K * Sinv;
      G0 = herm<Scalar>(G0);
      RVector rc = RVector::Constant(n_lin, sigma_mu) - x.cwiseProduct(z);
      if (kl.size()) rc -= kl;
      const RVector h = (rc - x.cwiseProduct(rd)).cwiseQuotient(denom);
      const RVector rhs = rp - w.A(G0) - w.B * h;
      dy = cholM.solve(rhs);
      const Mat<Scalar> Aty = w.At(dy);
      dS = herm<Scalar>(Rd - Aty);
      dX = herm<Scalar>(G0 + X * Aty * Sinv);
      const RVector Bty = w.Bt * dy;
      dx = h + D.cwiseProduct(Bty);
      dz = rd + w.q.cwiseProduct(dx) - Bty;
    };

    Mat<Scalar> dXa, dSa;
    RVector dya, dxa, dza;
    solve(0.0, Mat<Scalar>(), RVector(), dXa, dSa, dya, dxa, dza);
    double ap = std::min(1.0, std::min(max_step_psd<Scalar>(cholX, dXa), max_step_lp(x, dxa)));
    double ad = std::min(1.0, std::min(max_step_psd<Scalar>(cholS, dSa), max_step_lp(z, dza)));
    if (quadratic) ap = ad = std::min(ap, ad);
    const double mu_aff = (inner<Scalar>(X + ap * dXa, S + ad * dSa) +
                           (x + ap * dxa).dot(z + ad * dza)) / n_tot;
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    Mat<Scalar> dX, dS;
    RVector dy, dx, dz;
    solve(sigma * mu, dXa * dSa, dxa.cwiseProduct(dza), dX, dS, dy, dx, dz);
    const double tau = 0.9 + 0.09 * std::min(ap, ad);
    double sp = std::min(1.0, tau * std::min(max_step_psd<Scalar>(cholX, dX), max_step_lp(x, dx)));
    double sd = std::min(1.0, tau * std::min(max_step_psd<Scalar>(cholS, dS), max_step_lp(z, dz)));
    if (quadratic) sp = sd = std::min(sp, sd);
    stalls = (sp < 1e-10 && sd < 1e-10) ? stalls + 1 : 0;

    X = herm<Scalar>(X + sp * dX);
    S = herm<Scalar>(S + sd * dS);
    x += sp * dx;
    z += sd * dz;
    y += sd * dy;
  }

  if (res.status != SolveStatus::optimal && std::isfinite(best.merit)) {
    X = best.X;
    x = best.x;
    y = best.y;
    res.pobj = best.pobj;
    res.dobj = best.dobj;
    res.residuals = best.residuals;
  }
  res.X = X;
  res.x = x;
  res.y = RVector::Zero(m0);
  for (int i = 0; i < m; ++i) res.y(kept[static_cast<size_t>(i)]) = y(i) * row_scale(i);
  if (res.status != SolveStatus::optimal && res.residuals.primal > 1e-4 &&
      res.residuals.dual < 1e-4 * std::max(1.0, res.residuals.primal)) {
    res.status = SolveStatus::infeasible;
  }
  return res;
}

template struct ConicProblem<double>;
template struct ConicProblem<cdouble>;
template IpmResult<double> solve_conic<double>(const ConicProblem<double>&, const IpmOptions&);
template IpmResult<cdouble> solve_conic<cdouble>(const ConicProblem<cdouble>&, const IpmOptions&);

}  // namespace irs::detail
