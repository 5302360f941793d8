#include "irs/hermitian_space.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "irs/errors.hpp"

namespace irs {

namespace {

const double kSqrt2 = std::sqrt(2.0);

template <typename Derived>
double asymmetry(const Eigen::MatrixBase<Derived>& m) {
  return (m - m.adjoint()).norm();
}

}  // namespace

HermitianMatrix::HermitianMatrix(const CMatrix& m, double tol) {
  if (m.rows() != m.cols()) throw DomainError("hermitian matrix must be square");
  const double scale = std::max(m.norm(), 1e-300);
  if (asymmetry(m) > tol * scale) {
    throw SymmetryError("matrix is not Hermitian (relative asymmetry " +
                        std::to_string(asymmetry(m) / scale) + ")");
  }
  m_ = (m + m.adjoint()) / 2.0;
  for (Eigen::Index i = 0; i < m_.rows(); ++i) m_(i, i) = m_(i, i).real();
}

HermitianMatrix::HermitianMatrix(const RMatrix& m, double tol)
    : HermitianMatrix(CMatrix(m.cast<cdouble>()), tol) {}

HermitianMatrix HermitianMatrix::zero(int n) { return HermitianMatrix(CMatrix(CMatrix::Zero(n, n))); }

HermitianMatrix HermitianMatrix::identity(int n) {
  return HermitianMatrix(CMatrix(CMatrix::Identity(n, n)));
}

HermitianMatrix HermitianMatrix::outer(const CVector& x) {
  return HermitianMatrix(CMatrix(x * x.adjoint()));
}

bool HermitianMatrix::is_real(double tol) const {
  return m_.imag().cwiseAbs().maxCoeff() <= tol;
}

HermitianMatrix HermitianMatrix::operator+(const HermitianMatrix& o) const {
  return HermitianMatrix(CMatrix(m_ + o.m_));
}

HermitianMatrix HermitianMatrix::operator-(const HermitianMatrix& o) const {
  return HermitianMatrix(CMatrix(m_ - o.m_));
}

HermitianMatrix HermitianMatrix::operator*(double s) const { return HermitianMatrix(CMatrix(m_ * s)); }

RVector vectorize_raw(const CMatrix& a) {
  const int n = static_cast<int>(a.rows());
  RVector w(static_cast<Eigen::Index>(n) * n);
  for (int i = 0; i < n; ++i) w(i) = a(i, i).real();
  int k = n;
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) {
      w(k++) = kSqrt2 * a(r, c).real();
      w(k++) = kSqrt2 * a(r, c).imag();
    }
  }
  return w;
}

CMatrix devectorize_raw(const RVector& w, int n) {
  CMatrix a(n, n);
  for (int i = 0; i < n; ++i) a(i, i) = w(i);
  int k = n;
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) {
      const cdouble z(w(k) / kSqrt2, w(k + 1) / kSqrt2);
      a(r, c) = z;
      a(c, r) = std::conj(z);
      k += 2;
    }
  }
  return a;
}

VectorizedHermitian vectorize(const HermitianMatrix& a) { return {a.dim(), vectorize_raw(a.matrix())}; }

HermitianMatrix devectorize(const VectorizedHermitian& w) {
  if (w.coords.size() != static_cast<Eigen::Index>(w.dim) * w.dim) {
    throw DomainError("coordinate vector length does not match N^2");
  }
  return HermitianMatrix(devectorize_raw(w.coords, w.dim));
}

RVector vectorize_symmetric(const RMatrix& a) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n) throw DomainError("symmetric matrix must be square");
  if ((a - a.transpose()).norm() > kSymmetryTol * std::max(a.norm(), 1e-300)) {
    throw SymmetryError("matrix is not symmetric");
  }
  RVector w(symmetric_coord_count(n));
  for (int i = 0; i < n; ++i) w(i) = a(i, i);
  int k = n;
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) w(k++) = kSqrt2 * 0.5 * (a(r, c) + a(c, r));
  }
  return w;
}

RMatrix devectorize_symmetric(const RVector& w, int n) {
  if (w.size() != symmetric_coord_count(n)) throw DomainError("coordinate vector length does not match N(N+1)/2");
  RMatrix a(n, n);
  for (int i = 0; i < n; ++i) a(i, i) = w(i);
  int k = n;
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) {
      a(r, c) = a(c, r) = w(k++) / kSqrt2;
    }
  }
  return a;
}

RVector vectorize_outer(const CVector& x) {
  const int n = static_cast<int>(x.size());
  RVector w(static_cast<Eigen::Index>(n) * n);
  for (int i = 0; i < n; ++i) w(i) = std::norm(x(i));
  int k = n;
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) {
      const cdouble z = x(r) * std::conj(x(c));
      w(k++) = kSqrt2 * z.real();
      w(k++) = kSqrt2 * z.imag();
    }
  }
  return w;
}

RVector vectorize_outer_symmetric(const RVector& x) {
  const int n = static_cast<int>(x.size());
  RVector w(symmetric_coord_count(n));
  for (int i = 0; i < n; ++i) w(i) = x(i) * x(i);
  int k = n;
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) w(k++) = kSqrt2 * x(r) * x(c);
  }
  return w;
}

std::vector<CMatrix> OrthonormalBasis::all() const {
  std::vector<CMatrix> out(diagonal_part);
  out.insert(out.end(), offdiag_real.begin(), offdiag_real.end());
  out.insert(out.end(), offdiag_imag.begin(), offdiag_imag.end());
  return out;
}

OrthonormalBasis build_basis(int n) {
  if (n <= 0) throw DomainError("basis dimension must be positive");
  OrthonormalBasis basis;
  basis.dim = n;

  std::vector<RVector> diag_vectors;
  diag_vectors.push_back(RVector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n))));
  for (int e = 0; e < n && static_cast<int>(diag_vectors.size()) < n; ++e) {
    RVector v = RVector::Unit(n, e);
    for (const auto& q : diag_vectors) v -= q.dot(v) * q;
    for (const auto& q : diag_vectors) v -= q.dot(v) * q;
    const double nv = v.norm();
    if (nv > 1e-8) diag_vectors.push_back(v / nv);
  }
  for (const auto& b : diag_vectors) basis.diagonal_part.push_back(b.cast<cdouble>().asDiagonal());

  const cdouble j(0.0, 1.0);
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) {
      CMatrix er = CMatrix::Zero(n, n);
      er(r, c) = er(c, r) = 1.0 / kSqrt2;
      basis.offdiag_real.push_back(er);
      CMatrix ei = CMatrix::Zero(n, n);
      ei(r, c) = j / kSqrt2;
      ei(c, r) = -j / kSqrt2;
      basis.offdiag_imag.push_back(ei);
    }
  }
  return basis;
}

namespace {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
Vec<Scalar> start_vector(int n) {
  Vec<Scalar> x(n);
  for (int i = 0; i < n; ++i) {
    x(i) = Scalar(1.0 + 0.5 * std::sin(1.7 * i + 0.3) + 0.25 * std::cos(0.37 * i * i + 1.1));
  }
  return x.normalized();
}

// Leading significant entry made real positive.
template <typename Scalar>
void normalize_phase(Vec<Scalar>& x) {
  const double scale = x.norm();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double mag = std::abs(x(i));
    if (mag > 1e-8 * scale) {
      if constexpr (std::is_same_v<Scalar, double>) {
        if (x(i) < 0) x = -x;
      } else {
        x *= std::conj(x(i)) / mag;
        x(i) = mag;
      }
      return;
    }
  }
}

template <typename Scalar>
struct Pair {
  double value;
  Vec<Scalar> vector;
};

template <typename Scalar>
std::vector<Pair<Scalar>> full_top(const Mat<Scalar>& a, int k) {
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(a);
  std::vector<Pair<Scalar>> out;
  const int n = static_cast<int>(a.rows());
  for (int i = 0; i < k && i < n; ++i) {
    Vec<Scalar> v = es.eigenvectors().col(n - 1 - i);
    normalize_phase(v);
    out.push_back({es.eigenvalues()(n - 1 - i), v});
  }
  return out;
}

template <typename Scalar>
std::vector<Pair<Scalar>> power_top(const Mat<Scalar>& a, int k, const EigenOptions& opt) {
  const int n = static_cast<int>(a.rows());
  if (n == 0) throw DomainError("empty matrix");
  if (k < 1 || k > 2) throw DomainError("top_eigenpairs supports k in {1, 2}");
  k = std::min(k, n);

  // Gershgorin lower bound; shifting by it makes the spectrum nonnegative so the
  // algebraically largest eigenvalue dominates the iteration.
  double lower = 0.0;
  for (int i = 0; i < n; ++i) {
    double radius = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != i) radius += std::abs(a(i, j));
    }
    lower = std::min(lower, std::real(a(i, i)) - radius);
  }
  const double shift = -lower;
  const double scale = std::max(a.norm(), 1e-300);

  std::vector<Pair<Scalar>> out;
  for (int idx = 0; idx < k; ++idx) {
    Vec<Scalar> x = start_vector<Scalar>(n);
    auto deflate = [&](Vec<Scalar>& y) {
      for (const auto& p : out) y -= p.vector * (p.vector.dot(y));
    };
    deflate(x);
    if (x.norm() < 1e-12) x = Vec<Scalar>::Unit(n, n - 1 - idx);
    deflate(x);
    x.normalize();

    bool converged = false;
    double lambda = 0.0;
    if (scale <= 1e-300) {
      converged = true;
    }
    for (int it = 0; it < opt.max_iters && !converged; ++it) {
      Vec<Scalar> ax = a * x;
      lambda = std::real(x.dot(ax));
      const double residual = (ax - lambda * x).norm();
      if (residual <= opt.tol * scale) {
        converged = true;
        break;
      }
      Vec<Scalar> y = ax + shift * x;
      deflate(y);
      const double ny = y.norm();
      if (ny <= 1e-300) {
        // Eigenvalue -shift; x already an eigenvector of the deflated operator.
        converged = true;
        break;
      }
      x = y / ny;
    }
    if (!converged) {
      if (!opt.fallback) {
        Vec<Scalar> ax = a * x;
        throw ConvergenceError("power iteration did not converge",
                               (ax - std::real(x.dot(ax)) * x).norm() / scale);
      }
      return full_top<Scalar>(a, k);
    }
    lambda = std::real(x.dot(a * x));
    normalize_phase(x);
    out.push_back({lambda, x});
  }
  if (k == 2 && out[1].value > out[0].value) std::swap(out[0], out[1]);
  return out;
}

template <typename Scalar>
double ratio_of(const Mat<Scalar>& a, int k) {
  if (k < 1 || k > 2) throw DomainError("eigen_ratio supports k in {1, 2}");
  const double tr = a.diagonal().real().sum();
  if (!(tr > 0.0)) throw PsdViolation("eigen_ratio requires positive trace");
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(a, Eigen::EigenvaluesOnly);
  const RVector& ev = es.eigenvalues();
  const int n = static_cast<int>(ev.size());
  if (ev(0) < -1e-9 * tr) {
    throw PsdViolation("matrix has a negative eigenvalue " + std::to_string(ev(0)));
  }
  double top = ev(n - 1);
  if (k == 2 && n > 1) top += ev(n - 2);
  return std::min(1.0, top / tr);
}

}  // namespace

std::vector<EigenPair> top_eigenpairs(const HermitianMatrix& a, int k, const EigenOptions& opt) {
  std::vector<EigenPair> out;
  for (auto& p : power_top<cdouble>(a.matrix(), k, opt)) out.push_back({p.value, std::move(p.vector)});
  return out;
}

std::vector<SymmetricEigenPair> top_eigenpairs(const RMatrix& a, int k, const EigenOptions& opt) {
  if (a.rows() != a.cols()) throw DomainError("matrix must be square");
  std::vector<SymmetricEigenPair> out;
  for (auto& p : power_top<double>(a, k, opt)) out.push_back({p.value, std::move(p.vector)});
  return out;
}

double eigen_ratio(const HermitianMatrix& a, int k) { return ratio_of<cdouble>(a.matrix(), k); }

double eigen_ratio(const RMatrix& a, int k) { return ratio_of<double>(a, k); }

int dimension_bound(int n, int b) {
  if (n < 1 || b < 1) throw DomainError("dimension_bound needs N >= 1 and b >= 1");
  if (b == 1) return (n * n - n) / 2 + 1;
  return n * n - n + 1;
}

int numerical_rank(const RMatrix& columns, double rel_tol) {
  if (columns.size() == 0) return 0;
  Eigen::BDCSVD<RMatrix> svd(columns);
  const RVector& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * s(0)) ++r;
  }
  return r;
}

int empirical_dimension(const std::vector<HermitianMatrix>& vs) {
  if (vs.empty()) return 0;
  const int n = vs.front().dim();
  RMatrix cols(static_cast<Eigen::Index>(n) * n, static_cast<Eigen::Index>(vs.size()));
  for (size_t t = 0; t < vs.size(); ++t) {
    if (vs[t].dim() != n) throw DomainError("all matrices must share one dimension");
    cols.col(static_cast<Eigen::Index>(t)) = vectorize_raw(vs[t].matrix());
  }
  return numerical_rank(cols);
}

}  // namespace irs
