#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace irs {

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kRankTol = 1e-10;

// Hermitian N x N matrix. Construction checks the symmetry within a relative
// tolerance and then stores the exactly symmetrized matrix.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(const CMatrix& m, double tol = kSymmetryTol);
  explicit HermitianMatrix(const RMatrix& m, double tol = kSymmetryTol);

  static HermitianMatrix zero(int n);
  static HermitianMatrix identity(int n);
  static HermitianMatrix outer(const CVector& x);

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  RMatrix real_part() const { return m_.real(); }
  bool is_real(double tol = 0.0) const;
  double trace() const { return m_.diagonal().real().sum(); }
  double frobenius_norm() const { return m_.norm(); }

  HermitianMatrix operator+(const HermitianMatrix& o) const;
  HermitianMatrix operator-(const HermitianMatrix& o) const;
  HermitianMatrix operator*(double s) const;

 private:
  CMatrix m_;
};

inline HermitianMatrix operator*(double s, const HermitianMatrix& a) { return a * s; }

struct VectorizedHermitian {
  int dim = 0;
  RVector coords;
};

// Layout: N diagonal entries, then for n < l (row-major) the pairs
// (sqrt2 Re A_nl, sqrt2 Im A_nl).
VectorizedHermitian vectorize(const HermitianMatrix& a);
HermitianMatrix devectorize(const VectorizedHermitian& w);

// Same layout restricted to real-symmetric matrices: the diagonal followed by
// sqrt2 A_nl for n < l. Length N(N+1)/2.
RVector vectorize_symmetric(const RMatrix& a);
RMatrix devectorize_symmetric(const RVector& w, int n);
// Unchecked fast paths used inside the estimators.
RVector vectorize_raw(const CMatrix& a);
CMatrix devectorize_raw(const RVector& w, int n);
// Coordinates of the outer product x x^H without forming the matrix.
RVector vectorize_outer(const CVector& x);
RVector vectorize_outer_symmetric(const RVector& x);

inline int hermitian_coord_count(int n) { return n * n; }
inline int symmetric_coord_count(int n) { return n * (n + 1) / 2; }

struct OrthonormalBasis {
  int dim = 0;
  std::vector<CMatrix> diagonal_part;
  std::vector<CMatrix> offdiag_real;
  std::vector<CMatrix> offdiag_imag;

  std::vector<CMatrix> all() const;
};

OrthonormalBasis build_basis(int n);

struct EigenPair {
  double value = 0.0;
  CVector vector;
};

struct SymmetricEigenPair {
  double value = 0.0;
  RVector vector;
};

struct EigenOptions {
  double tol = 1e-10;
  int max_iters = 10000;
  bool fallback = true;
};

std::vector<EigenPair> top_eigenpairs(const HermitianMatrix& a, int k, const EigenOptions& opt = {});
std::vector<SymmetricEigenPair> top_eigenpairs(const RMatrix& a, int k, const EigenOptions& opt = {});

double eigen_ratio(const HermitianMatrix& a, int k);
double eigen_ratio(const RMatrix& a, int k);

int dimension_bound(int n, int b);

int empirical_dimension(const std::vector<HermitianMatrix>& vs);
int numerical_rank(const RMatrix& columns, double rel_tol = kRankTol);

}  // namespace irs
