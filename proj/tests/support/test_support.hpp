#pragma once

// Hand-rolled generators and test-side oracles shared by the unit tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "irs/hermitian_space.hpp"
#include "irs/measurement.hpp"

namespace irs::test {

inline std::mt19937_64 rng_for(std::uint64_t seed) { return std::mt19937_64(seed * 0x9e3779b97f4a7c15ULL + 17); }

inline double normal(std::mt19937_64& g) {
  std::normal_distribution<double> nd;
  return nd(g);
}

inline CVector random_cvector(int n, std::mt19937_64& g) {
  CVector x(n);
  for (int i = 0; i < n; ++i) x(i) = cdouble(normal(g), normal(g));
  return x;
}

inline RVector random_rvector(int n, std::mt19937_64& g) {
  RVector x(n);
  for (int i = 0; i < n; ++i) x(i) = normal(g);
  return x;
}

inline CMatrix random_hermitian_matrix(int n, std::mt19937_64& g) {
  CMatrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = cdouble(normal(g), normal(g));
  }
  return (a + a.adjoint()) / 2.0;
}

inline HermitianMatrix random_hermitian(int n, std::mt19937_64& g) { return HermitianMatrix(random_hermitian_matrix(n, g)); }

// PSD matrix with exactly `rank` nonzero eigenvalues.
inline HermitianMatrix random_psd(int n, int rank, std::mt19937_64& g) {
  CMatrix a = CMatrix::Zero(n, n);
  for (int r = 0; r < rank; ++r) {
    const CVector x = random_cvector(n, g);
    a += (1.0 + r) * x * x.adjoint();
  }
  return HermitianMatrix(a);
}

// Real rank over R of a set of complex matrices, computed from raw entries
// (real and imaginary parts stacked) rather than the library's coordinates.
inline int real_span_rank(const std::vector<CMatrix>& ms) {
  if (ms.empty()) return 0;
  const Eigen::Index n2 = ms[0].size();
  RMatrix cols(2 * n2, static_cast<Eigen::Index>(ms.size()));
  for (size_t t = 0; t < ms.size(); ++t) {
    const CMatrix& m = ms[t];
    for (Eigen::Index i = 0; i < n2; ++i) {
      cols(i, static_cast<Eigen::Index>(t)) = m.data()[i].real();
      cols(n2 + i, static_cast<Eigen::Index>(t)) = m.data()[i].imag();
    }
  }
  Eigen::JacobiSVD<RMatrix> svd(cols);
  const RVector s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > 1e-9 * s(0)) ++r;
  }
  return r;
}

// Every reflection of length n with the last entry fixed to 1, as raw vectors.
inline std::vector<CVector> all_phase_vectors(int n, int b) {
  const int levels = 1 << b;
  std::vector<CVector> out;
  std::vector<int> idx(static_cast<size_t>(n), 0);
  for (;;) {
    CVector v(n);
    for (int i = 0; i < n; ++i) v(i) = std::polar(1.0, 2.0 * M_PI * idx[static_cast<size_t>(i)] / levels);
    out.push_back(v);
    int i = 0;
    while (i < n - 1 && ++idx[static_cast<size_t>(i)] == levels) idx[static_cast<size_t>(i++)] = 0;
    if (i == n - 1) break;
  }
  return out;
}

inline std::vector<ReflectionVector> all_reflections(int n, int b) {
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

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace irs::test
