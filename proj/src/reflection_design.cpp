#include "irs/reflection_design.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "irs/errors.hpp"

namespace irs {

namespace {

double objective(const CVector& x, const std::vector<std::uint8_t>& k, int b) {
  cdouble s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::conj(x(i)) * unit_phase(b, k[static_cast<size_t>(i)]);
  return std::abs(s);
}

}  // namespace

ReflectionVector discrete_align(const CVector& x, int b) {
  if (b < 1 || b > 5) throw DomainError("phase-shift bits must be in 1..5");
  if (x.size() == 0 || x.cwiseAbs().maxCoeff() == 0.0) throw DomainError("discrete_align needs a nonzero vector");
  const int L = 1 << b;
  const double step = 2.0 * std::numbers::pi / L;
  const auto n = static_cast<size_t>(x.size());

  std::vector<double> alpha(n, 0.0);
  std::vector<double> cuts{0.0, step};
  for (size_t i = 0; i < n; ++i) {
    if (x(static_cast<Eigen::Index>(i)) == cdouble(0.0)) continue;
    alpha[i] = std::arg(x(static_cast<Eigen::Index>(i)));
    // Rotation where element i's nearest-phase decision flips.
    double c = std::fmod(0.5 * step - alpha[i], step);
    if (c < 0) c += step;
    cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());

  std::vector<std::uint8_t> best, cand(n, 0);
  double best_val = -1.0;
  for (size_t s = 0; s + 1 < cuts.size(); ++s) {
    if (cuts[s + 1] - cuts[s] <= 1e-15) continue;
    const double theta = 0.5 * (cuts[s] + cuts[s + 1]);
    for (size_t i = 0; i < n; ++i) {
      if (x(static_cast<Eigen::Index>(i)) == cdouble(0.0)) {
        cand[i] = 0;
        continue;
      }
      long k = std::lround((alpha[i] + theta) / step);
      k = ((k % L) + L) % L;
      cand[i] = static_cast<std::uint8_t>(k);
    }
    const double val = objective(x, cand, b);
    if (val > best_val) {
      best_val = val;
      best = cand;
    }
  }
  // Global rotation by a multiple of the phase step keeps membership and |x^H v|.
  const int last = best.back();
  for (auto& k : best) k = static_cast<std::uint8_t>((k - last + L) % L);
  return ReflectionVector(b, std::move(best));
}

ReflectionVector design_from_estimate(const HermitianMatrix& est, int b) {
  if (b == 1) {
    const auto pairs = top_eigenpairs(est.real_part(), 2);
    const double l1 = std::max(pairs[0].value, 0.0);
    if (!(l1 > 0)) throw DomainError("estimate has no positive eigenvalue");
    CVector x = std::sqrt(l1) * pairs[0].vector.cast<cdouble>();
    if (pairs.size() > 1) {
      const double l2 = std::max(pairs[1].value, 0.0);
      x += cdouble(0.0, std::sqrt(l2)) * pairs[1].vector.cast<cdouble>();
    }
    return discrete_align(x, 1);
  }
  const auto pairs = top_eigenpairs(est, 1);
  if (!(pairs[0].value > 0)) throw DomainError("estimate has no positive eigenvalue");
  return discrete_align(pairs[0].vector, b);
}

double effective_gain(const CVector& h_bar, const ReflectionVector& v) {
  if (h_bar.size() != v.dim()) throw DomainError("dimension mismatch between h and v");
  return std::norm(v.values().dot(h_bar));
}

DesignOutcome upper_bound_gain(const CVector& h_bar, int b) {
  DesignOutcome out;
  out.v = discrete_align(h_bar, b);
  out.gain = effective_gain(h_bar, out.v);
  out.gain_fraction_of_ub = 1.0;
  return out;
}

ReflectionVector rms_design(const MeasurementSet& ms) {
  ms.validate();
  const auto q = ms.representative_powers();
  size_t best = 0;
  for (size_t t = 1; t < q.size(); ++t) {
    if (q[t] > q[best]) best = t;
  }
  return ms.reflections[best];
}

ReflectionVector csm_design(const MeasurementSet& ms, int b) {
  ms.validate();
  if (ms.bits() != b) throw DomainError("measurement bits differ from b");
  const int L = 1 << b;
  const int n = ms.dim();
  const auto q = ms.representative_powers();
  std::vector<double> sum(static_cast<size_t>(n * L), 0.0);
  std::vector<int> count(static_cast<size_t>(n * L), 0);
  for (int t = 0; t < ms.size(); ++t) {
    const auto& v = ms.reflections[static_cast<size_t>(t)];
    for (int i = 0; i + 1 < n; ++i) {
      const size_t cell = static_cast<size_t>(i * L + v.phase_index(i));
      sum[cell] += q[static_cast<size_t>(t)];
      ++count[cell];
    }
  }
  std::vector<std::uint8_t> idx(static_cast<size_t>(n), 0);
  for (int i = 0; i + 1 < n; ++i) {
    int best = -1;
    double best_mean = 0.0;
    for (int k = 0; k < L; ++k) {
      const size_t cell = static_cast<size_t>(i * L + k);
      if (count[cell] == 0) continue;
      const double mean = sum[cell] / count[cell];
      if (best < 0 || mean > best_mean) {
        best = k;
        best_mean = mean;
      }
    }
    if (best < 0) throw DomainError("CSM: element " + std::to_string(i) + " has no samples");
    idx[static_cast<size_t>(i)] = static_cast<std::uint8_t>(best);
  }
  return ReflectionVector(b, std::move(idx));
}

}  // namespace irs
