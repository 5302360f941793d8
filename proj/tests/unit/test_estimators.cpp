#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "irs/channel_model.hpp"
#include "irs/errors.hpp"
#include "irs/estimators.hpp"
#include "irs/measurement.hpp"
#include "test_support.hpp"

using namespace irs;

namespace {

struct Instance {
  ScenarioConfig cfg;
  ChannelRealization ch;
  std::vector<ReflectionVector> refl;
};

Instance make_instance(int nx, int nz, int b, int t_p, std::uint64_t seed, bool enforce_rank = true) {
  Instance in;
  in.cfg.nx = nx;
  in.cfg.nz = nz;
  Rng rng = make_stream(seed, {static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(t_p)});
  in.ch = sample_channels(in.cfg, sample_user_position(in.cfg, rng), rng);
  in.refl = generate_training(in.cfg.n_irs(), b, t_p, rng, enforce_rank);
  return in;
}

double min_eig(const HermitianMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a.matrix());
  return es.eigenvalues()(0);
}

// Eigenvalue clipping done test-side.
CMatrix clip_oracle(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().adjoint();
}

// Minimum-Frobenius-norm Hermitian H with p0 tr(H V_t) = p_t, from raw entries.
CMatrix min_norm_oracle(const MeasurementSet& ms) {
  const int n = ms.dim();
  const Eigen::Index m = 2 * n * n;
  RMatrix A(ms.size(), m);
  for (int t = 0; t < ms.size(); ++t) {
    const CVector v = ms.reflections[static_cast<size_t>(t)].values();
    // tr(H v v^H) = sum_ij H_ij conj(v_i) v_j ... written as a real functional of (Re H, Im H).
    const CMatrix M = v.conjugate() * v.transpose();
    for (int i = 0; i < n * n; ++i) {
      A(t, i) = ms.p0 * M.data()[i].real();
      A(t, n * n + i) = -ms.p0 * M.data()[i].imag();
    }
  }
  RVector p(ms.size());
  for (int t = 0; t < ms.size(); ++t) p(t) = ms.powers[static_cast<size_t>(t)];
  const RVector x = A.completeOrthogonalDecomposition().solve(p);
  CMatrix H(n, n);
  for (int i = 0; i < n * n; ++i) H.data()[i] = cdouble(x(i), x(n * n + i));
  return 0.5 * (H + H.adjoint());
}

void expect_non_decreasing(const std::vector<double>& xs, double tol) {
  for (size_t i = 1; i < xs.size(); ++i) EXPECT_GE(xs[i], xs[i - 1] - tol) << "index " << i;
}

void expect_non_increasing(const std::vector<double>& xs, double rel_tol) {
  for (size_t i = 1; i < xs.size(); ++i) EXPECT_LE(xs[i], xs[i - 1] * (1.0 + rel_tol)) << "index " << i;
}

}  // namespace

TEST(Nmse, Examples) {
  auto g = test::rng_for(1);
  const auto H = test::random_psd(4, 1, g);
  EXPECT_EQ(nmse(H, H), 0.0);
  EXPECT_DOUBLE_EQ(nmse(HermitianMatrix::zero(4), H), 1.0);
  EXPECT_DOUBLE_EQ(nmse(H * 2.0, H), 1.0);
  EXPECT_THROW(nmse(H, HermitianMatrix::zero(4)), DomainError);
}

TEST(Nmse, BinaryComparesRealPart) {
  auto g = test::rng_for(2);
  const CVector h = test::random_cvector(4, g);
  const auto H = HermitianMatrix::outer(h);
  const auto Hr = HermitianMatrix(RMatrix(H.real_part()));
  EXPECT_LE(nmse_for_bits(Hr, H, 1), 1e-30);
  EXPECT_GT(nmse_for_bits(Hr, H, 2), 0.0);
}

TEST(Lra, ExactRecoveryQuaternary) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto in = make_instance(2, 2, 2, 21, seed);
    const auto ms = measure_exact(in.ch, in.refl, in.cfg.p0_watts());
    const auto res = lra_estimate(ms, 2);
    EXPECT_LE(nmse(res.estimate, in.ch.H_bar), 1e-6) << "seed " << seed;
    expect_non_decreasing(res.ratio_trace, 1e-9);
    EXPECT_GE(min_eig(res.estimate), -1e-8 * res.estimate.trace());
  }
}

TEST(Lra, PlantedRankOneInitExitsImmediately) {
  const auto in = make_instance(2, 2, 2, 10, 7);
  const auto ms = measure_exact(in.ch, in.refl, in.cfg.p0_watts());
  LraOptions opt;
  opt.initial = in.ch.H_bar;
  const auto res = lra_estimate(ms, 2, opt);
  EXPECT_EQ(res.iterations, 0);
  EXPECT_EQ(res.ratio_trace.size(), 1u);
  EXPECT_TRUE(res.converged);
  EXPECT_LE(nmse(res.estimate, in.ch.H_bar), 1e-20);
}

TEST(Lra, ExactRecoveryBinaryRealPart) {
  LraOptions opt;
  opt.epsilon = 1.0 - 1e-6;
  int recovered = 0;
  const int trials = 100;
  for (std::uint64_t seed = 1; seed <= trials; ++seed) {
    const auto in = make_instance(5, 1, 1, dimension_bound(6, 1), seed);
    const auto ms = measure_exact(in.ch, in.refl, in.cfg.p0_watts());
    const auto res = lra_estimate(ms, 1, opt);
    expect_non_decreasing(res.ratio_trace, 1e-9);
    EXPECT_TRUE(res.estimate.is_real(1e-12));
    if (nmse_for_bits(res.estimate, in.ch.H_bar, 1) <= 1e-6) ++recovered;
  }
  EXPECT_GE(recovered, 95);
}

TEST(Lra, RejectsNoisyInput) {
  const auto in = make_instance(2, 1, 2, 5, 8);
  Rng rng = make_stream(8, {});
  const auto ms = measure_noisy(in.ch, in.refl, 1.0, 1e-12, 1, rng);
  EXPECT_THROW(lra_estimate(ms, 2), DomainError);
  EXPECT_THROW(alra_estimate(ms, 2), DomainError);
  const auto exact = measure_exact(in.ch, in.refl, 1.0);
  EXPECT_THROW(robust_lra_estimate(exact, 2), DomainError);
  EXPECT_THROW(robust_alra_estimate(exact, 2), DomainError);
  EXPECT_THROW(lra_estimate(exact, 1), DomainError);
}

TEST(Alra, IterationZeroIsMinimumNormFit) {
  for (int b = 2; b <= 3; ++b) {
    const auto in = make_instance(2, 2, b, 12, 9);
    const auto ms = measure_exact(in.ch, in.refl, in.cfg.p0_watts());
    const CMatrix w0 = min_norm_oracle(ms);
    double res_norm = 0.0, p_norm = 0.0;
    for (int t = 0; t < ms.size(); ++t) {
      const CVector v = ms.reflections[static_cast<size_t>(t)].values();
      const double fit = ms.p0 * (v.adjoint() * w0 * v)(0).real();
      res_norm += std::pow(fit - ms.powers[static_cast<size_t>(t)], 2);
      p_norm += std::pow(ms.powers[static_cast<size_t>(t)], 2);
    }
    EXPECT_LE(std::sqrt(res_norm), 1e-10 * std::sqrt(p_norm));
    AlraOptions opt;
    opt.max_iters = 0;
    const auto res = alra_estimate(ms, b, opt);
    EXPECT_EQ(res.iterations, 0);
    const CMatrix want = clip_oracle(w0);
    EXPECT_LE(test::max_abs_diff(res.estimate.matrix(), want), 1e-9 * want.norm());
  }
}

TEST(Alra, ConvergesAtFullDimension) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto in = make_instance(2, 2, 2, 21, seed);
    const auto ms = measure_exact(in.ch, in.refl, in.cfg.p0_watts());
    AlraOptions opt;
    opt.max_iters = 500;
    const auto res = alra_estimate(ms, 2, opt);
    EXPECT_LE(nmse(res.estimate, in.ch.H_bar), 1e-2) << "seed " << seed;
    expect_non_increasing(res.distance_trace, 1e-9);
    EXPECT_GE(min_eig(res.estimate), -1e-12 * res.estimate.trace());
  }
}

TEST(Alra, DistanceTraceMonotoneBinary) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto in = make_instance(4, 1, 1, 9, seed);
    const auto ms = measure_exact(in.ch, in.refl, in.cfg.p0_watts());
    const auto res = alra_estimate(ms, 1);
    expect_non_increasing(res.distance_trace, 1e-9);
    EXPECT_TRUE(res.estimate.is_real(0.0));
    EXPECT_LE(res.iterations, 1000);
  }
}

TEST(RobustLra, ZeroWidthNoiselessMatchesLra) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto in = make_instance(2, 2, 2, 21, seed);
    Rng rng = make_stream(10, {seed});
    const auto exact = measure_exact(in.ch, in.refl, in.cfg.p0_watts());
    const auto noisy = measure_noisy(in.ch, in.refl, in.cfg.p0_watts(), 0.0, 1, rng);
    const auto a = lra_estimate(exact, 2);
    RobustLraOptions opt;
    opt.rho = 1e6;
    const auto r = robust_lra_estimate(noisy, 2, opt);
    EXPECT_LE(nmse(r.estimate, a.estimate), 1e-6) << "seed " << seed;
  }
}

TEST(RobustLra, RatioTraceMonotoneUnderNoise) {
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    const auto in = make_instance(8, 1, 1, 30, 100 + static_cast<std::uint64_t>(trial));
    Rng rng = make_stream(11, {static_cast<std::uint64_t>(trial)});
    const auto ms = measure_noisy(in.ch, in.refl, in.cfg.p0_watts(), dbm_to_watts(-85.0), 1, rng);
    const auto res = robust_lra_estimate(ms, 1);
    expect_non_decreasing(res.ratio_trace, 1e-9);
    ASSERT_FALSE(res.ratio_trace.empty());
    EXPECT_LE(res.ratio_trace.back(), 1.0 + 1e-9);
    const double d0 = res.parameters.at("initial_delta_norm").get<double>();
    const double d1 = res.parameters.at("final_delta_norm").get<double>();
    EXPECT_LE(d1 * d1, d0 * d0 * (1.0 + 1e-9) + 1e-18) << "trial " << trial;
  }
}

TEST(RobustAlra, ZeroChannelGivesZero) {
  const auto in = make_instance(2, 2, 2, 12, 12);
  MeasurementSet ms;
  ms.kind = MeasurementKind::noisy;
  ms.reflections = in.refl;
  ms.p0 = 1.0;
  ms.sigma2 = 1e-12;
  ms.powers.assign(in.refl.size(), 1e-12);
  const auto res = robust_alra_estimate(ms, 2);
  EXPECT_EQ(res.estimate.frobenius_norm(), 0.0);
}

TEST(RobustAlra, LargeRhoFitsMidpoints) {
  for (int b = 1; b <= 2; ++b) {
    const auto in = make_instance(2, 2, b, 9, 13);
    Rng rng = make_stream(13, {});
    const auto noisy = measure_noisy(in.ch, in.refl, in.cfg.p0_watts(), 0.0, 1, rng);
    RobustAlraOptions opt;
    opt.rho = 1e8;
    const auto res = robust_alra_estimate(noisy, b, opt);
    double r2 = 0.0, q2 = 0.0;
    for (int t = 0; t < noisy.size(); ++t) {
      const auto& v = noisy.reflections[static_cast<size_t>(t)];
      const CMatrix V = b == 1 ? CMatrix(v.real_values().cast<cdouble>() * v.real_values().transpose().cast<cdouble>())
                               : CMatrix(v.values() * v.values().adjoint());
      const double fit = noisy.p0 * (res.estimate.matrix() * V).trace().real();
      r2 += std::pow(fit - (noisy.powers[static_cast<size_t>(t)] - noisy.sigma2), 2);
      q2 += std::pow(noisy.powers[static_cast<size_t>(t)], 2);
    }
    EXPECT_LE(std::sqrt(r2), 1e-3 * std::sqrt(q2)) << "b=" << b;
  }
}

TEST(RobustAlra, PenalizedDistanceNonIncreasing) {
  for (int b = 1; b <= 2; ++b) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto in = make_instance(3, 2, b, 25, 20 + seed);
      Rng rng = make_stream(14, {seed});
      const auto noisy = measure_noisy(in.ch, in.refl, in.cfg.p0_watts(), dbm_to_watts(-90.0), 4, rng);
      for (const auto& ms : {noisy, quantize_set(noisy, QuantizerConfig::from_width(2.0))}) {
        const auto res = robust_alra_estimate(ms, b);
        expect_non_increasing(res.distance_trace, 1e-9);
        EXPECT_GE(min_eig(res.estimate), -1e-12 * std::max(1e-30, res.estimate.trace()));
      }
    }
  }
}

TEST(Woodbury, MatchesDirectInverse) {
  auto g = test::rng_for(15);
  for (double rho : {0.1, 10.0, 1000.0}) {
    RMatrix C(25, 20);
    for (Eigen::Index i = 0; i < C.size(); ++i) C.data()[i] = test::normal(g);
    const WoodburyOperator op(C, rho);
    const RVector y = test::random_rvector(25, g);
    const RMatrix direct = RMatrix::Identity(25, 25) + rho * C * C.transpose();
    const RVector want = direct.fullPivLu().solve(y);
    EXPECT_LE((op.apply(y) - want).norm(), 1e-8 * want.norm()) << "rho=" << rho;
  }
}

TEST(Woodbury, RejectsIllConditioning) {
  RMatrix C = RMatrix::Zero(4, 2);
  C(0, 0) = 1.0;
  C(1, 1) = 1e-9;
  EXPECT_THROW(WoodburyOperator(C, 1e14), SolverError);
  EXPECT_NO_THROW(WoodburyOperator(C, 1e6));
}

TEST(TraceMinBaseline, BinaryStaysReal) {
  const auto in = make_instance(3, 1, 1, 8, 16);
  const auto ms = measure_exact(in.ch, in.refl, in.cfg.p0_watts());
  const auto res = tracemin_baseline(ms, 1);
  const RVector c = vectorize(res.estimate).coords;
  const int n = ms.dim();
  for (int k = n + 1; k < c.size(); k += 2) EXPECT_LE(std::abs(c(k)), 1e-10);
  EXPECT_EQ(res.ratio_trace.size(), 1u);
}

TEST(TraceMinBaseline, NoBetterThanLra) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto in = make_instance(2, 2, 2, 21, seed);
    const auto ms = measure_exact(in.ch, in.refl, in.cfg.p0_watts());
    const double e_tm = nmse(tracemin_baseline(ms, 2).estimate, in.ch.H_bar);
    const double e_lra = nmse(lra_estimate(ms, 2).estimate, in.ch.H_bar);
    EXPECT_GE(e_tm, e_lra - 1e-9);
    EXPECT_LE(e_tm, 1e-4);
  }
}

TEST(TraceMinBaseline, RobustFormOnQuantized) {
  const auto in = make_instance(2, 2, 2, 15, 17);
  Rng rng = make_stream(17, {});
  const auto ms = quantize_set(measure_noisy(in.ch, in.refl, 1.0, 0.0, 1, rng), QuantizerConfig::from_width(1.0));
  const auto res = tracemin_baseline(ms, 2, 10.0);
  EXPECT_EQ(res.parameters.at("rho").get<double>(), 10.0);
  EXPECT_GE(min_eig(res.estimate), -1e-8 * res.estimate.trace());
}

// For b = 1 the conjugate channel produces identical measurements, so only Re(H) is identifiable.
TEST(Identifiability, BinaryConjugateAmbiguity) {
  auto g = test::rng_for(18);
  Rng rng = make_stream(18, {});
  for (int k = 0; k < 50; ++k) {
    const CVector h = test::random_cvector(6, g);
    const auto H = HermitianMatrix::outer(h);
    const auto Hc = HermitianMatrix::outer(h.conjugate());
    const auto v = random_reflection(5, 1, rng);
    EXPECT_NEAR(exact_power(H, v, 1.0), exact_power(Hc, v, 1.0), 1e-12 * exact_power(H, v, 1.0));
  }
}

TEST(Results, JsonHasTraces) {
  const auto in = make_instance(2, 1, 2, 6, 19);
  const auto res = alra_estimate(measure_exact(in.ch, in.refl, 1.0), 2);
  const auto j = res.to_json();
  EXPECT_EQ(j.at("algorithm"), "ALRA");
  EXPECT_EQ(j.at("distance_trace").size(), res.distance_trace.size());
  EXPECT_TRUE(j.contains("wall_time"));
}
