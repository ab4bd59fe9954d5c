#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cases.hpp"
#include "ietlab/planar.hpp"
#include "ietlab/random.hpp"
#include "oracles.hpp"

using namespace ietlab;

namespace {

constexpr double kPi = std::numbers::pi;

double max_diff(const Mat2& a, const oracle::Matrix& b) {
  return std::max({std::abs(a.a11 - b[0][0]), std::abs(a.a12 - b[0][1]), std::abs(a.a21 - b[1][0]),
                   std::abs(a.a22 - b[1][1])});
}

Mat2 random_mat(Rng& rng, double bound) {
  return {rng.uniform(-bound, bound), rng.uniform(-bound, bound), rng.uniform(-bound, bound),
          rng.uniform(-bound, bound)};
}

}  // namespace

TEST(Eigen2, DistinctRealEigenvalues) {
  const RealJordan j = eigen2({0, 1, -2, 3});
  EXPECT_EQ(j.kind, JordanKind::RealDistinct);
  EXPECT_NEAR(j.lambda1, 1.0, 1e-14);
  EXPECT_NEAR(j.lambda2, 2.0, 1e-14);
}

TEST(Eigen2, IdentityIsRepeatedDiagonalizable) {
  const RealJordan j = eigen2(Mat2::identity());
  EXPECT_EQ(j.kind, JordanKind::RealRepeatedDiagonalizable);
  EXPECT_DOUBLE_EQ(j.lambda1, 1.0);
}

TEST(Eigen2, JordanBlockIsDefective) {
  const RealJordan j = eigen2({1, 4, 0, 1});
  EXPECT_EQ(j.kind, JordanKind::RealRepeatedDefective);
  EXPECT_NEAR(j.lambda1, 1.0, 1e-12);
  EXPECT_FALSE(j.diagonalizable());
}

TEST(Eigen2, ComplexPair) {
  const RealJordan j = eigen2({-1, 1, -1, -1});
  EXPECT_EQ(j.kind, JordanKind::ComplexPair);
  EXPECT_NEAR(j.mu, -1.0, 1e-14);
  EXPECT_NEAR(j.omega, 1.0, 1e-14);
}

TEST(Eigen2, SimilarityReconstructsRandomMatrices) {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const Mat2 a = random_mat(rng, 5.0);
    const RealJordan j = eigen2(a);
    ASSERT_GT(std::abs(j.S.det()), 1e-12);
    const Mat2 back = j.S * j.J * inverse(j.S);
    EXPECT_LE((back - a).max_abs(), 1e-9 * std::max(1.0, a.max_abs()));
  }
  for (const Mat2& a : {Mat2{1, 4, 0, 1}, Mat2{2, 0, 0, 2}, Mat2{0, 1, -2, 3}, Mat2{3, -1, 1, 1}}) {
    const RealJordan j = eigen2(a);
    EXPECT_LE((j.S * j.J * inverse(j.S) - a).max_abs(), 1e-9 * std::max(1.0, a.max_abs()));
  }
}

TEST(MatExp, ZeroMatrixGivesIdentity) {
  for (double tau : {0.0, 0.3, 7.0}) EXPECT_EQ(mat_exp(Mat2::zero(), tau), Mat2::identity());
}

TEST(MatExp, JordanBlockClosedForm) {
  for (double tau : {0.0, 0.25, 1.0, 2.5}) {
    const Mat2 e = mat_exp({1, 4, 0, 1}, tau);
    const double s = std::exp(tau);
    EXPECT_NEAR(e.a11, s, 1e-12 * s);
    EXPECT_NEAR(e.a12, 4.0 * tau * s, 1e-12 * s * (1 + 4 * tau));
    EXPECT_NEAR(e.a21, 0.0, 1e-15);
    EXPECT_NEAR(e.a22, s, 1e-12 * s);
  }
}

TEST(MatExp, MatchesSeriesOracle) {
  const Mat2 a{0, 1, -2, 3};
  EXPECT_LE(max_diff(mat_exp(a, 0.5), oracle::expm(oracle::scaled(cases::to_oracle(a), 0.5))), 1e-10);
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Mat2 m = random_mat(rng, 3.0);
    const double tau = rng.uniform(0.0, 1.5);
    const auto ref = oracle::expm(oracle::scaled(cases::to_oracle(m), tau));
    EXPECT_LE(max_diff(mat_exp(m, tau), ref), 1e-10 * std::max(1.0, oracle::max_abs(ref)));
  }
}

TEST(MatExp, SemigroupAndDeterminant) {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const Mat2 a = random_mat(rng, 5.0);
    const double t1 = rng.uniform(0.0, 2.0), t2 = rng.uniform(0.0, 2.0);
    NumericPolicy wide;
    wide.overflow_limit = 1e300;
    const Mat2 joint = mat_exp(a, t1 + t2, wide);
    const Mat2 split = mat_exp(a, t1, wide) * mat_exp(a, t2, wide);
    EXPECT_LE((joint - split).max_abs(), 1e-9 * std::max(1.0, joint.max_abs()));
    const Mat2 e = mat_exp(a, t1, wide);
    const double expected = std::exp(a.trace() * t1);
    // det cancels: its error scales with |e|^2, not with det itself
    EXPECT_NEAR(e.det(), expected, 1e-12 * expected + 1e-11 * e.max_abs() * e.max_abs());
  }
}

TEST(MatExp, OverflowIsReported) {
  try {
    mat_exp({5, 0, 0, 1}, 10.0);
    FAIL() << "expected Overflow";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Overflow);
  }
}

TEST(TransitionG, ZeroIntervalIsIdentity) {
  const SystemSpec sys = cases::case1();
  EXPECT_EQ(transition_g(sys, 0.0), Mat2::identity());
}

TEST(TransitionG, ShortcutAgreesWithAugmented) {
  const SystemSpec sys = cases::case1();
  ASSERT_TRUE(sys.a_invertible);
  const Mat2 fast = transition_g_shortcut(sys.A, sys.jordan, sys.A_inv, sys.A_c, 0.18);
  const Mat2 slow = transition_g_augmented(sys.A, sys.A_c, 0.18);
  EXPECT_LE((fast - slow).max_abs(), 1e-10);

  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    const Mat2 a = random_mat(rng, 3.0);
    if (!a_is_invertible(a)) continue;
    const Mat2 ac = random_mat(rng, 3.0);
    const double tau = rng.uniform(0.0, 1.0);
    const Mat2 f = transition_g_shortcut(a, eigen2(a), inverse(a), ac, tau);
    const Mat2 s = transition_g_augmented(a, ac, tau);
    EXPECT_LE((f - s).max_abs(), 1e-9 * std::max(1.0, s.max_abs()));
  }
}

TEST(TransitionG, SingularPlantMatchesQuadrature) {
  const Mat2 a{0, 1, 0, 0};
  const Mat2 ac{-1, 1, -1, -2};
  const RuleChoice rule;
  const SystemSpec sys = make_system(a, {1, 0, 0, 1}, {ac.a11 - a.a11, ac.a12 - a.a12, ac.a21 - a.a21, ac.a22 - a.a22},
                                     2, rule);
  ASSERT_FALSE(sys.a_invertible);
  const auto ao = cases::to_oracle(a);
  const auto integral = oracle::integral_exp(ao, 1.0);
  const auto expected = oracle::add(oracle::expm(ao), oracle::mul(integral, cases::to_oracle(ac - a)));
  EXPECT_LE(max_diff(transition_g(sys, 1.0), expected), 1e-8);
}

TEST(Lyapunov, DiagonalCase) {
  const Mat2 p = lyapunov_solve(Mat2::scalar(-1.0), Mat2::identity());
  EXPECT_NEAR(p.a11, 0.5, 1e-15);
  EXPECT_NEAR(p.a22, 0.5, 1e-15);
  EXPECT_NEAR(p.a12, 0.0, 1e-15);
}

TEST(Lyapunov, ResidualSymmetryAndOracle) {
  for (const SystemSpec& sys : {cases::case1(), cases::case2(), cases::case3(), cases::case4()}) {
    const Mat2 p = sys.P;
    const Mat2 r = p * sys.A_c + sys.A_c.transpose() * p + sys.Q;
    EXPECT_LE(r.max_abs(), 1e-9);
    EXPECT_LE(std::abs(p.a12 - p.a21), 1e-12);
    EXPECT_GT(sym_eigenvalues(p)[0], 0.0);
    const auto ref = oracle::lyapunov(cases::to_oracle(sys.A_c), oracle::eye(2));
    EXPECT_LE(max_diff(p, ref), 1e-10 * std::max(1.0, oracle::max_abs(ref)));
  }
}

TEST(Lyapunov, RejectsNonHurwitz) {
  try {
    lyapunov_solve({0, 1, 1, 0}, Mat2::identity());
    FAIL() << "expected NotHurwitz";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotHurwitz);
  }
}

TEST(Arg2, BranchTable) {
  EXPECT_DOUBLE_EQ(arg2({1, 0}), 0.0);
  EXPECT_DOUBLE_EQ(arg2({0, 1}), kPi / 2);
  EXPECT_DOUBLE_EQ(arg2({-1, 0}), kPi);
  EXPECT_DOUBLE_EQ(arg2({0, -1}), 3 * kPi / 2);
  EXPECT_THROW(arg2({0, 0}), Error);
}

TEST(Arg2, ScalingAndReflection) {
  Rng rng(19);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 v{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const double alpha = rng.uniform(1e-3, 1e3);
    EXPECT_NEAR(arg2(alpha * v), arg2(v), 1e-13);
    const double d = std::remainder(arg2(-v) - arg2(v) - kPi, 2 * kPi);
    EXPECT_NEAR(d, 0.0, 1e-13);
  }
}

TEST(MinSingularExpJ, ClosedForms) {
  EXPECT_NEAR(min_singular_expJ(eigen2({0, 1, -2, 3}), 0.0), 1.0, 1e-15);
  EXPECT_NEAR(min_singular_expJ(eigen2({0, 1, -2, 3}), 1.0), std::exp(1.0), 1e-13);
  EXPECT_NEAR(min_singular_expJ(eigen2({-1, 1, -1, -1}), 0.7), std::exp(-0.7), 1e-13);
}

TEST(MinSingularExpJ, DefectiveMinimizerAgainstSvdGrid) {
  const double lambda = 0.25;
  const RealJordan j = eigen2({lambda, 1, 0, lambda});
  ASSERT_EQ(j.kind, JordanKind::RealRepeatedDefective);
  const double tau_star = std::sqrt(1.0 / (lambda * lambda) - 4.0);
  const double closed = min_singular_expJ(j, tau_star);

  // Dense grid of the smallest singular value of e^{J tau} for J in Jordan form.
  double best = 1e300, best_tau = 0.0;
  for (int i = 0; i <= 200000; ++i) {
    const double tau = 10.0 * i / 200000.0;
    const oracle::Matrix e = oracle::expm({{lambda * tau, tau}, {0.0, lambda * tau}});
    const double s = oracle::min_singular2(e);
    if (s < best) { best = s; best_tau = tau; }
  }
  EXPECT_NEAR(best_tau, tau_star, 1e-3);
  EXPECT_NEAR(closed, best, 1e-9);
  for (double tau : {0.5, 2.0, 5.0}) {
    const oracle::Matrix e = oracle::expm({{lambda * tau, tau}, {0.0, lambda * tau}});
    EXPECT_NEAR(min_singular_expJ(j, tau), oracle::min_singular2(e), 1e-12);
  }
}
