#include <gtest/gtest.h>

#include <cmath>

#include "cases.hpp"
#include "ietlab/circle.hpp"
#include "ietlab/random.hpp"

using namespace ietlab;

namespace {

const EventMap& map_for(int c) {
  static const std::vector<EventMap> maps = [] {
    std::vector<EventMap> m;
    for (auto& s : {cases::case1(), cases::case2(), cases::case3()}) m.emplace_back(s);
    return m;
  }();
  return maps.at(c);
}

double turns_gap(double a, double b) { return std::abs(std::remainder(a - b, kTwoPi)); }

// tau_s(theta) = 1 + 0.5 sin(2 theta): its circle average is exactly 1.
const SyntheticMap& golden_rotation() {
  static const SyntheticMap m =
      rigid_rotation(kTwoPi * (std::sqrt(5.0) - 1.0) / 2.0, [](double t) { return 1.0 + 0.5 * std::sin(2.0 * t); });
  return m;
}

// Rotation by a third of a turn plus a pi/3-periodic bump: six fixed points of
// phi^3 in [0, pi), two orbits of length three.
SyntheticMap third_rotation(double eps) {
  return {[eps](double t) { return t + kTwoPi / 3.0 + eps * std::sin(6.0 * t); },
          [](double t) { return 1.0 + 0.25 * std::cos(2.0 * t); },
          {}};
}

}  // namespace

TEST(RationalGuess, Basics) {
  auto g = rational_guess(0.25, 64, 1e-9);
  ASSERT_TRUE(g);
  EXPECT_EQ(g->p, 1);
  EXPECT_EQ(g->q, 4);
  g = rational_guess(62.0 / 63.0 + 1e-7, 64, 1e-6);
  ASSERT_TRUE(g);
  EXPECT_EQ(g->p, 62);
  EXPECT_EQ(g->q, 63);
  EXPECT_FALSE(rational_guess((std::sqrt(5.0) - 1.0) / 2.0, 64, 1e-6));
  g = rational_guess(0.0, 64, 1e-9);
  ASSERT_TRUE(g);
  EXPECT_EQ(g->p, 0);
  EXPECT_EQ(g->q, 1);
}

TEST(RationalGuess, AgainstBruteForce) {
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    const double x = rng.uniform();
    const double tol = 1e-3;
    const auto g = rational_guess(x, 64, tol);
    long best_q = 0;
    for (long q = 1; q <= 64 && !best_q; ++q)
      for (long p = 0; p <= q; ++p)
        if (std::abs(x - static_cast<double>(p) / q) < tol) { best_q = q; break; }
    if (best_q == 0) {
      EXPECT_FALSE(g) << x;
    } else {
      ASSERT_TRUE(g) << x;
      EXPECT_LT(std::abs(x - static_cast<double>(g->p) / g->q), tol);
      // the guess has the smallest denominator within tolerance
      EXPECT_EQ(g->q, best_q) << x;
    }
  }
}

TEST(RotationNumber, RigidRotationExact) {
  for (double c : {0.3, 1.7, 3.883222077450933}) {
    const RotationEstimate r = rotation_number(rigid_rotation(c), 0.1, 1000);
    EXPECT_NEAR(r.value, c, 1e-12);
    EXPECT_TRUE(r.seeds_agree);
    EXPECT_TRUE(r.monotone_lift);
    EXPECT_TRUE(r.warnings.empty());
    EXPECT_NEAR(r.accelerated, c, 1e-9);
  }
}

TEST(RotationNumber, CaseOneIsZero) {
  const std::size_t n = 2000;
  const RotationEstimate r = rotation_number(map_for(0), 0.3, n);
  EXPECT_LE(turns_gap(r.value, 0.0), kTwoPi / n);
  ASSERT_TRUE(r.guess);
  EXPECT_EQ(r.guess->p, 0);
  EXPECT_EQ(r.guess->q, 1);
  EXPECT_TRUE(r.monotone_lift);
}

TEST(RotationNumber, CaseTwoSeedAgreement) {
  const std::size_t n = 100000;
  const RotationEstimate r = rotation_number(map_for(1), 0.0, n);
  EXPECT_TRUE(r.seeds_agree);
  EXPECT_LE(r.seed_gap, kTwoPi / n);
  EXPECT_TRUE(r.monotone_lift);
  EXPECT_GT(turns_gap(r.value, 0.0), 1e-3);
  // frozen: the long-orbit estimate and its rational guess
  EXPECT_NEAR(r.value / kTwoPi, 0.9841277, 1e-5);
  ASSERT_TRUE(r.guess);
  EXPECT_EQ(r.guess->q, 63);
  EXPECT_FALSE(r.history.empty());
  EXPECT_FALSE(r.confidence.empty());
}

TEST(RotationNumber, SeedIndependenceForMonotoneLifts) {
  const std::size_t n = 5000;
  Rng rng(4);
  for (int c = 0; c < 3; ++c) {
    const RotationEstimate a = rotation_number(map_for(c), rng.uniform(0.0, kPi), n, rng.uniform(0.0, kPi));
    ASSERT_TRUE(a.monotone_lift);
    EXPECT_LE(a.seed_gap, 4 * kPi / n) << "case " << c + 1;
  }
}

TEST(RotationNumber, NonMonotoneWarning) {
  SyntheticMap fold{[](double t) { return t + 0.4 + 1.5 * std::sin(2 * t); }, [](double) { return 1.0; }, {}};
  const RotationEstimate r = rotation_number(fold, 0.2, 500);
  EXPECT_FALSE(r.monotone_lift);
  EXPECT_NE(std::find(r.warnings.begin(), r.warnings.end(), "NonMonotoneLift"), r.warnings.end());
}

TEST(TauAvg, CaseOneBasinConvergesToStableValue) {
  const EventMap& map = map_for(0);
  const auto fps = fixed_points(map, 1, 512);
  const double star = fps.points.at(0).theta;
  const TauAvgLadder l = tau_avg(map, 1.0, 1000);
  ASSERT_TRUE(l.complete);
  ASSERT_EQ(l.n, (std::vector<std::size_t>{1000, 2000, 4000}));
  EXPECT_NEAR(l.value.back(), map.tau_s(star), 1e-3);
  EXPECT_NEAR(l.value.back(), 0.18, 0.01);
}

TEST(TauAvg, AtFixedPointIsConstant) {
  const EventMap& map = map_for(0);
  const double star = fixed_points(map, 1, 512).points.at(0).theta;
  const TauAvgLadder l = tau_avg(map, star, 50);
  for (double v : l.value) EXPECT_NEAR(v, map.tau_s(star), 1e-9);
}

TEST(TauAvg, PartialLadderOnHorizon) {
  SyntheticMap m{[](double t) { return t + 0.5; },
                 [](double t) -> double {
                   if (t > 3.0) throw Error(ErrorKind::HorizonExceeded, "synthetic");
                   return 1.0;
                 },
                 {}};
  const TauAvgLadder l = tau_avg(m, 0.0, 4);
  EXPECT_FALSE(l.complete);
  EXPECT_FALSE(l.error.empty());
  EXPECT_LT(l.value.size(), 3u);
}

TEST(TauAvg, StableOrbitBasinAgreement) {
  for (int c : {0, 2}) {
    const EventMap& map = map_for(c);
    const auto orbits = periodic_orbits(map, 1, 512);
    const double tau_min = profile_scan(map, 256).tau_min;
    for (const auto& o : orbits) {
      if (o.stability.label != Stability::AsymptoticallyStable) continue;
      Rng rng(10 + c);
      const double lo = o.stability.basin_lo + 0.05, hi = o.stability.basin_hi - 0.05;
      ASSERT_LT(lo, hi);
      for (int i = 0; i < 8; ++i) {
        const double theta0 = rng.uniform(lo, hi);
        const TauAvgLadder l = tau_avg(map, theta0, 25000);
        EXPECT_NEAR(l.value.back(), o.average_tau, 1e-3 * tau_min) << "case " << c + 1 << " theta0 " << theta0;
      }
    }
  }
}

TEST(AvgSweep, CaseOneFlatAwayFromUnstableAngle) {
  const EventMap& map = map_for(0);
  const ErgodicReport r = avg_sweep(map, 64, {100, 1000});
  const IetProfile p = profile_scan(map, 512);
  const double unstable = fixed_points(map, 1, 512).points.at(1).theta;
  EXPECT_FALSE(r.uniform);
  for (const auto& pt : r.points) {
    ASSERT_EQ(pt.tau_avg.size(), 2u);
    for (double v : pt.tau_avg) {
      EXPECT_GE(v, p.tau_min - 1e-9);
      EXPECT_LE(v, p.tau_max + 1e-9);
    }
    const double gap = std::abs(std::remainder(pt.theta0 - unstable, kPi));
    if (gap > 0.4) {
      EXPECT_FALSE(pt.divergent) << pt.theta0;
      EXPECT_NEAR(pt.tau_avg.back(), 0.18, 0.01) << pt.theta0;
    }
  }
  EXPECT_GT(r.divergent_count, 0u);
}

TEST(AvgSweep, CaseTwoUniformAtLargeN) {
  const EventMap& map = map_for(1);
  const ErgodicReport r = avg_sweep(map, 64, {1000, 100000});
  EXPECT_TRUE(r.uniform);
  EXPECT_LE(r.dispersion, 1e-3 * r.mean);
  EXPECT_EQ(r.divergent_count, 0u);
  // finite-N spread decays like 1/N
  double lo = 1e9, hi = -1e9;
  for (const auto& pt : r.points) {
    lo = std::min(lo, pt.tau_avg.front());
    hi = std::max(hi, pt.tau_avg.front());
  }
  EXPECT_GT((hi - lo) / r.dispersion, 30.0);
  const IetProfile p = profile_scan(map, 512);
  for (const auto& pt : r.points)
    for (double v : pt.tau_avg) {
      EXPECT_GE(v, p.tau_min - 1e-9);
      EXPECT_LE(v, p.tau_max + 1e-9);
    }
}

TEST(AvgSweep, IrrationalRotationMatchesCircleAverage) {
  const ErgodicReport r = avg_sweep(golden_rotation(), 16, {1000, 10000, 100000});
  EXPECT_TRUE(r.uniform);
  for (const auto& pt : r.points) EXPECT_NEAR(pt.tau_avg.back(), 1.0, 1e-4);
  EXPECT_NEAR(r.mean, 1.0, 1e-4);
}

TEST(AvgSweep, RejectsBadInputs) {
  EXPECT_THROW(avg_sweep(golden_rotation(), 8, {10}), Error);
  EXPECT_THROW(avg_sweep(golden_rotation(), 16, {}), Error);
}

TEST(PeriodicOrbits, CaseOneFixedPoints) {
  const auto orbits = periodic_orbits(map_for(0), 1, 512);
  ASSERT_EQ(orbits.size(), 2u);
  EXPECT_NEAR(orbits[0].thetas.at(0), 1.15, 0.02);
  EXPECT_NEAR(orbits[1].thetas.at(0), 1.85, 0.02);
  EXPECT_EQ(orbits[0].stability.label, Stability::AsymptoticallyStable);
  EXPECT_EQ(orbits[1].stability.label, Stability::Unstable);
  EXPECT_NEAR(orbits[0].average_tau, map_for(0).tau_s(orbits[0].thetas[0]), 1e-12);
}

TEST(PeriodicOrbits, ThirdTurnRotation) {
  // pure rotation by 2pi/3: every point is 3-periodic
  EXPECT_TRUE(fixed_points(rigid_rotation(kTwoPi / 3.0), 3, 128).all);
  EXPECT_TRUE(periodic_orbits(rigid_rotation(kTwoPi / 3.0), 3, 128).empty());

  const SyntheticMap m = third_rotation(0.05);
  const auto report = fixed_points(m, 3, 512, false);
  ASSERT_EQ(report.points.size(), 6u);
  const auto orbits = periodic_orbits(m, 3, 512);
  ASSERT_EQ(orbits.size(), 2u);
  int stable = 0;
  for (const auto& o : orbits) {
    ASSERT_EQ(o.thetas.size(), 3u);
    double mean = 0.0;
    for (double t : o.thetas) mean += 1.0 + 0.25 * std::cos(2.0 * t);
    EXPECT_NEAR(o.average_tau, mean / 3.0, 1e-12);
    if (o.stability.label == Stability::AsymptoticallyStable) ++stable;
  }
  EXPECT_EQ(stable, 1);
}

TEST(PeriodicOrbits, CaseThreeStableOrbitMatchesSimulationLimit) {
  const EventMap& map = map_for(2);
  const auto orbits = periodic_orbits(map, 1, 512);
  bool found = false;
  for (const auto& o : orbits) {
    if (o.stability.label != Stability::AsymptoticallyStable) continue;
    found = true;
    // the orbit average equals the limit of the IET sequence from a basin seed
    const TauAvgLadder l = tau_avg(map, o.thetas[0] + 0.1, 500);
    EXPECT_NEAR(l.value.back(), o.average_tau, 1e-3);
    EXPECT_NEAR(o.average_tau, 0.179801, 1e-5);
  }
  EXPECT_TRUE(found);
}

TEST(PeriodicOrbits, CaseTwoPeriodSixtyThree) {
  const auto orbits = periodic_orbits(map_for(1), 63, 1024);
  ASSERT_EQ(orbits.size(), 2u);
  for (const auto& o : orbits) EXPECT_EQ(o.thetas.size(), 63u);
  const double gap = std::abs(orbits[0].average_tau - orbits[1].average_tau);
  EXPECT_LT(gap, 1e-3);
}
