#include <gtest/gtest.h>

#include <cmath>

#include "cases.hpp"
#include "ietlab/angle_map.hpp"
#include "ietlab/random.hpp"
#include "ietlab/simulation.hpp"

using namespace ietlab;

namespace {

const EventMap& map_for(int c) {
  static const std::vector<EventMap> maps = [] {
    std::vector<EventMap> m;
    for (auto& s : {cases::case1(), cases::case2(), cases::case3(), cases::case4(),
                    cases::case3(cases::decay(0.2)), cases::case1(cases::lyapunov())}) {
      m.emplace_back(s);
    }
    return m;
  }();
  return maps.at(c);
}

Vec2 random_seed(Rng& rng) {
  while (true) {
    const Vec2 x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    if (norm(x) > 0.1) return x;
  }
}

}  // namespace

TEST(Simulate, CaseOneConvergesFromRandomSeeds) {
  Rng rng(42);
  for (int s = 0; s < 3; ++s) {
    const EventTrace tr = simulate(map_for(0), random_seed(rng), 200);
    ASSERT_EQ(tr.events(), 200u);
    EXPECT_EQ(tr.stop, StopReason::Completed);
    EXPECT_NEAR(tr.tau.back(), 0.18, 0.01);
    EXPECT_NEAR(tr.tau.back(), tr.tau[tr.tau.size() - 2], 1e-6);
    EXPECT_NEAR(std::remainder(tr.theta.back() - 1.15, kPi), 0.0, 0.02);
  }
}

TEST(Simulate, CaseTwoOscillates) {
  Rng rng(7);
  for (int s = 0; s < 2; ++s) {
    const EventTrace tr = simulate(map_for(1), random_seed(rng), 1000);
    double lo = 1e9, hi = 0.0;
    for (std::size_t k = 500; k < tr.tau.size(); ++k) {
      lo = std::min(lo, tr.tau[k]);
      hi = std::max(hi, tr.tau[k]);
    }
    EXPECT_GT(hi - lo, 1e-2 * lo);
  }
}

TEST(Simulate, CaseThreeConvergesFromTwoSeeds) {
  const EventTrace a = simulate(map_for(2), {1.0, 0.3}, 300);
  const EventTrace b = simulate(map_for(2), {-0.2, 1.0}, 300);
  EXPECT_NEAR(a.tau.back(), b.tau.back(), 1e-6);
  EXPECT_NEAR(a.tau.back(), a.tau[a.tau.size() - 2], 1e-8);
}

TEST(Simulate, FixedPointSeedGivesConstantTau) {
  const EventMap& map = map_for(0);
  const double star = fixed_points(map, 1, 512).points.at(0).theta;
  const EventTrace tr = simulate(map, 3.0 * unit_vector(star), 100);
  for (double t : tr.tau) EXPECT_NEAR(t, map.tau_s(star), 1e-8);
}

TEST(Simulate, EventTimesAndAngles) {
  Rng rng(3);
  for (int c = 0; c < 6; ++c) {
    const EventMap& map = map_for(c);
    const IetProfile p = profile_scan(map, 256);
    const EventTrace tr = simulate(map, random_seed(rng), 200);
    for (std::size_t k = 0; k < tr.events(); ++k) {
      EXPECT_GT(tr.t[k + 1], tr.t[k]);
      EXPECT_NEAR(tr.t[k + 1] - tr.t[k], map.tau_s(tr.theta[k]), 1e-9);
      EXPECT_GE(tr.tau[k], p.tau_min - 1e-9);
      EXPECT_NEAR(std::remainder(tr.theta[k + 1] - phi(map, tr.theta[k]), kTwoPi), 0.0, 1e-9);
    }
  }
}

TEST(Simulate, EventResidualsPerRule) {
  Rng rng(5);
  for (int c = 0; c < 6; ++c) {
    const EventMap& map = map_for(c);
    const double tol = std::holds_alternative<LyapunovDerivative>(map.system().rule) ? 1e-6 : 1e-8;
    const EventTrace tr = simulate(map, random_seed(rng), 200);
    for (std::size_t k = 0; k < tr.events(); ++k) {
      EXPECT_LE(event_residual(map.system(), tr, k), tol) << "system " << c << " event " << k;
    }
  }
}

TEST(Simulate, CircleProperty) {
  for (int c : {0, 1, 2}) {
    const EventMap& map = map_for(c);
    const double s = std::get<RelativeThreshold>(map.system().rule).sigma;
    const double d = 1.0 - s * s;
    const EventTrace tr = simulate(map, {0.4, -0.9}, 100);
    for (std::size_t k = 0; k < tr.events(); ++k) {
      const Vec2 centre = (1.0 / d) * tr.x[k];
      const double radius = s * norm(tr.x[k]) / d;
      EXPECT_NEAR(norm(tr.x[k + 1] - centre), radius, 1e-8 * radius);
    }
  }
}

TEST(Simulate, ScaleEquivariance) {
  for (int c = 0; c < 6; ++c) {
    const EventMap& map = map_for(c);
    const Vec2 x0{0.7, 0.2};
    const EventTrace base = simulate(map, x0, 100);
    for (double alpha : {-1.0, 1e-3, 1e3}) {
      const EventTrace tr = simulate(map, alpha * x0, 100);
      ASSERT_EQ(tr.events(), base.events());
      for (std::size_t k = 0; k < tr.events(); ++k) {
        if (alpha == -1.0) {
          EXPECT_EQ(tr.tau[k], base.tau[k]);
          EXPECT_NEAR(std::remainder(tr.theta[k] - base.theta[k] - kPi, kTwoPi), 0.0, 1e-12);
        } else {
          // ulp-level differences in theta0 grow along steep stretches of tau_s
          EXPECT_NEAR(tr.tau[k], base.tau[k], 1e-6);
          EXPECT_NEAR(std::remainder(tr.theta[k] - base.theta[k], kTwoPi), 0.0, 1e-6);
        }
      }
    }
  }
}

TEST(Simulate, DenseSamples) {
  SimulationOptions opt;
  opt.dense_per_interval = 10;
  const EventTrace tr = simulate(map_for(0), {1.0, 0.0}, 5, opt);
  ASSERT_EQ(tr.dense.size(), 51u);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_DOUBLE_EQ(tr.dense[10 * k].t, tr.t[k]);
    EXPECT_EQ(tr.dense[10 * k].x, tr.x[k]);
  }
  EXPECT_DOUBLE_EQ(tr.dense.back().t, tr.t.back());
  for (std::size_t i = 0; i + 1 < tr.dense.size(); ++i) EXPECT_LT(tr.dense[i].t, tr.dense[i + 1].t);
}

TEST(Simulate, StopConditions) {
  SimulationOptions opt;
  opt.t_max = 1.0;
  const EventTrace tr = simulate(map_for(0), {1.0, 1.0}, 1000, opt);
  EXPECT_EQ(tr.stop, StopReason::TimeHorizon);
  EXPECT_GE(tr.t.back(), 1.0);
  EXPECT_LT(tr.t[tr.t.size() - 2], 1.0);

  const EventTrace longrun = simulate(map_for(0), {1.0, 1.0}, 100000);
  EXPECT_EQ(longrun.stop, StopReason::Underflow);
  EXPECT_LT(longrun.events(), 100000u);

  EXPECT_THROW(simulate(map_for(0), {0.0, 0.0}, 10), Error);
}

TEST(PhasePortrait, CaseOneApproachesStableRay) {
  const std::vector<Vec2> seeds{{1.0, 0.0}, {0.0, 1.0}, {-0.5, 0.8}};
  const auto traces = phase_portrait(map_for(0), seeds, 200);
  ASSERT_EQ(traces.size(), 3u);
  for (const auto& tr : traces) {
    EXPECT_EQ(tr.dense.size(), 200u * 50u + 1u);
    EXPECT_NEAR(std::remainder(arg2(tr.dense.back().x) - 1.15, kPi), 0.0, 0.02);
  }
}

TEST(PhasePortrait, SeedOnStableRayStaysRadial) {
  const EventMap& map = map_for(0);
  const double star = fixed_points(map, 1, 512).points.at(0).theta;
  const auto traces = phase_portrait(map, {unit_vector(star)}, 20, 20);
  for (std::size_t k = 0; k < traces[0].t.size(); ++k) {
    EXPECT_NEAR(std::remainder(traces[0].theta[k] - star, kPi), 0.0, 1e-8);
  }
}

TEST(PhasePortrait, CaseTwoSpirals) {
  const EventTrace tr = simulate(map_for(1), {1.0, 0.0}, 1000);
  // the angle keeps winding: on the lift, total rotation exceeds several turns
  double lifted = 0.0;
  for (std::size_t k = 0; k + 1 < tr.theta.size(); ++k) lifted += wrap_pi(tr.theta[k + 1] - tr.theta[k]);
  EXPECT_GT(std::abs(lifted), 4 * kTwoPi);
}
