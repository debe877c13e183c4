// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dmft/scheduler.hpp"

using namespace dmft;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::io;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

const double kKappa = relu_kappa();

}  // namespace

TEST(DecayCoefficient, ClassForms) {
  EXPECT_NEAR(decay_coefficient(Smoothness::smooth, 0.32), 0.8, 1e-15);
  EXPECT_NEAR(decay_coefficient(Smoothness::kinked, kKappa), 1.5 * std::pow(kKappa, 2.0 / 3.0), 1e-15);
  EXPECT_EQ(kind_of([] { decay_coefficient(Smoothness::smooth, 0.0); }), ErrorKind::invalid_argument);
}

TEST(XiEff, ConstantProfileMatchesSingleLayerRate) {
  const double c = decay_coefficient(Smoothness::kinked, kKappa);
  const std::vector<double> h(50, 0.1);
  EXPECT_NEAR(xi_eff(h, Smoothness::kinked, c), 1.0 / (c * std::cbrt(0.1)), 1e-13);
  EXPECT_NEAR(xi_eff(h, Smoothness::kinked, c), 3.20, 0.005);
}

TEST(XiEff, ZeroProfileIsInfinite) {
  EXPECT_TRUE(std::isinf(xi_eff(std::vector<double>(10, 0.0), Smoothness::smooth, 1.0)));
  EXPECT_EQ(kind_of([] { xi_eff(std::vector<double>{}, Smoothness::smooth, 1.0); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([] { xi_eff(std::vector<double>{-0.1}, Smoothness::smooth, 1.0); }), ErrorKind::invalid_argument);
}

TEST(XiEff, BitwiseInvariantUnderPermutation) {
  std::mt19937_64 rng(11);
  auto h = random_feasible_profile(rng, 0.1, 0.4, 40);
  const double ref = xi_eff(h, Smoothness::kinked, 1.0);
  for (int k = 0; k < 50; ++k) {
    std::shuffle(h.begin(), h.end(), rng);
    EXPECT_EQ(xi_eff(h, Smoothness::kinked, 1.0), ref);
  }
}

TEST(XiEff, StepBeatsUniformByClassRatio) {
  for (auto cls : {Smoothness::smooth, Smoothness::kinked}) {
    const auto step = optimal_step(0.1, 0.3, 30);
    const auto flat = schedule_library(ScheduleKind::constant, 0.1, 0.3, 30);
    const double r = xi_eff(step, cls, 1.0) / xi_eff(flat, cls, 1.0);
    EXPECT_NEAR(r, step_vs_uniform_ratio(0.1, 0.3, cls), 1e-12);
  }
  EXPECT_NEAR(step_vs_uniform_ratio(0.1, 0.3, Smoothness::kinked), std::pow(3.0, 2.0 / 3.0), 1e-15);
  EXPECT_EQ(kind_of([] { step_vs_uniform_ratio(0.5, 0.3, Smoothness::kinked); }), ErrorKind::infeasible_budget);
}

TEST(XiEff, ConcaveRateFavorsConcentration) {
  // Jensen: among profiles at fixed budget, the uniform one maximizes the total rate
  std::mt19937_64 rng(5);
  const std::vector<double> flat(20, 0.1);
  for (auto cls : {Smoothness::smooth, Smoothness::kinked}) {
    const double xi_flat = xi_eff(flat, cls, 1.0);
    for (int i = 0; i < 500; ++i) {
      EXPECT_GE(xi_eff(random_feasible_profile(rng, 0.1, 0.5, 20), cls, 1.0), xi_flat * (1.0 - 1e-14));
    }
  }
}

TEST(ScheduleLibrary, BudgetAndBoxHold) {
  for (auto k : {ScheduleKind::constant, ScheduleKind::linear_inc, ScheduleKind::linear_dec, ScheduleKind::step_early,
                 ScheduleKind::step_late, ScheduleKind::big_step}) {
    const auto p = schedule_library(k, 0.1, 0.3, 30);
    EXPECT_NO_THROW(p.validate()) << to_string(k);
    EXPECT_EQ(p.label, to_string(k));
    EXPECT_EQ(parse_schedule_kind(to_string(k)), k);
  }
  const auto none = schedule_library(ScheduleKind::none, 0.1, 0.3, 30);
  EXPECT_EQ(none.h_bar, 0.0);
  EXPECT_EQ(kind_of([] { parse_schedule_kind("cosine"); }), ErrorKind::invalid_argument);
}

TEST(ScheduleLibrary, ReferenceValues) {
  const double c = decay_coefficient(Smoothness::kinked, kKappa);
  auto xi = [&](ScheduleKind k, double hb, double hm) {
    return xi_eff(schedule_library(k, hb, hm, 6), Smoothness::kinked, c);
  };
  EXPECT_NEAR(xi(ScheduleKind::constant, 0.1, 0.2), 3.20, 0.005);
  EXPECT_NEAR(xi(ScheduleKind::step_early, 0.1, 0.2), 5.09, 0.005);
  EXPECT_NEAR(xi(ScheduleKind::step_late, 0.1, 0.2), 5.09, 0.005);
  EXPECT_NEAR(xi(ScheduleKind::big_step, 0.1, 0.3), 6.67, 0.005);
  EXPECT_NEAR(xi(ScheduleKind::linear_inc, 0.1, 0.2), 3.73, 0.005);
  EXPECT_NEAR(xi(ScheduleKind::linear_dec, 0.1, 0.2), 3.73, 0.005);
  EXPECT_NEAR(xi(ScheduleKind::constant, 0.2, 0.2), 2.54, 0.005);
  EXPECT_NEAR(xi(ScheduleKind::constant, 0.3, 0.3), 2.22, 0.005);
}

TEST(ScheduleLibrary, SnappedLayerNeverExceedsCap) {
  // 6 * 0.1 - 0.3 rounds to just above 0.3
  for (const auto& p : {optimal_step(0.1, 0.3, 6), schedule_library(ScheduleKind::big_step, 0.1, 0.3, 6)}) {
    for (double v : p.h_per_layer) EXPECT_LE(v, 0.3);
    EXPECT_EQ(p.h_per_layer[1], 0.3);
  }
}

TEST(ScheduleLibrary, StepFractionAndPartialLayer) {
  const auto p = optimal_step(0.1, 0.3, 10);
  // 1.0 of budget over a cap of 0.3: three full layers and one partial
  EXPECT_NEAR(p.h_per_layer[0], 0.3, 0.0);
  EXPECT_NEAR(p.h_per_layer[3], 0.1, 1e-15);
  EXPECT_EQ(p.h_per_layer[4], 0.0);
  EXPECT_NEAR(mean(p.h_per_layer), 0.1, 1e-15);
}

TEST(ScheduleLibrary, InfeasibleBudget) {
  EXPECT_EQ(kind_of([] { schedule_library(ScheduleKind::constant, 0.4, 0.3, 10); }), ErrorKind::infeasible_budget);
  EXPECT_EQ(kind_of([] { schedule_library(ScheduleKind::linear_inc, 0.2, 0.3, 10); }), ErrorKind::infeasible_budget);
  EXPECT_EQ(kind_of([] { optimal_step(0.4, 0.3, 10); }), ErrorKind::infeasible_budget);
}

TEST(RandomFeasibleProfile, StaysInBoxWithExactMean) {
  std::mt19937_64 rng(3);
  for (double hb : {0.01, 0.1, 0.29}) {
    for (int i = 0; i < 200; ++i) {
      const auto h = random_feasible_profile(rng, hb, 0.3, 25);
      for (double v : h) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 0.3);
      }
      EXPECT_NEAR(mean(h), hb, 1e-12);
    }
  }
}

TEST(ReachWeights, DecreaseToZeroAtOutput) {
  const auto w = reach_weights(20, 5.0);
  EXPECT_EQ(w.weights.back(), 0.0);
  for (std::size_t i = 1; i < w.weights.size(); ++i) EXPECT_LT(w.weights[i], w.weights[i - 1]);
  EXPECT_NEAR(w.weights[0], 5.0 * (1.0 - std::exp(-19.0 / 5.0)), 1e-14);
}

TEST(FrontloadLp, OptimalAgainstAllVertices) {
  // LP optimum sits on a vertex: a saturated fill in some layer order
  std::vector<int> order{0, 1, 2, 3, 4, 5, 6};
  const int L = 7;
  const auto w = reach_weights(L, 2.5);
  const auto lp = frontload_lp(0.2, 0.5, w);
  lp.validate();
  const double best = reach_value(lp.h_per_layer, w);
  do {
    const auto v = detail::saturated_fill(0.2, 0.5, L, order);
    EXPECT_LE(reach_value(v, w), best * (1.0 + 1e-14));
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST(FrontloadLp, BeatsRandomFeasibleProfiles) {
  std::mt19937_64 rng(17);
  for (int L : {3, 8, 40}) {
    const auto w = reach_weights(L, L / 3.0);
    const double best = reach_value(frontload_lp(0.1, 0.3, w).h_per_layer, w);
    for (int i = 0; i < 1000; ++i) {
      EXPECT_LE(reach_value(random_feasible_profile(rng, 0.1, 0.3, L), w), best * (1.0 + 1e-12));
    }
  }
}

TEST(FrontloadLp, EqualsEarlyStepForDecreasingWeights) {
  const auto w = reach_weights(30, 10.0);
  EXPECT_EQ(frontload_lp(0.1, 0.3, w).h_per_layer, optimal_step(0.1, 0.3, 30).h_per_layer);
}

TEST(ReachRatio, ShallowLimitIsTwoMinusF) {
  for (double f : {0.1, 0.33, 0.8}) {
    EXPECT_NEAR(reach_ratio(1e-6, f), 2.0 - f, 1e-5);
    EXPECT_NEAR(reach_ratio(1e-3, f), 2.0 - f, 1e-3);
  }
  EXPECT_EQ(reach_ratio(3.0, 1.0), 1.0);
}

TEST(ReachRatio, ContinuousAcrossSeriesSwitch) {
  for (double f : {0.2, 0.6}) EXPECT_NEAR(reach_ratio(std::nextafter(1e-4, 0.0), f), reach_ratio(1e-4, f), 1e-9);
}

TEST(ReachRatio, DeepLimitApproachesOne) {
  EXPECT_NEAR(reach_ratio(1e4, 0.3), 1.0, 1e-3);
  EXPECT_GT(reach_ratio(1e4, 0.3), 1.0);
}

TEST(ReachRatio, MatchesDiscreteSumAtLargeDepth) {
  for (double tau : {0.5, 2.0, 8.0}) {
    EXPECT_NEAR(reach_ratio_discrete(tau, 0.25, 4000), reach_ratio(tau, 0.25), 2e-3) << tau;
  }
}

TEST(HToKeepProb, ReluCriticalIsOneMinusH) {
  const ChannelParams p{2.0, 0.0, 1.0, make_relu()};
  for (double h : {0.0, 1e-6, 0.05, 0.3}) EXPECT_NEAR(h_to_keep_prob(h, p), 1.0 - h, 1e-12) << h;
}

TEST(HToKeepProb, RoundTripsThroughField) {
  const auto act = make_tanh();
  const ChannelParams p{critical_sigma_w(act, 0.05), 0.05, 1.0, act};
  for (double h : {1e-4, 0.02}) {
    ChannelParams q = p;
    q.rho = h_to_keep_prob(h, p);
    EXPECT_NEAR(GaussianChannel(q).field(), h, 1e-12);
  }
}

TEST(HToKeepProb, UnreachableField) {
  const ChannelParams p{2.0, 0.0, 1.0, make_relu()};
  EXPECT_EQ(kind_of([&] { h_to_keep_prob(1.5, p); }), ErrorKind::unreachable_field);
  EXPECT_EQ(kind_of([&] { h_to_keep_prob(-0.1, p); }), ErrorKind::invalid_argument);
}
