// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "dmft/criticality_lab.hpp"

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

LabConfig small_lab() {
  LabConfig c;
  c.t_grid = logspace(1e-5, 1e-2, 8);
  c.h_grid = logspace(1e-6, 1e-3, 8);
  return c;
}

void expect_in_window(const ExponentFit& f) {
  EXPECT_GE(f.estimate, f.accept_lo) << f.activation << " " << f.name;
  EXPECT_LE(f.estimate, f.accept_hi) << f.activation << " " << f.name;
  EXPECT_TRUE(f.accepted());
  EXPECT_GE(f.n_points, 5);
  EXPECT_EQ(f.sweep.grid.size(), f.response.size());
  EXPECT_FALSE(f.sweep.path.empty());
}

}  // namespace

TEST(FitPowerLaw, RecoversExactPowerLaw) {
  const auto xs = logspace(1e-4, 1e-1, 12);
  std::vector<double> ys;
  for (double x : xs) ys.push_back(3.5 * std::pow(x, -0.75));
  const auto f = fit_power_law(xs, ys);
  EXPECT_NEAR(f.slope, -0.75, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.5, 1e-10);
  EXPECT_NEAR(f.std_error, 0.0, 1e-10);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_EQ(f.n_points, 12);
}

TEST(FitPowerLaw, StandardErrorGrowsWithScatter) {
  const auto xs = logspace(1.0, 100.0, 9);
  std::vector<double> ys;
  for (std::size_t i = 0; i < xs.size(); ++i) ys.push_back(xs[i] * (i % 2 == 0 ? 1.05 : 0.95));
  const auto f = fit_power_law(xs, ys);
  EXPECT_NEAR(f.slope, 1.0, 0.05);
  EXPECT_GT(f.std_error, 1e-4);
  EXPECT_LT(f.r_squared, 1.0);
}

TEST(FitPowerLaw, InputValidation) {
  EXPECT_EQ(kind_of([] { fit_power_law({1, 2, 3, 4}, {1, 2, 3, 4}); }), ErrorKind::insufficient_data);
  EXPECT_EQ(kind_of([] { fit_power_law({1, 2, 3, 4, 5}, {1, 2}); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([] { fit_power_law({2, 2, 2, 2, 2}, {1, 2, 3, 4, 5}); }), ErrorKind::degenerate_input);
}

TEST(Logspace, EndpointsAndRatio) {
  const auto v = logspace(1e-6, 1e-3, 4);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_NEAR(v.front(), 1e-6, 1e-20);
  EXPECT_NEAR(v.back(), 1e-3, 1e-17);
  EXPECT_NEAR(v[2] / v[1], 10.0, 1e-12);
  EXPECT_EQ(kind_of([] { logspace(0.0, 1.0, 5); }), ErrorKind::invalid_argument);
}

TEST(ExponentTarget, KnownAndUnknownNames) {
  EXPECT_EQ(detail::exponent_target("beta", Smoothness::kinked).theory, 2.0);
  EXPECT_EQ(detail::exponent_target("1/delta", Smoothness::smooth).theory, 0.5);
  EXPECT_EQ(kind_of([] { detail::exponent_target("eta", Smoothness::smooth); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([] { measure_exponent("eta", make_tanh()); }), ErrorKind::invalid_argument);
}

class ExponentSweep : public ::testing::TestWithParam<std::tuple<std::string, std::string>> {};

TEST_P(ExponentSweep, EstimateInsideAcceptanceWindow) {
  const auto& [act_name, exp_name] = GetParam();
  const auto f = measure_exponent(exp_name, find_activation(act_name), small_lab());
  expect_in_window(f);
  EXPECT_EQ(f.name, exp_name);
  EXPECT_EQ(f.activation, act_name);
}

INSTANTIATE_TEST_SUITE_P(All, ExponentSweep,
                         ::testing::Combine(::testing::Values("tanh", "relu"),
                                            ::testing::Values("nu_t", "beta", "theta_rel", "1/delta", "nu_rho")),
                         [](const auto& info) {
                           std::string n = std::get<0>(info.param) + "_" + std::get<1>(info.param);
                           for (auto& c : n) {
                             if (c == '/') c = '_';
                           }
                           return n;
                         });

TEST(ExponentSweep, CurvatureFreeActivationIsDegenerate) {
  EXPECT_EQ(kind_of([] { measure_beta(make_identity(), small_lab()); }), ErrorKind::degenerate_input);
}

TEST(ExponentSweep, TooFewPointsIsInsufficientData) {
  auto c = small_lab();
  c.t_grid = logspace(1e-4, 1e-3, 3);
  EXPECT_EQ(kind_of([&] { measure_beta(make_relu(), c); }), ErrorKind::insufficient_data);
}

TEST(ExponentSweep, SignConventionForLengths) {
  // the correlation length diverges, so the raw log-log slope is negative
  const auto f = measure_nu_t(make_relu(), small_lab());
  EXPECT_GT(f.estimate, 0.0);
  EXPECT_GT(f.response.front(), f.response.back());
}

TEST(ExponentReport, DefaultGridsAllAccepted) {
  const auto rep = exponent_report();
  EXPECT_TRUE(rep.failures.empty());
  EXPECT_EQ(rep.fits.size(), 10u);
  for (const auto& f : rep.fits) {
    expect_in_window(f);
    EXPECT_FALSE(f.window_flagged) << f.activation << " " << f.name;
  }
  EXPECT_TRUE(rep.all_accepted());
}
