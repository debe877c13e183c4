// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "dmft/finite_width.hpp"

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

SimConfig relu_config(int width, int depth, int trials, double rho = 0.9) {
  SimConfig c;
  c.params = ChannelParams{2.0, 0.0, rho, make_relu()};
  c.q0 = 1.0;
  c.width = width;
  c.depth = depth;
  c.trials = trials;
  c.seed = 42;
  return c;
}

}  // namespace

TEST(Simulate, DeterministicForFixedSeed) {
  const auto c = relu_config(64, 3, 5);
  const auto a = simulate(c);
  const auto b = simulate(c);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    EXPECT_EQ(a.layers[l].c_mean, b.layers[l].c_mean);
    EXPECT_EQ(a.layers[l].q_mean, b.layers[l].q_mean);
  }
  auto c2 = c;
  c2.seed = 43;
  EXPECT_NE(simulate(c2).layers[0].c_mean, a.layers[0].c_mean);
}

TEST(Simulate, InputValidation) {
  auto c = relu_config(1, 1, 1);
  EXPECT_EQ(kind_of([&] { simulate(c); }), ErrorKind::cannot_realize_correlation);
  c.c0 = 1.0;
  EXPECT_NO_THROW(simulate(c));
  c = relu_config(16, 0, 1);
  EXPECT_EQ(kind_of([&] { simulate(c); }), ErrorKind::invalid_argument);
  c = relu_config(16, 1, 1);
  c.c0 = 1.2;
  EXPECT_EQ(kind_of([&] { simulate(c); }), ErrorKind::invalid_argument);
  c = relu_config(16, 1, 1, 0.0);
  EXPECT_EQ(kind_of([&] { simulate(c); }), ErrorKind::invalid_argument);
}

TEST(Simulate, ZeroInputLayerVarianceSelectsFixedPoint) {
  auto c = relu_config(16, 1, 2);
  c.params = ChannelParams{1.5, 0.1, 1.0, make_tanh()};
  c.q0 = 0.0;
  EXPECT_NEAR(simulate(c).q0, qstar(c.params), 1e-14);
}

TEST(Simulate, GramAndExplicitSamplersAgreeInDistribution) {
  auto g = relu_config(48, 2, 400);
  auto e = g;
  e.mode = WeightMode::explicit_;
  e.seed = 1234;
  const auto rg = simulate(g);
  const auto re = simulate(e);
  for (std::size_t l = 0; l < rg.layers.size(); ++l) {
    const auto& a = rg.layers[l];
    const auto& b = re.layers[l];
    EXPECT_LT(std::fabs(a.c_mean - b.c_mean), 4.0 * std::hypot(a.c_se, b.c_se)) << l;
    EXPECT_LT(std::fabs(a.q_mean - b.q_mean), 4.0 * std::hypot(a.q_se, b.q_se)) << l;
  }
}

TEST(Simulate, FirstLayerMatchesMeanFieldMaps) {
  auto c = relu_config(1024, 1, 100);
  c.params = ChannelParams{1.6, 0.05, 0.9, make_tanh()};
  c.q0 = 0.0;
  const auto r = simulate(c);
  const GaussianChannel ch(c.params);
  const auto& s = r.layers[0];
  EXPECT_LT(std::fabs(s.q_mean - ch.q()), 4.0 * s.q_se + 2.0 * ch.q() / c.width);
  EXPECT_LT(std::fabs(s.c_mean - ch.correlation_map(c.c0)), 4.0 * s.c_se + 2.0 / c.width);
}

TEST(MeanShift, InvertedDropoutIsUnbiased) {
  auto c = relu_config(256, 1, 200, 0.7);
  const auto m = mean_shift_study(c);
  EXPECT_GT(m.se, 0.0);
  EXPECT_LT(std::fabs(m.mean_difference), 4.0 * m.se);
}

TEST(ConvergenceStudy, DeviationShrinksWithWidth) {
  auto c = relu_config(0, 1, 60);
  const auto st = convergence_study(c, {32, 256, 2048});
  ASSERT_EQ(st.rows.size(), 3u);
  for (const auto& row : st.rows) {
    EXPECT_EQ(row.theory, st.rows[0].theory);
    EXPECT_GT(row.c_se, 0.0);
  }
  EXPECT_LT(st.rows[2].c_se, st.rows[0].c_se);
  EXPECT_LT(st.rows[2].deviation, 4.0 * st.rows[2].c_se + 1e-3);
  EXPECT_EQ(kind_of([&] { convergence_study(c, {256, 32}); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([&] { convergence_study(c, {}); }), ErrorKind::invalid_argument);
}
