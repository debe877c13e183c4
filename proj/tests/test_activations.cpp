// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "dmft/activations.hpp"
#include "dmft/gauss_kernel.hpp"
#include "oracles.hpp"

using namespace dmft;

TEST(ReluKappa, EqualsLiteral) {
  EXPECT_NEAR(relu_kappa(), 0.30010543871903545, 1e-15);
  static_assert(relu_kappa() > 0.3 && relu_kappa() < 0.31);
}

TEST(ReluMap, MatchesArcCosineKernel) {
  for (double c = -1.0; c <= 1.0; c += 0.125) {
    EXPECT_NEAR(relu_map(c), oracle::arccos_kernel(1.0, c) / 0.5, 1e-15) << c;
  }
  EXPECT_DOUBLE_EQ(relu_map(1.0), 1.0);
  EXPECT_NEAR(relu_map(0.0), 1.0 / oracle::pi, 1e-16);
  EXPECT_NEAR(relu_map(-1.0), 0.0, 1e-16);
}

TEST(ReluMap, RejectsOutOfRange) {
  EXPECT_THROW(relu_map(1.0000001), Error);
  EXPECT_THROW(relu_map(-1.5), Error);
}

TEST(ReluGap, SeriesAndClosedFormAgreeAtSwitch) {
  const double m = 1e-3;
  const double below = relu_gap(std::nextafter(m, 0.0));
  const double at = relu_gap(m);
  EXPECT_NEAR(below / at, 1.0, 1e-14);
}

TEST(ReluGap, LeadingNonAnalyticTerm) {
  // 1 - F(1-m) - m = -kappa m^{3/2} + O(m^{5/2})
  for (double m : {1e-2, 1e-4, 1e-6, 1e-8}) {
    const double r = (relu_gap(m) - m) / (-relu_kappa() * m * std::sqrt(m));
    EXPECT_NEAR(r, 1.0, 0.1 * m) << m;
  }
}

TEST(ReluGap, AgreesWithDirectDifferenceAwayFromZero) {
  for (double m : {0.01, 0.2, 0.7, 1.0, 1.5, 2.0}) {
    EXPECT_NEAR(relu_gap(m), 1.0 - relu_map(1.0 - m), 1e-14) << m;
  }
}

TEST(ReluGap, MonotoneOnUnitInterval) {
  double prev = -1.0;
  for (int i = 0; i <= 2000; ++i) {
    const double m = 2.0 * i / 2000.0;
    const double g = relu_gap(m);
    EXPECT_GE(g, prev);
    prev = g;
  }
}

TEST(ReluSlopeDeficit, MatchesFiniteDifferenceOfMap) {
  for (double m : {0.05, 0.3, 1.0, 1.6}) {
    const double fd = oracle::derivative([](double c) { return relu_map(c); }, 1.0 - m, 1e-3);
    EXPECT_NEAR(1.0 - fd, relu_slope_deficit(m), 1e-9) << m;
  }
}

TEST(MakeRelu, Metadata) {
  const auto a = make_relu();
  EXPECT_EQ(a.name, "relu");
  EXPECT_TRUE(a.is_kinked());
  EXPECT_FALSE(a.second_deriv.has_value());
  ASSERT_EQ(a.kinks.size(), 1u);
  EXPECT_EQ(a.kinks[0], 0.0);
  EXPECT_TRUE(a.positively_homogeneous);
  EXPECT_DOUBLE_EQ(a.value(-2.0), 0.0);
  EXPECT_DOUBLE_EQ(a.value(3.0), 3.0);
}

TEST(MakeRelu, ClosedFormsMatchQuadrature) {
  const auto a = make_relu();
  const double k[] = {0.0};
  for (double q : {0.5, 2.0}) {
    EXPECT_NEAR(a.closed_form.second_moment(q),
                expect1([&](double u) { return a.value(u) * a.value(u); }, q, default_rule(), k), 1e-13);
    for (double m : {0.01, 0.5, 1.2}) {
      const auto spec = BivariateGaussianSpec::from_gap(q, m);
      EXPECT_NEAR(a.closed_form.half_square_gap(q, m), half_square_difference(a.value, spec, default_rule(), k),
                  1e-12);
      EXPECT_NEAR(a.closed_form.derivative_kernel(q, m), expect2(a.deriv, a.deriv, spec, default_rule(), k, k), 1e-12);
    }
  }
}

TEST(MakeTanh, DerivativesMatchFiniteDifferences) {
  const auto a = make_tanh();
  EXPECT_EQ(a.parity, Parity::odd);
  EXPECT_FALSE(a.is_kinked());
  for (double u : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
    EXPECT_NEAR(a.deriv(u), oracle::derivative(a.value, u, 1e-2), 1e-10);
    EXPECT_NEAR((*a.second_deriv)(u), oracle::derivative(a.deriv, u, 1e-2), 1e-10);
  }
  EXPECT_EQ(a.deriv(1e3), 0.0);
  EXPECT_EQ((*a.second_deriv)(-1e3), 0.0);
}

TEST(MakeGelu, DerivativesMatchFiniteDifferences) {
  const auto a = make_gelu();
  for (double u : {-3.0, -1.0, 0.0, 0.5, 2.5}) {
    EXPECT_NEAR(a.deriv(u), oracle::derivative(a.value, u, 1e-2), 1e-10);
    EXPECT_NEAR((*a.second_deriv)(u), oracle::derivative(a.deriv, u, 1e-2), 1e-10);
  }
}

TEST(MakeIdentity, ClosedForms) {
  const auto a = make_identity();
  EXPECT_DOUBLE_EQ(a.closed_form.second_moment(1.7), 1.7);
  EXPECT_DOUBLE_EQ(a.closed_form.half_square_gap(2.0, 0.25), 0.5);
  EXPECT_DOUBLE_EQ(a.closed_form.derivative_kernel(2.0, 0.25), 1.0);
}

TEST(Registry, LookupByName) {
  for (const auto& n : activation_names()) EXPECT_EQ(find_activation(n).name, n);
  EXPECT_EQ(find_activation("linear").name, "identity");
  try {
    find_activation("swish");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
  }
}

TEST(CustomActivation, DeclaredKinkedDropsSecondDerivative) {
  auto a = make_custom_activation(
      "leaky", [](double u) { return u > 0 ? u : 0.1 * u; }, [](double u) { return u > 0 ? 1.0 : 0.1; },
      ScalarFn([](double) { return 0.0; }), Smoothness::kinked, {0.0});
  EXPECT_TRUE(a.is_kinked());
  EXPECT_FALSE(a.second_deriv.has_value());
  EXPECT_EQ(a.name, "leaky");
}
