// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "dmft/activation_spec.hpp"
#include "dmft/errors.hpp"

namespace dmft {

/// Kink coefficient of the ReLU correlation map: 1 - F(1-m) - m = -kappa m^{3/2} + O(m^{5/2}).
inline constexpr double relu_kappa() {
  return 2.0 * std::numbers::sqrt2 / (3.0 * std::numbers::pi);
}

/// Normalized arc-cosine kernel E[relu(u1) relu(u2)] / E[relu(u)^2] at correlation c.
inline double relu_map(double c) {
  require(std::fabs(c) <= 1.0, ErrorKind::invalid_argument,
          "relu_map: correlation must lie in [-1, 1], got " + std::to_string(c));
  return (std::sqrt((1.0 - c) * (1.0 + c)) + (std::numbers::pi - std::acos(c)) * c) / std::numbers::pi;
}

/// Angle between the pair at gap m = 1 - c, computed without cancellation.
inline double gap_angle(double m) { return 2.0 * std::asin(std::sqrt(0.5 * m)); }

/// 1 - relu_map(1 - m), accurate to full relative precision for small m.
inline double relu_gap(double m) {
  require(m >= 0.0 && m <= 2.0, ErrorKind::invalid_argument,
          "relu_gap: gap must lie in [0, 2], got " + std::to_string(m));
  if (m < 1e-3) {
    // 1 - F(1-m) = m - (sqrt2/pi) sum_k b_k m^{k+1/2}
    static constexpr double b[] = {2.0 / 3.0, 1.0 / 30.0, 3.0 / 560.0, 5.0 / 4032.0, 35.0 / 101376.0,
                                   63.0 / 585728.0};
    double series = 0.0;
    for (int k = 5; k >= 0; --k) series = series * m + b[k];
    return m - std::numbers::sqrt2 / std::numbers::pi * m * std::sqrt(m) * series;
  }
  const double theta = gap_angle(m);
  return (std::numbers::pi * m - std::sqrt(m * (2.0 - m)) + theta * (1.0 - m)) / std::numbers::pi;
}

/// 1 - F'(1 - m) for the normalized arc-cosine map.
inline double relu_slope_deficit(double m) {
  require(m >= 0.0 && m <= 2.0, ErrorKind::invalid_argument, "relu_slope_deficit: gap must lie in [0, 2]");
  return gap_angle(m) / std::numbers::pi;
}

inline double standard_normal_pdf(double u) {
  return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
}

inline double standard_normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

inline ActivationSpec make_relu() {
  ActivationSpec a;
  a.name = "relu";
  a.value = [](double u) { return u > 0.0 ? u : 0.0; };
  a.deriv = [](double u) { return u > 0.0 ? 1.0 : 0.0; };
  a.smoothness = Smoothness::kinked;
  a.parity = Parity::none;
  a.kinks = {0.0};
  a.positively_homogeneous = true;
  a.closed_form.second_moment = [](double q) { return 0.5 * q; };
  a.closed_form.half_square_gap = [](double q, double m) { return 0.5 * q * relu_gap(m); };
  a.closed_form.derivative_kernel = [](double, double m) { return 0.5 * (1.0 - relu_slope_deficit(m)); };
  return a;
}

inline ActivationSpec make_identity() {
  ActivationSpec a;
  a.name = "identity";
  a.value = [](double u) { return u; };
  a.deriv = [](double) { return 1.0; };
  a.second_deriv = [](double) { return 0.0; };
  a.parity = Parity::odd;
  a.positively_homogeneous = true;
  a.closed_form.second_moment = [](double q) { return q; };
  a.closed_form.half_square_gap = [](double q, double m) { return q * m; };
  a.closed_form.derivative_kernel = [](double, double) { return 1.0; };
  return a;
}

/// tanh(s u); s = 1 is the registered "tanh".
inline ActivationSpec make_scaled_tanh(double s) {
  require(s > 0.0 && std::isfinite(s), ErrorKind::invalid_argument, "tanh scale must be positive");
  ActivationSpec a;
  a.name = s == 1.0 ? "tanh" : "tanh_s" + std::to_string(s);
  a.value = [s](double u) { return std::tanh(s * u); };
  a.deriv = [s](double u) {
    const double c = std::cosh(s * u);
    return std::isfinite(c) ? s / (c * c) : 0.0;
  };
  a.second_deriv = [s](double u) {
    const double c = std::cosh(s * u);
    return std::isfinite(c) ? -2.0 * s * s * std::tanh(s * u) / (c * c) : 0.0;
  };
  a.parity = Parity::odd;
  return a;
}

inline ActivationSpec make_tanh() { return make_scaled_tanh(1.0); }

/// u * Phi(u) with the exact normal CDF.
inline ActivationSpec make_gelu() {
  ActivationSpec a;
  a.name = "gelu";
  a.value = [](double u) { return u * standard_normal_cdf(u); };
  a.deriv = [](double u) { return standard_normal_cdf(u) + u * standard_normal_pdf(u); };
  a.second_deriv = [](double u) { return (2.0 - u * u) * standard_normal_pdf(u); };
  return a;
}

inline std::vector<std::string> activation_names() { return {"relu", "tanh", "gelu", "identity"}; }

inline ActivationSpec find_activation(const std::string& name) {
  if (name == "relu") return make_relu();
  if (name == "tanh") return make_tanh();
  if (name == "gelu") return make_gelu();
  if (name == "identity" || name == "linear") return make_identity();
  fail(ErrorKind::invalid_argument, "unknown activation '" + name + "'");
}

/// User-declared activation. The declared class is authoritative; kinked entries drop phi''.
inline ActivationSpec make_custom_activation(std::string name, ScalarFn value, ScalarFn deriv,
                                             std::optional<ScalarFn> second_deriv, Smoothness cls,
                                             std::vector<double> kinks = {}) {
  require(static_cast<bool>(value) && static_cast<bool>(deriv), ErrorKind::invalid_argument,
          "custom activation needs phi and phi'");
  require(cls == Smoothness::kinked || second_deriv.has_value(), ErrorKind::invalid_argument,
          "smooth activation needs phi''");
  require(cls == Smoothness::smooth || !kinks.empty(), ErrorKind::invalid_argument,
          "kinked activation must declare its kink locations");
  ActivationSpec a;
  a.name = std::move(name);
  a.value = std::move(value);
  a.deriv = std::move(deriv);
  if (cls == Smoothness::smooth) a.second_deriv = std::move(second_deriv);
  a.smoothness = cls;
  a.kinks = std::move(kinks);
  return a;
}

}  // namespace dmft
