// SPDX-License-Identifier: Apache-2.0
//
// Reference computations for the test suites. Nothing here calls into the library's
// quadrature or solvers; integrals use boost's Gauss-Kronrod and double-exponential
// rules in plain (z1, z2) coordinates, roots use bisection, derivatives use Richardson extrapolation.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace oracle {

inline constexpr double pi = std::numbers::pi;

inline double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * pi); }

/// E[f(sqrt(q) z)], z ~ N(0,1), with optional cut points in preactivation units.
/// Adaptive Gauss-Kronrod on unit panels of [-40, 40], split at the cuts.
inline double gauss1(const std::function<double(double)>& f, double q, std::vector<double> cuts = {}) {
  const double s = std::sqrt(q);
  std::vector<double> pts;
  for (int k = -40; k <= 40; ++k) pts.push_back(k);
  for (double c : cuts) pts.push_back(c / s);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [&](double z) { return f(s * z) * phi(z); }, pts[i], pts[i + 1], 10, 1e-15);
  }
  return total;
}

/// E[F(u1, u2)] with Var u = q and correlation c, in Cholesky coordinates
/// u1 = sqrt(q) z1, u2 = sqrt(q) (c z1 + sqrt(1-c^2) z2). Kinks at u = 0 in either argument.
inline double gauss2(const std::function<double(double, double)>& F, double q, double c, bool kink_at_zero) {
  const double s = std::sqrt(q);
  const double r = std::sqrt((1.0 - c) * (1.0 + c));
  boost::math::quadrature::tanh_sinh<double> ts(12);
  auto inner = [&](double z1) {
    auto g = [&](double z2) { return F(s * z1, s * (c * z1 + r * z2)) * phi(z2); };
    double total = 0.0;
    if (kink_at_zero) {
      const double cut = std::clamp(-c * z1 / r, -12.0, 12.0);
      if (cut > -12.0) total += ts.integrate(g, -12.0, cut, 1e-13);
      if (cut < 12.0) total += ts.integrate(g, cut, 12.0, 1e-13);
    } else {
      total = ts.integrate(g, -12.0, 12.0, 1e-13);
    }
    return total * phi(z1);
  };
  if (kink_at_zero) return ts.integrate(inner, -12.0, 0.0, 1e-12) + ts.integrate(inner, 0.0, 12.0, 1e-12);
  return ts.integrate(inner, -12.0, 12.0, 1e-12);
}

/// Arc-cosine kernel E[relu(u1) relu(u2)] in the angle parametrization.
inline double arccos_kernel(double q, double c) {
  const double th = std::acos(c);
  return q / (2.0 * pi) * (std::sin(th) + (pi - th) * std::cos(th));
}

/// Bisection on a sign change; returns the midpoint of the final bracket.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Central difference with two Richardson steps.
inline double derivative(const std::function<double(double)>& f, double x, double h) {
  auto d = [&](double s) { return (f(x + s) - f(x - s)) / (2.0 * s); };
  const double d1 = d(h);
  const double d2 = d(h / 2.0);
  const double d4 = d(h / 4.0);
  const double r1 = (4.0 * d2 - d1) / 3.0;
  const double r2 = (4.0 * d4 - d2) / 3.0;
  return (16.0 * r2 - r1) / 15.0;
}

/// Probabilists' Hermite polynomial He_n by the monic recurrence.
inline double He(int n, double z) {
  double a = 1.0;
  double b = z;
  if (n == 0) return a;
  for (int k = 1; k < n; ++k) {
    const double c = z * b - k * a;
    a = b;
    b = c;
  }
  return b;
}

/// a_n = E[f(sqrt(q) z) He_n(z)] / sqrt(n!).
inline double hermite_coeff(const std::function<double(double)>& f, double q, int n, std::vector<double> cuts = {}) {
  const double nf = std::sqrt(std::tgamma(n + 1.0));
  const double s = std::sqrt(q);
  return gauss1([&](double u) { return f(u) * He(n, u / s); }, q, std::move(cuts)) / nf;
}

/// Critical weight variance sigma_w^2 E[phi'^2](q*) = 1 by nested bisection on the variance
/// fixed point q = sigma_w^2 E[phi^2](q) + sigma_b^2 (tanh only).
inline double tanh_critical_sigma_w(double sb) {
  auto e2 = [](double q) { return gauss1([](double u) { return std::tanh(u) * std::tanh(u); }, q); };
  auto ed = [](double q) {
    return gauss1([](double u) { const double c = std::cosh(u); return 1.0 / (c * c * c * c); }, q);
  };
  auto qstar = [&](double sw) { return bisect([&](double q) { return sw * e2(q) + sb - q; }, 1e-6, 50.0, 80); };
  return bisect([&](double sw) { return sw * ed(qstar(sw)) - 1.0; }, 1.0, 3.0, 60);
}

}  // namespace oracle
