// SPDX-License-Identifier: Apache-2.0
//
// Gaussian expectations over the standard normal measure Dz and over pairs of
// unit-variance-correlated normals. Smooth integrands use an adaptive trapezoid rule
// on the truncated line (or, on request, a fixed Gauss-Hermite rule); integrands with declared kinks are split at the kinks and integrated with
// composite Gauss-Legendre panels (inner) and adaptive Gauss-Kronrod (outer).
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>

#include "dmft/activation_spec.hpp"
#include "dmft/errors.hpp"

namespace dmft {

/// Gauss-Hermite rule normalized to the unit-variance Gaussian measure.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order = 0;
};

enum class SmoothScheme {
  adaptive_trapezoid,  // step halving until successive sums agree; geometric convergence for analytic f
  gauss_hermite        // the fixed rule passed by the caller
};

/// Numerical knobs for the Gaussian kernel; defaults are the production settings.
struct KernelConfig {
  int order = 101;                 // Gauss-Hermite nodes when smooth = gauss_hermite
  SmoothScheme smooth = SmoothScheme::adaptive_trapezoid;
  double smooth_z_max = 11.0;      // truncation of the trapezoid line
  double trapezoid_step = 0.5;     // coarsest trapezoid step (in z units)
  double trapezoid_tolerance = 1e-8;  // stop when successive sums differ by this fraction of the L1 sum
  int trapezoid_max_level = 7;
  double z_max = 13.0;             // truncation of the Gaussian tails for split integration
  double panel_width = 1.0;        // composite Gauss-Legendre panel width (in z units)
  double weight_sum_tolerance = 1e-14;
};

namespace detail {

inline constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343818684759;

inline double gaussian_density(double z) { return inv_sqrt_2pi * std::exp(-0.5 * z * z); }

inline void check_finite(double value, double node, const char* where) {
  if (!std::isfinite(value)) {
    throw NumericDomainError(node, std::string("non-finite integrand in ") + where);
  }
}

// Orthonormal probabilists' Hermite recurrence; returns (p_n(z), p_{n-1}(z)).
inline std::pair<long double, long double> orthonormal_hermite_pair(int n, long double z) {
  long double p_prev = 0.0L;
  long double p = 1.0L;
  for (int k = 0; k < n; ++k) {
    const long double next = (z * p - std::sqrt(static_cast<long double>(k)) * p_prev) /
                             std::sqrt(static_cast<long double>(k + 1));
    p_prev = p;
    p = next;
  }
  return {p, p_prev};
}

}  // namespace detail

/// Builds the order-point Gauss-Hermite rule for the measure exp(-z^2/2)/sqrt(2 pi).
inline QuadratureRule make_rule(int order) {
  require(order >= 2, ErrorKind::invalid_argument,
          "quadrature order must be >= 2, got " + std::to_string(order));
  const int n = order;
  std::vector<long double> roots(static_cast<std::size_t>(n));
  // Eigenvalues of the Jacobi matrix seed a Newton polish in extended precision.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  require(eig.info() == Eigen::Success, ErrorKind::numeric_domain, "Jacobi eigensolve failed");
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // eigenvalues ascend; take the upper half in decreasing order
    long double z = eig.eigenvalues()(n - 1 - i);
    for (int it = 0; it < 20; ++it) {
      const auto [p, p_prev] = detail::orthonormal_hermite_pair(n, z);
      const long double step = p / (std::sqrt(static_cast<long double>(n)) * p_prev);
      z -= step;
      if (std::fabs(step) <= 1e-19L * std::max(1.0L, std::fabs(z))) break;
    }
    roots[static_cast<std::size_t>(i)] = z;
  }

  QuadratureRule rule;
  rule.order = n;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  long double total = 0.0L;
  std::vector<long double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < half; ++i) {
    long double z = roots[static_cast<std::size_t>(i)];
    if (n % 2 == 1 && i == half - 1) z = 0.0L;
    const auto [p, p_prev] = detail::orthonormal_hermite_pair(n, z);
    (void)p;
    const long double wi = 1.0L / (static_cast<long double>(n) * p_prev * p_prev);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = static_cast<double>(-z);
    rule.nodes[hi] = static_cast<double>(z);
    w[lo] = wi;
    w[hi] = wi;
  }
  for (const auto wi : w) total += wi;
  for (std::size_t i = 0; i < w.size(); ++i) {
    rule.weights[i] = static_cast<double>(w[i] / total);
  }
  for (std::size_t i = 1; i < rule.nodes.size(); ++i) {
    require(rule.nodes[i] > rule.nodes[i - 1], ErrorKind::numeric_domain,
            "Gauss-Hermite root search failed to separate roots at order " + std::to_string(n));
  }
  require(std::fabs(static_cast<double>(total) - 1.0) < 1e-10, ErrorKind::numeric_domain,
          "Gauss-Hermite weights failed to normalize at order " + std::to_string(n));
  return rule;
}

inline const QuadratureRule& default_rule() {
  static const QuadratureRule rule = make_rule(KernelConfig{}.order);
  return rule;
}

/// Covariance of two equal-variance Gaussians. The gap m = 1 - c is stored
/// separately so near-aligned pairs keep full relative precision.
struct BivariateGaussianSpec {
  double q = 1.0;
  double c = 0.0;
  double gap = 1.0;

  static BivariateGaussianSpec from_correlation(double q, double c) {
    require(q > 0.0 && std::isfinite(q), ErrorKind::invalid_argument, "variance q must be positive");
    require(std::fabs(c) <= 1.0, ErrorKind::invalid_argument,
            "correlation must lie in [-1, 1], got " + std::to_string(c));
    return {q, c, 1.0 - c};
  }

  static BivariateGaussianSpec from_gap(double q, double m) {
    require(q > 0.0 && std::isfinite(q), ErrorKind::invalid_argument, "variance q must be positive");
    require(m >= 0.0 && m <= 2.0, ErrorKind::invalid_argument,
            "correlation gap must lie in [0, 2], got " + std::to_string(m));
    return {q, 1.0 - m, m};
  }

  /// u1 = A z1 + B z2, u2 = A z1 - B z2 realizes the covariance.
  double sum_scale() const { return std::sqrt(q * (2.0 - gap) / 2.0); }
  double diff_scale() const { return std::sqrt(q * gap / 2.0); }
};

namespace detail {

// Integral of f(z) Dz over [lo, hi] by composite 20-point Gauss-Legendre panels.
template <class F>
double panel_integral(const F& f, double lo, double hi, double panel_width) {
  if (!(hi > lo)) return 0.0;
  const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / panel_width)));
  const double width = (hi - lo) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + p * width;
    const double b = (p + 1 == panels) ? hi : a + width;
    total += boost::math::quadrature::gauss<double, 20>::integrate(
        [&](double z) {
          const double v = f(z) * gaussian_density(z);
          check_finite(v, z, "piecewise Gaussian integral");
          return v;
        },
        a, b);
  }
  return total;
}

inline std::vector<double> sorted_cuts(std::vector<double> cuts, double z_max) {
  std::erase_if(cuts, [&](double z) { return !(z > -z_max && z < z_max); });
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.insert(cuts.begin(), -z_max);
  cuts.push_back(z_max);
  return cuts;
}

// Integral of f(z) Dz by the trapezoid rule on [-z_max, z_max], halving the step until
// two successive sums agree. For f analytic in a strip the error squares at each halving,
// so agreement to the tolerance leaves the finer sum at roughly its square. An even f is
// sampled on z >= 0 only.
template <class F>
double trapezoid_integral(const F& f, const KernelConfig& cfg, bool even = false) {
  const double zmax = cfg.smooth_z_max;
  double sum = 0.0;
  double abs_sum = 0.0;
  auto add = [&](double z, double mult) {
    const double v = f(z);
    check_finite(v, z, "trapezoid Gaussian integral");
    const double w = mult * v * gaussian_density(z);
    sum += w;
    abs_sum += std::fabs(w);
  };
  auto n = static_cast<long>(std::ceil(zmax / cfg.trapezoid_step));
  double h = zmax / static_cast<double>(n);
  for (long i = even ? 0 : -n; i <= n; ++i) add(static_cast<double>(i) * h, even && i != 0 ? 2.0 : 1.0);
  double prev = h * sum;
  double last_diff = std::numeric_limits<double>::infinity();
  for (int level = 1; level <= cfg.trapezoid_max_level; ++level) {
    h *= 0.5;
    n *= 2;
    for (long i = even ? 1 : -n + 1; i < n; i += 2) add(static_cast<double>(i) * h, even ? 2.0 : 1.0);
    const double cur = h * sum;
    const double diff = std::fabs(cur - prev);
    if (diff <= cfg.trapezoid_tolerance * h * abs_sum) return cur;
    // a difference that stops shrinking is rounding noise in f, not discretization error
    if (level >= 2 && diff >= 0.5 * last_diff) return cur;
    last_diff = diff;
    prev = cur;
  }
  return prev;
}

// Integral of f(z) Dz over the real line split at the given z cuts.
template <class F>
double split_integral(const F& f, std::vector<double> cuts, const KernelConfig& cfg) {
  const auto pts = sorted_cuts(std::move(cuts), cfg.z_max);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    total += panel_integral(f, pts[i], pts[i + 1], cfg.panel_width);
  }
  return total;
}

// Integral of H(z) Dz where H varies on the scale `width` around each center.
// Cuts are placed geometrically so panels shrink towards the centers.
template <class F>
double graded_integral(const F& h, std::span<const double> centers, double width, const KernelConfig& cfg) {
  std::vector<double> cuts;
  for (double c0 : centers) {
    cuts.push_back(c0);
    for (double d = width; d < 2.0 * cfg.z_max; d *= 4.0) {
      cuts.push_back(c0 - d);
      cuts.push_back(c0 + d);
    }
  }
  return split_integral(h, std::move(cuts), cfg);
}

// E[F(u1, u2)] for the correlated Gaussian pair (u1, u2). kinks1/kinks2 are the locations
// in u-space where F is non-smooth in its first/second argument.
template <class F>
double bivariate_expectation(const F& fn, const BivariateGaussianSpec& spec, const QuadratureRule& rule,
                             std::span<const double> kinks1, std::span<const double> kinks2,
                             const KernelConfig& cfg, bool exchange_symmetric = false) {
  const double a = spec.sum_scale();
  const double b = spec.diff_scale();
  if (kinks1.empty() && kinks2.empty() && cfg.smooth == SmoothScheme::adaptive_trapezoid) {
    // exchange symmetry F(u1, u2) = F(u2, u1) makes the inner integrand even in z2
    return trapezoid_integral(
        [&](double z1) {
          return trapezoid_integral([&](double z2) { return fn(a * z1 + b * z2, a * z1 - b * z2); }, cfg,
                                    exchange_symmetric);
        },
        cfg);
  }
  if (kinks1.empty() && kinks2.empty()) {
    // Exchange symmetry F(u1, u2) = F(u2, u1) is z2 -> -z2; the rule is symmetric.
    double total = 0.0;
    const auto n = rule.nodes.size();
    const std::size_t j0 = exchange_symmetric ? n / 2 : 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double za = a * rule.nodes[i];
      double inner = 0.0;
      for (std::size_t j = j0; j < n; ++j) {
        const double zb = b * rule.nodes[j];
        const double v = fn(za + zb, za - zb);
        check_finite(v, rule.nodes[j], "bivariate Gauss-Hermite sum");
        const bool paired = exchange_symmetric && rule.nodes[j] != 0.0;
        inner += (paired ? 2.0 : 1.0) * rule.weights[j] * v;
      }
      total += rule.weights[i] * inner;
    }
    return total;
  }
  // Inner integral over z2 is split exactly at the kinks of both arguments.
  auto inner = [&](double z1) {
    std::vector<double> cuts;
    for (double k : kinks1) cuts.push_back((k - a * z1) / b);
    for (double k : kinks2) cuts.push_back((a * z1 - k) / b);
    return split_integral([&](double z2) { return fn(a * z1 + b * z2, a * z1 - b * z2); },
                          std::move(cuts), cfg);
  };
  std::vector<double> centers;
  for (double k : kinks1) centers.push_back(k / a);
  for (double k : kinks2) centers.push_back(k / a);
  return graded_integral(inner, centers, b / a, cfg);
}

inline std::vector<double> scaled_cuts(std::span<const double> kinks, double scale, double sign = 1.0) {
  std::vector<double> out;
  out.reserve(kinks.size());
  for (double k : kinks) out.push_back(sign * k / scale);
  return out;
}

}  // namespace detail

/// E[f(sqrt(q) z)] under the standard Gaussian measure.
template <class F>
double expect1(const F& f, double q, const QuadratureRule& rule = default_rule(),
               std::span<const double> kinks = {}, const KernelConfig& cfg = {}) {
  require(q > 0.0 && std::isfinite(q), ErrorKind::invalid_argument, "variance q must be positive");
  const double s = std::sqrt(q);
  if (!kinks.empty()) {
    return detail::split_integral([&](double z) { return f(s * z); }, detail::scaled_cuts(kinks, s), cfg);
  }
  if (cfg.smooth == SmoothScheme::adaptive_trapezoid) {
    return detail::trapezoid_integral([&](double z) { return f(s * z); }, cfg);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = f(s * rule.nodes[i]);
    detail::check_finite(v, rule.nodes[i], "expect1");
    total += rule.weights[i] * v;
  }
  return total;
}

/// E[f(u1) g(u2)] with Var u1 = Var u2 = q and correlation spec.c.
template <class F, class G>
double expect2(const F& f, const G& g, const BivariateGaussianSpec& spec,
               const QuadratureRule& rule = default_rule(), std::span<const double> kinks_f = {},
               std::span<const double> kinks_g = {}, const KernelConfig& cfg = {}) {
  require(std::fabs(spec.c) <= 1.0, ErrorKind::invalid_argument, "correlation must lie in [-1, 1]");
  if (spec.gap == 0.0) {
    std::vector<double> kinks(kinks_f.begin(), kinks_f.end());
    kinks.insert(kinks.end(), kinks_g.begin(), kinks_g.end());
    return expect1([&](double u) { return f(u) * g(u); }, spec.q, rule, kinks, cfg);
  }
  if (spec.gap == 2.0) {
    std::vector<double> kinks(kinks_f.begin(), kinks_f.end());
    for (double k : kinks_g) kinks.push_back(-k);
    return expect1([&](double u) { return f(u) * g(-u); }, spec.q, rule, kinks, cfg);
  }
  return detail::bivariate_expectation([&](double u1, double u2) { return f(u1) * g(u2); }, spec, rule,
                                       kinks_f, kinks_g, cfg);
}

/// (1/2) E[(f(u1) - f(u2))^2]; equals E[f^2] - E[f(u1) f(u2)] without the cancellation.
template <class F>
double half_square_difference(const F& f, const BivariateGaussianSpec& spec,
                              const QuadratureRule& rule = default_rule(), std::span<const double> kinks = {},
                              const KernelConfig& cfg = {}) {
  if (spec.gap == 0.0) return 0.0;
  if (spec.gap == 2.0) {
    std::vector<double> cuts(kinks.begin(), kinks.end());
    for (double k : kinks) cuts.push_back(-k);
    return expect1(
        [&](double u) {
          const double d = f(u) - f(-u);
          return 0.5 * d * d;
        },
        spec.q, rule, cuts, cfg);
  }
  return detail::bivariate_expectation(
      [&](double u1, double u2) {
        const double d = f(u1) - f(u2);
        return 0.5 * d * d;
      },
      spec, rule, kinks, kinks, cfg, true);
}

/// Gaussian moments of the first two derivatives; the second is undefined for kinked activations.
struct PriceMoments {
  double first = 0.0;
  std::optional<double> second_moment;

  double second() const {
    if (!second_moment) {
      fail(ErrorKind::class_mismatch, "second Price moment is not finite for a kinked activation");
    }
    return *second_moment;
  }
};

inline PriceMoments price_moments(const ActivationSpec& act, double q, const QuadratureRule& rule = default_rule(),
                                  const KernelConfig& cfg = {}) {
  require(q > 0.0 && std::isfinite(q), ErrorKind::invalid_argument, "variance q must be positive");
  PriceMoments out;
  if (act.closed_form.derivative_kernel) {
    out.first = act.closed_form.derivative_kernel(q, 0.0);
  } else {
    out.first = expect1([&](double u) { const double d = act.deriv(u); return d * d; }, q, rule, act.kinks, cfg);
  }
  if (!act.is_kinked() && act.second_deriv) {
    const auto& d2 = *act.second_deriv;
    out.second_moment = expect1([&](double u) { const double d = d2(u); return d * d; }, q, rule, {}, cfg);
  }
  return out;
}

}  // namespace dmft
