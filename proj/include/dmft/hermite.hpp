// SPDX-License-Identifier: Apache-2.0
//
// Orthonormal Hermite spectra h_n = He_n / sqrt(n!) of rescaled activations.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "dmft/activations.hpp"
#include "dmft/gauss_kernel.hpp"

namespace dmft {

inline constexpr int hermite_max_degree = 200;

struct HermiteSpectrum {
  std::vector<double> coeffs;  // a_0 .. a_N
  double q = 1.0;
  double sum_sq = 0.0;         // sum a_n^2
  double mean_degree = 0.0;    // sum n a_n^2 / sum a_n^2

  int n_max() const { return static_cast<int>(coeffs.size()) - 1; }
};

struct HermiteConfig {
  int max_degree = hermite_max_degree;
  double panel_width = 0.25;       // split-rule panel width for kinked activations
  int extra_nodes = 100;           // Gauss-Hermite nodes beyond n_max, when that scheme is selected
  double zero_threshold = 1e-14;   // relative to max |a_n|; smaller coefficients count as zero
  double q_consistency = 1e-3;     // relative tolerance on q* = sw2 * sum_sq + sb2
  double trapezoid_z_max = 14.0;   // smooth activations under the adaptive scheme
  double trapezoid_step = 0.25;
  double trapezoid_tolerance = 1e-15;
  int trapezoid_max_level = 7;
};

/// Values h_0(z) .. h_n(z) by the stable three-term recurrence.
inline void hermite_values(double z, int n, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(n) + 1, 0.0);
  out[0] = 1.0;
  if (n >= 1) out[1] = z;
  for (int k = 1; k < n; ++k) {
    out[static_cast<std::size_t>(k) + 1] =
        (z * out[static_cast<std::size_t>(k)] - std::sqrt(static_cast<double>(k)) * out[static_cast<std::size_t>(k) - 1]) /
        std::sqrt(static_cast<double>(k) + 1.0);
  }
}

inline double hermite_value(double z, int n) {
  std::vector<double> v;
  hermite_values(z, n, v);
  return v.back();
}

/// The Hermite mode h_n as an activation (for Rayleigh-quotient checks).
inline ActivationSpec make_hermite_mode(int n) {
  require(n >= 0 && n <= hermite_max_degree, ErrorKind::invalid_argument, "hermite mode degree out of range");
  ActivationSpec a;
  a.name = "h" + std::to_string(n);
  a.value = [n](double u) { return hermite_value(u, n); };
  a.deriv = [n](double u) { return n == 0 ? 0.0 : std::sqrt(static_cast<double>(n)) * hermite_value(u, n - 1); };
  a.second_deriv = [n](double u) {
    return n < 2 ? 0.0 : std::sqrt(static_cast<double>(n) * (n - 1)) * hermite_value(u, n - 2);
  };
  a.parity = n % 2 == 0 ? Parity::even : Parity::odd;
  return a;
}

/// Exact coefficient of the unscaled ReLU on h_n.
inline double relu_hermite_closed(int n) {
  require(n >= 0, ErrorKind::invalid_argument, "degree must be nonnegative");
  if (n == 0) return 1.0 / std::sqrt(2.0 * std::numbers::pi);
  if (n == 1) return 0.5;
  if (n % 2 == 1) return 0.0;
  // a_2 = 1/sqrt(4 pi); a_{2k+2} / a_{2k} = -(2k-1) / sqrt((2k+1)(2k+2))
  double a = 1.0 / std::sqrt(4.0 * std::numbers::pi);
  for (int k = 1; 2 * k < n; ++k) {
    a *= -(2.0 * k - 1.0) / std::sqrt((2.0 * k + 1.0) * (2.0 * k + 2.0));
  }
  return a;
}

namespace detail {

inline HermiteSpectrum finish_spectrum(std::vector<double> coeffs, double q) {
  HermiteSpectrum s;
  s.q = q;
  double sum = 0.0;
  double deg = 0.0;
  for (std::size_t n = 0; n < coeffs.size(); ++n) {
    sum += coeffs[n] * coeffs[n];
    deg += static_cast<double>(n) * coeffs[n] * coeffs[n];
  }
  s.coeffs = std::move(coeffs);
  s.sum_sq = sum;
  s.mean_degree = sum > 0.0 ? deg / sum : 0.0;
  return s;
}

}  // namespace detail

/// a_n = E[phi(sqrt(q) z) h_n(z)] for n = 0..n_max.
inline HermiteSpectrum hermite_coeffs(const ActivationSpec& act, double q, int n_max,
                                      const QuadratureRule& rule = default_rule(), const HermiteConfig& cfg = {},
                                      const KernelConfig& kcfg = {}) {
  require(q > 0.0 && std::isfinite(q), ErrorKind::invalid_argument, "variance q must be positive");
  require(n_max >= 0 && n_max <= cfg.max_degree, ErrorKind::invalid_argument,
          "n_max must lie in [0, " + std::to_string(cfg.max_degree) + "], got " + std::to_string(n_max));
  const double s = std::sqrt(q);
  std::vector<double> coeffs(static_cast<std::size_t>(n_max) + 1, 0.0);
  std::vector<double> h;
  auto accumulate = [&](double z, double w) {
    const double f = act.value(s * z);
    detail::check_finite(f, z, "hermite_coeffs");
    if (f == 0.0) return;
    hermite_values(z, n_max, h);
    for (int n = 0; n <= n_max; ++n) coeffs[static_cast<std::size_t>(n)] += w * f * h[static_cast<std::size_t>(n)];
  };

  if (act.kinks.empty() && kcfg.smooth == SmoothScheme::adaptive_trapezoid) {
    // One uniform grid serves every degree; halve the step until no coefficient moves.
    // h_n(z) phi(z) = psi_n(z) sqrt(phi(z)) with |psi_n| <= 1, so the tail past z_max is tiny.
    const double zmax = cfg.trapezoid_z_max;
    auto n = static_cast<long>(std::ceil(zmax / cfg.trapezoid_step));
    double step = zmax / static_cast<double>(n);
    std::vector<double> sums(coeffs.size(), 0.0);
    auto add = [&](long i) {
      const double z = static_cast<double>(i) * step;
      const double f = act.value(s * z);
      detail::check_finite(f, z, "hermite_coeffs");
      if (f == 0.0) return;
      hermite_values(z, n_max, h);
      const double w = f * detail::gaussian_density(z);
      for (std::size_t k = 0; k < sums.size(); ++k) sums[k] += w * h[k];
    };
    for (long i = -n; i <= n; ++i) add(i);
    for (std::size_t k = 0; k < sums.size(); ++k) coeffs[k] = step * sums[k];
    double last_diff = std::numeric_limits<double>::infinity();
    for (int level = 1; level <= cfg.trapezoid_max_level; ++level) {
      step *= 0.5;
      n *= 2;
      for (long i = -n + 1; i < n; i += 2) add(i);
      double diff = 0.0;
      double scale = 0.0;
      for (std::size_t k = 0; k < sums.size(); ++k) {
        const double cur = step * sums[k];
        diff = std::max(diff, std::fabs(cur - coeffs[k]));
        scale = std::max(scale, std::fabs(cur));
        coeffs[k] = cur;
      }
      if (diff <= cfg.trapezoid_tolerance * scale) break;
      if (level >= 2 && diff >= 0.5 * last_diff) break;
      last_diff = diff;
    }
  } else if (act.kinks.empty()) {
    // Enough nodes that f * h_n is integrated without aliasing up to n_max.
    const int order = std::max(rule.order, n_max + cfg.extra_nodes);
    const QuadratureRule local = order == rule.order ? rule : make_rule(order);
    for (std::size_t i = 0; i < local.nodes.size(); ++i) accumulate(local.nodes[i], local.weights[i]);
  } else {
    using gl = boost::math::quadrature::gauss<double, 20>;
    const auto& xs = gl::abscissa();
    const auto& ws = gl::weights();
    const auto cuts = detail::sorted_cuts(detail::scaled_cuts(act.kinks, s), kcfg.z_max);
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
      const double lo = cuts[p];
      const double hi = cuts[p + 1];
      const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / cfg.panel_width)));
      const double width = (hi - lo) / panels;
      for (int k = 0; k < panels; ++k) {
        const double mid = lo + (k + 0.5) * width;
        const double half = 0.5 * width;
        for (std::size_t j = 0; j < xs.size(); ++j) {
          for (double sign : {-1.0, 1.0}) {
            const double z = mid + sign * half * xs[j];
            accumulate(z, half * ws[j] * detail::gaussian_density(z));
          }
        }
      }
    }
  }

  if (act.parity != Parity::none) {
    const int zero_parity = act.parity == Parity::odd ? 0 : 1;
    for (int n = zero_parity; n <= n_max; n += 2) coeffs[static_cast<std::size_t>(n)] = 0.0;
  }
  return detail::finish_spectrum(std::move(coeffs), q);
}

/// Closed-form spectrum of the unscaled ReLU (q enters only as an overall sqrt(q) factor).
inline HermiteSpectrum relu_spectrum_closed(double q, int n_max) {
  require(q > 0.0, ErrorKind::invalid_argument, "variance q must be positive");
  require(n_max >= 0, ErrorKind::invalid_argument, "n_max must be nonnegative");
  std::vector<double> coeffs(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) coeffs[static_cast<std::size_t>(n)] = std::sqrt(q) * relu_hermite_closed(n);
  return detail::finish_spectrum(std::move(coeffs), q);
}

/// ||f'||^2 / ||f||^2 for f(z) = phi(sqrt(q) z) under the Gaussian measure.
inline double rayleigh_quotient(const ActivationSpec& act, double q, const QuadratureRule& rule = default_rule(),
                                const KernelConfig& cfg = {}) {
  require(q > 0.0 && std::isfinite(q), ErrorKind::invalid_argument, "variance q must be positive");
  const double norm = act.closed_form.second_moment
                          ? act.closed_form.second_moment(q)
                          : expect1([&](double u) { const double v = act.value(u); return v * v; }, q, rule,
                                    act.kinks, cfg);
  require(norm > 0.0, ErrorKind::degenerate_input, "activation has zero Gaussian norm");
  const double slope = price_moments(act, q, rule, cfg).first;
  return q * slope / norm;
}

/// Variance-channel susceptibility d q_next / d q at the variance fixed point.
inline double chi_q_hermite(const HermiteSpectrum& spec, double sigma_w_sq, double sigma_b_sq,
                            const HermiteConfig& cfg = {}) {
  require(sigma_w_sq > 0.0, ErrorKind::invalid_argument, "sigma_w_sq must be positive");
  require(sigma_b_sq >= 0.0, ErrorKind::invalid_argument, "sigma_b_sq must be nonnegative");
  const double q_star = sigma_w_sq * spec.sum_sq + sigma_b_sq;
  require(std::fabs(q_star - spec.q) <= cfg.q_consistency * spec.q, ErrorKind::invalid_argument,
          "spectrum variance " + std::to_string(spec.q) + " is not the fixed point " + std::to_string(q_star));
  const auto& a = spec.coeffs;
  double diag = 0.0;
  double cross = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    diag += static_cast<double>(n) * a[n] * a[n];
    if (n + 2 < a.size()) cross += std::sqrt((n + 1.0) * (n + 2.0)) * a[n] * a[n + 2];
  }
  return sigma_w_sq / spec.q * (diag + cross);
}

struct UniversalityVerdict {
  Smoothness cls = Smoothness::smooth;
  double tail_slope = 0.0;     // log-log slope of |a_n| on the fitted window
  double r_squared = 0.0;
  int tail_points = 0;
  bool degenerate = false;     // finitely many modes, no tail to fit
};

struct ClassifierConfig {
  int window_low = 10;
  double max_abs_slope = 3.0;
  double min_r_squared = 0.99;
  double zero_threshold = 1e-14;
  int min_n_max = 60;
};

/// Power-law versus super-polynomial decay of the Hermite tail.
inline UniversalityVerdict classify_universality(const HermiteSpectrum& spec, const ClassifierConfig& cfg = {}) {
  require(spec.n_max() >= cfg.min_n_max, ErrorKind::insufficient_data,
          "classification needs n_max >= " + std::to_string(cfg.min_n_max));
  double amax = 0.0;
  for (double a : spec.coeffs) amax = std::max(amax, std::fabs(a));
  require(amax > 0.0, ErrorKind::insufficient_data, "spectrum is identically zero");
  const double floor = cfg.zero_threshold * amax;
  int nonzero = 0;
  std::vector<double> xs;
  std::vector<double> ys;
  for (int n = 0; n <= spec.n_max(); ++n) {
    const double a = std::fabs(spec.coeffs[static_cast<std::size_t>(n)]);
    if (a <= floor) continue;
    ++nonzero;
    if (n >= cfg.window_low) {
      xs.push_back(std::log(static_cast<double>(n)));
      ys.push_back(std::log(a));
    }
  }
  UniversalityVerdict v;
  v.tail_points = static_cast<int>(xs.size());
  if (nonzero <= 3 && xs.empty()) {
    v.degenerate = true;
    return v;
  }
  require(xs.size() >= 5, ErrorKind::insufficient_data, "fewer than 5 nonzero tail coefficients");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  v.tail_slope = sxy / sxx;
  v.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  const bool power_law = std::fabs(v.tail_slope) < cfg.max_abs_slope && v.r_squared > cfg.min_r_squared;
  v.cls = power_law ? Smoothness::kinked : Smoothness::smooth;
  return v;
}

}  // namespace dmft
