// SPDX-License-Identifier: Apache-2.0
//
// Truncated Landau normal forms of the correlation map near perfect alignment:
//   smooth:  h = (g/2) m^2 - t m
//   kinked:  h = kappa m^{3/2} - t m
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "dmft/activation_spec.hpp"
#include "dmft/errors.hpp"
#include "dmft/mft.hpp"

namespace dmft {

struct LandauCoefficients {
  double t = 0.0;
  double h = 0.0;
  std::optional<double> g;
  std::optional<double> kappa;
  Smoothness cls = Smoothness::smooth;

  static LandauCoefficients smooth(double t, double h, double g) {
    require(g > 0.0, ErrorKind::invalid_argument, "curvature g must be positive");
    require(h >= 0.0, ErrorKind::invalid_argument, "field h must be nonnegative");
    return {t, h, g, std::nullopt, Smoothness::smooth};
  }

  static LandauCoefficients kinked(double t, double h, double kappa) {
    require(kappa > 0.0, ErrorKind::invalid_argument, "kappa must be positive");
    require(h >= 0.0, ErrorKind::invalid_argument, "field h must be nonnegative");
    return {t, h, std::nullopt, kappa, Smoothness::kinked};
  }

  void validate() const {
    require(h >= 0.0, ErrorKind::invalid_argument, "field h must be nonnegative");
    const bool smooth_ok = cls == Smoothness::smooth && g && !kappa && *g > 0.0;
    const bool kinked_ok = cls == Smoothness::kinked && kappa && !g && *kappa > 0.0;
    require(smooth_ok || kinked_ok, ErrorKind::invalid_argument,
            "exactly one of g / kappa must be set, matching the class");
  }
};

/// Mean-field exponents of each class.
struct ExponentSet {
  double nu_t;
  double beta;
  double theta_rel;
  double gamma;
  double delta;
  double nu_rho;
  double alpha;
};

inline constexpr ExponentSet theory_exponents(Smoothness cls) {
  return cls == Smoothness::smooth ? ExponentSet{1.0, 1.0, 1.0, 1.0, 2.0, 0.5, -1.0}
                                   : ExponentSet{1.0, 2.0, 2.0, 1.0, 1.5, 1.0 / 3.0, -3.0};
}

/// Nonnegative root of h = (g/2) m^2 - t m.
inline double m_smooth(double t, double h, double g) {
  require(g > 0.0, ErrorKind::invalid_argument, "curvature g must be positive");
  require(h >= 0.0, ErrorKind::invalid_argument, "field h must be nonnegative");
  const double r = std::sqrt(t * t + 2.0 * g * h);
  if (t >= 0.0) return (t + r) / g;
  return r - t > 0.0 ? 2.0 * h / (r - t) : 0.0;
}

/// Unique positive root of y^3 - u y^2 - 1 = 0.
inline double kinked_root(double u) {
  require(std::isfinite(u), ErrorKind::invalid_argument, "u must be finite");
  const double lo = std::max(u, 0.0);
  const double hi = lo + 2.0;
  const double seed = std::max(1.0, u + 1.0);
  std::uintmax_t iters = 200;
  return boost::math::tools::newton_raphson_iterate(
      [u](double y) {
        return std::make_pair(y * y * (y - u) - 1.0, y * (3.0 * y - 2.0 * u));
      },
      std::clamp(seed, lo, hi), lo, hi, 52, iters);
}

/// Universal kinked scaling function y(u)^2.
inline double kinked_scaling(double u) {
  const double y = kinked_root(u);
  return y * y;
}

/// Universal smooth scaling function sqrt(1 + x^2) - x.
inline double smooth_scaling(double x) {
  const double r = std::hypot(1.0, x);
  return x > 0.0 ? 1.0 / (r + x) : r - x;
}

inline double m_kinked(double t, double h, double kappa) {
  require(kappa > 0.0, ErrorKind::invalid_argument, "kappa must be positive");
  require(h >= 0.0, ErrorKind::invalid_argument, "field h must be nonnegative");
  if (h == 0.0) return t <= 0.0 ? 0.0 : (t / kappa) * (t / kappa);
  const double scale = std::cbrt(h / kappa);
  const double u = t / (std::cbrt(kappa * kappa) * std::cbrt(h));
  return scale * scale * kinked_scaling(u);
}

struct CollapsePoint {
  double t = 0.0;
  double h = 0.0;
  double m = 0.0;
  double x = 0.0;           // rescaled detuning
  double y = 0.0;           // rescaled order parameter
  double prediction = 0.0;  // universal curve at x
  double residual = 0.0;    // (y - prediction) / prediction
};

struct CollapseInput {
  double t = 0.0;
  double h = 0.0;
  double m = 0.0;
};

struct CollapseResult {
  std::vector<CollapsePoint> points;
  std::vector<std::pair<double, double>> curve;  // universal curve over the sampled x range
  std::vector<std::string> warnings;
  double max_abs_residual = 0.0;
};

namespace detail {

template <class Rescale, class Universal>
CollapseResult collapse(const std::vector<CollapseInput>& pts, Rescale rescale, Universal universal) {
  CollapseResult out;
  double xmin = 0.0;
  double xmax = 0.0;
  for (const auto& p : pts) {
    if (!(p.h > 0.0)) {
      out.warnings.push_back("excluded point t=" + std::to_string(p.t) + " with zero field");
      continue;
    }
    CollapsePoint c{p.t, p.h, p.m, 0.0, 0.0, 0.0, 0.0};
    std::tie(c.x, c.y) = rescale(p);
    c.prediction = universal(c.x);
    c.residual = (c.y - c.prediction) / c.prediction;
    out.max_abs_residual = std::max(out.max_abs_residual, std::fabs(c.residual));
    if (out.points.empty()) {
      xmin = xmax = c.x;
    } else {
      xmin = std::min(xmin, c.x);
      xmax = std::max(xmax, c.x);
    }
    out.points.push_back(c);
  }
  if (!out.points.empty()) {
    const int n = 101;
    for (int i = 0; i < n; ++i) {
      const double x = xmin + (xmax - xmin) * i / (n - 1);
      out.curve.emplace_back(x, universal(x));
    }
  }
  return out;
}

}  // namespace detail

/// Rescales (t, h, m) to (-t / sqrt(2 g h), m sqrt(g / 2h)) and compares with sqrt(1 + x^2) - x.
inline CollapseResult collapse_smooth(const std::vector<CollapseInput>& pts, double g) {
  require(g > 0.0, ErrorKind::invalid_argument, "curvature g must be positive");
  return detail::collapse(
      pts,
      [g](const CollapseInput& p) {
        return std::make_pair(-p.t / std::sqrt(2.0 * g * p.h), p.m * std::sqrt(g / (2.0 * p.h)));
      },
      smooth_scaling);
}

/// Rescales (t, h, m) to (t / (kappa^{2/3} h^{1/3}), m / (h/kappa)^{2/3}) and compares with y(u)^2.
inline CollapseResult collapse_kinked(const std::vector<CollapseInput>& pts, double kappa) {
  require(kappa > 0.0, ErrorKind::invalid_argument, "kappa must be positive");
  return detail::collapse(
      pts,
      [kappa](const CollapseInput& p) {
        const double s = std::cbrt(p.h / kappa);
        return std::make_pair(p.t / (std::cbrt(kappa * kappa) * std::cbrt(p.h)), p.m / (s * s));
      },
      kinked_scaling);
}

/// Linearized relaxation length 1 / sqrt(t^2 + 2 g h) of the smooth normal form.
inline double xi_smooth(double t, double h, double g) {
  require(g > 0.0, ErrorKind::invalid_argument, "curvature g must be positive");
  require(h >= 0.0, ErrorKind::invalid_argument, "field h must be nonnegative");
  const double rate = std::sqrt(t * t + 2.0 * g * h);
  return rate > 0.0 ? 1.0 / rate : infinite_length;
}

/// Relaxation length 1 / (-t + (3 kappa / 2) sqrt(m)) of the kinked normal form.
inline double xi_kinked(double t, double h, double kappa) {
  if (t == 0.0 && h == 0.0) return infinite_length;
  const double m = m_kinked(t, h, kappa);
  const double rate = -t + 1.5 * kappa * std::sqrt(m);
  require(rate > 0.0, ErrorKind::invalid_regime,
          "nonpositive decay rate " + std::to_string(rate) + " at t=" + std::to_string(t));
  return 1.0 / rate;
}

struct FreeEnergy {
  double f_on = 0.0;
  double specific_heat = 0.0;
  double alpha = 0.0;
};

/// On-shell free energy and specific heat on the zero-field branch.
inline FreeEnergy onshell_free_energy(const LandauCoefficients& c) {
  c.validate();
  require(c.h == 0.0, ErrorKind::unsupported, "on-shell free energy is defined on the zero-field branch");
  const double tp = c.t > 0.0 ? c.t : 0.0;
  if (c.cls == Smoothness::smooth) {
    const double g = *c.g;
    return {-2.0 / (3.0 * g * g) * tp * tp * tp, 4.0 / (g * g) * tp, -1.0};
  }
  const double k4 = std::pow(*c.kappa, 4);
  return {-std::pow(tp, 5) / (10.0 * k4), 2.0 * tp * tp * tp / k4, -3.0};
}

/// Detuning at which the field and detuning terms balance.
inline double crossover_scale(const LandauCoefficients& c) {
  c.validate();
  require(c.h > 0.0, ErrorKind::invalid_argument, "crossover scale needs h > 0");
  if (c.cls == Smoothness::smooth) return std::sqrt(*c.g * c.h);
  return std::cbrt(*c.kappa * *c.kappa) * std::cbrt(c.h);
}

}  // namespace dmft
