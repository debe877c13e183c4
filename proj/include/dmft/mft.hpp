// SPDX-License-Identifier: Apache-2.0
//
// Mean-field signal propagation with independent inverted-dropout masks.
// Correlations are tracked through the gap m = 1 - c so that near-aligned
// pairs keep full relative precision.
#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "dmft/activations.hpp"
#include "dmft/gauss_kernel.hpp"

namespace dmft {

inline constexpr double infinite_length = std::numeric_limits<double>::infinity();

struct ChannelParams {
  double sigma_w_sq = 1.0;
  double sigma_b_sq = 0.0;
  double rho = 1.0;
  ActivationSpec activation;

  void validate() const {
    require(sigma_w_sq > 0.0 && std::isfinite(sigma_w_sq), ErrorKind::invalid_argument,
            "sigma_w_sq must be positive, got " + std::to_string(sigma_w_sq));
    require(sigma_b_sq >= 0.0 && std::isfinite(sigma_b_sq), ErrorKind::invalid_argument,
            "sigma_b_sq must be nonnegative, got " + std::to_string(sigma_b_sq));
    require(rho > 0.0 && rho <= 1.0, ErrorKind::invalid_argument,
            "keep probability rho must lie in (0, 1], got " + std::to_string(rho));
    require(static_cast<bool>(activation.value), ErrorKind::invalid_argument, "activation is not set");
  }
};

struct MftConfig {
  // variance fixed point
  double tol = 1e-12;
  int max_iter = 100000;
  double damping = 0.5;
  double divergence = 1e12;
  double scale_free_seed = 1.0;
  // correlation fixed point (relative tolerance on the gap)
  double gap_tol = 1e-14;
  int gap_max_iter = 400;
  // criticality search
  double sigma_lo = 1e-3;
  double sigma_hi = 10.0;
  double chi_tol = 1e-10;
  int quadrature_order = 101;  // Gauss-Hermite nodes, used when kernel.smooth selects that scheme
  KernelConfig kernel;
};

enum class VarianceStatus { converged, marginal, scale_free };

inline const char* to_string(VarianceStatus s) {
  switch (s) {
    case VarianceStatus::converged: return "converged";
    case VarianceStatus::marginal: return "marginal";
    case VarianceStatus::scale_free: return "scale_free";
  }
  return "unknown";
}

struct VarianceFixedPoint {
  double q = 0.0;
  VarianceStatus status = VarianceStatus::converged;
  int iterations = 0;
};

struct FixedPointResult {
  double q_star = 0.0;
  double c_star = 1.0;
  double m = 0.0;
  double slope = 0.0;
  double xi = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct Curvature {
  double g = 0.0;
  bool degenerate = false;
};

/// -1/log|lambda|, or the infinite sentinel when |lambda| >= 1.
inline double correlation_length(double slope) {
  const double a = std::fabs(slope);
  if (!(a < 1.0)) return infinite_length;
  if (a == 0.0) return 0.0;
  return -1.0 / std::log1p(a - 1.0);
}

namespace detail {

inline std::shared_ptr<const QuadratureRule> rule_of_order(int order) {
  if (order == KernelConfig{}.order) {
    return std::shared_ptr<const QuadratureRule>(&default_rule(), [](const QuadratureRule*) {});
  }
  return std::make_shared<const QuadratureRule>(make_rule(order));
}

inline double second_moment(const ActivationSpec& act, double q, const QuadratureRule& rule,
                            const KernelConfig& cfg) {
  if (act.closed_form.second_moment) return act.closed_form.second_moment(q);
  return expect1([&](double u) { const double v = act.value(u); return v * v; }, q, rule, act.kinks, cfg);
}

inline double gap_kernel(const ActivationSpec& act, double q, double m, const QuadratureRule& rule,
                         const KernelConfig& cfg) {
  if (act.closed_form.half_square_gap) return act.closed_form.half_square_gap(q, m);
  return half_square_difference(act.value, BivariateGaussianSpec::from_gap(q, m), rule, act.kinks, cfg);
}

inline double derivative_kernel(const ActivationSpec& act, double q, double m, const QuadratureRule& rule,
                                const KernelConfig& cfg) {
  if (act.closed_form.derivative_kernel) return act.closed_form.derivative_kernel(q, m);
  return expect2(act.deriv, act.deriv, BivariateGaussianSpec::from_gap(q, m), rule, act.kinks, act.kinks, cfg);
}

}  // namespace detail

/// q -> (sigma_w^2 / rho) E[phi(sqrt(q) z)^2] + sigma_b^2.
inline double variance_map(const ChannelParams& p, double q, const MftConfig& cfg = {}) {
  const auto rule = detail::rule_of_order(cfg.quadrature_order);
  return p.sigma_w_sq / p.rho * detail::second_moment(p.activation, q, *rule, cfg.kernel) + p.sigma_b_sq;
}

/// Variance fixed point with its status. Positively homogeneous activations without bias
/// have a q-independent correlation map; their variance is scale free.
inline VarianceFixedPoint qstar_solve(const ChannelParams& p, const MftConfig& cfg = {}) {
  p.validate();
  const auto rule = detail::rule_of_order(cfg.quadrature_order);
  const auto& act = p.activation;
  if (act.positively_homogeneous) {
    const double gain = p.sigma_w_sq / p.rho * detail::second_moment(act, 1.0, *rule, cfg.kernel);
    if (p.sigma_b_sq == 0.0) {
      const bool marginal = std::fabs(gain - 1.0) <= 1e-15;
      return {cfg.scale_free_seed, marginal ? VarianceStatus::marginal : VarianceStatus::scale_free, 0};
    }
    require(gain < 1.0, ErrorKind::no_finite_fixed_point,
            "variance grows without bound: effective gain " + std::to_string(gain) + " >= 1 with nonzero bias");
    return {p.sigma_b_sq / (1.0 - gain), VarianceStatus::converged, 0};
  }

  auto map = [&](double q) {
    return p.sigma_w_sq / p.rho * detail::second_moment(act, q, *rule, cfg.kernel) + p.sigma_b_sq;
  };
  double q = std::max(p.sigma_b_sq, 1.0);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const double next = map(q);
    require(std::isfinite(next) && next <= cfg.divergence, ErrorKind::no_finite_fixed_point,
            "variance iterates exceed " + std::to_string(cfg.divergence));
    if (std::fabs(next - q) <= cfg.tol * std::max(1.0, q)) {
      require(next > 1e-12, ErrorKind::degenerate_input, "variance collapses to zero");
      return {next, VarianceStatus::converged, it};
    }
    q = (1.0 - cfg.damping) * q + cfg.damping * next;
  }
  // Bracketing fallback on map(q) - q.
  auto resid = [&](double x) { return map(x) - x; };
  double lo = std::max(p.sigma_b_sq, 1e-12);
  double hi = std::max(2.0 * q, 1.0);
  while (resid(hi) > 0.0) {
    hi *= 2.0;
    require(hi <= cfg.divergence, ErrorKind::no_finite_fixed_point, "no finite variance fixed point");
  }
  require(resid(lo) >= 0.0, ErrorKind::degenerate_input, "variance collapses to zero");
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(resid, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  return {0.5 * (r.first + r.second), VarianceStatus::converged, cfg.max_iter + static_cast<int>(iters)};
}

inline double qstar(const ChannelParams& p, const MftConfig& cfg = {}) { return qstar_solve(p, cfg).q; }

/// Anything the correlation fixed-point solver can drive: a gap map m -> 1 - F(1 - m),
/// its slope F'(1 - m), and the field h = G(0).
template <class C>
concept CorrelationChannel = requires(const C& ch, double m) {
  { ch.gap_map(m) } -> std::convertible_to<double>;
  { ch.slope(m) } -> std::convertible_to<double>;
  { ch.field() } -> std::convertible_to<double>;
};

/// The normalized correlation map of a dropout network at its variance fixed point.
/// Normalization is by the next-layer diagonal variance, which equals q* at the fixed point.
class GaussianChannel {
 public:
  explicit GaussianChannel(ChannelParams p, const MftConfig& cfg = {})
      : params_(std::move(p)), cfg_(cfg), rule_(detail::rule_of_order(cfg.quadrature_order)) {
    const auto vs = qstar_solve(params_, cfg_);
    q_ = vs.q;
    status_ = vs.status;
    second_moment_ = detail::second_moment(params_.activation, q_, *rule_, cfg_.kernel);
    next_variance_ = params_.sigma_w_sq / params_.rho * second_moment_ + params_.sigma_b_sq;
    h_ = (1.0 - params_.rho) / params_.rho * params_.sigma_w_sq * second_moment_ / next_variance_;
  }

  const ChannelParams& params() const { return params_; }
  const MftConfig& config() const { return cfg_; }
  double q() const { return q_; }
  VarianceStatus variance_status() const { return status_; }
  double field() const { return h_; }

  /// 1 - F(1 - m).
  double gap_map(double m) const {
    return h_ + params_.sigma_w_sq * detail::gap_kernel(params_.activation, q_, m, *rule_, cfg_.kernel) /
                    next_variance_;
  }

  double correlation_map(double c) const {
    require(std::fabs(c) <= 1.0, ErrorKind::invalid_argument,
            "correlation must lie in [-1, 1], got " + std::to_string(c));
    if (c == 1.0) return 1.0 - h_;
    return 1.0 - gap_map(1.0 - c);
  }

  /// F'(1 - m) from the Price derivative kernel.
  double slope(double m) const {
    return params_.sigma_w_sq * q_ * detail::derivative_kernel(params_.activation, q_, m, *rule_, cfg_.kernel) /
           next_variance_;
  }

  double chi() const { return slope(0.0); }

  Curvature curvature() const {
    require(!params_.activation.is_kinked() && params_.activation.second_deriv.has_value(),
            ErrorKind::class_mismatch, "curvature g is not finite for kinked activation '" +
                                           params_.activation.name + "'");
    const auto& d2 = *params_.activation.second_deriv;
    const double e = expect1([&](double u) { const double v = d2(u); return v * v; }, q_, *rule_, {}, cfg_.kernel);
    const double g = params_.sigma_w_sq * q_ * q_ * e / next_variance_;
    return {g, !(g > 1e-14)};
  }

 private:
  ChannelParams params_;
  MftConfig cfg_;
  std::shared_ptr<const QuadratureRule> rule_;
  double q_ = 1.0;
  VarianceStatus status_ = VarianceStatus::converged;
  double second_moment_ = 0.0;
  double next_variance_ = 1.0;
  double h_ = 0.0;
};

/// Normal-form detuning of the arc-cosine channel: G(m) = h + (1 + t) (1 - F_relu(1 - m)).
/// Bias-free ReLU with keep probability rho is the member t = rho - 1, h = 1 - rho.
class DetunedArcCosineChannel {
 public:
  DetunedArcCosineChannel(double t, double h) : t_(t), h_(h) {
    require(h >= 0.0, ErrorKind::invalid_argument, "field h must be nonnegative");
    require(1.0 + t > 0.0, ErrorKind::invalid_argument, "detuning must satisfy 1 + t > 0");
  }

  double detuning() const { return t_; }
  double field() const { return h_; }
  double chi() const { return 1.0 + t_; }
  double gap_map(double m) const { return h_ + (1.0 + t_) * relu_gap(m); }
  double slope(double m) const { return (1.0 + t_) * (1.0 - relu_slope_deficit(m)); }

 private:
  double t_;
  double h_;
};

/// Stable correlation fixed point reached from seed correlation c0, located by bracketing
/// the gap residual G(m) - m and refining with TOMS 748.
template <CorrelationChannel C>
FixedPointResult solve_fixed_point(const C& ch, double seed, double q_star, const MftConfig& cfg = {}) {
  require(std::fabs(seed) <= 1.0, ErrorKind::invalid_argument, "seed correlation must lie in [-1, 1]");
  int evals = 0;
  auto resid = [&](double m) {
    ++evals;
    return ch.gap_map(m) - m;
  };
  auto finish = [&](double m, bool ok) {
    FixedPointResult r;
    r.q_star = q_star;
    r.m = m;
    r.c_star = 1.0 - m;
    r.slope = ch.slope(m);
    r.xi = correlation_length(r.slope);
    r.converged = ok;
    r.iterations = evals;
    return r;
  };

  const double m0 = 1.0 - seed;
  const double r0 = resid(m0);
  if (r0 == 0.0) return finish(m0, true);
  double lo = m0;
  double hi = m0;
  double rlo = r0;
  double rhi = r0;
  if (r0 > 0.0) {
    hi = m0 == 0.0 ? 1e-300 : m0;
    while (rhi > 0.0) {
      lo = hi;
      rlo = rhi;
      hi = std::min(2.0, std::max(hi * 4.0, 1e-300));
      rhi = resid(hi);
      if (hi == 2.0 && rhi > 0.0) return finish(2.0, false);
    }
  } else {
    while (rlo < 0.0) {
      hi = lo;
      rhi = rlo;
      lo *= 0.1;
      if (lo < 1e-300) {
        lo = 0.0;
        rlo = resid(0.0);
        if (rlo <= 0.0) return finish(0.0, true);
        break;
      }
      rlo = resid(lo);
    }
  }
  if (rlo == 0.0) return finish(lo, true);
  if (rhi == 0.0) return finish(hi, true);
  std::uintmax_t iters = static_cast<std::uintmax_t>(cfg.gap_max_iter);
  const double tol = cfg.gap_tol;
  auto close = [tol](double a, double b) { return std::fabs(b - a) <= tol * std::max(std::fabs(a), std::fabs(b)); };
  const auto br = boost::math::tools::toms748_solve(resid, lo, hi, rlo, rhi, close, iters);
  const bool ok = iters < static_cast<std::uintmax_t>(cfg.gap_max_iter);
  const double m = std::fabs(resid(br.first)) <= std::fabs(resid(br.second)) ? br.first : br.second;
  return finish(m, ok);
}

inline FixedPointResult fixed_point(const ChannelParams& p, double seed = 0.5, const MftConfig& cfg = {}) {
  const GaussianChannel ch(p, cfg);
  return solve_fixed_point(ch, seed, ch.q(), cfg);
}

inline double dropout_field(const ChannelParams& p, const MftConfig& cfg = {}) {
  return GaussianChannel(p, cfg).field();
}

inline double chi(const ChannelParams& p, const MftConfig& cfg = {}) { return GaussianChannel(p, cfg).chi(); }

inline Curvature curvature_g(const ChannelParams& p, const MftConfig& cfg = {}) {
  require(!p.activation.is_kinked(), ErrorKind::class_mismatch,
          "curvature g is not finite for kinked activation '" + p.activation.name + "'");
  return GaussianChannel(p, cfg).curvature();
}

inline double correlation_map(const ChannelParams& p, double c, const MftConfig& cfg = {}) {
  require(std::fabs(c) <= 1.0, ErrorKind::invalid_argument, "correlation must lie in [-1, 1]");
  return GaussianChannel(p, cfg).correlation_map(c);
}

/// Slope of the correlation map by finite differences: centered with step min(1e-6, m/10),
/// one-sided into the domain at c = 1.
template <CorrelationChannel C>
double slope_finite_difference(const C& ch, double m) {
  if (m == 0.0) {
    const double s = 1e-6;
    // F(1) - F(1 - s) = G(s) - G(0)
    return (ch.gap_map(s) - ch.gap_map(0.0)) / s;
  }
  const double s = std::min(1e-6, m / 10.0);
  return (ch.gap_map(m + s) - ch.gap_map(m - s)) / (2.0 * s);
}

struct TrajectoryPoint {
  long layer = 0;
  double c = 1.0;
  double m = 0.0;
};

/// L applications of the correlation map starting from c0. When `points_per_decade`
/// is positive, only layers on a geometric grid with that many points per decade are kept.
template <CorrelationChannel C>
std::vector<TrajectoryPoint> iterate_channel(const C& ch, double c0, long depth, int points_per_decade = 0) {
  require(std::fabs(c0) <= 1.0, ErrorKind::invalid_argument, "initial correlation must lie in [-1, 1]");
  require(depth >= 0, ErrorKind::invalid_argument, "depth must be nonnegative");
  std::vector<TrajectoryPoint> out;
  double m = 1.0 - c0;
  out.push_back({0, c0, m});
  double next_record = 1.0;
  for (long l = 1; l <= depth; ++l) {
    m = ch.gap_map(m);
    if (points_per_decade <= 0) {
      out.push_back({l, 1.0 - m, m});
    } else if (static_cast<double>(l) >= next_record || l == depth) {
      out.push_back({l, 1.0 - m, m});
      while (next_record <= static_cast<double>(l)) {
        next_record = std::max(next_record + 1.0, std::ceil(next_record * std::pow(10.0, 1.0 / points_per_decade)));
      }
    }
  }
  return out;
}

inline std::vector<TrajectoryPoint> iterate(const ChannelParams& p, double c0, long depth, const MftConfig& cfg = {}) {
  return iterate_channel(GaussianChannel(p, cfg), c0, depth);
}

/// sigma_w^2 at which chi equals 1 + t for the given bias and keep probability.
inline double tune_sigma_w(const ActivationSpec& act, double sigma_b_sq, double rho, double t,
                           const MftConfig& cfg = {}) {
  auto params_at = [&](double sw) { return ChannelParams{sw, sigma_b_sq, rho, act}; };
  if (act.positively_homogeneous && sigma_b_sq == 0.0) {
    // The scale-free map has chi = rho * E[phi'^2] / E[phi^2] at unit variance regardless of sigma_w^2.
    const auto rule = detail::rule_of_order(cfg.quadrature_order);
    const double e2 = detail::second_moment(act, 1.0, *rule, cfg.kernel);
    const double slope = price_moments(act, 1.0, *rule, cfg.kernel).first;
    const double chi_sf = rho * slope / e2;
    require(std::fabs(chi_sf - (1.0 + t)) <= cfg.chi_tol, ErrorKind::no_critical_point,
            "bias-free homogeneous channel has sigma-independent chi = " + std::to_string(chi_sf));
    return rho / e2;  // unit variance gain
  }
  auto f = [&](double sw) {
    try {
      return GaussianChannel(params_at(sw), cfg).chi() - (1.0 + t);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::no_finite_fixed_point) return std::numeric_limits<double>::infinity();
      throw;
    }
  };
  const double flo = f(cfg.sigma_lo);
  const double fhi = f(cfg.sigma_hi);
  require(std::isfinite(flo) && std::isfinite(fhi) && flo < 0.0 && fhi > 0.0, ErrorKind::no_critical_point,
          "chi - 1 - t has no sign change on [" + std::to_string(cfg.sigma_lo) + ", " + std::to_string(cfg.sigma_hi) + "]");
  std::uintmax_t iters = 200;
  const auto br = boost::math::tools::toms748_solve(f, cfg.sigma_lo, cfg.sigma_hi, flo, fhi,
                                                    boost::math::tools::eps_tolerance<double>(52), iters);
  const double sw = std::fabs(f(br.first)) <= std::fabs(f(br.second)) ? br.first : br.second;
  const double err = f(sw);
  require(std::fabs(err) <= cfg.chi_tol, ErrorKind::no_critical_point,
          "criticality residual " + std::to_string(err) + " exceeds tolerance");
  return sw;
}

inline double critical_sigma_w(const ActivationSpec& act, double sigma_b_sq, double rho = 1.0,
                               const MftConfig& cfg = {}) {
  if (act.positively_homogeneous && sigma_b_sq == 0.0) {
    require(rho == 1.0, ErrorKind::no_critical_point,
            "bias-free homogeneous activation with dropout has chi = rho < 1 for every sigma_w^2");
  }
  return tune_sigma_w(act, sigma_b_sq, rho, 0.0, cfg);
}

/// Keep probability rho in (0, 1] whose dropout field equals h, with sigma_w^2 retuned at each
/// rho so that chi = 1 + t. Works in d = 1 - rho to keep precision for small fields.
inline ChannelParams tune_theory_point(const ActivationSpec& act, double sigma_b_sq, double t, double h,
                                       const MftConfig& cfg = {}) {
  require(h >= 0.0, ErrorKind::invalid_argument, "field h must be nonnegative");
  auto params_at = [&](double d) {
    const double rho = 1.0 - d;
    return ChannelParams{tune_sigma_w(act, sigma_b_sq, rho, t, cfg), sigma_b_sq, rho, act};
  };
  if (h == 0.0) return params_at(0.0);
  auto f = [&](double d) { return GaussianChannel(params_at(d), cfg).field() - h; };
  double lo = 0.0;
  double flo = -h;
  double hi = h;
  double fhi = f(hi);
  while (fhi < 0.0) {
    lo = hi;
    flo = fhi;
    hi = std::min(0.99, 2.0 * hi);
    fhi = f(hi);
    require(fhi >= 0.0 || hi < 0.99, ErrorKind::unreachable_field, "field " + std::to_string(h) + " is unreachable");
  }
  std::uintmax_t iters = 200;
  const auto br = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(50), iters);
  return params_at(std::fabs(f(br.first)) <= std::fabs(f(br.second)) ? br.first : br.second);
}

}  // namespace dmft
