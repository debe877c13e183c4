// SPDX-License-Identifier: Apache-2.0
//
// Depth profiles of the dropout field at a fixed mean budget.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "dmft/activations.hpp"
#include "dmft/mft.hpp"

namespace dmft {

struct ScheduleProfile {
  std::vector<double> h_per_layer;
  int L = 0;
  double h_bar = 0.0;
  double h_max = 0.0;
  std::string label;

  void validate(double tol = 1e-12) const {
    require(L >= 1 && static_cast<int>(h_per_layer.size()) == L, ErrorKind::invalid_argument,
            "profile length does not match depth");
    require(h_max > 0.0, ErrorKind::invalid_argument, "h_max must be positive");
    double sum = 0.0;
    for (double h : h_per_layer) {
      require(h >= 0.0 && h <= h_max * (1.0 + tol), ErrorKind::invalid_argument, "layer field outside [0, h_max]");
      sum += h;
    }
    require(std::fabs(sum / L - h_bar) <= tol, ErrorKind::invalid_argument, "profile mean differs from h_bar");
  }
};

struct ReachWeights {
  std::vector<double> weights;
  double xi_c = 0.0;
  int L = 0;
};

/// Prefactor of h^p in the per-layer decay rate at t = 0: sqrt(2 g) or (3/2) kappa^{2/3}.
inline double decay_coefficient(Smoothness cls, double g_or_kappa) {
  require(g_or_kappa > 0.0, ErrorKind::invalid_argument, "class coefficient must be positive");
  return cls == Smoothness::smooth ? std::sqrt(2.0 * g_or_kappa) : 1.5 * std::cbrt(g_or_kappa * g_or_kappa);
}

inline double decay_power(Smoothness cls) { return cls == Smoothness::smooth ? 0.5 : 1.0 / 3.0; }

/// Inverse mean per-layer decay rate. Terms are summed in sorted order so the value is
/// invariant under permutations of the profile.
inline double xi_eff(const std::vector<double>& h, Smoothness cls, double coeff) {
  require(!h.empty(), ErrorKind::invalid_argument, "profile is empty");
  require(coeff > 0.0, ErrorKind::invalid_argument, "decay coefficient must be positive");
  std::vector<double> terms;
  terms.reserve(h.size());
  const double p = decay_power(cls);
  for (double v : h) {
    require(v >= 0.0 && std::isfinite(v), ErrorKind::invalid_argument, "negative layer field");
    terms.push_back(v == 0.0 ? 0.0 : coeff * std::pow(v, p));
  }
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double x : terms) sum += x;
  if (sum == 0.0) return infinite_length;
  return static_cast<double>(h.size()) / sum;
}

inline double xi_eff(const ScheduleProfile& prof, Smoothness cls, double coeff) {
  return xi_eff(prof.h_per_layer, cls, coeff);
}

namespace detail {

inline void require_budget(double h_bar, double h_max, int L) {
  require(L >= 1, ErrorKind::invalid_argument, "depth must be positive");
  require(h_max > 0.0, ErrorKind::invalid_argument, "h_max must be positive");
  require(h_bar >= 0.0, ErrorKind::invalid_argument, "h_bar must be nonnegative");
  require(h_bar <= h_max, ErrorKind::infeasible_budget,
          "budget h_bar=" + std::to_string(h_bar) + " exceeds the cap h_max=" + std::to_string(h_max));
}

// Fills layers in the given order at h_max until L * h_bar is spent; one partial layer takes the remainder.
inline std::vector<double> saturated_fill(double h_bar, double h_max, int L, const std::vector<int>& order) {
  std::vector<double> h(static_cast<std::size_t>(L), 0.0);
  double remaining = h_bar * L;
  for (int idx : order) {
    if (remaining <= 0.0) break;
    const double take = std::min(h_max, remaining);
    // snap the last partial layer so round-off leaves no sliver behind, and never past the cap
    const bool last = remaining - take <= 1e-12 * h_max;
    h[static_cast<std::size_t>(idx)] = last ? std::min(remaining, h_max) : take;
    remaining = last ? 0.0 : remaining - take;
  }
  return h;
}

inline std::vector<int> ascending(int L) {
  std::vector<int> o(static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) o[static_cast<std::size_t>(i)] = i;
  return o;
}

}  // namespace detail

/// h_max on the first f L layers (f = h_bar / h_max), zero elsewhere.
inline ScheduleProfile optimal_step(double h_bar, double h_max, int L) {
  detail::require_budget(h_bar, h_max, L);
  return {detail::saturated_fill(h_bar, h_max, L, detail::ascending(L)), L, h_bar, h_max, "step_early"};
}

/// Ratio of step to uniform xi_eff at equal budget.
inline double step_vs_uniform_ratio(double h_bar, double h_max, Smoothness cls) {
  require(h_bar > 0.0, ErrorKind::invalid_argument, "h_bar must be positive");
  detail::require_budget(h_bar, h_max, 1);
  const double r = h_max / h_bar;
  return cls == Smoothness::smooth ? std::sqrt(r) : std::pow(r, 2.0 / 3.0);
}

/// w_l = xi_c (1 - exp(-(L - l) / xi_c)), l = 1..L.
inline ReachWeights reach_weights(int L, double xi_c) {
  require(L >= 1, ErrorKind::invalid_argument, "depth must be positive");
  require(xi_c > 0.0, ErrorKind::invalid_argument, "xi_c must be positive");
  ReachWeights w{std::vector<double>(static_cast<std::size_t>(L)), xi_c, L};
  for (int l = 1; l <= L; ++l) {
    w.weights[static_cast<std::size_t>(l - 1)] = -xi_c * std::expm1(-static_cast<double>(L - l) / xi_c);
  }
  return w;
}

/// Sum of h_l w_l.
inline double reach_value(const std::vector<double>& h, const ReachWeights& w) {
  require(h.size() == w.weights.size(), ErrorKind::invalid_argument, "profile and weights differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) s += h[i] * w.weights[i];
  return s;
}

/// Maximizer of the linear reach objective under the box and budget constraints.
inline ScheduleProfile frontload_lp(double h_bar, double h_max, const ReachWeights& w) {
  detail::require_budget(h_bar, h_max, w.L);
  auto order = detail::ascending(w.L);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return w.weights[static_cast<std::size_t>(a)] > w.weights[static_cast<std::size_t>(b)];
  });
  return {detail::saturated_fill(h_bar, h_max, w.L, order), w.L, h_bar, h_max, "frontload_lp"};
}

enum class ScheduleKind { none, constant, linear_inc, linear_dec, step_early, step_late, big_step };

inline const char* to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::none: return "none";
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::linear_inc: return "linear_inc";
    case ScheduleKind::linear_dec: return "linear_dec";
    case ScheduleKind::step_early: return "step_early";
    case ScheduleKind::step_late: return "step_late";
    case ScheduleKind::big_step: return "big_step";
  }
  return "?";
}

inline ScheduleKind parse_schedule_kind(const std::string& s) {
  for (auto k : {ScheduleKind::none, ScheduleKind::constant, ScheduleKind::linear_inc, ScheduleKind::linear_dec,
                 ScheduleKind::step_early, ScheduleKind::step_late, ScheduleKind::big_step}) {
    if (s == to_string(k)) return k;
  }
  fail(ErrorKind::invalid_argument, "unknown schedule kind '" + s + "'");
}

/// The named depth profiles. Step kinds saturate h_max; big_step is the step profile
/// with the cap the caller passes (3 h_bar in the reference table).
inline ScheduleProfile schedule_library(ScheduleKind kind, double h_bar, double h_max, int L) {
  require(L >= 1, ErrorKind::invalid_argument, "depth must be positive");
  ScheduleProfile p{std::vector<double>(static_cast<std::size_t>(L), 0.0), L, h_bar, h_max, to_string(kind)};
  switch (kind) {
    case ScheduleKind::none:
      require(h_max > 0.0, ErrorKind::invalid_argument, "h_max must be positive");
      p.h_bar = 0.0;
      return p;
    case ScheduleKind::constant:
      detail::require_budget(h_bar, h_max, L);
      std::fill(p.h_per_layer.begin(), p.h_per_layer.end(), h_bar);
      return p;
    case ScheduleKind::linear_inc:
    case ScheduleKind::linear_dec: {
      require(L >= 2, ErrorKind::invalid_argument, "linear profiles need at least two layers");
      detail::require_budget(2.0 * h_bar, h_max, L);
      for (int l = 1; l <= L; ++l) {
        const int pos = kind == ScheduleKind::linear_inc ? l - 1 : L - l;
        p.h_per_layer[static_cast<std::size_t>(l - 1)] = 2.0 * h_bar * pos / (L - 1);
      }
      return p;
    }
    case ScheduleKind::step_early:
    case ScheduleKind::big_step: {
      auto s = optimal_step(h_bar, h_max, L);
      s.label = to_string(kind);
      return s;
    }
    case ScheduleKind::step_late: {
      auto s = optimal_step(h_bar, h_max, L);
      std::reverse(s.h_per_layer.begin(), s.h_per_layer.end());
      s.label = to_string(kind);
      return s;
    }
  }
  fail(ErrorKind::invalid_argument, "unknown schedule kind");
}

/// Continuum ratio of front-loaded step to constant reach at equal budget, tau = L / xi_c.
inline double reach_ratio(double tau, double f) {
  require(tau > 0.0 && std::isfinite(tau), ErrorKind::invalid_argument, "tau must be positive");
  require(f > 0.0 && f <= 1.0, ErrorKind::invalid_argument, "active fraction must lie in (0, 1]");
  if (f == 1.0) return 1.0;
  // int_0^f (1 - e^{-tau (1-x)}) dx = f - (e^{-tau(1-f)} - e^{-tau}) / tau
  if (tau < 1e-4) {
    // both integrals are O(tau); expand to first order in tau to avoid cancellation
    const double num = f - f * f / 2.0 - tau * (f / 2.0 - f * f / 2.0 + f * f * f / 6.0);
    const double den = 0.5 - tau / 6.0;
    return num / (f * den);
  }
  const double step = f + (std::expm1(-tau) - std::expm1(-tau * (1.0 - f))) / tau;
  const double flat = 1.0 + std::expm1(-tau) / tau;
  return step / (f * flat);
}

/// Discrete reach ratio with L layers and per-layer decay xi_c = L / tau; validation oracle
/// for the continuum form.
inline double reach_ratio_discrete(double tau, double f, int L) {
  require(L >= 2, ErrorKind::invalid_argument, "depth must be at least 2");
  const auto w = reach_weights(L, static_cast<double>(L) / tau);
  const double h_bar = f;
  const auto step = optimal_step(h_bar, 1.0, L);
  const std::vector<double> flat(static_cast<std::size_t>(L), h_bar);
  return reach_value(step.h_per_layer, w) / reach_value(flat, w);
}

/// Random profile with 0 <= h_l <= h_max and mean h_bar: uniform draws shifted by the common
/// offset that restores the budget after clipping to the box.
inline std::vector<double> random_feasible_profile(std::mt19937_64& rng, double h_bar, double h_max, int L) {
  detail::require_budget(h_bar, h_max, L);
  std::uniform_real_distribution<double> unif(0.0, h_max);
  std::vector<double> u(static_cast<std::size_t>(L));
  for (double& x : u) x = unif(rng);
  auto shifted_mean = [&](double lam) {
    double s = 0.0;
    for (double x : u) s += std::clamp(x + lam, 0.0, h_max);
    return s / L;
  };
  double lo = -h_max;
  double hi = h_max;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (shifted_mean(mid) < h_bar ? lo : hi) = mid;
  }
  std::vector<double> h(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) h[i] = std::clamp(u[i] + 0.5 * (lo + hi), 0.0, h_max);
  return h;
}

/// Keep probability realizing the field h for the given channel parameters (rho is ignored).
inline double h_to_keep_prob(double h, const ChannelParams& params, const MftConfig& cfg = {}) {
  require(h >= 0.0, ErrorKind::invalid_argument, "field h must be nonnegative");
  if (h == 0.0) return 1.0;
  auto field_at = [&](double d) {
    ChannelParams p = params;
    p.rho = 1.0 - d;
    return GaussianChannel(p, cfg).field();
  };
  const double d_max = 1.0 - 1e-6;
  const double sup = field_at(d_max);
  require(h <= sup, ErrorKind::unreachable_field,
          "field " + std::to_string(h) + " exceeds the supremum " + std::to_string(sup) + " over rho");
  auto f = [&](double d) { return field_at(d) - h; };
  std::uintmax_t iters = 200;
  const auto br = boost::math::tools::toms748_solve(f, 0.0, d_max, -h, sup - h,
                                                    boost::math::tools::eps_tolerance<double>(52), iters);
  const double d = std::fabs(f(br.first)) <= std::fabs(f(br.second)) ? br.first : br.second;
  return 1.0 - d;
}

}  // namespace dmft
