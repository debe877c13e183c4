// SPDX-License-Identifier: Apache-2.0
//
// Exponent sweeps over the full mean-field recursion and log-log fits.
#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dmft/activations.hpp"
#include "dmft/landau.hpp"
#include "dmft/mft.hpp"

namespace dmft {

struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;
  double std_error = 0.0;
  double r_squared = 0.0;
  int n_points = 0;
};

/// Ordinary least squares of log y on log x.
inline PowerLawFit fit_power_law(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size(), ErrorKind::invalid_argument, "x and y must have equal length");
  require(xs.size() >= 5, ErrorKind::insufficient_data, "power-law fit needs at least 5 points");
  const auto n = static_cast<double>(xs.size());
  std::vector<double> lx(xs.size());
  std::vector<double> ly(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    require(xs[i] > 0.0 && ys[i] > 0.0 && std::isfinite(xs[i]) && std::isfinite(ys[i]),
            ErrorKind::invalid_argument, "power-law fit needs positive finite data");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  require(sxx > 0.0, ErrorKind::degenerate_input, "x values are all equal");
  PowerLawFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (f.intercept + f.slope * lx[i]);
    sse += r * r;
  }
  f.std_error = std::sqrt(sse / (n - 2.0) / sxx);
  f.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  f.n_points = static_cast<int>(xs.size());
  return f;
}

inline std::vector<double> logspace(double lo, double hi, int n) {
  require(lo > 0.0 && hi > lo && n >= 2, ErrorKind::invalid_argument, "logspace needs 0 < lo < hi and n >= 2");
  std::vector<double> out(static_cast<std::size_t>(n));
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (n - 1));
  return out;
}

enum class SweptVariable { t, h, depth };
enum class Response { m, xi };

inline const char* to_string(SweptVariable v) {
  switch (v) {
    case SweptVariable::t: return "t";
    case SweptVariable::h: return "h";
    case SweptVariable::depth: return "depth";
  }
  return "?";
}

inline const char* to_string(Response r) { return r == Response::m ? "m" : "xi"; }

/// One sweep of the full recursion: grid values and the measured response.
struct SweepSpec {
  std::string activation;
  SweptVariable variable = SweptVariable::t;
  std::vector<double> grid;
  std::map<std::string, double> fixed;
  Response response = Response::m;
  std::string path;  // how the microscopic points realize the grid

  void validate() const {
    require(!grid.empty(), ErrorKind::invalid_argument, "sweep grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      require(grid[i] > 0.0, ErrorKind::invalid_argument, "sweep grid must be positive");
      if (i > 0) require(grid[i] > grid[i - 1], ErrorKind::invalid_argument, "sweep grid must be sorted");
    }
  }
};

struct ExponentFit {
  std::string name;
  std::string activation;
  double estimate = 0.0;
  double std_error = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  int n_points = 0;
  double r_squared = 0.0;
  double theory = 0.0;
  double reference = 0.0;        // iterated-recursion fit reported in the literature
  double reference_error = 0.0;
  double accept_lo = 0.0;
  double accept_hi = 0.0;
  bool window_flagged = false;   // r_squared <= 0.999
  SweepSpec sweep;
  std::vector<double> response;  // aligned with the surviving grid values in sweep.grid

  bool accepted() const { return estimate >= accept_lo && estimate <= accept_hi; }
};

struct LabConfig {
  double tanh_sigma_b_sq = 0.05;   // bias of the smooth sweeps
  double relu_sigma_b_sq = 0.02;   // bias of the biased-ReLU detuning sweep
  std::vector<double> t_grid = logspace(1e-5, 1e-2, 20);
  std::vector<double> h_grid = logspace(1e-6, 1e-3, 20);
  long smooth_depth = 10000;
  long kinked_depth = 100000;
  int depth_points_per_decade = 20;
  double depth_window_fraction = 0.1;  // fit over [fraction * depth, depth]
  double seed_correlation = 0.5;
  MftConfig mft;
};

namespace detail {

struct ExponentTarget {
  double theory;
  double reference;
  double reference_error;
  double lo;
  double hi;
};

inline ExponentTarget exponent_target(const std::string& name, Smoothness cls) {
  const bool s = cls == Smoothness::smooth;
  if (name == "nu_t") return {1.0, 1.0190, 0.0014, 0.95, 1.05};
  if (name == "beta") return s ? ExponentTarget{1.0, 0.9879, 0.0007, 0.95, 1.05} : ExponentTarget{2.0, 1.9642, 0.0019, 1.9, 2.1};
  if (name == "theta_rel") return s ? ExponentTarget{1.0, 1.0048, 0.0, 0.98, 1.02} : ExponentTarget{2.0, 1.9870, 0.0001, 1.97, 2.03};
  if (name == "1/delta") return s ? ExponentTarget{0.5, 0.5171, 0.0007, 0.48, 0.54} : ExponentTarget{2.0 / 3.0, 0.6656, 0.0001, 0.63, 0.70};
  if (name == "nu_rho") return s ? ExponentTarget{0.5, 0.4716, 0.0014, 0.45, 0.55} : ExponentTarget{1.0 / 3.0, 0.3528, 0.0010, 0.30, 0.37};
  fail(ErrorKind::invalid_argument, "unknown exponent '" + name + "'");
}

inline void require_nondegenerate(const ActivationSpec& act, const MftConfig& cfg) {
  if (act.is_kinked()) return;
  require(act.second_deriv.has_value(), ErrorKind::class_mismatch, "smooth activation lacks phi''");
  const auto& d2 = *act.second_deriv;
  const double e = expect1([&](double u) { const double v = d2(u); return v * v; }, 1.0, default_rule(), {}, cfg.kernel);
  require(e > 1e-14, ErrorKind::degenerate_input,
          "activation '" + act.name + "' has vanishing curvature; the quadratic term is absent");
}

inline ExponentFit make_fit(const std::string& name, const ActivationSpec& act, SweepSpec sweep,
                            const std::vector<double>& xs, const std::vector<double>& ys, double sign) {
  require(xs.size() >= 5, ErrorKind::insufficient_data,
          name + " sweep for " + act.name + " kept only " + std::to_string(xs.size()) + " points");
  const auto pf = fit_power_law(xs, ys);
  const auto tgt = exponent_target(name, act.smoothness);
  ExponentFit f;
  f.name = name;
  f.activation = act.name;
  f.estimate = sign * pf.slope;
  f.std_error = pf.std_error;
  f.window_lo = xs.front();
  f.window_hi = xs.back();
  f.n_points = pf.n_points;
  f.r_squared = pf.r_squared;
  f.theory = tgt.theory;
  f.reference = tgt.reference;
  f.reference_error = tgt.reference_error;
  f.accept_lo = tgt.lo;
  f.accept_hi = tgt.hi;
  f.window_flagged = !(pf.r_squared > 0.999);
  sweep.grid = xs;
  f.sweep = std::move(sweep);
  f.response = ys;
  return f;
}

}  // namespace detail

/// m* versus t > 0 at h = 0.
inline ExponentFit measure_beta(const ActivationSpec& act, const LabConfig& cfg = {}) {
  detail::require_nondegenerate(act, cfg.mft);
  SweepSpec sw{act.name, SweptVariable::t, cfg.t_grid, {{"h", 0.0}}, Response::m, ""};
  std::vector<double> xs;
  std::vector<double> ys;
  for (double t : cfg.t_grid) {
    std::optional<FixedPointResult> fp;
    if (act.is_kinked()) {
      sw.path = "detuned arc-cosine normal form, h = 0";
      fp = solve_fixed_point(DetunedArcCosineChannel(t, 0.0), cfg.seed_correlation, 1.0, cfg.mft);
    } else {
      sw.path = "rho = 1, sigma_w^2 tuned to chi = 1 + t";
      sw.fixed["sigma_b_sq"] = cfg.tanh_sigma_b_sq;
      const GaussianChannel ch(ChannelParams{tune_sigma_w(act, cfg.tanh_sigma_b_sq, 1.0, t, cfg.mft),
                                             cfg.tanh_sigma_b_sq, 1.0, act},
                               cfg.mft);
      fp = solve_fixed_point(ch, cfg.seed_correlation, ch.q(), cfg.mft);
    }
    if (fp->converged && fp->m > 0.0) {
      xs.push_back(t);
      ys.push_back(fp->m);
    }
  }
  return detail::make_fit("beta", act, sw, xs, ys, 1.0);
}

/// xi versus |t| on the subcritical side at h = 0.
inline ExponentFit measure_nu_t(const ActivationSpec& act, const LabConfig& cfg = {}) {
  SweepSpec sw{act.name, SweptVariable::t, cfg.t_grid, {{"h", 0.0}}, Response::xi, ""};
  std::vector<double> xs;
  std::vector<double> ys;
  for (double t : cfg.t_grid) {
    ChannelParams p;
    if (act.is_kinked()) {
      sw.path = "biased kinked channel, rho = 1, sigma_w^2 = chi / E[phi'^2]";
      sw.fixed["sigma_b_sq"] = cfg.relu_sigma_b_sq;
      const double slope_moment = price_moments(act, 1.0).first;
      p = ChannelParams{(1.0 - t) / slope_moment, cfg.relu_sigma_b_sq, 1.0, act};
    } else {
      sw.path = "rho = 1, sigma_w^2 tuned to chi = 1 - |t|";
      sw.fixed["sigma_b_sq"] = cfg.tanh_sigma_b_sq;
      p = ChannelParams{tune_sigma_w(act, cfg.tanh_sigma_b_sq, 1.0, -t, cfg.mft), cfg.tanh_sigma_b_sq, 1.0, act};
    }
    const GaussianChannel ch(p, cfg.mft);
    const auto fp = solve_fixed_point(ch, cfg.seed_correlation, ch.q(), cfg.mft);
    if (fp.converged && std::isfinite(fp.xi) && fp.xi > 0.0) {
      xs.push_back(t);
      ys.push_back(fp.xi);
    }
  }
  return detail::make_fit("nu_t", act, sw, xs, ys, -1.0);
}

namespace detail {

struct FieldSample {
  double h = 0.0;
  FixedPointResult fp;
};

// Fixed points at t = 0 (smooth) or along the constrained path t = -h (bias-free kinked).
inline std::vector<FieldSample> field_sweep(const ActivationSpec& act, const LabConfig& cfg, SweepSpec& sw) {
  std::vector<FieldSample> out;
  for (double h : cfg.h_grid) {
    if (act.is_kinked()) {
      sw.path = "constrained path t = -h (bias-free, rho = 1 - h)";
      const double slope_moment = price_moments(act, 1.0).first;
      const double rho = 1.0 - h;
      const GaussianChannel ch(ChannelParams{1.0 / slope_moment, 0.0, rho, act}, cfg.mft);
      out.push_back({ch.field(), solve_fixed_point(ch, cfg.seed_correlation, ch.q(), cfg.mft)});
    } else {
      sw.path = "t = 0, rho solved for h, sigma_w^2 retuned to chi = 1";
      sw.fixed["sigma_b_sq"] = cfg.tanh_sigma_b_sq;
      const GaussianChannel ch(tune_theory_point(act, cfg.tanh_sigma_b_sq, 0.0, h, cfg.mft), cfg.mft);
      out.push_back({ch.field(), solve_fixed_point(ch, cfg.seed_correlation, ch.q(), cfg.mft)});
    }
  }
  return out;
}

}  // namespace detail

/// m* versus h at t = 0; the estimate is 1/delta.
inline ExponentFit measure_delta(const ActivationSpec& act, const LabConfig& cfg = {}) {
  detail::require_nondegenerate(act, cfg.mft);
  SweepSpec sw{act.name, SweptVariable::h, cfg.h_grid, {{"t", 0.0}}, Response::m, ""};
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& s : detail::field_sweep(act, cfg, sw)) {
    if (s.fp.converged && s.fp.m > 0.0) {
      xs.push_back(s.h);
      ys.push_back(s.fp.m);
    }
  }
  return detail::make_fit("1/delta", act, sw, xs, ys, 1.0);
}

/// xi versus h at t = 0.
inline ExponentFit measure_nu_rho(const ActivationSpec& act, const LabConfig& cfg = {}) {
  detail::require_nondegenerate(act, cfg.mft);
  SweepSpec sw{act.name, SweptVariable::h, cfg.h_grid, {{"t", 0.0}}, Response::xi, ""};
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& s : detail::field_sweep(act, cfg, sw)) {
    if (s.fp.converged && std::isfinite(s.fp.xi) && s.fp.xi > 0.0) {
      xs.push_back(s.h);
      ys.push_back(s.fp.xi);
    }
  }
  return detail::make_fit("nu_rho", act, sw, xs, ys, -1.0);
}

/// m_l versus depth l at exact criticality without dropout, fitted over the late window.
inline ExponentFit measure_theta_rel(const ActivationSpec& act, const LabConfig& cfg = {}) {
  detail::require_nondegenerate(act, cfg.mft);
  const long depth = act.is_kinked() ? cfg.kinked_depth : cfg.smooth_depth;
  const double sb = act.is_kinked() ? 0.0 : cfg.tanh_sigma_b_sq;
  const double sw2 = critical_sigma_w(act, sb, 1.0, cfg.mft);
  const GaussianChannel ch(ChannelParams{sw2, sb, 1.0, act}, cfg.mft);
  const auto traj = iterate_channel(ch, cfg.seed_correlation, depth, cfg.depth_points_per_decade);
  SweepSpec sw{act.name, SweptVariable::depth, {}, {{"t", 0.0}, {"h", 0.0}, {"sigma_b_sq", sb}}, Response::m,
               "rho = 1, sigma_w^2 critical, c0 = " + std::to_string(cfg.seed_correlation)};
  std::vector<double> xs;
  std::vector<double> ys;
  const double start = cfg.depth_window_fraction * static_cast<double>(depth);
  for (const auto& p : traj) {
    if (static_cast<double>(p.layer) >= start && p.m > 0.0) {
      xs.push_back(static_cast<double>(p.layer));
      ys.push_back(p.m);
    }
  }
  return detail::make_fit("theta_rel", act, sw, xs, ys, -1.0);
}

inline ExponentFit measure_exponent(const std::string& name, const ActivationSpec& act, const LabConfig& cfg = {}) {
  if (name == "beta") return measure_beta(act, cfg);
  if (name == "nu_t") return measure_nu_t(act, cfg);
  if (name == "1/delta" || name == "delta") return measure_delta(act, cfg);
  if (name == "nu_rho") return measure_nu_rho(act, cfg);
  if (name == "theta_rel") return measure_theta_rel(act, cfg);
  fail(ErrorKind::invalid_argument, "unknown exponent '" + name + "'");
}

inline std::vector<std::string> exponent_names() { return {"nu_t", "beta", "theta_rel", "1/delta", "nu_rho"}; }

struct ExponentReport {
  std::vector<ExponentFit> fits;
  std::vector<std::string> failures;

  bool all_accepted() const {
    if (!failures.empty()) return false;
    for (const auto& f : fits) {
      if (!f.accepted()) return false;
    }
    return true;
  }
};

/// Every sweep for tanh and ReLU.
inline ExponentReport exponent_report(const LabConfig& cfg = {}) {
  ExponentReport rep;
  for (const auto& act : {make_tanh(), make_relu()}) {
    for (const auto& name : exponent_names()) {
      try {
        rep.fits.push_back(measure_exponent(name, act, cfg));
      } catch (const Error& e) {
        rep.failures.push_back(act.name + " " + name + ": " + e.what());
      }
    }
  }
  return rep;
}

/// Full-recursion points on a (t, h) grid for the smooth collapse. Points are given in
/// rescaled detuning x = -t / sqrt(2 g h); g is the curvature at the undeformed critical point.
inline std::vector<CollapseInput> sample_collapse_smooth(const ActivationSpec& act, double sigma_b_sq,
                                                         const std::vector<double>& xs, const std::vector<double>& hs,
                                                         double g, const MftConfig& cfg = {}) {
  std::vector<CollapseInput> out;
  for (double h : hs) {
    for (double x : xs) {
      const double t = -x * std::sqrt(2.0 * g * h);
      const GaussianChannel ch(tune_theory_point(act, sigma_b_sq, t, h, cfg), cfg);
      const auto fp = solve_fixed_point(ch, 0.5, ch.q(), cfg);
      out.push_back({ch.chi() - 1.0, ch.field(), fp.m});
    }
  }
  return out;
}

/// Detuned arc-cosine points on a (u, h) grid for the kinked collapse.
inline std::vector<CollapseInput> sample_collapse_kinked(const std::vector<double>& us, const std::vector<double>& hs,
                                                         const MftConfig& cfg = {}) {
  const double kappa = relu_kappa();
  std::vector<CollapseInput> out;
  for (double h : hs) {
    for (double u : us) {
      const double t = u * std::cbrt(kappa * kappa) * std::cbrt(h);
      const DetunedArcCosineChannel ch(t, h);
      const auto fp = solve_fixed_point(ch, 0.5, 1.0, cfg);
      out.push_back({t, h, fp.m});
    }
  }
  return out;
}

}  // namespace dmft
