// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance checks shared by the acceptance binary and `dmft report`.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <cstdio>
#include <tuple>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dmft/criticality_lab.hpp"
#include "dmft/finite_width.hpp"
#include "dmft/hermite.hpp"
#include "dmft/io.hpp"
#include "dmft/landau.hpp"
#include "dmft/scheduler.hpp"

namespace dmft {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  json metrics = json::object();
};

struct AcceptanceOptions {
  std::set<int> only;            // empty runs every criterion
  LabConfig lab;
  double tanh_sigma_b_sq = 0.05;
  std::uint64_t seed = 7;
};

namespace acceptance {

inline std::string fmt(double v) { return format_number(v); }

inline std::string fmt_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fs", s);
  return buf;
}

inline CriterionResult criticality_constants(const AcceptanceOptions&) {
  CriterionResult r{1, "criticality constants", true, "", 0.0, json::object()};
  std::ostringstream d;
  const double sw = critical_sigma_w(make_relu(), 0.0, 1.0);
  const bool sw_ok = std::fabs(sw - 2.0) <= 1e-10;
  const double kappa_ref = 2.0 * std::sqrt(2.0) / (3.0 * std::acos(-1.0));
  const bool k_ok = std::fabs(relu_kappa() - kappa_ref) <= 1e-14;
  r.metrics["critical_sigma_w_sq_relu"] = sw;
  r.metrics["kappa"] = relu_kappa();
  d << "sigma_w^2=" << fmt(sw) << (sw_ok ? "" : " (off)") << " kappa=" << fmt(relu_kappa()) << (k_ok ? "" : " (off)");
  r.passed = sw_ok && k_ok;
  for (double rho : {0.99, 0.9, 0.5}) {
    const double h = dropout_field(ChannelParams{2.0, 0.0, rho, make_relu()});
    const bool ok = std::fabs(h - (1.0 - rho)) <= 1e-12;
    r.passed = r.passed && ok;
    r.metrics["h_rho_" + fmt(rho)] = h;
    d << " h(" << fmt(rho) << ")-(1-rho)=" << fmt(h - (1.0 - rho));
  }
  r.detail = d.str();
  return r;
}

inline CriterionResult exponent_table(const AcceptanceOptions& opt) {
  CriterionResult r{2, "fitted-exponent table", true, "", 0.0, json::object()};
  const auto rep = exponent_report(opt.lab);
  std::ostringstream d;
  for (const auto& f : rep.fits) {
    const bool ok = f.accepted();
    r.passed = r.passed && ok;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s %s=%.4f in [%.2f,%.2f]%s; ", f.activation.c_str(), f.name.c_str(), f.estimate,
                  f.accept_lo, f.accept_hi, ok ? "" : " FAIL");
    d << buf;
    r.metrics[f.activation + "_" + f.name] = f.estimate;
  }
  for (const auto& e : rep.failures) {
    r.passed = false;
    d << e << "; ";
  }
  r.detail = d.str();
  return r;
}

inline CriterionResult xi_eff_table(const AcceptanceOptions&) {
  CriterionResult r{3, "xi_eff schedule table", true, "", 0.0, json::object()};
  const double coeff = decay_coefficient(Smoothness::kinked, relu_kappa());
  struct Row {
    const char* label;
    ScheduleProfile prof;
    double expected;
  };
  const int L = 6;
  const std::vector<Row> rows{
      {"constant", schedule_library(ScheduleKind::constant, 0.1, 0.2, L), 3.20},
      {"step_early", schedule_library(ScheduleKind::step_early, 0.1, 0.2, L), 5.09},
      {"step_late", schedule_library(ScheduleKind::step_late, 0.1, 0.2, L), 5.09},
      {"big_step", schedule_library(ScheduleKind::big_step, 0.1, 0.3, L), 6.67},
      {"linear_inc", schedule_library(ScheduleKind::linear_inc, 0.1, 0.2, L), 3.73},
      {"linear_dec", schedule_library(ScheduleKind::linear_dec, 0.1, 0.2, L), 3.73},
      {"double", schedule_library(ScheduleKind::constant, 0.2, 0.2, L), 2.54},
      {"triple", schedule_library(ScheduleKind::constant, 0.3, 0.3, L), 2.22},
  };
  std::ostringstream d;
  for (const auto& row : rows) {
    const double x = xi_eff(row.prof, Smoothness::kinked, coeff);
    const bool ok = std::fabs(x - row.expected) < 0.005;
    r.passed = r.passed && ok;
    r.metrics[row.label] = x;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s %.2f/%.2f%s ", row.label, x, row.expected, ok ? "" : " FAIL");
    d << buf;
  }
  const bool none_inf = std::isinf(xi_eff(schedule_library(ScheduleKind::none, 0.1, 0.2, L), Smoothness::kinked, coeff));
  r.passed = r.passed && none_inf;
  d << "none " << (none_inf ? "inf" : "finite FAIL");
  r.detail = d.str();
  return r;
}

inline CriterionResult scaling_collapse(const AcceptanceOptions& opt) {
  CriterionResult r{4, "scaling collapse", true, "", 0.0, json::object()};
  const auto tanh = make_tanh();
  const double sb = opt.tanh_sigma_b_sq;
  const GaussianChannel crit(ChannelParams{critical_sigma_w(tanh, sb, 1.0), sb, 1.0, tanh});
  const double g = crit.curvature().g;
  const auto smooth_pts = sample_collapse_smooth(tanh, sb, {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0},
                                                 {1e-8, 1e-7, 3e-7}, g);
  bool grid_ok = true;
  for (const auto& p : smooth_pts) grid_ok = grid_ok && std::max(std::fabs(p.t), std::sqrt(2.0 * g * p.h)) < 1e-3;
  const auto sc = collapse_smooth(smooth_pts, g);
  const double kappa = relu_kappa();
  const auto kinked_pts = sample_collapse_kinked({-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0}, {1e-12, 1e-11, 1e-10});
  for (const auto& p : kinked_pts) {
    grid_ok = grid_ok && std::max(std::fabs(p.t), std::cbrt(kappa * kappa) * std::cbrt(p.h)) < 1e-3;
  }
  const auto kc = collapse_kinked(kinked_pts, kappa);
  const bool s_ok = sc.max_abs_residual < 0.02 && sc.points.size() == smooth_pts.size();
  const bool k_ok = kc.max_abs_residual < 0.03 && kc.points.size() == kinked_pts.size();
  r.passed = grid_ok && s_ok && k_ok;
  r.metrics["smooth_max_residual"] = sc.max_abs_residual;
  r.metrics["kinked_max_residual"] = kc.max_abs_residual;
  r.metrics["g"] = g;
  std::ostringstream d;
  d << "smooth max|rel dev|=" << fmt(sc.max_abs_residual) << " (<0.02, " << sc.points.size() << " pts), kinked max|rel dev|="
    << fmt(kc.max_abs_residual) << " (<0.03, " << kc.points.size() << " pts)" << (grid_ok ? "" : ", grid outside window");
  r.detail = d.str();
  return r;
}

inline CriterionResult hermite_spectra(const AcceptanceOptions&) {
  CriterionResult r{5, "Hermite spectra", true, "", 0.0, json::object()};
  const double pi = std::acos(-1.0);
  // n <= 10, written out independently of the ratio recurrence
  const std::vector<double> relu_table{1.0 / std::sqrt(2.0 * pi), 0.5, 1.0 / (2.0 * std::sqrt(pi)), 0.0,
                                       -1.0 / std::sqrt(48.0 * pi), 0.0, 1.0 / (4.0 * std::sqrt(10.0 * pi)), 0.0,
                                       -15.0 / std::sqrt(80640.0 * pi), 0.0, 105.0 / std::sqrt(7257600.0 * pi)};
  double relu_err = 0.0;
  for (int n = 0; n <= 10; ++n) {
    relu_err = std::max(relu_err, std::fabs(relu_hermite_closed(n) - relu_table[static_cast<std::size_t>(n)]));
  }
  const bool relu_ok = relu_err <= 1e-15;
  const std::vector<std::pair<int, double>> tanh_table{{1, 0.60570551}, {3, -0.14843719}, {5, 0.06254752},
                                                       {7, -0.03144542}, {9, 0.01741993}, {11, -0.01029184}};
  const auto ts = hermite_coeffs(make_tanh(), 1.0, 11);
  double tanh_err = 0.0;
  for (const auto& [n, v] : tanh_table) tanh_err = std::max(tanh_err, std::fabs(ts.coeffs[static_cast<std::size_t>(n)] - v));
  const bool tanh_ok = tanh_err <= 1e-6;
  double rq_err = 0.0;
  for (int n = 1; n <= 10; ++n) rq_err = std::max(rq_err, std::fabs(rayleigh_quotient(make_hermite_mode(n), 1.0) - n));
  const bool rq_ok = rq_err <= 1e-8;
  const auto verdict = classify_universality(hermite_coeffs(make_relu(), 1.0, 120));
  const bool tail_ok = std::fabs(verdict.tail_slope + 1.25) <= 0.05 && verdict.cls == Smoothness::kinked;
  r.passed = relu_ok && tanh_ok && rq_ok && tail_ok;
  r.metrics["relu_max_abs_error"] = relu_err;
  r.metrics["tanh_max_abs_error"] = tanh_err;
  r.metrics["rayleigh_max_abs_error"] = rq_err;
  r.metrics["relu_tail_slope"] = verdict.tail_slope;
  std::ostringstream d;
  d << "relu err=" << fmt(relu_err) << " tanh err=" << fmt(tanh_err) << " (<1e-6) Q[h_n] err=" << fmt(rq_err)
    << " (<1e-8) relu tail slope=" << fmt(verdict.tail_slope) << " (-1.25+-0.05)";
  r.detail = d.str();
  return r;
}

inline CriterionResult normal_form_equivalence(const AcceptanceOptions& opt) {
  CriterionResult r{6, "normal form vs full recursion", true, "", 0.0, json::object()};
  const std::vector<double> hs{1e-4, 1e-5, 1e-6};
  const auto tanh = make_tanh();
  const auto relu = make_relu();
  std::vector<double> sdev;
  std::vector<double> kdev;
  for (double h : hs) {
    const GaussianChannel ch(tune_theory_point(tanh, opt.tanh_sigma_b_sq, 0.0, h));
    const auto fp = solve_fixed_point(ch, 0.5, ch.q());
    sdev.push_back(std::fabs(fp.m / std::sqrt(2.0 * ch.field() / ch.curvature().g) - 1.0));
    const GaussianChannel kc(ChannelParams{2.0, 0.0, 1.0 - h, relu});
    const auto kp = solve_fixed_point(kc, 0.5, kc.q());
    kdev.push_back(std::fabs(kp.m / std::pow(kc.field() / relu_kappa(), 2.0 / 3.0) - 1.0));
  }
  auto good = [](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] < 0.05)) return false;
      if (i > 0 && !(v[i] < v[i - 1])) return false;
    }
    return true;
  };
  r.passed = good(sdev) && good(kdev);
  std::ostringstream d;
  d << "smooth rel dev";
  for (double v : sdev) d << " " << fmt(v);
  d << "; kinked rel dev";
  for (double v : kdev) d << " " << fmt(v);
  d << " (h=1e-4,1e-5,1e-6; <0.05, decreasing)";
  r.metrics["smooth_rel_dev"] = sdev;
  r.metrics["kinked_rel_dev"] = kdev;
  r.detail = d.str();
  return r;
}

inline CriterionResult finite_width_validation(const AcceptanceOptions& opt) {
  CriterionResult r{7, "finite-width validation", true, "", 0.0, json::object()};
  const auto tanh = make_tanh();
  const double sw_tanh = critical_sigma_w(tanh, opt.tanh_sigma_b_sq, 1.0);
  std::ostringstream d;
  double worst = 0.0;
  for (const auto& [act, sw, sb] : {std::tuple{make_relu(), 2.0, 0.0}, std::tuple{tanh, sw_tanh, opt.tanh_sigma_b_sq}}) {
    for (double rho : {1.0, 0.9}) {
      for (double c0 : {0.5, 1.0}) {
        SimConfig cfg{ChannelParams{sw, sb, rho, act}, 4096, 1, c0, 200, opt.seed};
        const auto sim = simulate(cfg);
        const GaussianChannel ch(cfg.params);
        const double theory = ch.correlation_map(c0);
        const auto& l1 = sim.layers.front();
        // identical inputs give c_hat = 1 in every trial; allow only round-off there
        const double band = std::max(3.0 * l1.c_se, 1e-12);
        const double dev = std::fabs(l1.c_mean - theory);
        bool ok = dev <= band;
        if (rho < 1.0 && c0 == 1.0) ok = ok && std::fabs(l1.c_mean - (1.0 - ch.field())) <= band;
        r.passed = r.passed && ok;
        worst = std::max(worst, l1.c_se > 0.0 ? dev / l1.c_se : 0.0);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s rho=%.1f c0=%.1f: %.5f vs %.5f (%.2f SE)%s; ", act.name.c_str(), rho, c0,
                      l1.c_mean, theory, l1.c_se > 0.0 ? dev / l1.c_se : 0.0, ok ? "" : " FAIL");
        d << buf;
      }
    }
  }
  r.metrics["max_z"] = worst;
  r.detail = d.str();
  return r;
}

inline CriterionResult scheduler_optimality(const AcceptanceOptions& opt) {
  CriterionResult r{8, "scheduler optimality", true, "", 0.0, json::object()};
  std::mt19937_64 rng(opt.seed);
  const int L = 6;
  const double h_bar = 0.1;
  const double h_max = 0.2;
  const auto w = reach_weights(L, 4.0);
  const auto lp = frontload_lp(h_bar, h_max, w);
  const double v_lp = reach_value(lp.h_per_layer, w);
  int lp_beaten = 0;
  const double coeff = decay_coefficient(Smoothness::kinked, relu_kappa());
  const double coeff_s = decay_coefficient(Smoothness::smooth, 1.0);
  const auto flat = schedule_library(ScheduleKind::constant, h_bar, h_max, L);
  const double xi_const = xi_eff(flat, Smoothness::kinked, coeff);
  const double xi_const_s = xi_eff(flat, Smoothness::smooth, coeff_s);
  int const_beaten = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto h = random_feasible_profile(rng, h_bar, h_max, L);
    if (!(reach_value(h, w) < v_lp)) ++lp_beaten;
    if (xi_eff(h, Smoothness::kinked, coeff) < xi_const) ++const_beaten;
    if (xi_eff(h, Smoothness::smooth, coeff_s) < xi_const_s) ++const_beaten;
  }
  auto h = random_feasible_profile(rng, h_bar, h_max, L);
  const double ref = xi_eff(h, Smoothness::kinked, coeff);
  std::sort(h.begin(), h.end());
  int perm_mismatch = 0;
  int perms = 0;
  do {
    ++perms;
    if (xi_eff(h, Smoothness::kinked, coeff) != ref) ++perm_mismatch;
  } while (std::next_permutation(h.begin(), h.end()));
  r.passed = lp_beaten == 0 && const_beaten == 0 && perm_mismatch == 0;
  r.metrics["lp_reach"] = v_lp;
  r.metrics["lp_losses"] = lp_beaten;
  r.metrics["constant_losses"] = const_beaten;
  r.metrics["permutation_mismatches"] = perm_mismatch;
  std::ostringstream d;
  d << "LP beaten by " << lp_beaten << "/10000 random profiles; constant xi_eff undercut by " << const_beaten
    << "/20000 (both classes); permutation mismatches " << perm_mismatch << "/" << perms;
  r.detail = d.str();
  return r;
}

}  // namespace acceptance

using CriterionFn = std::function<CriterionResult(const AcceptanceOptions&)>;

inline std::vector<std::pair<int, CriterionFn>> acceptance_criteria() {
  return {{1, acceptance::criticality_constants}, {2, acceptance::exponent_table},
          {3, acceptance::xi_eff_table},          {4, acceptance::scaling_collapse},
          {5, acceptance::hermite_spectra},       {6, acceptance::normal_form_equivalence},
          {7, acceptance::finite_width_validation}, {8, acceptance::scheduler_optimality}};
}

/// Runtime ceilings in seconds for the criteria that state one.
inline double runtime_budget(int id) {
  switch (id) {
    case 1: return 1.0;
    case 3: return 1.0;
    case 7: return 120.0;
    default: return 0.0;
  }
}

inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt = {},
                                                   const std::function<void(const CriterionResult&)>& on_result = {}) {
  std::vector<CriterionResult> out;
  for (const auto& [id, fn] : acceptance_criteria()) {
    if (!opt.only.empty() && opt.only.count(id) == 0) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult res;
    try {
      res = fn(opt);
    } catch (const std::exception& e) {
      res.id = id;
      res.passed = false;
      res.detail = std::string("error: ") + e.what();
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (const double budget = runtime_budget(id); budget > 0.0 && res.seconds > budget) {
      res.passed = false;
      res.detail += " runtime " + acceptance::fmt_seconds(res.seconds) + " exceeds " + acceptance::fmt_seconds(budget);
    }
    if (on_result) on_result(res);
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace dmft
