// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. `run_cli` is callable in-process; tools/dmft.cpp wraps it.
#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmft/acceptance.hpp"
#include "dmft/criticality_lab.hpp"
#include "dmft/finite_width.hpp"
#include "dmft/hermite.hpp"
#include "dmft/io.hpp"
#include "dmft/landau.hpp"
#include "dmft/mft.hpp"
#include "dmft/scheduler.hpp"

namespace dmft {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_physics = 3, exit_acceptance = 4, exit_io = 5 };

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument:
    case ErrorKind::class_mismatch:
    case ErrorKind::unsupported:
    case ErrorKind::cannot_realize_correlation:
      return exit_config;
    case ErrorKind::io:
    case ErrorKind::missing_input:
      return exit_io;
    default:
      return exit_physics;
  }
}

/// One-line JSON error record written to stderr on failure.
inline std::string error_record(const std::string& kind, const std::string& message, int code) {
  json j;
  j["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
  return j.dump() + "\n";
}

namespace cli {

enum class Format { csv, json };

struct Common {
  std::string out;
  std::string format;
  std::string config;
};

struct TheoryOpts {
  std::string activation = "relu";
  double sigma_w_sq = 2.0;
  double sigma_b_sq = 0.0;
  double rho = 1.0;
  CLI::Option* o_act = nullptr;
  CLI::Option* o_sw = nullptr;
  CLI::Option* o_sb = nullptr;
  CLI::Option* o_rho = nullptr;

  void add(CLI::App* app, bool with_sigma_w) {
    o_act = app->add_option("--activation", activation, "activation name")->capture_default_str();
    if (with_sigma_w) o_sw = app->add_option("--sigma-w-sq", sigma_w_sq, "weight variance")->capture_default_str();
    o_sb = app->add_option("--sigma-b-sq", sigma_b_sq, "bias variance")->capture_default_str();
    o_rho = app->add_option("--rho", rho, "keep probability")->capture_default_str();
  }

  // Values from --config seed the theory point; explicit flags win.
  void merge_config(const std::string& path) {
    if (path.empty()) return;
    const auto p = theory_point_from_json(read_json(path));
    if (o_act->count() == 0) activation = p.activation.name;
    if (o_sw != nullptr && o_sw->count() == 0) sigma_w_sq = p.sigma_w_sq;
    if (o_sb->count() == 0) sigma_b_sq = p.sigma_b_sq;
    if (o_rho->count() == 0) rho = p.rho;
  }

  ChannelParams params() const {
    ChannelParams p{sigma_w_sq, sigma_b_sq, rho, find_activation(activation)};
    p.validate();
    return p;
  }
};

inline Format parse_format(const std::string& s, Format dflt) {
  if (s.empty()) return dflt;
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  fail(ErrorKind::invalid_argument, "unknown format '" + s + "' (csv or json)");
}

inline json table_to_json(const CsvTable& t) {
  json j;
  json meta = json::object();
  for (const auto& [k, v] : t.meta) meta[k] = v;
  j["meta"] = meta;
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::object();
    for (std::size_t i = 0; i < row.size() && i < t.header.size(); ++i) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              r[t.header[i]] = json_number(v);
            } else {
              r[t.header[i]] = v;
            }
          },
          row[i]);
    }
    rows.push_back(r);
  }
  j["rows"] = rows;
  return j;
}

// Flattens a JSON object into "key,value" rows.
inline CsvTable json_to_table(const json& j, std::vector<std::pair<std::string, std::string>> meta) {
  CsvTable t;
  t.meta = std::move(meta);
  t.header = {"key", "value"};
  std::function<void(const std::string&, const json&)> walk = [&](const std::string& prefix, const json& v) {
    if (v.is_object()) {
      for (const auto& [k, x] : v.items()) walk(prefix.empty() ? k : prefix + "." + k, x);
    } else if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) walk(prefix + "." + std::to_string(i), v[i]);
    } else if (v.is_number_float()) {
      t.rows.push_back({prefix, v.get<double>()});
    } else if (v.is_number_integer()) {
      t.rows.push_back({prefix, static_cast<long>(v.get<long long>())});
    } else if (v.is_string()) {
      t.rows.push_back({prefix, v.get<std::string>()});
    } else {
      t.rows.push_back({prefix, v.dump()});
    }
  };
  walk("", j);
  return t;
}

class Emitter {
 public:
  Emitter(std::ostream& out, const Common& c, std::string command) : out_(out), common_(c), command_(std::move(command)) {}

  // Writes to --out, else to $DMFT_OUTPUT_DIR/<command>.<ext>, else to stdout.
  void write(const std::string& text, Format f) const {
    std::string path = common_.out;
    if (path.empty()) {
      const char* dir = std::getenv("DMFT_OUTPUT_DIR");
      if (dir == nullptr || *dir == '\0') {
        out_ << text;
        return;
      }
      path = command_ + (f == Format::csv ? ".csv" : ".json");
    }
    write_text(resolve_output(path), text);
  }

  void table(const CsvTable& t, Format f) const { write(f == Format::csv ? t.str() : json_text(table_to_json(t)), f); }

  void document(const json& j, Format f, const std::vector<std::pair<std::string, std::string>>& meta) const {
    if (f == Format::json) {
      write(json_text(j), f);
    } else {
      write(json_to_table(j, meta).str(), f);
    }
  }

 private:
  std::ostream& out_;
  const Common& common_;
  std::string command_;
};

inline std::vector<std::pair<std::string, std::string>> theory_meta(const std::string& command, const ChannelParams& p) {
  return {{"command", command},
          {"activation", p.activation.name},
          {"sigma_w_sq", format_number(p.sigma_w_sq)},
          {"sigma_b_sq", format_number(p.sigma_b_sq)},
          {"rho", format_number(p.rho)}};
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_number(v[i]);
  return s;
}

inline const char* phase_label(double chi_value) {
  if (std::fabs(chi_value - 1.0) <= 1e-10) return "critical";
  return chi_value < 1.0 ? "ordered" : "chaotic";
}

inline json fixed_point_json(const ChannelParams& p, double seed) {
  const GaussianChannel ch(p);
  const auto fp = solve_fixed_point(ch, seed, ch.q());
  json j;
  j["theory_point"] = theory_point_to_json(p);
  j["seed_correlation"] = seed;
  j["q_star"] = json_number(fp.q_star);
  j["variance_status"] = to_string(ch.variance_status());
  j["h"] = ch.field();
  j["chi"] = ch.chi();
  j["phase_without_dropout"] = phase_label(GaussianChannel(ChannelParams{p.sigma_w_sq, p.sigma_b_sq, 1.0, p.activation}).chi());
  j["c_star"] = fp.c_star;
  j["m"] = fp.m;
  j["slope"] = fp.slope;
  j["xi"] = json_number(fp.xi);
  j["converged"] = fp.converged;
  j["iterations"] = fp.iterations;
  if (!p.activation.is_kinked()) {
    j["g"] = ch.curvature().g;
  } else {
    j["kappa"] = relu_kappa();
  }
  j["class"] = p.activation.is_kinked() ? "kinked" : "smooth";
  return j;
}

inline CsvTable exponent_table_csv(const std::vector<ExponentFit>& fits, const LabConfig& lab) {
  CsvTable t;
  t.meta = {{"command", "exponents"},
            {"tanh_sigma_b_sq", format_number(lab.tanh_sigma_b_sq)},
            {"relu_sigma_b_sq", format_number(lab.relu_sigma_b_sq)},
            {"t_grid", join(lab.t_grid)},
            {"h_grid", join(lab.h_grid)},
            {"smooth_depth", std::to_string(lab.smooth_depth)},
            {"kinked_depth", std::to_string(lab.kinked_depth)},
            {"depth_points_per_decade", std::to_string(lab.depth_points_per_decade)},
            {"depth_window_fraction", format_number(lab.depth_window_fraction)}};
  t.header = {"activation", "exponent", "estimate",  "std_error", "r_squared", "n_points",       "window_lo",
              "window_hi",  "theory",   "reference", "reference_error", "accept_lo", "accept_hi", "accepted",
              "window_flagged", "path"};
  for (const auto& f : fits) {
    t.rows.push_back({f.activation, f.name, f.estimate, f.std_error, f.r_squared, static_cast<long>(f.n_points),
                      f.window_lo, f.window_hi, f.theory, f.reference, f.reference_error, f.accept_lo, f.accept_hi,
                      std::string(f.accepted() ? "true" : "false"), std::string(f.window_flagged ? "true" : "false"),
                      f.sweep.path});
  }
  return t;
}

inline CsvTable sweep_points_csv(const std::vector<ExponentFit>& fits) {
  CsvTable t;
  t.meta = {{"command", "exponents"}, {"content", "sweep points behind each fit"}};
  t.header = {"activation", "exponent", "variable", "x", "response_kind", "response"};
  for (const auto& f : fits) {
    for (std::size_t i = 0; i < f.response.size() && i < f.sweep.grid.size(); ++i) {
      t.rows.push_back({f.activation, f.name, std::string(to_string(f.sweep.variable)), f.sweep.grid[i],
                        std::string(to_string(f.sweep.response)), f.response[i]});
    }
  }
  return t;
}

inline json criterion_json(const CriterionResult& r) {
  json j;
  j["id"] = r.id;
  j["title"] = r.title;
  j["passed"] = r.passed;
  j["detail"] = r.detail;
  j["metrics"] = r.metrics;
  return j;
}

}  // namespace cli

/// Parses args (without the program name) and runs one subcommand. Returns the exit code.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  using namespace cli;
  CLI::App app{"dropout mean-field laboratory", "dmft"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* s, bool with_config) {
    s->add_option("--out", common.out, "output file (relative paths resolve under $DMFT_OUTPUT_DIR)");
    s->add_option("--format", common.format, "csv or json");
    if (with_config) s->add_option("--config", common.config, "theory-point JSON {activation, sigma_w_sq, sigma_b_sq, rho}");
  };

  // fixed-point
  auto* s_fp = app.add_subcommand("fixed-point", "variance and correlation fixed point at one theory point");
  TheoryOpts fp_t;
  double fp_seed = 0.5;
  fp_t.add(s_fp, true);
  s_fp->add_option("--seed-correlation", fp_seed, "input correlation the iteration starts from")->capture_default_str();
  add_common(s_fp, true);

  // phase-diagram
  auto* s_pd = app.add_subcommand("phase-diagram", "fixed points over a (sigma_w^2, rho) grid");
  std::string pd_act = "tanh";
  double pd_sb = 0.05;
  double pd_sw_lo = 0.5;
  double pd_sw_hi = 3.0;
  int pd_sw_n = 11;
  std::vector<double> pd_rhos{1.0, 0.95, 0.9, 0.8};
  auto* pd_o_act = s_pd->add_option("--activation", pd_act)->capture_default_str();
  auto* pd_o_sb = s_pd->add_option("--sigma-b-sq", pd_sb)->capture_default_str();
  s_pd->add_option("--sigma-w-sq-min", pd_sw_lo)->capture_default_str();
  s_pd->add_option("--sigma-w-sq-max", pd_sw_hi)->capture_default_str();
  s_pd->add_option("--sigma-w-sq-points", pd_sw_n)->capture_default_str();
  s_pd->add_option("--rho", pd_rhos, "keep probabilities")->capture_default_str()->delimiter(',');
  add_common(s_pd, true);

  // exponents
  auto* s_ex = app.add_subcommand("exponents", "measure critical exponents by log-log fits");
  std::vector<std::string> ex_acts;
  std::string ex_name;
  bool ex_all = false;
  std::string ex_sweep_out;
  LabConfig lab;
  double ex_t_lo = 1e-5, ex_t_hi = 1e-2, ex_h_lo = 1e-6, ex_h_hi = 1e-3;
  int ex_points = 20;
  s_ex->add_option("--activation", ex_acts, "activations (default tanh,relu)")->delimiter(',');
  s_ex->add_option("--exponent", ex_name, "nu_t, beta, theta_rel, 1/delta or nu_rho");
  s_ex->add_flag("--all", ex_all, "every exponent");
  s_ex->add_option("--sweep-out", ex_sweep_out, "also write the sweep points as CSV");
  s_ex->add_option("--tanh-sigma-b-sq", lab.tanh_sigma_b_sq)->capture_default_str();
  s_ex->add_option("--relu-sigma-b-sq", lab.relu_sigma_b_sq)->capture_default_str();
  s_ex->add_option("--t-min", ex_t_lo)->capture_default_str();
  s_ex->add_option("--t-max", ex_t_hi)->capture_default_str();
  s_ex->add_option("--h-min", ex_h_lo)->capture_default_str();
  s_ex->add_option("--h-max", ex_h_hi)->capture_default_str();
  s_ex->add_option("--points", ex_points, "grid points per sweep")->capture_default_str();
  s_ex->add_option("--smooth-depth", lab.smooth_depth)->capture_default_str();
  s_ex->add_option("--kinked-depth", lab.kinked_depth)->capture_default_str();
  add_common(s_ex, false);

  // collapse
  auto* s_co = app.add_subcommand("collapse", "two-parameter scaling collapse of the full recursion");
  std::string co_class = "smooth";
  std::string co_act = "tanh";
  double co_sb = 0.05;
  std::vector<double> co_xs{-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0};
  std::vector<double> co_us{-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0};
  std::vector<double> co_hs;
  s_co->add_option("--class", co_class, "smooth or kinked")->capture_default_str();
  s_co->add_option("--activation", co_act, "smooth activation")->capture_default_str();
  s_co->add_option("--sigma-b-sq", co_sb)->capture_default_str();
  s_co->add_option("--xs", co_xs, "rescaled detunings (smooth)")->delimiter(',');
  s_co->add_option("--us", co_us, "rescaled detunings (kinked)")->delimiter(',');
  s_co->add_option("--hs", co_hs, "fields")->delimiter(',');
  add_common(s_co, false);

  // hermite
  auto* s_he = app.add_subcommand("hermite", "normalized Hermite spectrum and universality verdict");
  std::string he_act = "relu";
  double he_q = 1.0;
  int he_n = 60;
  bool he_closed = false;
  s_he->add_option("--activation", he_act)->capture_default_str();
  s_he->add_option("--q", he_q, "preactivation variance")->capture_default_str();
  s_he->add_option("--n-max", he_n)->capture_default_str();
  s_he->add_flag("--closed-form", he_closed, "ReLU closed-form coefficients instead of quadrature");
  add_common(s_he, false);

  // schedule
  auto* s_sc = app.add_subcommand("schedule", "depth profile, keep probabilities and xi_eff");
  std::string sc_kind = "constant";
  double sc_hbar = 0.1;
  double sc_hmax = 0.2;
  int sc_depth = 6;
  std::string sc_class;
  std::string sc_act = "relu";
  double sc_sb = 0.0;
  double sc_xi_c = 4.0;
  s_sc->add_option("--kind", sc_kind, "none, constant, linear_inc, linear_dec, step_early, step_late, big_step, frontload_lp")
      ->capture_default_str();
  s_sc->add_option("--h-bar", sc_hbar)->capture_default_str();
  s_sc->add_option("--h-max", sc_hmax)->capture_default_str();
  s_sc->add_option("--depth", sc_depth)->capture_default_str();
  s_sc->add_option("--class", sc_class, "decay law: smooth or kinked (default: class of the activation)");
  s_sc->add_option("--activation", sc_act, "activation used for the keep probabilities")->capture_default_str();
  s_sc->add_option("--sigma-b-sq", sc_sb)->capture_default_str();
  s_sc->add_option("--xi-c", sc_xi_c, "decay length of the reach weights (frontload_lp)")->capture_default_str();
  add_common(s_sc, false);

  // validate
  auto* s_va = app.add_subcommand("validate", "finite-width Monte Carlo against the Gaussian channel");
  TheoryOpts va_t;
  va_t.activation = "tanh";
  va_t.sigma_b_sq = 0.05;
  int va_width = 4096;
  int va_depth = 1;
  int va_trials = 200;
  std::uint64_t va_seed = 7;
  double va_c0 = 0.5;
  va_t.add(s_va, true);
  va_t.o_sw->description("weight variance (default: critical value)");
  s_va->add_option("--width", va_width)->capture_default_str();
  s_va->add_option("--depth", va_depth)->capture_default_str();
  s_va->add_option("--trials", va_trials)->capture_default_str();
  s_va->add_option("--seed", va_seed)->capture_default_str();
  s_va->add_option("--c0", va_c0)->capture_default_str();
  add_common(s_va, true);

  // report
  auto* s_re = app.add_subcommand("report", "acceptance summary");
  bool re_no_compute = false;
  std::string re_inputs = "criteria";
  std::vector<int> re_only;
  s_re->add_flag("--no-compute", re_no_compute, "aggregate existing per-criterion files instead of computing");
  s_re->add_option("--inputs", re_inputs, "directory of per-criterion JSON files")->capture_default_str();
  s_re->add_option("--only", re_only, "criterion ids")->delimiter(',');
  add_common(s_re, false);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << error_record("invalid-argument", e.what(), exit_config);
    return exit_config;
  }

  try {
    if (s_fp->parsed()) {
      fp_t.merge_config(common.config);
      const auto p = fp_t.params();
      Emitter(out, common, "fixed-point")
          .document(fixed_point_json(p, fp_seed), parse_format(common.format, Format::json), theory_meta("fixed-point", p));
      return exit_ok;
    }

    if (s_pd->parsed()) {
      if (!common.config.empty()) {
        const auto p = theory_point_from_json(read_json(common.config));
        if (pd_o_act->count() == 0) pd_act = p.activation.name;
        if (pd_o_sb->count() == 0) pd_sb = p.sigma_b_sq;
      }
      require(pd_sw_n >= 2 && pd_sw_lo > 0.0 && pd_sw_hi > pd_sw_lo, ErrorKind::invalid_argument,
              "sigma_w^2 grid needs 0 < min < max and at least two points");
      const auto act = find_activation(pd_act);
      CsvTable t;
      t.meta = {{"command", "phase-diagram"},
                {"activation", act.name},
                {"sigma_b_sq", format_number(pd_sb)},
                {"sigma_w_sq_min", format_number(pd_sw_lo)},
                {"sigma_w_sq_max", format_number(pd_sw_hi)},
                {"sigma_w_sq_points", std::to_string(pd_sw_n)},
                {"rho", join(pd_rhos)}};
      t.header = {"sigma_w_sq", "rho", "q_star", "h", "chi", "phase_without_dropout", "m", "c_star", "xi", "status"};
      for (double rho : pd_rhos) {
        for (int i = 0; i < pd_sw_n; ++i) {
          const double sw = pd_sw_lo + (pd_sw_hi - pd_sw_lo) * i / (pd_sw_n - 1);
          try {
            const ChannelParams p{sw, pd_sb, rho, act};
            p.validate();
            const GaussianChannel ch(p);
            const double chi0 = GaussianChannel(ChannelParams{sw, pd_sb, 1.0, act}).chi();
            const auto fp = solve_fixed_point(ch, 0.5, ch.q());
            t.rows.push_back({sw, rho, ch.q(), ch.field(), ch.chi(), std::string(phase_label(chi0)), fp.m, fp.c_star,
                              fp.xi, std::string(fp.converged ? "ok" : "not-converged")});
          } catch (const Error& e) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            t.rows.push_back({sw, rho, nan, nan, nan, std::string(""), nan, nan, nan, std::string(to_string(e.kind()))});
          }
        }
      }
      Emitter(out, common, "phase-diagram").table(t, parse_format(common.format, Format::csv));
      return exit_ok;
    }

    if (s_ex->parsed()) {
      require(ex_all || !ex_name.empty(), ErrorKind::invalid_argument, "pass --exponent NAME or --all");
      require(!(ex_all && !ex_name.empty()), ErrorKind::invalid_argument, "--exponent and --all are exclusive");
      require(ex_points >= 3, ErrorKind::invalid_argument, "--points must be at least 3");
      lab.t_grid = logspace(ex_t_lo, ex_t_hi, ex_points);
      lab.h_grid = logspace(ex_h_lo, ex_h_hi, ex_points);
      if (ex_acts.empty()) ex_acts = {"tanh", "relu"};
      std::vector<std::string> names = ex_all ? exponent_names() : std::vector<std::string>{ex_name};
      std::vector<ExponentFit> fits;
      for (const auto& a : ex_acts) {
        const auto act = find_activation(a);
        for (const auto& n : names) fits.push_back(measure_exponent(n, act, lab));
      }
      Emitter(out, common, "exponents").table(exponent_table_csv(fits, lab), parse_format(common.format, Format::csv));
      if (!ex_sweep_out.empty()) write_text(resolve_output(ex_sweep_out), sweep_points_csv(fits).str());
      return exit_ok;
    }

    if (s_co->parsed()) {
      CsvTable t;
      CollapseResult res;
      if (co_class == "smooth") {
        if (co_hs.empty()) co_hs = {1e-8, 1e-7, 3e-7};
        const auto act = find_activation(co_act);
        require(!act.is_kinked(), ErrorKind::class_mismatch, "smooth collapse needs a smooth activation");
        const GaussianChannel crit(ChannelParams{critical_sigma_w(act, co_sb, 1.0), co_sb, 1.0, act});
        const double g = crit.curvature().g;
        res = collapse_smooth(sample_collapse_smooth(act, co_sb, co_xs, co_hs, g), g);
        t.meta = {{"command", "collapse"}, {"class", "smooth"}, {"activation", act.name},
                  {"sigma_b_sq", format_number(co_sb)}, {"g", format_number(g)}, {"x", join(co_xs)}, {"h", join(co_hs)}};
      } else if (co_class == "kinked") {
        if (co_hs.empty()) co_hs = {1e-12, 1e-11, 1e-10};
        res = collapse_kinked(sample_collapse_kinked(co_us, co_hs), relu_kappa());
        t.meta = {{"command", "collapse"}, {"class", "kinked"}, {"kappa", format_number(relu_kappa())},
                  {"u", join(co_us)}, {"h", join(co_hs)}};
      } else {
        fail(ErrorKind::invalid_argument, "--class must be smooth or kinked");
      }
      t.meta.emplace_back("max_abs_residual", format_number(res.max_abs_residual));
      for (const auto& w : res.warnings) t.meta.emplace_back("warning", w);
      t.header = {"t", "h", "m", "x", "y", "prediction", "residual"};
      for (const auto& p : res.points) t.rows.push_back({p.t, p.h, p.m, p.x, p.y, p.prediction, p.residual});
      Emitter(out, common, "collapse").table(t, parse_format(common.format, Format::csv));
      return exit_ok;
    }

    if (s_he->parsed()) {
      const auto act = find_activation(he_act);
      HermiteSpectrum spec;
      if (he_closed) {
        require(act.name == "relu", ErrorKind::unsupported, "closed-form coefficients exist for relu only");
        spec = relu_spectrum_closed(he_q, he_n);
      } else {
        spec = hermite_coeffs(act, he_q, he_n);
      }
      CsvTable t;
      t.meta = {{"command", "hermite"},          {"activation", act.name},
                {"q", format_number(he_q)},      {"n_max", std::to_string(he_n)},
                {"source", he_closed ? "closed-form" : "quadrature"},
                {"sum_sq", format_number(spec.sum_sq)}, {"mean_degree", format_number(spec.mean_degree)},
                {"rayleigh_quotient", format_number(rayleigh_quotient(act, he_q))}};
      if (spec.n_max() >= ClassifierConfig{}.min_n_max) {
        const auto v = classify_universality(spec);
        t.meta.emplace_back("class", v.degenerate ? "degenerate" : (v.cls == Smoothness::kinked ? "kinked" : "smooth"));
        t.meta.emplace_back("tail_slope", format_number(v.tail_slope));
        t.meta.emplace_back("tail_r_squared", format_number(v.r_squared));
      }
      t.header = {"n", "a_n", "a_n_sq"};
      for (int n = 0; n <= spec.n_max(); ++n) {
        const double a = spec.coeffs[static_cast<std::size_t>(n)];
        t.rows.push_back({static_cast<long>(n), a, a * a});
      }
      Emitter(out, common, "hermite").table(t, parse_format(common.format, Format::csv));
      return exit_ok;
    }

    if (s_sc->parsed()) {
      const auto act = find_activation(sc_act);
      const Smoothness cls = sc_class.empty() ? act.smoothness
                             : sc_class == "smooth" ? Smoothness::smooth
                             : sc_class == "kinked" ? Smoothness::kinked
                                                    : (fail(ErrorKind::invalid_argument, "--class must be smooth or kinked"),
                                                       Smoothness::smooth);
      ScheduleProfile prof;
      if (sc_kind == "frontload_lp") {
        prof = frontload_lp(sc_hbar, sc_hmax, reach_weights(sc_depth, sc_xi_c));
      } else {
        prof = schedule_library(parse_schedule_kind(sc_kind), sc_hbar, sc_hmax, sc_depth);
      }
      const ChannelParams base{critical_sigma_w(act, sc_sb, 1.0), sc_sb, 1.0, act};
      double coeff = 0.0;
      if (cls == Smoothness::kinked) {
        require(act.is_kinked(), ErrorKind::class_mismatch, "kinked decay law needs a kinked activation");
        coeff = decay_coefficient(cls, relu_kappa());
      } else {
        coeff = decay_coefficient(cls, GaussianChannel(base).curvature().g);
      }
      json keep = json::array();
      for (double h : prof.h_per_layer) keep.push_back(h_to_keep_prob(h, base));
      json j;
      j["label"] = prof.label;
      j["L"] = prof.L;
      j["h_bar"] = prof.h_bar;
      j["h_max"] = prof.h_max;
      j["h_per_layer"] = prof.h_per_layer;
      j["keep_prob_per_layer"] = keep;
      j["class"] = cls == Smoothness::kinked ? "kinked" : "smooth";
      j["activation"] = act.name;
      j["sigma_w_sq"] = base.sigma_w_sq;
      j["sigma_b_sq"] = base.sigma_b_sq;
      j["decay_coefficient"] = coeff;
      j["xi_eff"] = json_number(xi_eff(prof, cls, coeff));
      if (sc_kind == "frontload_lp") {
        j["xi_c"] = sc_xi_c;
        j["reach"] = reach_value(prof.h_per_layer, reach_weights(sc_depth, sc_xi_c));
      }
      Emitter(out, common, "schedule")
          .document(j, parse_format(common.format, Format::json), {{"command", "schedule"}, {"kind", sc_kind}});
      return exit_ok;
    }

    if (s_va->parsed()) {
      va_t.merge_config(common.config);
      if (va_t.o_sw->count() == 0 && common.config.empty()) {
        va_t.sigma_w_sq = critical_sigma_w(find_activation(va_t.activation), va_t.sigma_b_sq, 1.0);
      }
      const auto p = va_t.params();
      SimConfig cfg{p, va_width, va_depth, va_c0, va_trials, va_seed};
      const auto sim = simulate(cfg);
      const GaussianChannel ch(p);
      json layers = json::array();
      double c_theory = va_c0;
      double max_z = 0.0;
      for (const auto& l : sim.layers) {
        c_theory = ch.correlation_map(c_theory);
        const double dev = l.c_mean - c_theory;
        const double z = l.c_se > 0.0 ? dev / l.c_se : 0.0;
        max_z = std::max(max_z, std::fabs(z));
        layers.push_back({{"layer", l.layer},
                          {"q_mean", l.q_mean},
                          {"q_se", l.q_se},
                          {"q_theory", ch.q()},
                          {"c_mean", l.c_mean},
                          {"c_se", l.c_se},
                          {"c_theory", c_theory},
                          {"z", z}});
      }
      json j;
      j["theory_point"] = theory_point_to_json(p);
      j["width"] = va_width;
      j["depth"] = va_depth;
      j["trials"] = va_trials;
      j["seed"] = va_seed;
      j["c0"] = va_c0;
      j["q0"] = sim.q0;
      j["h"] = ch.field();
      j["layers"] = layers;
      j["max_abs_z"] = max_z;
      Emitter(out, common, "validate").document(j, parse_format(common.format, Format::json), theory_meta("validate", p));
      return exit_ok;
    }

    if (s_re->parsed()) {
      std::vector<json> criteria;
      std::vector<int> ids;
      if (re_only.empty()) {
        for (const auto& [id, fn] : acceptance_criteria()) ids.push_back(id);
      } else {
        ids = re_only;
      }
      const auto dir = resolve_output(re_inputs);
      if (re_no_compute) {
        for (int id : ids) criteria.push_back(read_json(dir / ("criterion_" + std::to_string(id) + ".json")));
      } else {
        AcceptanceOptions opt;
        opt.only = std::set<int>(ids.begin(), ids.end());
        for (const auto& r : run_acceptance(opt)) {
          auto j = criterion_json(r);
          write_text(dir / ("criterion_" + std::to_string(r.id) + ".json"), json_text(j));
          criteria.push_back(std::move(j));
        }
      }
      json failed = json::array();
      for (const auto& c : criteria) {
        require(c.contains("id") && c.contains("passed"), ErrorKind::invalid_argument, "malformed criterion record");
        if (!c["passed"].get<bool>()) failed.push_back(c["id"]);
      }
      json j;
      j["criteria"] = criteria;
      j["passed"] = failed.empty();
      j["failed"] = failed;
      Emitter(out, common, "report").document(j, parse_format(common.format, Format::json), {{"command", "report"}});
      return failed.empty() ? exit_ok : exit_acceptance;
    }
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    err << error_record(std::string(to_string(e.kind())), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    err << error_record("internal", e.what(), exit_physics);
    return exit_physics;
  }
  return exit_config;
}

}  // namespace dmft
