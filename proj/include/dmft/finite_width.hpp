// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo forward passes of finite-width random MLPs with independent
// inverted-dropout masks on two inputs.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmft/mft.hpp"

namespace dmft {

enum class WeightMode {
  gram,      // rows of W y are drawn from their exact bivariate law given the layer Gram matrix
  explicit_  // W is materialized as an N x N Gaussian matrix
};

struct SimConfig {
  ChannelParams params;
  int width = 1024;
  int depth = 1;
  double c0 = 0.5;
  int trials = 100;
  std::uint64_t seed = 0;
  double q0 = 0.0;  // input-layer preactivation variance; 0 selects the variance fixed point
  WeightMode mode = WeightMode::gram;
};

struct LayerStats {
  int layer = 0;
  double q_mean = 0.0;
  double q_se = 0.0;
  double c_mean = 0.0;
  double c_se = 0.0;
};

struct SimResult {
  std::vector<LayerStats> layers;  // layers 1..depth
  int trials = 0;
  double q0 = 0.0;
};

namespace detail {

inline std::mt19937_64 trial_engine(std::uint64_t seed, int trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), 0x9e3779b9u};
  return std::mt19937_64(seq);
}

struct PairState {
  Eigen::VectorXd a;
  Eigen::VectorXd b;
};

inline void mean_and_se(const std::vector<double>& v, double& mean, double& se) {
  const double n = static_cast<double>(v.size());
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
}

// Input-layer preactivations: Gram-Schmidt inputs x_a, x_b with <x_a, x_b> = c0, times
// a Gaussian matrix with entry variance q0.
inline PairState input_layer(int n, double c0, double q0, WeightMode mode, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  PairState s{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  const double perp = std::sqrt((1.0 - c0) * (1.0 + c0));
  const double sd = std::sqrt(q0);
  if (mode == WeightMode::explicit_) {
    Eigen::VectorXd xa = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd xb = Eigen::VectorXd::Zero(n);
    xa(0) = 1.0;
    xb(0) = c0;
    if (n > 1) xb(1) = perp;
    Eigen::MatrixXd w(n, n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) w(i, j) = sd * normal(rng);
    }
    s.a = w * xa;
    s.b = w * xb;
    return s;
  }
  for (int i = 0; i < n; ++i) {
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    s.a(i) = sd * z1;
    s.b(i) = sd * (c0 * z1 + perp * z2);
  }
  return s;
}

// Post-dropout activations phi(z) * mask / rho with an independent mask per input.
inline Eigen::VectorXd masked_activation(const Eigen::VectorXd& z, const ChannelParams& p, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(p.rho);
  Eigen::VectorXd y(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const bool k = p.rho >= 1.0 ? true : keep(rng);
    y(i) = k ? p.activation.value(z(i)) / p.rho : 0.0;
  }
  return y;
}

inline PairState next_layer(const PairState& z, const ChannelParams& p, WeightMode mode, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = z.a.size();
  const Eigen::VectorXd ya = masked_activation(z.a, p, rng);
  const Eigen::VectorXd yb = masked_activation(z.b, p, rng);
  const double sb = std::sqrt(p.sigma_b_sq);
  PairState out{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  if (mode == WeightMode::explicit_) {
    Eigen::MatrixXd w(n, n);
    const double sd = std::sqrt(p.sigma_w_sq / static_cast<double>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) w(i, j) = sd * normal(rng);
    }
    out.a = w * ya;
    out.b = w * yb;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double bias = sb * normal(rng);
      out.a(i) += bias;
      out.b(i) += bias;
    }
    return out;
  }
  // Given y, each row w_i . (y_a, y_b) is bivariate normal with covariance (sigma_w^2 / N) G.
  const double scale = p.sigma_w_sq / static_cast<double>(n);
  const double gaa = scale * ya.squaredNorm();
  const double gbb = scale * yb.squaredNorm();
  const double gab = scale * ya.dot(yb);
  const double la = std::sqrt(gaa);
  const double l21 = la > 0.0 ? gab / la : 0.0;
  const double l22 = std::sqrt(std::max(0.0, gbb - l21 * l21));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    const double bias = sb * normal(rng);
    out.a(i) = la * z1 + bias;
    out.b(i) = l21 * z1 + l22 * z2 + bias;
  }
  return out;
}

}  // namespace detail

/// Layerwise empirical variance and normalized correlation, averaged over trials.
inline SimResult simulate(const SimConfig& cfg, const MftConfig& mcfg = {}) {
  cfg.params.validate();
  require(cfg.width >= 1, ErrorKind::invalid_argument, "width must be positive");
  require(cfg.depth >= 1, ErrorKind::invalid_argument, "depth must be positive");
  require(cfg.trials >= 1, ErrorKind::invalid_argument, "trials must be positive");
  require(std::fabs(cfg.c0) <= 1.0, ErrorKind::invalid_argument, "c0 must lie in [-1, 1]");
  require(cfg.width >= 2 || std::fabs(cfg.c0) == 1.0, ErrorKind::cannot_realize_correlation,
          "two inputs with correlation " + std::to_string(cfg.c0) + " need width >= 2");
  const double q0 = cfg.q0 > 0.0 ? cfg.q0 : qstar(cfg.params, mcfg);

  const auto L = static_cast<std::size_t>(cfg.depth);
  const auto T = static_cast<std::size_t>(cfg.trials);
  std::vector<std::vector<double>> qs(L, std::vector<double>(T));
  std::vector<std::vector<double>> cs(L, std::vector<double>(T));
  for (int trial = 0; trial < cfg.trials; ++trial) {
    auto rng = detail::trial_engine(cfg.seed, trial);
    auto z = detail::input_layer(cfg.width, cfg.c0, q0, cfg.mode, rng);
    for (std::size_t l = 0; l < L; ++l) {
      z = detail::next_layer(z, cfg.params, cfg.mode, rng);
      const double saa = z.a.squaredNorm();
      const double sbb = z.b.squaredNorm();
      const auto t = static_cast<std::size_t>(trial);
      qs[l][t] = 0.5 * (saa + sbb) / static_cast<double>(cfg.width);
      cs[l][t] = saa > 0.0 && sbb > 0.0 ? z.a.dot(z.b) / std::sqrt(saa * sbb) : 0.0;
    }
  }
  SimResult r;
  r.trials = cfg.trials;
  r.q0 = q0;
  for (std::size_t l = 0; l < L; ++l) {
    LayerStats s;
    s.layer = static_cast<int>(l) + 1;
    detail::mean_and_se(qs[l], s.q_mean, s.q_se);
    detail::mean_and_se(cs[l], s.c_mean, s.c_se);
    r.layers.push_back(s);
  }
  return r;
}

struct ConvergenceRow {
  int width = 0;
  double c_hat = 0.0;
  double c_se = 0.0;
  double theory = 0.0;
  double deviation = 0.0;  // |c_hat - theory|
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  double deviation_slope = 0.0;  // log-log slope of deviation versus width (recorded, not asserted)
};

/// First-layer correlation against the Gaussian-channel prediction across widths.
inline ConvergenceStudy convergence_study(const SimConfig& tmpl, const std::vector<int>& widths,
                                          const MftConfig& mcfg = {}) {
  require(!widths.empty(), ErrorKind::invalid_argument, "no widths given");
  for (std::size_t i = 1; i < widths.size(); ++i) {
    require(widths[i] > widths[i - 1], ErrorKind::invalid_argument, "widths must be sorted ascending");
  }
  const GaussianChannel ch(tmpl.params, mcfg);
  const double theory = ch.correlation_map(tmpl.c0);
  ConvergenceStudy out;
  for (int n : widths) {
    SimConfig c = tmpl;
    c.width = n;
    c.depth = 1;
    const auto r = simulate(c, mcfg);
    out.rows.push_back({n, r.layers[0].c_mean, r.layers[0].c_se, theory, std::fabs(r.layers[0].c_mean - theory)});
  }
  if (out.rows.size() >= 2) {
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    int k = 0;
    for (const auto& row : out.rows) {
      if (row.deviation <= 0.0) continue;
      const double x = std::log(static_cast<double>(row.width));
      const double y = std::log(row.deviation);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++k;
    }
    if (k >= 2) out.deviation_slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  }
  return out;
}

struct MeanShift {
  double mean_difference = 0.0;  // masked minus unmasked first-layer preactivation, averaged
  double se = 0.0;
};

/// Masked and unmasked first-layer preactivations under shared weights, biases and inputs.
inline MeanShift mean_shift_study(const SimConfig& cfg, const MftConfig& mcfg = {}) {
  cfg.params.validate();
  require(cfg.width >= 2, ErrorKind::invalid_argument, "width must be at least 2");
  const double q0 = cfg.q0 > 0.0 ? cfg.q0 : qstar(cfg.params, mcfg);
  const int n = cfg.width;
  std::vector<double> per_trial(static_cast<std::size_t>(cfg.trials));
  for (int trial = 0; trial < cfg.trials; ++trial) {
    auto rng = detail::trial_engine(cfg.seed, trial);
    const auto z0 = detail::input_layer(n, cfg.c0, q0, WeightMode::explicit_, rng);
    const Eigen::VectorXd ym = detail::masked_activation(z0.a, cfg.params, rng);
    Eigen::VectorXd yc(n);
    for (int i = 0; i < n; ++i) yc(i) = cfg.params.activation.value(z0.a(i));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd w(n, n);
    const double sd = std::sqrt(cfg.params.sigma_w_sq / n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) w(i, j) = sd * normal(rng);
    }
    // the shared bias cancels in the difference
    per_trial[static_cast<std::size_t>(trial)] = (w * (ym - yc)).mean();
  }
  MeanShift s;
  detail::mean_and_se(per_trial, s.mean_difference, s.se);
  return s;
}

}  // namespace dmft
