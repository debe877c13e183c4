// SPDX-License-Identifier: Apache-2.0
//
// Correlation length across sigma_w^2 for tanh, with and without dropout.
#include <cstdio>

#include "dmft/mft.hpp"
#include "dmft/activations.hpp"

int main() {
  const auto act = dmft::make_tanh();
  const double sb = 0.05;
  const double sw_c = dmft::critical_sigma_w(act, sb);
  std::printf("critical sigma_w^2 = %.10f\n\n", sw_c);
  std::printf("%10s %8s %10s %10s %12s\n", "sigma_w^2", "rho", "h", "m", "xi");
  for (double rho : {1.0, 0.95, 0.8}) {
    for (double sw : {1.0, 1.4, sw_c, 2.2, 3.0}) {
      const dmft::GaussianChannel ch(dmft::ChannelParams{sw, sb, rho, act});
      const auto fp = dmft::solve_fixed_point(ch, 0.5, ch.q());
      std::printf("%10.4f %8.2f %10.3e %10.3e %12.4g\n", sw, rho, ch.field(), fp.m, fp.xi);
    }
  }
}
