// SPDX-License-Identifier: Apache-2.0
//
// xi_eff and regularization reach for the schedule library at L = 6.
#include <cstdio>

#include "dmft/activations.hpp"
#include "dmft/scheduler.hpp"

int main() {
  using namespace dmft;
  const int L = 6;
  const double coeff = decay_coefficient(Smoothness::kinked, relu_kappa());
  const auto w = reach_weights(L, 4.0);
  std::printf("%-12s %8s %8s   profile\n", "kind", "xi_eff", "reach");
  for (auto kind : {ScheduleKind::constant, ScheduleKind::linear_inc, ScheduleKind::linear_dec, ScheduleKind::step_early,
                    ScheduleKind::step_late}) {
    const auto p = schedule_library(kind, 0.1, 0.2, L);
    std::printf("%-12s %8.3f %8.4f  ", p.label.c_str(), xi_eff(p, Smoothness::kinked, coeff), reach_value(p.h_per_layer, w));
    for (double h : p.h_per_layer) std::printf(" %.3f", h);
    std::printf("\n");
  }
  const auto lp = frontload_lp(0.1, 0.2, w);
  std::printf("%-12s %8.3f %8.4f\n", "frontload", xi_eff(lp, Smoothness::kinked, coeff), reach_value(lp.h_per_layer, w));
  std::printf("\ncontinuum step/constant reach at tau = 1.5, f = 0.5: %.4f\n", reach_ratio(1.5, 0.5));
}
