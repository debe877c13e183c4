// SPDX-License-Identifier: Apache-2.0
//
// Hermite tails of ReLU, tanh and GELU and the resulting class verdicts.
#include <cmath>
#include <cstdio>

#include "dmft/activations.hpp"
#include "dmft/hermite.hpp"

int main() {
  using namespace dmft;
  for (const auto& act : {make_relu(), make_tanh(), make_gelu()}) {
    const auto spec = hermite_coeffs(act, 1.0, 120);
    const auto v = classify_universality(spec);
    std::printf("%-5s sum a_n^2 = %.9f  mean degree = %.4f  tail slope = %7.3f  class = %s\n", act.name.c_str(),
                spec.sum_sq, spec.mean_degree, v.tail_slope, v.cls == Smoothness::kinked ? "kinked" : "smooth");
  }
  std::printf("\n%4s %14s %14s\n", "n", "relu", "tanh");
  const auto t = hermite_coeffs(make_tanh(), 1.0, 12);
  for (int n = 0; n <= 12; ++n) {
    std::printf("%4d %14.8f %14.8f\n", n, relu_hermite_closed(n), t.coeffs[static_cast<std::size_t>(n)]);
  }
}
