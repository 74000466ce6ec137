#pragma once

#include <cstdint>

#include "slcp/game.hpp"

namespace slcp {

struct GeneratorSpec {
  int J = 5;
  int nu = 5;
  std::uint64_t seed = 0;
};

// Random game family used by the benchmark harness. All draws come from
// SplitMix64 substreams of the seed (see rng.hpp), one substream per vector,
// in this order: a (stream 0), c (1), beta_bar (2), h_bar (3), gamma_bar (4),
// alpha_bar (5), xi_1..xi_nu (6). Recipe:
//   a_i, c_raw_i, beta_bar_i ~ U[0,1];  h_bar_i ~ U[2,3];
//   gamma_bar ~ U[1e-6, 0.5];  alpha_bar ~ U[5,10];  r = 0.5 e;
//   stored c_i = 10 + c_raw_i + J/2 + (J-2)/2 - 1/2, so the diagonal of
//   C = diag(c_i + r_i) lies in [14, 15] for J = 5;
//   per scenario xi_l ~ U[1,2]: h = xi h_bar, gamma = xi gamma_bar,
//   rho = -xi alpha_bar e + xi beta_bar.
// Identical spec -> bit-identical game on every platform.
TwoStageGame generate_instance(const GeneratorSpec& spec);

}  // namespace slcp
