#include "slcp/instance_gen.hpp"

#include "slcp/rng.hpp"

namespace slcp {

TwoStageGame generate_instance(const GeneratorSpec& spec) {
  if (spec.J <= 0) throw std::invalid_argument("generate_instance: J must be positive");
  if (spec.nu <= 0) throw std::invalid_argument("generate_instance: nu must be positive");
  const int J = spec.J;

  auto draw_vector = [&](std::uint64_t stream, double lo, double hi) {
    SplitMix64 rng = substream(spec.seed, stream);
    Eigen::VectorXd v(J);
    for (int i = 0; i < J; ++i) v(i) = rng.uniform(lo, hi);
    return v;
  };

  TwoStageGame g;
  g.J = J;
  g.first_stage.a = draw_vector(0, 0.0, 1.0);
  Eigen::VectorXd c_raw = draw_vector(1, 0.0, 1.0);
  Eigen::VectorXd beta_bar = draw_vector(2, 0.0, 1.0);
  Eigen::VectorXd h_bar = draw_vector(3, 2.0, 3.0);
  double gamma_bar = substream(spec.seed, 4).uniform(1e-6, 0.5);
  double alpha_bar = substream(spec.seed, 5).uniform(5.0, 10.0);

  g.first_stage.r = Eigen::VectorXd::Constant(J, 0.5);
  // Diagonal dominance offset: C_ii = 10 + c_raw_i + (r'e + (J-2) r_i).
  const double offset = 10.0 + 0.5 * J + 0.5 * (J - 2);
  g.first_stage.c = (c_raw.array() + offset - 0.5).matrix();

  SplitMix64 xi_rng = substream(spec.seed, 6);
  g.scenarios.reserve(spec.nu);
  for (int l = 0; l < spec.nu; ++l) {
    double xi = xi_rng.uniform(1.0, 2.0);
    ScenarioData s;
    s.h = xi * h_bar;
    s.gamma = xi * gamma_bar;
    s.rho = (-xi * alpha_bar + (xi * beta_bar).array()).matrix();
    g.scenarios.push_back(std::move(s));
  }
  g.validate();
  return g;
}

}  // namespace slcp
