#include <doctest.h>

#include <Eigen/Dense>

#include "slcp/game.hpp"
#include "slcp/instance_gen.hpp"

using slcp::GeneratorSpec;

TEST_SUITE("instance_gen") {

TEST_CASE("generated data stays in the documented ranges") {
  GeneratorSpec spec;
  spec.J = 5;
  spec.nu = 8;
  spec.seed = 42;
  auto g = slcp::generate_instance(spec);

  CHECK(g.J == 5);
  REQUIRE(g.num_scenarios() == 8);
  CHECK((g.first_stage.r.array() == 0.5).all());
  CHECK((g.first_stage.a.array() >= 0.0).all());
  CHECK((g.first_stage.a.array() < 1.0).all());
  // Diagonal of C = diag(c_i + r_i) calibrated into [14, 15] at J = 5.
  CHECK(((g.first_stage.c.array() + 0.5) >= 14.0).all());
  CHECK(((g.first_stage.c.array() + 0.5) < 15.0).all());

  for (const auto& s : g.scenarios) {
    CHECK((s.h.array() >= 2.0).all());
    CHECK((s.h.array() <= 6.0).all());
    CHECK(s.gamma > 0.0);
    CHECK(s.gamma <= 1.0);
    CHECK((s.rho.array() < 0.0).all());
  }
}

TEST_CASE("scenarios share one multiplicative shock") {
  GeneratorSpec spec;
  spec.J = 4;
  spec.nu = 6;
  spec.seed = 7;
  auto g = slcp::generate_instance(spec);

  // h, gamma and rho are a common base scaled by the per-scenario shock, so
  // their ratios across scenarios are constant.
  const auto& ref = g.scenarios[0];
  for (int l = 1; l < g.num_scenarios(); ++l) {
    const auto& s = g.scenarios[l];
    double scale = s.gamma / ref.gamma;
    CHECK((s.h - scale * ref.h).cwiseAbs().maxCoeff() <= 1e-12 * s.h.maxCoeff());
    CHECK((s.rho - scale * ref.rho).cwiseAbs().maxCoeff() <= 1e-12 * ref.rho.cwiseAbs().maxCoeff());
    CHECK(scale >= 0.5);
    CHECK(scale <= 2.0);
  }
}

TEST_CASE("identical specs reproduce bit-identical games") {
  GeneratorSpec spec;
  spec.J = 3;
  spec.nu = 4;
  spec.seed = 123456789;
  auto a = slcp::generate_instance(spec);
  auto b = slcp::generate_instance(spec);
  CHECK(slcp::game_to_json(a) == slcp::game_to_json(b));

  spec.seed = 123456790;
  auto c = slcp::generate_instance(spec);
  CHECK(slcp::game_to_json(a) != slcp::game_to_json(c));
}

TEST_CASE("generated first stage passes the convexity check") {
  for (int J : {5, 10, 15}) {
    for (std::uint64_t seed = 0; seed < 100; seed += 3) {
      GeneratorSpec spec;
      spec.J = J;
      spec.nu = 1;
      spec.seed = seed;
      auto g = slcp::generate_instance(spec);
      auto rep = slcp::check_first_stage_convexity(g.first_stage);
      CHECK(rep.diagonally_dominant);
      CHECK(rep.symmetric_pd);
      CHECK(rep.min_dominance_margin > 0.0);
    }
  }
}

TEST_CASE("generated games survive the json round trip") {
  GeneratorSpec spec;
  spec.J = 2;
  spec.nu = 3;
  spec.seed = 99;
  auto g = slcp::generate_instance(spec);
  auto back = slcp::game_from_json(slcp::game_to_json(g));
  CHECK((back.first_stage.c - g.first_stage.c).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.scenarios[1].gamma == g.scenarios[1].gamma);
}

TEST_CASE("invalid sizes are rejected") {
  GeneratorSpec spec;
  spec.J = 0;
  CHECK_THROWS_AS(slcp::generate_instance(spec), std::invalid_argument);
  spec.J = 2;
  spec.nu = 0;
  CHECK_THROWS_AS(slcp::generate_instance(spec), std::invalid_argument);
}

}  // TEST_SUITE
