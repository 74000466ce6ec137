#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <string>

#include "slcp/game.hpp"
#include "slcp/instance_gen.hpp"
#include "slcp/lcp.hpp"
#include "slcp/solvers.hpp"

using Eigen::VectorXd;
using slcp::EquilibriumSolution;
using slcp::GeneratorSpec;
using slcp::SolverConfig;
using slcp::TwoStageGame;

namespace {

TwoStageGame trivial_game() {
  // a >= 0 and rho >= 0: zero production is the equilibrium.
  TwoStageGame g;
  g.J = 2;
  g.first_stage.c = VectorXd::Constant(2, 1.0);
  g.first_stage.a = VectorXd::Zero(2);
  g.first_stage.a << 1.0, 2.0;
  g.first_stage.r = VectorXd::Zero(2);
  slcp::ScenarioData s;
  s.h = VectorXd::Constant(2, 1.0);
  s.gamma = 0.5;
  s.rho = VectorXd::Constant(2, 0.5);
  g.scenarios.push_back(s);
  g.scenarios.push_back(s);
  return g;
}

TwoStageGame gen(int J, int nu, std::uint64_t seed) {
  GeneratorSpec spec;
  spec.J = J;
  spec.nu = nu;
  spec.seed = seed;
  return slcp::generate_instance(spec);
}

VectorXd stack_solution(const EquilibriumSolution& sol) {
  const int J = static_cast<int>(sol.x.size());
  const int nu = static_cast<int>(sol.y.size());
  VectorXd v(J * (2 * nu + 1));
  v.head(J) = sol.x;
  for (int l = 0; l < nu; ++l) {
    v.segment(J + 2 * J * l, J) = sol.y[l];
    v.segment(J + 2 * J * l + J, J) = sol.s[l];
  }
  return v;
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("default initial point pins") {
  TwoStageGame g = trivial_game();
  CHECK(slcp::default_initial_point(g).norm() == 0.0);

  g.first_stage.a << -2.0, 1.0;
  // (C + re')^{-1} is diagonal here: x = (2, max(0, -1)).
  VectorXd x0 = slcp::default_initial_point(g);
  CHECK(x0(0) == doctest::Approx(2.0));
  CHECK(x0(1) == 0.0);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto rg = gen(3, 2, seed);
    VectorXd x = slcp::default_initial_point(rg);
    CHECK(x.allFinite());
    CHECK(x.minCoeff() >= 0.0);
  }
}

TEST_CASE("both solvers recognize the trivial equilibrium immediately") {
  TwoStageGame g = trivial_game();
  SolverConfig cfg;
  cfg.estimate_contraction = false;

  auto aba = slcp::solve_aba(g, cfg);
  CHECK(aba.converged);
  CHECK(aba.reason == slcp::StopReason::Residual);
  CHECK(aba.iterations == 1);
  CHECK(aba.residual == 0.0);
  CHECK(aba.x.norm() == 0.0);
  for (const auto& y : aba.y) CHECK(y.norm() == 0.0);
  for (const auto& s : aba.s) CHECK(s.norm() == 0.0);

  auto pha = slcp::solve_pha(g, cfg);
  CHECK(pha.converged);
  CHECK(pha.iterations == 1);
  CHECK(pha.x.norm() == 0.0);
}

TEST_CASE("solutions match exhaustive enumeration on a small instance") {
  auto g = gen(2, 2, 1);
  SolverConfig cfg;
  cfg.tol_residual = 1e-10;
  cfg.tol_step = 1e-12;
  cfg.max_iter = 2000;
  cfg.estimate_contraction = false;

  auto oracle = slcp::enumerate_active_sets(slcp::assemble_big_lcp(g));
  REQUIRE(!oracle.empty());

  auto aba = slcp::solve_aba(g, cfg);
  REQUIRE(aba.converged);
  CHECK(aba.x.minCoeff() > 1e-6);  // interior equilibrium: oracle match applies
  double best = 1e30;
  VectorXd va = stack_solution(aba);
  for (const auto& s : oracle) best = std::min(best, (s.v - va).norm());
  CHECK(best <= 1e-8);

  auto pha = slcp::solve_pha(g, cfg);
  REQUIRE(pha.converged);
  VectorXd vp = stack_solution(pha);
  best = 1e30;
  for (const auto& s : oracle) best = std::min(best, (s.v - vp).norm());
  CHECK(best <= 1e-8);

  CHECK((aba.x - pha.x).norm() <= 1e-8);
}

TEST_CASE("alternating block solver converges on the benchmark family") {
  auto g = gen(5, 50, 3);
  SolverConfig cfg;
  auto sol = slcp::solve_aba(g, cfg);
  CHECK(sol.converged);
  CHECK(sol.residual <= 1e-6);
  CHECK(sol.iterations >= 2);
  CHECK(sol.iterations <= 100);
  CHECK(sol.x.minCoeff() >= 0.0);
  for (int l = 0; l < g.num_scenarios(); ++l) {
    CHECK(sol.y[l].minCoeff() >= -1e-12);
    CHECK((sol.x - sol.y[l]).minCoeff() >= -1e-9);
    CHECK(sol.s[l].minCoeff() >= 0.0);
  }
  // The sampled contraction diagnostic certifies the linear rate regime.
  CHECK(sol.contraction_estimate < 1.0);
  CHECK(sol.contraction_estimate > 0.0);
}

TEST_CASE("proximal splitting solver converges and keeps a zero multiplier mean") {
  auto g = gen(5, 5, 2);
  SolverConfig cfg;
  cfg.estimate_contraction = false;
  auto sol = slcp::solve_pha(g, cfg);
  CHECK(sol.converged);
  CHECK(sol.residual <= 1e-6);
  CHECK(sol.multiplier_mean_max <= 1e-12);
  CHECK(sol.x.minCoeff() >= 0.0);
}

TEST_CASE("iterate history contracts toward the fixed point") {
  auto g = gen(5, 5, 4);
  SolverConfig cfg;
  cfg.record_x_history = true;
  auto sol = slcp::solve_aba(g, cfg);
  REQUIRE(sol.converged);
  REQUIRE(sol.contraction_estimate < 1.0);
  REQUIRE(sol.x_history.size() >= 3);

  std::vector<double> err;
  for (const auto& xk : sol.x_history) err.push_back((xk - sol.x).norm());
  // Monotone decrease once the first-stage update has run at least once.
  for (std::size_t j = 1; j + 1 < err.size(); ++j) {
    if (err[j] < 1e-9) break;
    CHECK(err[j + 1] <= err[j] + 1e-9);
  }
}

TEST_CASE("a step stop still delivers a small residual") {
  for (std::uint64_t seed = 10; seed < 16; ++seed) {
    auto g = gen(3, 4, seed);
    SolverConfig cfg;
    cfg.estimate_contraction = false;
    auto sol = slcp::solve_aba(g, cfg);
    REQUIRE(sol.converged);
    if (sol.reason == slcp::StopReason::Step)
      CHECK(sol.residual <= 10.0 * cfg.tol_residual);
  }
}

TEST_CASE("proximal splitting limit is independent of the starting point") {
  auto g = gen(2, 2, 3);
  SolverConfig cfg;
  cfg.tol_residual = 1e-8;
  cfg.max_iter = 1000;
  cfg.estimate_contraction = false;

  auto a = slcp::solve_pha(g, cfg);
  REQUIRE(a.converged);

  VectorXd x0 = slcp::default_initial_point(g).array() + 1.0;
  std::vector<VectorXd> v0(g.num_scenarios(), VectorXd::Constant(2 * g.J, 0.25));
  auto b = slcp::solve_pha(g, cfg, x0, v0);
  REQUIRE(b.converged);

  CHECK((a.x - b.x).norm() <= 1e-5);
}

TEST_CASE("equal configurations reproduce bit-identical results across thread counts") {
  auto g = gen(4, 6, 8);
  SolverConfig one;
  one.threads = 1;
  one.estimate_contraction = false;
  SolverConfig four = one;
  four.threads = 4;

  auto sa = slcp::solve_aba(g, one);
  auto sb = slcp::solve_aba(g, four);
  CHECK(sa.iterations == sb.iterations);
  CHECK(sa.residual == sb.residual);
  CHECK((sa.x - sb.x).cwiseAbs().maxCoeff() == 0.0);
  for (int l = 0; l < g.num_scenarios(); ++l)
    CHECK((sa.y[l] - sb.y[l]).cwiseAbs().maxCoeff() == 0.0);

  auto pa = slcp::solve_pha(g, one);
  auto pb = slcp::solve_pha(g, four);
  CHECK(pa.iterations == pb.iterations);
  CHECK((pa.x - pb.x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("equilibrium x is a best response against the scenario solutions") {
  auto g = gen(2, 2, 5);
  SolverConfig cfg;
  cfg.tol_residual = 1e-10;
  cfg.max_iter = 2000;
  cfg.estimate_contraction = false;
  auto sol = slcp::solve_aba(g, cfg);
  REQUIRE(sol.converged);

  // Deviating in one coordinate, with each scenario response re-optimized for
  // the deviator only, must not improve that producer's profit.
  const int J = g.J;
  const int nu = g.num_scenarios();
  auto profit_of = [&](int i, double xi) {
    double second = 0.0;
    for (int l = 0; l < nu; ++l) {
      const auto& s = g.scenarios[l];
      double others = sol.y[l].sum() - sol.y[l](i);
      double br = (-s.rho(i) - s.gamma * others) / (s.h(i) + 2.0 * s.gamma);
      double yi = std::clamp(br, 0.0, xi);
      second += -s.rho(i) * yi - 0.5 * s.h(i) * yi * yi - s.gamma * (yi + others) * yi;
    }
    second /= static_cast<double>(nu);
    double total_others = sol.x.sum() - sol.x(i);
    double cost = 0.5 * g.first_stage.c(i) * xi * xi + g.first_stage.a(i) * xi +
                  g.first_stage.r(i) * xi * (xi + total_others);
    return second - cost;
  };

  for (int i = 0; i < J; ++i) {
    double base = profit_of(i, sol.x(i));
    for (int k = -10; k <= 10; ++k) {
      double xi = std::max(0.0, sol.x(i) + 0.05 * k);
      CHECK(profit_of(i, xi) <= base + 1e-6);
    }
  }
}

TEST_CASE("trace rows are well formed and exportable") {
  auto g = gen(3, 3, 6);
  SolverConfig cfg;
  cfg.estimate_contraction = false;
  auto sol = slcp::solve_aba(g, cfg);
  REQUIRE(!sol.trace.empty());
  CHECK(static_cast<int>(sol.trace.size()) == sol.iterations);
  CHECK(sol.trace.front().iteration == 1);
  for (std::size_t i = 1; i < sol.trace.size(); ++i) {
    CHECK(sol.trace[i].iteration == sol.trace[i - 1].iteration + 1);
    CHECK(sol.trace[i].elapsed_seconds >= sol.trace[i - 1].elapsed_seconds);
  }

  std::ostringstream out;
  slcp::write_trace_csv(out, sol.trace);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "iteration,residual,step_norm,elapsed_seconds");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == static_cast<int>(sol.trace.size()));
}

TEST_CASE("configuration errors are rejected") {
  auto g = gen(2, 2, 7);
  SolverConfig cfg;
  cfg.proximal_step = 0.0;
  CHECK_THROWS_AS(slcp::solve_pha(g, cfg), std::invalid_argument);

  SolverConfig ok;
  VectorXd x0 = VectorXd::Zero(3);  // wrong length
  std::vector<VectorXd> v0(2, VectorXd::Zero(4));
  CHECK_THROWS_AS(slcp::solve_pha(g, ok, x0, v0), std::invalid_argument);
  x0 = VectorXd::Zero(2);
  v0.assign(2, VectorXd::Zero(3));  // wrong block length
  CHECK_THROWS_AS(slcp::solve_pha(g, ok, x0, v0), std::invalid_argument);
  v0.assign(1, VectorXd::Zero(4));  // wrong scenario count
  CHECK_THROWS_AS(slcp::solve_pha(g, ok, x0, v0), std::invalid_argument);
}

}  // TEST_SUITE
