#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include "slcp/game.hpp"

namespace slcp {

struct SolverConfig {
  int max_iter = 400;
  double tol_residual = 1e-6;
  double tol_step = 1e-6;
  double proximal_step = 1.0;  // t in the progressive hedging subproblems
  double inner_tol = 1e-10;    // scenario subproblem tolerance
  int threads = 0;             // 0 = all hardware threads
  bool polish = true;          // exact active-set refinement after the loop
  bool estimate_contraction = true;
  bool record_x_history = false;
};

struct TraceRow {
  int iteration = 0;
  double residual = 0.0;
  double step_norm = 0.0;
  double elapsed_seconds = 0.0;
};

enum class StopReason { Residual, Step, MaxIter };

struct EquilibriumSolution {
  Eigen::VectorXd x;
  std::vector<Eigen::VectorXd> y;
  std::vector<Eigen::VectorXd> s;
  double residual = 0.0;  // big-LCP residual of (x, y, s)
  bool converged = false;
  StopReason reason = StopReason::MaxIter;
  int iterations = 0;
  std::vector<TraceRow> trace;
  bool polished = false;
  // ||C2^{-1}||^2 sigma_hat sampled-submatrix estimate; a reported lower
  // bound on the contraction constant, NaN when not computed, +inf when the
  // symmetrized first-stage matrix is not PD.
  double contraction_estimate = std::numeric_limits<double>::quiet_NaN();
  // Progressive hedging only: max over iterations of ||mean_l w_l||_inf.
  double multiplier_mean_max = 0.0;
  std::vector<Eigen::VectorXd> x_history;  // filled when record_x_history
};

// max(0, -(C + re')^{-1} a), the common starting point of both algorithms.
Eigen::VectorXd default_initial_point(const TwoStageGame& g);

// Alternating best-response: per-scenario box QPs in y with multiplier
// recovery, then a J-dimensional first-stage LCP, until the step norm or the
// big-LCP residual meets tolerance or max_iter is hit. Inner solver failures
// propagate as exceptions; hitting max_iter returns converged = false.
EquilibriumSolution solve_aba(const TwoStageGame& g, const SolverConfig& cfg = {});

// Progressive hedging: per-scenario regularized 3J LCP subproblems, scenario
// averaging of the first-stage block, and multiplier updates
// w_l += t (x_hat_l - x_bar), which keep mean_l w_l = 0.
EquilibriumSolution solve_pha(const TwoStageGame& g, const SolverConfig& cfg = {});
EquilibriumSolution solve_pha(const TwoStageGame& g, const SolverConfig& cfg,
                              const Eigen::VectorXd& x0,
                              const std::vector<Eigen::VectorXd>& v0);

// Sampled estimate of ||C2^{-1}||^2 (1/nu) sum_l max_K ||M(xi_l)_K^{-1}||:
// full eigenvalue solve for the first-stage factor, principal submatrices of
// the scenario matrices sampled deterministically. +inf when C + (re'+er')/2
// is not PD. A lower bound: < 1 certifies nothing beyond the sampled sets.
double contraction_estimate(const TwoStageGame& g, int scenario_samples = 16,
                            int subset_samples = 64, std::uint64_t seed = 0x5EEDC0DEull);

// Header iteration,residual,step_norm,elapsed_seconds and one row per entry,
// doubles in shortest round-trip form.
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

}  // namespace slcp
