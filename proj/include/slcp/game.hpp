#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "slcp/lcp.hpp"

namespace slcp {

// First-stage cost data for J agents: theta_i(x) = c_i x_i^2 / 2 + a_i x_i
// + r_i x_i sum_j x_j.
struct FirstStageParams {
  Eigen::VectorXd c;
  Eigen::VectorXd a;
  Eigen::VectorXd r;

  int agents() const { return static_cast<int>(c.size()); }
  void validate() const;
};

// One demand scenario: quadratic supply cost h_i, inverse-demand slope gamma,
// and rho_i = -alpha + beta_i combining the demand intercept with the linear
// supply cost.
struct ScenarioData {
  Eigen::VectorXd h;
  double gamma = 0.0;
  Eigen::VectorXd rho;

  void validate(int agents) const;
};

struct TwoStageGame {
  int J = 0;
  FirstStageParams first_stage;
  std::vector<ScenarioData> scenarios;

  int num_scenarios() const { return static_cast<int>(scenarios.size()); }
  void validate() const;
};

// C + r e' with C = diag(c_i + r_i).
Eigen::MatrixXd first_stage_matrix(const FirstStageParams& fs);

// KKT matrix of the scenario equilibrium in y: diag(h) + gamma (I + ee').
Eigen::MatrixXd scenario_hessian(const ScenarioData& s);

// Same matrix applied to y in O(J).
Eigen::VectorXd scenario_hessian_apply(const ScenarioData& s, const Eigen::VectorXd& y);

struct ConvexityReport {
  // Strict diagonal dominance c_i + 2 r_i > sum_{j != i} |r_i + r_j| / 2.
  bool diagonally_dominant = false;
  // Positive definiteness of C + (re' + er')/2 by Cholesky.
  bool symmetric_pd = false;
  double min_dominance_margin = 0.0;
};

// Sufficient condition for a convex, uniquely solvable first stage.
ConvexityReport check_first_stage_convexity(const FirstStageParams& fs);

// Scenario complementarity problem in v = (y, s):
//   M = [[diag(h)+gamma(I+ee'), I], [-I, 0]],  q = (rho, x).
LcpProblem build_scenario_matrix(const ScenarioData& s, const Eigen::VectorXd& x);

// Full deterministic-equivalent problem in (x, y_1, s_1, ..., y_nu, s_nu),
// dimension J(2 nu + 1). Dense; intended for diagnostics and tests at
// moderate sizes (solvers and residual checks work scenario-wise).
LcpProblem assemble_big_lcp(const TwoStageGame& g);

// Residual of the assembled problem evaluated blockwise without forming it.
double big_lcp_residual(const TwoStageGame& g, const Eigen::VectorXd& x,
                        const std::vector<Eigen::VectorXd>& ys,
                        const std::vector<Eigen::VectorXd>& ss);

// Expected second-stage profit minus first-stage cost per agent. alpha and
// beta are passed explicitly per scenario since the game stores only
// rho = -alpha e + beta.
Eigen::VectorXd evaluate_profits(const TwoStageGame& g, const Eigen::VectorXd& x,
                                 const std::vector<Eigen::VectorXd>& ys,
                                 const Eigen::VectorXd& alpha,
                                 const std::vector<Eigen::VectorXd>& beta);

// JSON round trip. Schema: {J, c[], a[], r[], scenarios: [{h[], gamma, rho[]}]}.
// Numbers survive the round trip bit-exactly. Schema violations throw
// std::invalid_argument naming the offending field.
std::string game_to_json(const TwoStageGame& g);
TwoStageGame game_from_json(const std::string& text);
void save_game(const TwoStageGame& g, const std::string& path);
TwoStageGame load_game(const std::string& path);

}  // namespace slcp
