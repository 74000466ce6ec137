#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "slcp/game.hpp"

namespace slcp {

struct BoxQpResult {
  Eigen::VectorXd y;
  // ||y - proj_[0,x](y - (Ay + rho))||_2 with unit step.
  double fixed_point_residual = 0.0;
  int iterations = 0;
};

class BoxQpError : public std::runtime_error {
public:
  BoxQpError(std::string what, Eigen::VectorXd best_y, double best_residual)
      : std::runtime_error(std::move(what)),
        best_y(std::move(best_y)),
        best_residual(best_residual) {}

  Eigen::VectorXd best_y;
  double best_residual;
};

// Minimize y'Ay/2 + rho'y over [0, x] with A = diag(h) + gamma (I + ee').
// Accelerated projected gradient with step 1/L, L = max_i(h_i + gamma)
// + gamma J, followed by an exact solve on the identified free set. Throws
// BoxQpError with the best iterate if the cap is hit above tolerance;
// requires x >= 0 elementwise.
BoxQpResult solve_box_qp(const ScenarioData& s, const Eigen::VectorXd& x, double tol = 1e-10,
                         int max_iter = 10000, const Eigen::VectorXd* warm_start = nullptr);

// Least-norm capacity multiplier s = max(0, -rho - Ay), with the selection
// rule that pins s_i to zero wherever the capacity constraint is slack
// (x_i - y_i > 1e-9 (1 + x_i)) and wherever x_i == 0.
Eigen::VectorXd least_norm_multiplier(const ScenarioData& s, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& y);

// Error bound between the scenario solutions of s and s_bar at capacity x:
//   Gamma (||rho - rho_bar|| + ||x|| max_i|h_i+gamma - (h_bar_i+gamma_bar)|
//          + J ||x|| |gamma - gamma_bar|).
// Requires Gamma * gamma >= 1 for both scenarios.
double perturbation_bound(const ScenarioData& s, const ScenarioData& s_bar,
                          const Eigen::VectorXd& x, double gamma_cap);

}  // namespace slcp
