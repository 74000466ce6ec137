#include "slcp/second_stage.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace slcp {

namespace {

Eigen::VectorXd clamp_box(const Eigen::VectorXd& y, const Eigen::VectorXd& x) {
  return y.cwiseMax(0.0).cwiseMin(x);
}

double fixed_point_residual(const ScenarioData& s, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y) {
  Eigen::VectorXd g = scenario_hessian_apply(s, y) + s.rho;
  return (y - clamp_box(y - g, x)).norm();
}

// Exact solve on the free set identified from y; bound components stay put.
// Returns true if the refined point is box-feasible and improved.
bool polish_free_set(const ScenarioData& s, const Eigen::VectorXd& x, Eigen::VectorXd& y,
                     double& fp_res) {
  const int n = static_cast<int>(x.size());
  std::vector<int> free_idx;
  for (int i = 0; i < n; ++i) {
    double margin = 1e-9 * (1.0 + x(i));
    if (y(i) > margin && y(i) < x(i) - margin) free_idx.push_back(i);
  }
  Eigen::VectorXd candidate = y;
  for (int i = 0; i < n; ++i) {
    double margin = 1e-9 * (1.0 + x(i));
    if (y(i) <= margin)
      candidate(i) = 0.0;
    else if (y(i) >= x(i) - margin)
      candidate(i) = x(i);
  }
  const int k = static_cast<int>(free_idx.size());
  if (k > 0) {
    std::vector<bool> is_free(n, false);
    for (int i : free_idx) is_free[i] = true;
    double bound_total = 0.0;
    for (int j = 0; j < n; ++j)
      if (!is_free[j]) bound_total += candidate(j);
    Eigen::MatrixXd a(k, k);
    Eigen::VectorXd rhs(k);
    for (int r = 0; r < k; ++r) {
      int i = free_idx[r];
      for (int c = 0; c < k; ++c) {
        int j = free_idx[c];
        a(r, c) = (i == j ? s.h(i) + 2.0 * s.gamma : s.gamma);
      }
      rhs(r) = -s.rho(i) - s.gamma * bound_total;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) return false;
    Eigen::VectorXd yf = llt.solve(rhs);
    for (int r = 0; r < k; ++r) {
      int i = free_idx[r];
      if (yf(r) < 0.0 || yf(r) > x(i)) return false;
      candidate(i) = yf(r);
    }
  }
  double res = fixed_point_residual(s, x, candidate);
  if (res < fp_res) {
    y = candidate;
    fp_res = res;
    return true;
  }
  return false;
}

}  // namespace

BoxQpResult solve_box_qp(const ScenarioData& s, const Eigen::VectorXd& x, double tol,
                         int max_iter, const Eigen::VectorXd* warm_start) {
  const int n = static_cast<int>(x.size());
  s.validate(n);
  if (!x.allFinite() || (x.array() < 0.0).any())
    throw std::invalid_argument("solve_box_qp: x must be nonnegative");
  if (warm_start && warm_start->size() != n)
    throw std::invalid_argument("solve_box_qp: warm start length mismatch");

  const double L = (s.h.array() + s.gamma).maxCoeff() + s.gamma * n;
  const double mu = (s.h.array() + s.gamma).minCoeff();
  const double momentum =
      (std::sqrt(L) - std::sqrt(mu)) / (std::sqrt(L) + std::sqrt(mu));

  Eigen::VectorXd y = warm_start
                          ? clamp_box(*warm_start, x)
                          : clamp_box((-s.rho.array() / (s.h.array() + 2.0 * s.gamma)).matrix(), x);
  Eigen::VectorXd z = y;

  double fp_res = fixed_point_residual(s, x, y);
  int iter = 0;
  while (fp_res > tol && iter < max_iter) {
    Eigen::VectorXd g = scenario_hessian_apply(s, z) + s.rho;
    Eigen::VectorXd y_next = clamp_box(z - g / L, x);
    z = y_next + momentum * (y_next - y);
    y = y_next;
    fp_res = fixed_point_residual(s, x, y);
    ++iter;
  }
  polish_free_set(s, x, y, fp_res);
  if (fp_res > tol)
    throw BoxQpError("solve_box_qp: iteration cap reached", y, fp_res);
  return {y, fp_res, iter};
}

Eigen::VectorXd least_norm_multiplier(const ScenarioData& s, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& y) {
  const int n = static_cast<int>(x.size());
  s.validate(n);
  if (y.size() != n) throw std::invalid_argument("least_norm_multiplier: y length mismatch");
  if ((y.array() < -1e-12).any() || ((y - x).array() > 1e-12).any())
    throw std::invalid_argument("least_norm_multiplier: y must lie in [0, x]");

  Eigen::VectorXd mult =
      (-(s.rho + scenario_hessian_apply(s, y))).cwiseMax(0.0);
  for (int i = 0; i < n; ++i) {
    if (x(i) == 0.0 || x(i) - y(i) > 1e-9 * (1.0 + x(i))) mult(i) = 0.0;
  }
  return mult;
}

double perturbation_bound(const ScenarioData& s, const ScenarioData& s_bar,
                          const Eigen::VectorXd& x, double gamma_cap) {
  const int n = static_cast<int>(x.size());
  s.validate(n);
  s_bar.validate(n);
  if (gamma_cap * s.gamma < 1.0 || gamma_cap * s_bar.gamma < 1.0)
    throw std::invalid_argument("perturbation_bound: Gamma * gamma must be at least 1");

  double d_rho = (s.rho - s_bar.rho).norm();
  double d_h =
      ((s.h.array() + s.gamma) - (s_bar.h.array() + s_bar.gamma)).abs().maxCoeff();
  double d_gamma = std::abs(s.gamma - s_bar.gamma);
  return gamma_cap * (d_rho + x.norm() * d_h + n * x.norm() * d_gamma);
}

}  // namespace slcp
