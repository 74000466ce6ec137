#include "slcp/lcp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace slcp {

namespace {

Eigen::VectorXd min_map(const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
  return v.cwiseMin(w);
}

// Residual of the candidate against prob, assuming v already >= 0.
double residual_of(const LcpProblem& prob, const Eigen::VectorXd& v) {
  return min_map(v, prob.M * v + prob.q).norm();
}

// Projected Gauss-Seidel sweep; requires positive diagonal.
void pgs_sweep(const LcpProblem& prob, Eigen::VectorXd& v) {
  const int n = prob.size();
  for (int i = 0; i < n; ++i) {
    double wi = prob.q(i) + prob.M.row(i).dot(v);
    v(i) = std::max(0.0, v(i) - wi / prob.M(i, i));
  }
}

}  // namespace

void LcpProblem::validate() const {
  if (M.rows() != M.cols()) throw std::invalid_argument("LcpProblem: M must be square");
  if (M.rows() != q.size()) throw std::invalid_argument("LcpProblem: M and q dimensions differ");
  if (!M.allFinite() || !q.allFinite())
    throw std::invalid_argument("LcpProblem: non-finite entries");
}

double lcp_residual(const LcpProblem& prob, const Eigen::VectorXd& v) {
  prob.validate();
  if (v.size() != prob.q.size())
    throw std::invalid_argument("lcp_residual: v dimension mismatch");
  if (!v.allFinite()) throw std::invalid_argument("lcp_residual: non-finite v");
  return min_map(v, prob.M * v + prob.q).norm();
}

LcpSolution solve_lcp_pd(const LcpProblem& prob, double tol, const Eigen::VectorXd* warm_start) {
  prob.validate();
  const int n = prob.size();
  if (n == 0) return {Eigen::VectorXd(), 0.0};
  if (warm_start && warm_start->size() != n)
    throw std::invalid_argument("solve_lcp_pd: warm start dimension mismatch");

  for (int i = 0; i < n; ++i) {
    if (prob.M(i, i) <= 0.0)
      throw LcpSolveError(LcpFailure::NotPositiveDefinite,
                          "solve_lcp_pd: non-positive diagonal entry", Eigen::VectorXd::Zero(n),
                          residual_of(prob, Eigen::VectorXd::Zero(n)));
  }

  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  if (warm_start) v = warm_start->cwiseMax(0.0);
  Eigen::VectorXd best_v = v;
  double best_res = residual_of(prob, v);

  constexpr int kMaxIter = 200;
  constexpr double kArmijo = 1e-4;
  int failed_searches = 0;

  Eigen::MatrixXd jac(n, n);
  for (int iter = 0; iter < kMaxIter; ++iter) {
    Eigen::VectorXd w = prob.M * v + prob.q;
    Eigen::VectorXd f = min_map(v, w);
    double res = f.norm();
    if (res < best_res) {
      best_res = res;
      best_v = v;
    }
    if (res <= tol) {
      v = v.cwiseMax(0.0);
      return {v, residual_of(prob, v)};
    }

    // Row i comes from M where the min map selects the equation side.
    jac.setIdentity(n, n);
    for (int i = 0; i < n; ++i)
      if (w(i) < v(i)) jac.row(i) = prob.M.row(i);

    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible())
      throw LcpSolveError(LcpFailure::NotPositiveDefinite,
                          "solve_lcp_pd: singular principal submatrix", best_v, best_res);
    Eigen::VectorXd d = lu.solve(-f);

    double curvature = d.dot(prob.M * d);
    if (curvature < -1e-12 * d.squaredNorm())
      throw LcpSolveError(LcpFailure::NotPositiveDefinite,
                          "solve_lcp_pd: negative curvature direction", best_v, best_res);

    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k < 24; ++k) {
      Eigen::VectorXd trial = v + alpha * d;
      if (residual_of(prob, trial) <= (1.0 - kArmijo * alpha) * res) {
        v = trial;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      ++failed_searches;
      if (failed_searches >= 5) {
        // Fall back on projected Gauss-Seidel until the residual moves.
        double before = res;
        for (int sweep = 0; sweep < 50; ++sweep) {
          pgs_sweep(prob, v);
          if (residual_of(prob, v) <= 0.9 * before) break;
        }
        failed_searches = 0;
      } else {
        v = v + d;  // full semismooth step despite the failed search
      }
      double r = residual_of(prob, v.cwiseMax(0.0));
      if (r < best_res) {
        best_res = r;
        best_v = v.cwiseMax(0.0);
      }
    }
  }
  throw LcpSolveError(LcpFailure::NotConverged, "solve_lcp_pd: iteration cap reached", best_v,
                      best_res);
}

std::vector<LcpSolution> enumerate_active_sets(const LcpProblem& prob, int max_n) {
  prob.validate();
  const int n = prob.size();
  if (max_n > 24) throw std::invalid_argument("enumerate_active_sets: max_n capped at 24");
  if (n > max_n) throw std::invalid_argument("enumerate_active_sets: problem too large");

  constexpr double kResTol = 1e-10;
  constexpr double kDedupTol = 1e-9;

  // Nonzero patterns as bitmasks: a subset containing an index whose row or
  // column restricted to the subset is all zero has a singular submatrix and
  // is skipped before any linear algebra.
  std::vector<std::uint64_t> row_nz(n, 0), col_nz(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (prob.M(i, j) != 0.0) {
        row_nz[i] |= std::uint64_t{1} << j;
        col_nz[j] |= std::uint64_t{1} << i;
      }

  std::vector<LcpSolution> found;
  std::vector<int> idx;
  idx.reserve(n);
  Eigen::MatrixXd sub_buf(n, n);
  Eigen::VectorXd rhs_buf(n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;

  const std::uint64_t masks = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < masks; ++mask) {
    bool degenerate = false;
    for (std::uint64_t m = mask; m != 0; m &= m - 1) {
      int i = std::countr_zero(m);
      if ((row_nz[i] & mask) == 0 || (col_nz[i] & mask) == 0) {
        degenerate = true;
        break;
      }
    }
    if (degenerate) continue;

    idx.clear();
    for (std::uint64_t m = mask; m != 0; m &= m - 1) idx.push_back(std::countr_zero(m));
    const int k = static_cast<int>(idx.size());

    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    if (k > 0) {
      auto sub = sub_buf.topLeftCorner(k, k);
      auto rhs = rhs_buf.head(k);
      for (int r = 0; r < k; ++r) {
        for (int c = 0; c < k; ++c) sub(r, c) = prob.M(idx[r], idx[c]);
        rhs(r) = -prob.q(idx[r]);
      }
      lu.compute(sub);
      Eigen::VectorXd vk = lu.solve(rhs);
      if (!vk.allFinite()) continue;
      // A sloppy solve means the submatrix is singular to working precision.
      if ((sub * vk - rhs).norm() > 1e-8 * (1.0 + rhs.norm())) continue;
      if ((vk.array() < -kResTol).any()) continue;
      for (int r = 0; r < k; ++r) v(idx[r]) = std::max(vk(r), 0.0);
    }

    double res = residual_of(prob, v);
    if (res > kResTol) continue;

    bool duplicate = false;
    for (const auto& s : found) {
      if ((s.v - v).cwiseAbs().maxCoeff() <= kDedupTol) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) found.push_back({v, res});
  }
  return found;
}

bool refine_active_set(const LcpProblem& prob, Eigen::VectorXd& v) {
  prob.validate();
  if (v.size() != prob.q.size())
    throw std::invalid_argument("refine_active_set: v dimension mismatch");
  const int n = prob.size();

  double old_res = residual_of(prob, v.cwiseMax(0.0));
  Eigen::VectorXd w = prob.M * v + prob.q;
  std::vector<int> active;
  for (int i = 0; i < n; ++i)
    if (w(i) < v(i)) active.push_back(i);

  Eigen::VectorXd candidate = Eigen::VectorXd::Zero(n);
  const int k = static_cast<int>(active.size());
  if (k > 0) {
    Eigen::MatrixXd sub(k, k);
    Eigen::VectorXd rhs(k);
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) sub(r, c) = prob.M(active[r], active[c]);
      rhs(r) = -prob.q(active[r]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
    if (!lu.isInvertible()) return false;
    Eigen::VectorXd vk = lu.solve(rhs);
    if (!vk.allFinite()) return false;
    for (int r = 0; r < k; ++r) candidate(active[r]) = vk(r);
  }
  candidate = candidate.cwiseMax(0.0);
  double new_res = residual_of(prob, candidate);
  if (new_res < old_res) {
    v = candidate;
    return true;
  }
  return false;
}

}  // namespace slcp
