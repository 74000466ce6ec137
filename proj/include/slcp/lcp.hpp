#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace slcp {

// Complementarity problem data: find v >= 0 with Mv + q >= 0 and v'(Mv+q) = 0.
struct LcpProblem {
  Eigen::MatrixXd M;
  Eigen::VectorXd q;

  int size() const { return static_cast<int>(q.size()); }
  void validate() const;
};

struct LcpSolution {
  Eigen::VectorXd v;
  double residual = 0.0;
};

// Natural-map residual ||min(v, Mv+q)||_2. Throws std::invalid_argument on a
// dimension mismatch or non-finite input.
double lcp_residual(const LcpProblem& prob, const Eigen::VectorXd& v);

enum class LcpFailure { NotConverged, NotPositiveDefinite };

class LcpSolveError : public std::runtime_error {
public:
  LcpSolveError(LcpFailure kind, std::string what, Eigen::VectorXd best_v, double best_residual)
      : std::runtime_error(std::move(what)),
        kind(kind),
        best_v(std::move(best_v)),
        best_residual(best_residual) {}

  LcpFailure kind;
  Eigen::VectorXd best_v;
  double best_residual;
};

// Solver for positive-definite (not necessarily symmetric) M: semismooth
// Newton on the min map with an Armijo line search; after 5 failed line
// searches it interleaves projected Gauss-Seidel sweeps. Hard cap of 200
// Newton iterations. Throws LcpSolveError carrying the best iterate on
// non-convergence, with kind NotPositiveDefinite when a negative-curvature
// direction, a non-positive diagonal, or a singular principal submatrix
// certifies the PD assumption is violated.
LcpSolution solve_lcp_pd(const LcpProblem& prob, double tol = 1e-10,
                         const Eigen::VectorXd* warm_start = nullptr);

// Brute-force reference: for every index subset K solve M_KK v_K = -q_K,
// v = 0 elsewhere, and keep candidates whose residual is <= 1e-10 after
// clamping round-off negatives. Singular principal submatrices are skipped,
// duplicates within 1e-9 (max norm) are dropped. Intended for n <= 20
// (2^n subsets); max_n up to 24 may be passed explicitly, larger n throws.
std::vector<LcpSolution> enumerate_active_sets(const LcpProblem& prob, int max_n = 20);

// One exact Newton step at the active set implied by the current iterate:
// indices with (Mv+q)_i < v_i become equations, the rest are pinned to zero.
// Overwrites v and returns true only if the residual strictly improved.
bool refine_active_set(const LcpProblem& prob, Eigen::VectorXd& v);

}  // namespace slcp
