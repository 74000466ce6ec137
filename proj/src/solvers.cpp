#include "slcp/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "slcp/format.hpp"
#include "slcp/parallel.hpp"
#include "slcp/rng.hpp"
#include "slcp/second_stage.hpp"

namespace slcp {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Eq.-style multiplier used inside the solvers: max(0, -rho - A y) with no
// selection rule, so zero-capacity agents keep the shadow value that feeds
// the first-stage update.
Eigen::VectorXd raw_multiplier(const ScenarioData& s, const Eigen::VectorXd& y) {
  return (-(s.rho + scenario_hessian_apply(s, y))).cwiseMax(0.0);
}

double stacked_step_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prev,
                         const std::vector<Eigen::VectorXd>& y,
                         const std::vector<Eigen::VectorXd>& y_prev,
                         const std::vector<Eigen::VectorXd>& s,
                         const std::vector<Eigen::VectorXd>& s_prev) {
  double sq = (x - x_prev).squaredNorm();
  for (std::size_t l = 0; l < y.size(); ++l)
    sq += (y[l] - y_prev[l]).squaredNorm() + (s[l] - s_prev[l]).squaredNorm();
  return std::sqrt(sq);
}

// Exact solve at the active sets identified by the current iterate. Scenario
// blocks are eliminated per index class (y at capacity / interior / zero),
// leaving a J-dimensional linear system for the positive part of x. Accepted
// only when the recomputed residual strictly improves.
bool polish_equilibrium(const TwoStageGame& g, Eigen::VectorXd& x,
                        std::vector<Eigen::VectorXd>& ys, std::vector<Eigen::VectorXd>& ss,
                        double& residual) {
  const int J = g.J;
  const int nu = g.num_scenarios();
  const double scale = 1.0 + x.cwiseAbs().maxCoeff();
  const double delta = 1e-7 * scale;

  enum class Cls { Capacity, Interior, Zero };
  std::vector<std::vector<Cls>> cls(nu, std::vector<Cls>(J));
  for (int l = 0; l < nu; ++l) {
    for (int i = 0; i < J; ++i) {
      if (ss[l](i) > delta)
        cls[l][i] = Cls::Capacity;
      else if (ys[l](i) <= delta)
        cls[l][i] = Cls::Zero;
      else if (ys[l](i) >= x(i) - delta)
        cls[l][i] = Cls::Capacity;
      else
        cls[l][i] = Cls::Interior;
    }
  }

  // s_l(x) = c_l - K_l x restricted to capacity rows, after eliminating the
  // interior block of the scenario KKT system.
  Eigen::MatrixXd k_bar = Eigen::MatrixXd::Zero(J, J);
  Eigen::VectorXd c_bar = Eigen::VectorXd::Zero(J);
  struct ScenarioElim {
    std::vector<int> cap, interior;
    Eigen::MatrixXd a_ii_inv_a_iu;  // interior x capacity
    Eigen::VectorXd a_ii_inv_rho;   // interior
  };
  std::vector<ScenarioElim> elim(nu);

  for (int l = 0; l < nu; ++l) {
    const auto& s = g.scenarios[l];
    auto& e = elim[l];
    for (int i = 0; i < J; ++i) {
      if (cls[l][i] == Cls::Capacity) e.cap.push_back(i);
      if (cls[l][i] == Cls::Interior) e.interior.push_back(i);
    }
    const int nc = static_cast<int>(e.cap.size());
    const int ni = static_cast<int>(e.interior.size());
    auto entry = [&](int i, int j) {
      return i == j ? s.h(i) + 2.0 * s.gamma : s.gamma;
    };
    Eigen::MatrixXd a_uu(nc, nc), a_ui(nc, ni), a_iu(ni, nc), a_ii(ni, ni);
    for (int r = 0; r < nc; ++r)
      for (int c = 0; c < nc; ++c) a_uu(r, c) = entry(e.cap[r], e.cap[c]);
    for (int r = 0; r < nc; ++r)
      for (int c = 0; c < ni; ++c) a_ui(r, c) = entry(e.cap[r], e.interior[c]);
    for (int r = 0; r < ni; ++r)
      for (int c = 0; c < nc; ++c) a_iu(r, c) = entry(e.interior[r], e.cap[c]);
    for (int r = 0; r < ni; ++r)
      for (int c = 0; c < ni; ++c) a_ii(r, c) = entry(e.interior[r], e.interior[c]);
    Eigen::VectorXd rho_u(nc), rho_i(ni);
    for (int r = 0; r < nc; ++r) rho_u(r) = s.rho(e.cap[r]);
    for (int r = 0; r < ni; ++r) rho_i(r) = s.rho(e.interior[r]);

    Eigen::MatrixXd schur = a_uu;
    Eigen::VectorXd c_vec = -rho_u;
    if (ni > 0) {
      Eigen::LLT<Eigen::MatrixXd> llt(a_ii);
      if (llt.info() != Eigen::Success) return false;
      e.a_ii_inv_a_iu = llt.solve(a_iu);
      e.a_ii_inv_rho = llt.solve(rho_i);
      schur -= a_ui * e.a_ii_inv_a_iu;
      c_vec += a_ui * e.a_ii_inv_rho;
    }
    for (int r = 0; r < nc; ++r) {
      c_bar(e.cap[r]) += c_vec(r);
      for (int c = 0; c < nc; ++c) k_bar(e.cap[r], e.cap[c]) += schur(r, c);
    }
  }
  k_bar /= static_cast<double>(nu);
  c_bar /= static_cast<double>(nu);

  std::vector<int> pos;
  for (int i = 0; i < J; ++i)
    if (x(i) > delta) pos.push_back(i);
  const int np = static_cast<int>(pos.size());

  Eigen::VectorXd x_new = Eigen::VectorXd::Zero(J);
  if (np > 0) {
    Eigen::MatrixXd grand = first_stage_matrix(g.first_stage) + k_bar;
    Eigen::VectorXd rhs_full = c_bar - g.first_stage.a;
    Eigen::MatrixXd gp(np, np);
    Eigen::VectorXd rhs(np);
    for (int r = 0; r < np; ++r) {
      for (int c = 0; c < np; ++c) gp(r, c) = grand(pos[r], pos[c]);
      rhs(r) = rhs_full(pos[r]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gp);
    if (!lu.isInvertible()) return false;
    Eigen::VectorXd xp = lu.solve(rhs);
    if ((xp.array() < 0.0).any()) return false;
    for (int r = 0; r < np; ++r) x_new(pos[r]) = xp(r);
  }

  std::vector<Eigen::VectorXd> y_new(nu), s_new(nu);
  for (int l = 0; l < nu; ++l) {
    const auto& s = g.scenarios[l];
    const auto& e = elim[l];
    Eigen::VectorXd y = Eigen::VectorXd::Zero(J);
    const int nc = static_cast<int>(e.cap.size());
    const int ni = static_cast<int>(e.interior.size());
    Eigen::VectorXd xu(nc);
    for (int r = 0; r < nc; ++r) {
      xu(r) = x_new(e.cap[r]);
      y(e.cap[r]) = xu(r);
    }
    if (ni > 0) {
      Eigen::VectorXd yi = -e.a_ii_inv_rho - e.a_ii_inv_a_iu * xu;
      for (int r = 0; r < ni; ++r) {
        double v = yi(r);
        if (v < -1e-8 * scale || v > x_new(e.interior[r]) + 1e-8 * scale) return false;
        y(e.interior[r]) = std::clamp(v, 0.0, x_new(e.interior[r]));
      }
    }
    Eigen::VectorXd mult = Eigen::VectorXd::Zero(J);
    if (nc > 0) {
      Eigen::VectorXd grad = scenario_hessian_apply(s, y) + s.rho;
      for (int r = 0; r < nc; ++r) {
        double v = -grad(e.cap[r]);
        if (v < -1e-8 * scale) return false;
        mult(e.cap[r]) = std::max(v, 0.0);
      }
    }
    y_new[l] = std::move(y);
    s_new[l] = std::move(mult);
  }

  double res_new = big_lcp_residual(g, x_new, y_new, s_new);
  if (!(res_new < residual)) return false;
  x = std::move(x_new);
  ys = std::move(y_new);
  ss = std::move(s_new);
  residual = res_new;
  return true;
}

void finish_solution(const TwoStageGame& g, const SolverConfig& cfg, EquilibriumSolution& sol) {
  if (cfg.polish) {
    double res = sol.residual;
    if (polish_equilibrium(g, sol.x, sol.y, sol.s, res)) {
      sol.residual = res;
      sol.polished = true;
      if (sol.residual <= cfg.tol_residual) sol.converged = true;
    }
  }
  if (cfg.estimate_contraction) sol.contraction_estimate = contraction_estimate(g);
}

}  // namespace

Eigen::VectorXd default_initial_point(const TwoStageGame& g) {
  g.validate();
  Eigen::MatrixXd m = first_stage_matrix(g.first_stage);
  Eigen::VectorXd x = m.partialPivLu().solve(-g.first_stage.a);
  if (!x.allFinite())
    throw std::runtime_error("default_initial_point: singular first-stage matrix");
  return x.cwiseMax(0.0);
}

EquilibriumSolution solve_aba(const TwoStageGame& g, const SolverConfig& cfg) {
  g.validate();
  const int J = g.J;
  const int nu = g.num_scenarios();
  const auto t0 = Clock::now();

  EquilibriumSolution sol;
  sol.x = default_initial_point(g);
  sol.y.assign(nu, Eigen::VectorXd::Zero(J));
  sol.s.assign(nu, Eigen::VectorXd::Zero(J));
  if (cfg.record_x_history) sol.x_history.push_back(sol.x);

  const Eigen::MatrixXd first_matrix = first_stage_matrix(g.first_stage);
  Eigen::VectorXd x_prev;
  std::vector<Eigen::VectorXd> y_prev, s_prev;
  bool have_prev = false;

  for (int k = 1; k <= cfg.max_iter; ++k) {
    parallel_for(nu, cfg.threads, [&](int l) {
      const Eigen::VectorXd* warm = have_prev ? &sol.y[l] : nullptr;
      BoxQpResult qp = solve_box_qp(g.scenarios[l], sol.x, cfg.inner_tol, 10000, warm);
      sol.y[l] = std::move(qp.y);
      sol.s[l] = raw_multiplier(g.scenarios[l], sol.y[l]);
    });

    double res = big_lcp_residual(g, sol.x, sol.y, sol.s);
    double step = have_prev
                      ? stacked_step_norm(sol.x, x_prev, sol.y, y_prev, sol.s, s_prev)
                      : std::numeric_limits<double>::infinity();
    sol.trace.push_back({k, res, step, elapsed_since(t0)});
    sol.iterations = k;
    sol.residual = res;

    if (res <= cfg.tol_residual) {
      sol.converged = true;
      sol.reason = StopReason::Residual;
      break;
    }
    if (step <= cfg.tol_step) {
      sol.converged = true;
      sol.reason = StopReason::Step;
      break;
    }
    if (k == cfg.max_iter) {
      sol.converged = false;
      sol.reason = StopReason::MaxIter;
      break;
    }

    x_prev = sol.x;
    y_prev = sol.y;
    s_prev = sol.s;
    have_prev = true;

    Eigen::VectorXd mean_s = Eigen::VectorXd::Zero(J);
    for (int l = 0; l < nu; ++l) mean_s += sol.s[l];
    mean_s /= static_cast<double>(nu);

    LcpProblem first{first_matrix, g.first_stage.a - mean_s};
    LcpSolution xs = solve_lcp_pd(first, cfg.inner_tol, &sol.x);
    sol.x = std::move(xs.v);
    if (cfg.record_x_history) sol.x_history.push_back(sol.x);
  }

  finish_solution(g, cfg, sol);
  return sol;
}

EquilibriumSolution solve_pha(const TwoStageGame& g, const SolverConfig& cfg) {
  Eigen::VectorXd x0 = default_initial_point(g);
  std::vector<Eigen::VectorXd> v0(g.num_scenarios(),
                                  Eigen::VectorXd::Zero(2 * g.J));
  return solve_pha(g, cfg, x0, v0);
}

EquilibriumSolution solve_pha(const TwoStageGame& g, const SolverConfig& cfg,
                              const Eigen::VectorXd& x0,
                              const std::vector<Eigen::VectorXd>& v0) {
  g.validate();
  const int J = g.J;
  const int nu = g.num_scenarios();
  if (x0.size() != J) throw std::invalid_argument("solve_pha: x0 length mismatch");
  if (static_cast<int>(v0.size()) != nu)
    throw std::invalid_argument("solve_pha: v0 scenario count mismatch");
  for (const auto& v : v0)
    if (v.size() != 2 * J) throw std::invalid_argument("solve_pha: v0 block length mismatch");
  const double t = cfg.proximal_step;
  if (t <= 0.0) throw std::invalid_argument("solve_pha: proximal step must be positive");
  const auto t0 = Clock::now();

  // Per-scenario subproblem matrices [[C+re', -B], [B', M(xi_l)]] + tI are
  // constant across iterations; only the linear term moves.
  const Eigen::MatrixXd first_matrix = first_stage_matrix(g.first_stage);
  std::vector<Eigen::MatrixXd> sub(nu);
  for (int l = 0; l < nu; ++l) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3 * J, 3 * J);
    m.topLeftCorner(J, J) = first_matrix;
    m.block(0, 2 * J, J, J) = -Eigen::MatrixXd::Identity(J, J);
    m.block(J, J, J, J) = scenario_hessian(g.scenarios[l]);
    m.block(J, 2 * J, J, J) = Eigen::MatrixXd::Identity(J, J);
    m.block(2 * J, 0, J, J) = Eigen::MatrixXd::Identity(J, J);
    m.block(2 * J, J, J, J) = -Eigen::MatrixXd::Identity(J, J);
    m.diagonal().array() += t;
    sub[l] = std::move(m);
  }

  EquilibriumSolution sol;
  sol.x = x0;
  std::vector<Eigen::VectorXd> x_sc(nu, x0);
  std::vector<Eigen::VectorXd> w(nu, Eigen::VectorXd::Zero(J));
  sol.y.assign(nu, Eigen::VectorXd::Zero(J));
  sol.s.assign(nu, Eigen::VectorXd::Zero(J));
  for (int l = 0; l < nu; ++l) {
    sol.y[l] = v0[l].head(J);
    sol.s[l] = v0[l].tail(J);
  }
  if (cfg.record_x_history) sol.x_history.push_back(sol.x);

  std::vector<Eigen::VectorXd> x_hat(nu);
  Eigen::VectorXd x_prev;
  std::vector<Eigen::VectorXd> y_prev, s_prev;
  bool have_prev = false;

  for (int k = 1; k <= cfg.max_iter; ++k) {
    parallel_for(nu, cfg.threads, [&](int l) {
      Eigen::VectorXd q(3 * J);
      q.head(J) = g.first_stage.a + w[l] - t * x_sc[l];
      q.segment(J, J) = g.scenarios[l].rho - t * sol.y[l];
      q.tail(J) = -t * sol.s[l];
      Eigen::VectorXd warm(3 * J);
      warm << x_sc[l], sol.y[l], sol.s[l];
      LcpProblem p{sub[l], std::move(q)};
      LcpSolution out = solve_lcp_pd(p, cfg.inner_tol, &warm);
      x_hat[l] = out.v.head(J);
      sol.y[l] = out.v.segment(J, J);
      sol.s[l] = out.v.tail(J);
    });

    Eigen::VectorXd x_bar = Eigen::VectorXd::Zero(J);
    for (int l = 0; l < nu; ++l) x_bar += x_hat[l];
    x_bar /= static_cast<double>(nu);

    Eigen::VectorXd w_mean = Eigen::VectorXd::Zero(J);
    for (int l = 0; l < nu; ++l) {
      w[l] += t * (x_hat[l] - x_bar);
      w_mean += w[l];
      x_sc[l] = x_bar;
    }
    w_mean /= static_cast<double>(nu);
    sol.multiplier_mean_max =
        std::max(sol.multiplier_mean_max, w_mean.cwiseAbs().maxCoeff());

    double step = have_prev
                      ? stacked_step_norm(x_bar, x_prev, sol.y, y_prev, sol.s, s_prev)
                      : std::numeric_limits<double>::infinity();
    sol.x = x_bar;
    if (cfg.record_x_history) sol.x_history.push_back(sol.x);
    double res = big_lcp_residual(g, sol.x, sol.y, sol.s);
    sol.trace.push_back({k, res, step, elapsed_since(t0)});
    sol.iterations = k;
    sol.residual = res;

    if (res <= cfg.tol_residual) {
      sol.converged = true;
      sol.reason = StopReason::Residual;
      break;
    }
    if (step <= cfg.tol_step) {
      sol.converged = true;
      sol.reason = StopReason::Step;
      break;
    }
    if (k == cfg.max_iter) {
      sol.converged = false;
      sol.reason = StopReason::MaxIter;
      break;
    }

    x_prev = x_bar;
    y_prev = sol.y;
    s_prev = sol.s;
    have_prev = true;
  }

  // The averaged first stage can undercut scenario quantities by a hair;
  // restore 0 <= y <= x before reporting.
  for (int l = 0; l < nu; ++l) sol.y[l] = sol.y[l].cwiseMin(sol.x).cwiseMax(0.0);
  sol.residual = big_lcp_residual(g, sol.x, sol.y, sol.s);

  finish_solution(g, cfg, sol);
  return sol;
}

double contraction_estimate(const TwoStageGame& g, int scenario_samples, int subset_samples,
                            std::uint64_t seed) {
  g.validate();
  const int J = g.J;
  const int nu = g.num_scenarios();

  Eigen::MatrixXd sym = first_stage_matrix(g.first_stage);
  sym = 0.5 * (sym + sym.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  double lambda_min = es.eigenvalues().minCoeff();
  if (lambda_min <= 0.0) return std::numeric_limits<double>::infinity();
  const double c2_inv_sq = 1.0 / lambda_min;

  const int n2 = 2 * J;
  const int picks = std::min(nu, std::max(1, scenario_samples));
  double sigma_sum = 0.0;
  for (int j = 0; j < picks; ++j) {
    int l = static_cast<int>(static_cast<long long>(j) * nu / picks);
    Eigen::MatrixXd m(n2, n2);
    m.setZero();
    m.topLeftCorner(J, J) = scenario_hessian(g.scenarios[l]);
    m.topRightCorner(J, J) = Eigen::MatrixXd::Identity(J, J);
    m.bottomLeftCorner(J, J) = -Eigen::MatrixXd::Identity(J, J);

    std::vector<std::uint64_t> masks;
    if (n2 <= 12) {
      for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n2); ++mask)
        masks.push_back(mask);
    } else {
      SplitMix64 rng = substream(seed, static_cast<std::uint64_t>(l));
      const std::uint64_t full = (std::uint64_t{1} << n2) - 1;
      masks.push_back(full);
      for (int k = 0; k < subset_samples; ++k) {
        std::uint64_t mask = rng.next() & full;
        if (mask != 0) masks.push_back(mask);
      }
    }

    double sigma_l = 0.0;
    std::vector<int> idx;
    for (std::uint64_t mask : masks) {
      idx.clear();
      for (int i = 0; i < n2; ++i)
        if (mask & (std::uint64_t{1} << i)) idx.push_back(i);
      const int k = static_cast<int>(idx.size());
      Eigen::MatrixXd subm(k, k);
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) subm(r, c) = m(idx[r], idx[c]);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(subm);
      double smin = svd.singularValues().minCoeff();
      double smax = svd.singularValues().maxCoeff();
      if (smin <= 1e-12 * std::max(1.0, smax)) continue;  // singular submatrix
      sigma_l = std::max(sigma_l, 1.0 / smin);
    }
    sigma_sum += sigma_l;
  }
  return c2_inv_sq * sigma_sum / picks;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "iteration,residual,step_norm,elapsed_seconds\n";
  for (const auto& row : trace) {
    out << row.iteration << ',' << format_double(row.residual) << ','
        << format_double(row.step_norm) << ',' << format_double(row.elapsed_seconds) << '\n';
  }
}

}  // namespace slcp
