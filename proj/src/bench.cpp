#include "slcp/bench.hpp"

#include <chrono>
#include <ostream>
#include <stdexcept>

#include "slcp/format.hpp"
#include "slcp/instance_gen.hpp"

namespace slcp {

namespace {

using Clock = std::chrono::steady_clock;

struct AlgoStats {
  double iter_sum = 0.0;
  double cpu_sum = 0.0;
  double res_sum = 0.0;
  bool failed = false;
};

}  // namespace

std::vector<BenchRow> run_benchmark(const std::vector<std::pair<int, int>>& grid,
                                    int repetitions, std::uint64_t base_seed,
                                    const SolverConfig& cfg, BenchAlgo algo) {
  if (repetitions < 1) throw std::invalid_argument("run_benchmark: repetitions must be >= 1");
  const bool run_aba = algo != BenchAlgo::PhaOnly;
  const bool run_pha = algo != BenchAlgo::AbaOnly;

  std::vector<BenchRow> rows;
  rows.reserve(grid.size());
  for (const auto& [J, nu] : grid) {
    BenchRow row;
    row.J = J;
    row.nu = nu;
    row.dim = J * (2 * nu + 1);
    AlgoStats aba, pha;
    double init_sum = 0.0;

    for (int k = 0; k < repetitions; ++k) {
      GeneratorSpec gspec;
      gspec.J = J;
      gspec.nu = nu;
      gspec.seed = base_seed + static_cast<std::uint64_t>(k);
      TwoStageGame g = generate_instance(gspec);

      Eigen::VectorXd x0 = default_initial_point(g);
      std::vector<Eigen::VectorXd> zeros(nu, Eigen::VectorXd::Zero(J));
      init_sum += big_lcp_residual(g, x0, zeros, zeros);

      if (run_aba && !aba.failed) {
        try {
          auto t0 = Clock::now();
          EquilibriumSolution sol = solve_aba(g, cfg);
          aba.cpu_sum += std::chrono::duration<double>(Clock::now() - t0).count();
          aba.iter_sum += sol.iterations;
          aba.res_sum += sol.residual;
          if (sol.converged) ++row.aba_converged;
        } catch (const std::exception&) {
          aba.failed = true;
          ++row.aba_failures;
        }
      }
      if (run_pha && !pha.failed) {
        try {
          auto t0 = Clock::now();
          EquilibriumSolution sol = solve_pha(g, cfg);
          pha.cpu_sum += std::chrono::duration<double>(Clock::now() - t0).count();
          pha.iter_sum += sol.iterations;
          pha.res_sum += sol.residual;
          if (sol.converged) ++row.pha_converged;
          if (sol.reason == StopReason::MaxIter) ++row.pha_cap_hits;
        } catch (const std::exception&) {
          pha.failed = true;
          ++row.pha_failures;
        }
      }
    }

    const double reps = static_cast<double>(repetitions);
    row.init_res = init_sum / reps;
    if (run_aba && !aba.failed) {
      row.aba_iter = aba.iter_sum / reps;
      row.aba_cpu = aba.cpu_sum / reps;
      row.aba_res = aba.res_sum / reps;
    }
    if (run_pha && !pha.failed) {
      row.pha_iter = pha.iter_sum / reps;
      row.pha_cpu = pha.cpu_sum / reps;
      row.pha_res = pha.res_sum / reps;
    }
    rows.push_back(row);
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows,
                     bool stable_output) {
  out << "J,nu,dim,aba_iter,aba_cpu,aba_res,pha_iter,pha_cpu,pha_res,init_res\n";
  for (const auto& r : rows) {
    const double aba_cpu = stable_output ? 0.0 : r.aba_cpu;
    const double pha_cpu = stable_output ? 0.0 : r.pha_cpu;
    out << r.J << ',' << r.nu << ',' << r.dim << ',' << format_double(r.aba_iter) << ','
        << format_double(aba_cpu) << ',' << format_double(r.aba_res) << ','
        << format_double(r.pha_iter) << ',' << format_double(pha_cpu) << ','
        << format_double(r.pha_res) << ',' << format_double(r.init_res) << '\n';
  }
}

}  // namespace slcp
