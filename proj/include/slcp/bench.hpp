#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <utility>
#include <vector>

#include "slcp/solvers.hpp"

namespace slcp {

// One grid cell: means over the configured repetitions. A solver error in any
// repetition leaves NaN in that algorithm's columns; the grid keeps going.
struct BenchRow {
  int J = 0;
  int nu = 0;
  int dim = 0;  // J * (2 * nu + 1)
  double aba_iter = std::numeric_limits<double>::quiet_NaN();
  double aba_cpu = std::numeric_limits<double>::quiet_NaN();
  double aba_res = std::numeric_limits<double>::quiet_NaN();
  double pha_iter = std::numeric_limits<double>::quiet_NaN();
  double pha_cpu = std::numeric_limits<double>::quiet_NaN();
  double pha_res = std::numeric_limits<double>::quiet_NaN();
  double init_res = std::numeric_limits<double>::quiet_NaN();
  // Per-repetition outcome counters; not part of the CSV.
  int aba_converged = 0;
  int pha_converged = 0;
  int pha_cap_hits = 0;
  int aba_failures = 0;
  int pha_failures = 0;
};

enum class BenchAlgo { Both, AbaOnly, PhaOnly };

// Runs both solvers on `repetitions` generated instances per grid cell,
// seeded base_seed + k, from the default initial point. Cells run
// sequentially so per-cell wall times stay comparable.
std::vector<BenchRow> run_benchmark(const std::vector<std::pair<int, int>>& grid,
                                    int repetitions, std::uint64_t base_seed,
                                    const SolverConfig& cfg = {},
                                    BenchAlgo algo = BenchAlgo::Both);

// Header exactly: J,nu,dim,aba_iter,aba_cpu,aba_res,pha_iter,pha_cpu,pha_res,init_res
// stable_output writes 0 for the CPU columns so repeated runs with the same
// seeds produce byte-identical files.
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows,
                     bool stable_output = false);

}  // namespace slcp
