#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "slcp/bench.hpp"
#include "slcp/game.hpp"
#include "slcp/instance_gen.hpp"
#include "slcp/lcp.hpp"
#include "slcp/market.hpp"
#include "slcp/second_stage.hpp"
#include "slcp/solvers.hpp"

namespace {

using namespace slcp;

// Exit codes: 0 converged / success, 1 error, 2 solver did not converge.
constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;

void add_solver_options(CLI::App* cmd, SolverConfig& cfg, bool& no_polish) {
  cmd->add_option("--max-iter", cfg.max_iter, "outer iteration cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--tol-res", cfg.tol_residual, "stopping tolerance on the full residual")
      ->capture_default_str();
  cmd->add_option("--tol-step", cfg.tol_step, "stopping tolerance on the iterate step")
      ->capture_default_str();
  cmd->add_option("--inner-tol", cfg.inner_tol, "tolerance of the inner subproblem solves")
      ->capture_default_str();
  cmd->add_option("--prox-step", cfg.proximal_step, "proximal step of the splitting solver")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--threads", cfg.threads, "worker threads, 0 means all cores")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_flag("--no-polish", no_polish, "skip the terminal active-set refinement");
}

nlohmann::json solution_to_json(const EquilibriumSolution& sol, const std::string& algo) {
  nlohmann::json j;
  j["algorithm"] = algo;
  j["converged"] = sol.converged;
  switch (sol.reason) {
    case StopReason::Residual: j["stop_reason"] = "residual"; break;
    case StopReason::Step: j["stop_reason"] = "step"; break;
    case StopReason::MaxIter: j["stop_reason"] = "max_iterations"; break;
  }
  j["iterations"] = sol.iterations;
  j["residual"] = sol.residual;
  j["polished"] = sol.polished;
  j["contraction_estimate"] = sol.contraction_estimate;
  j["multiplier_mean_max"] = sol.multiplier_mean_max;
  j["x"] = std::vector<double>(sol.x.begin(), sol.x.end());
  nlohmann::json ys = nlohmann::json::array();
  nlohmann::json ss = nlohmann::json::array();
  for (const auto& y : sol.y) ys.push_back(std::vector<double>(y.begin(), y.end()));
  for (const auto& s : sol.s) ss.push_back(std::vector<double>(s.begin(), s.end()));
  j["y"] = std::move(ys);
  j["s"] = std::move(ss);
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<std::pair<int, int>> parse_grid(const std::string& text) {
  std::vector<std::pair<int, int>> grid;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    auto colon = token.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error("bad grid cell '" + token + "', expected J:nu");
    int J = 0, nu = 0;
    try {
      J = std::stoi(token.substr(0, colon));
      nu = std::stoi(token.substr(colon + 1));
    } catch (const std::exception&) {
      throw std::runtime_error("bad grid cell '" + token + "', expected J:nu");
    }
    if (J < 1 || nu < 1) throw std::runtime_error("grid cell '" + token + "' must be positive");
    grid.emplace_back(J, nu);
  }
  if (grid.empty()) throw std::runtime_error("empty benchmark grid");
  return grid;
}

std::string default_data_dir() {
  if (const char* env = std::getenv("SLCP_DATA_DIR")) return env;
  return "data/market";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage stochastic quadratic game solver"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "generate a random game instance");
  GeneratorSpec gen_spec;
  std::string gen_out = "game.json";
  generate->add_option("--J", gen_spec.J, "number of agents")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--nu", gen_spec.nu, "number of scenarios")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--seed", gen_spec.seed, "random seed")->capture_default_str();
  generate->add_option("--out", gen_out, "output game JSON path")->capture_default_str();

  // solve
  auto* solve = app.add_subcommand("solve", "solve a game instance");
  std::string solve_game_path;
  std::string solve_algo = "aba";
  std::string solve_out = "solution.json";
  std::string solve_trace;
  SolverConfig solve_cfg;
  bool solve_no_polish = false;
  solve->add_option("game", solve_game_path, "game JSON path")->required();
  solve->add_option("--algo", solve_algo, "solver: aba or pha")
      ->check(CLI::IsMember({"aba", "pha"}))
      ->capture_default_str();
  solve->add_option("--out", solve_out, "solution JSON path")->capture_default_str();
  solve->add_option("--trace", solve_trace, "iteration trace CSV path");
  add_solver_options(solve, solve_cfg, solve_no_polish);

  // bench
  auto* bench = app.add_subcommand("bench", "compare solvers over an instance grid");
  std::string bench_grid_text;
  int bench_reps = 10;
  std::uint64_t bench_seed = 0;
  std::string bench_out = "bench.csv";
  std::string bench_algo = "both";
  bool bench_stable = false;
  SolverConfig bench_cfg;
  bool bench_no_polish = false;
  bench->add_option("--grid", bench_grid_text, "grid cells as J:nu,J:nu,...")->required();
  bench->add_option("--reps", bench_reps, "instances per cell")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--seed", bench_seed, "base seed, instance k uses seed+k")
      ->capture_default_str();
  bench->add_option("--out", bench_out, "output CSV path")->capture_default_str();
  bench->add_option("--algo", bench_algo, "both, aba or pha")
      ->check(CLI::IsMember({"both", "aba", "pha"}))
      ->capture_default_str();
  bench->add_flag("--stable-output", bench_stable,
                  "zero the CPU columns so reruns are byte-identical");
  add_solver_options(bench, bench_cfg, bench_no_polish);

  // market
  auto* market = app.add_subcommand("market", "calibrated oil-market month run");
  std::string market_dir = default_data_dir();
  std::string market_month;
  std::string market_mode = "in_sample";
  std::string market_out = "market_report.json";
  std::string market_shares_csv;
  MarketRunConfig market_cfg;
  bool market_no_polish = false;
  market->add_option("--data-dir", market_dir, "market data directory")
      ->capture_default_str();
  market->add_option("--month", market_month, "month as YYYY-MM")->required();
  market->add_option("--mode", market_mode, "in_sample or out_of_sample")
      ->check(CLI::IsMember({"in_sample", "out_of_sample"}))
      ->capture_default_str();
  market->add_option("--nu", market_cfg.nu, "scenario count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  market->add_option("--seed", market_cfg.seed, "random seed")->capture_default_str();
  market->add_option("--zeta-min", market_cfg.zeta_min, "lower unit-cost fraction")
      ->capture_default_str();
  market->add_option("--zeta-max", market_cfg.zeta_max, "upper unit-cost fraction")
      ->capture_default_str();
  market->add_flag("--fixed-2020-anchor", market_cfg.fixed_2020_anchor,
                   "calibrate 2020 months from 2020-01 / 2019-12 instead of the previous month");
  market->add_option("--out", market_out, "report JSON path")->capture_default_str();
  market->add_option("--shares-csv", market_shares_csv,
                     "also write a real/in-sample/out-of-sample shares CSV");
  add_solver_options(market, market_cfg.solver, market_no_polish);

  // validate
  auto* validate = app.add_subcommand("validate", "check the market data files");
  std::string validate_dir = default_data_dir();
  validate->add_option("--data-dir", validate_dir, "market data directory")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (generate->parsed()) {
      TwoStageGame g = generate_instance(gen_spec);
      save_game(g, gen_out);
      std::cout << "J=" << g.J << " nu=" << g.num_scenarios() << " dim="
                << g.J * (2 * g.num_scenarios() + 1) << "\n";
      std::cout << "wrote " << gen_out << "\n";
      return kExitOk;
    }

    if (solve->parsed()) {
      solve_cfg.polish = !solve_no_polish;
      solve_cfg.record_x_history = false;
      TwoStageGame g = load_game(solve_game_path);
      EquilibriumSolution sol;
      try {
        sol = solve_algo == "aba" ? solve_aba(g, solve_cfg) : solve_pha(g, solve_cfg);
      } catch (const LcpSolveError& e) {
        std::cerr << "solver failed: " << e.what() << "\n";
        return kExitNotConverged;
      } catch (const BoxQpError& e) {
        std::cerr << "solver failed: " << e.what() << "\n";
        return kExitNotConverged;
      }
      write_text_file(solve_out, solution_to_json(sol, solve_algo).dump(2) + "\n");
      if (!solve_trace.empty()) {
        std::ofstream trace(solve_trace);
        if (!trace) throw std::runtime_error("cannot write " + solve_trace);
        write_trace_csv(trace, sol.trace);
      }
      std::cout << solve_algo << " converged=" << (sol.converged ? "true" : "false")
                << " iterations=" << sol.iterations << " residual=" << sol.residual << "\n";
      return sol.converged ? kExitOk : kExitNotConverged;
    }

    if (bench->parsed()) {
      bench_cfg.polish = !bench_no_polish;
      BenchAlgo algo = bench_algo == "both"  ? BenchAlgo::Both
                       : bench_algo == "aba" ? BenchAlgo::AbaOnly
                                             : BenchAlgo::PhaOnly;
      std::vector<BenchRow> rows =
          run_benchmark(parse_grid(bench_grid_text), bench_reps, bench_seed, bench_cfg, algo);
      std::ostringstream csv;
      write_bench_csv(csv, rows, bench_stable);
      write_text_file(bench_out, csv.str());
      std::cout << csv.str();
      return kExitOk;
    }

    if (market->parsed()) {
      market_cfg.solver.polish = !market_no_polish;
      market_cfg.month = YearMonth::parse(market_month);
      market_cfg.mode =
          market_mode == "in_sample" ? MarketMode::InSample : MarketMode::OutOfSample;
      MarketData data = load_market_data(market_dir);
      MarketResult result = run_month(data.shares, data.rsched, data.prices, market_cfg);
      write_text_file(market_out,
                      market_report_json(result, data.shares).dump(2) + "\n");
      if (!market_shares_csv.empty()) {
        std::ofstream csv(market_shares_csv);
        if (!csv) throw std::runtime_error("cannot write " + market_shares_csv);
        write_shares_csv(csv, data.shares, {result});
      }
      std::cout << result.month.str() << " " << market_mode_name(result.mode)
                << " algorithm=" << result.algorithm
                << " converged=" << (result.equilibrium.converged ? "true" : "false")
                << " iterations=" << result.equilibrium.iterations
                << " residual=" << result.equilibrium.residual;
      if (data.shares.has(result.month))
        std::cout << " spearman="
                  << spearman_rank_correlation(result.computed_shares,
                                               data.shares.at(result.month));
      std::cout << "\n";
      return result.equilibrium.converged ? kExitOk : kExitNotConverged;
    }

    if (validate->parsed()) {
      MarketData data = load_market_data(validate_dir);
      std::cout << "shares.csv OK (" << data.shares.shares.size() << " months)\n";
      std::cout << "r_schedule.csv OK (" << data.rsched.r.size() << " months)\n";
      std::cout << "prices.csv and contributions.csv OK (" << data.prices.dates.size()
                << " days)\n";
      std::cout << "total_supply.csv OK (" << data.prices.total_supply
                << " barrels per day)\n";
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
