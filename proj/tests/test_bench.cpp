#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "slcp/bench.hpp"

using slcp::BenchAlgo;
using slcp::BenchRow;
using slcp::SolverConfig;

namespace {

std::string csv_of(const std::vector<BenchRow>& rows, bool stable) {
  std::ostringstream out;
  slcp::write_bench_csv(out, rows, stable);
  return out.str();
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("empty grid produces only the header") {
  auto rows = slcp::run_benchmark({}, 3, 0);
  CHECK(rows.empty());
  CHECK(csv_of(rows, false) ==
        "J,nu,dim,aba_iter,aba_cpu,aba_res,pha_iter,pha_cpu,pha_res,init_res\n");
}

TEST_CASE("invalid repetition count is rejected") {
  CHECK_THROWS_AS(slcp::run_benchmark({{2, 2}}, 0, 0), std::invalid_argument);
}

TEST_CASE("single cell runs both algorithms and fills every column") {
  SolverConfig cfg;
  cfg.estimate_contraction = false;
  auto rows = slcp::run_benchmark({{2, 2}}, 2, 11, cfg);
  REQUIRE(rows.size() == 1);
  const BenchRow& r = rows[0];
  CHECK(r.J == 2);
  CHECK(r.nu == 2);
  CHECK(r.dim == 10);
  CHECK(r.aba_converged == 2);
  CHECK(r.aba_failures == 0);
  CHECK(std::isfinite(r.aba_iter));
  CHECK(r.aba_iter >= 1.0);
  CHECK(r.aba_res <= 1e-6);
  CHECK(std::isfinite(r.pha_iter));
  CHECK(r.pha_res <= 1e-5);
  CHECK(r.init_res > 0.0);
  CHECK(r.aba_cpu >= 0.0);
  // The alternating solver needs fewer iterations wherever both run.
  CHECK(r.aba_iter < r.pha_iter);
}

TEST_CASE("single-algorithm modes leave the other columns empty") {
  SolverConfig cfg;
  cfg.estimate_contraction = false;
  auto rows = slcp::run_benchmark({{2, 2}}, 1, 5, cfg, BenchAlgo::AbaOnly);
  REQUIRE(rows.size() == 1);
  CHECK(std::isfinite(rows[0].aba_iter));
  CHECK(std::isnan(rows[0].pha_iter));
  CHECK(std::isnan(rows[0].pha_res));

  auto line = csv_of(rows, true);
  auto pos = line.find('\n');
  auto fields = split_fields(line.substr(pos + 1, line.find('\n', pos + 1) - pos - 1));
  REQUIRE(fields.size() == 10);
  CHECK(fields[6] == "nan");
  CHECK(fields[8] == "nan");
}

TEST_CASE("stable output zeroes the timing columns") {
  SolverConfig cfg;
  cfg.estimate_contraction = false;
  auto rows = slcp::run_benchmark({{2, 3}}, 1, 7, cfg);
  auto line = csv_of(rows, true);
  auto pos = line.find('\n');
  auto fields = split_fields(line.substr(pos + 1, line.find('\n', pos + 1) - pos - 1));
  REQUIRE(fields.size() == 10);
  CHECK(fields[4] == "0");
  CHECK(fields[7] == "0");
}

TEST_CASE("identical seeds give byte-identical stable output") {
  SolverConfig cfg;
  cfg.threads = 1;
  cfg.estimate_contraction = false;
  auto a = slcp::run_benchmark({{2, 2}, {3, 2}}, 2, 21, cfg);
  auto b = slcp::run_benchmark({{2, 2}, {3, 2}}, 2, 21, cfg);
  CHECK(csv_of(a, true) == csv_of(b, true));
  // Different base seeds change the workload.
  auto c = slcp::run_benchmark({{2, 2}, {3, 2}}, 2, 22, cfg);
  CHECK(csv_of(a, true) != csv_of(c, true));
}

TEST_CASE("benchmark family cell sits in the expected iteration band") {
  SolverConfig cfg;
  cfg.estimate_contraction = false;
  auto rows = slcp::run_benchmark({{5, 5}}, 3, 100, cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].aba_converged == 3);
  CHECK(rows[0].aba_iter >= 5.0);
  CHECK(rows[0].aba_iter <= 60.0);
  CHECK(rows[0].aba_res <= 1e-6);
  CHECK(rows[0].pha_iter <= 400.0);
  CHECK(rows[0].aba_iter < rows[0].pha_iter);
}

}  // TEST_SUITE
