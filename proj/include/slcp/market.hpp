#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "slcp/game.hpp"
#include "slcp/solvers.hpp"

namespace slcp {

// Fixed producer list for the oil-market application; "other" aggregates the
// rest of world production. All share and r tables use this order.
inline constexpr std::array<const char*, 15> kProducers = {
    "Saudi Arabia", "Russia", "USA",    "Iraq",      "China",
    "Canada",       "UAE",    "Iran",   "Kuwait",    "Nigeria",
    "Mexico",       "UK",     "Venezuela", "Indonesia", "other"};

constexpr int kNumProducers = static_cast<int>(kProducers.size());

int producer_index(const std::string& name);  // throws on unknown producer

struct YearMonth {
  int year = 0;
  int month = 0;  // 1..12

  static YearMonth parse(const std::string& s);  // "YYYY-MM"
  YearMonth prev() const;
  std::string str() const;

  friend bool operator==(const YearMonth& a, const YearMonth& b) {
    return a.year == b.year && a.month == b.month;
  }
  friend bool operator<(const YearMonth& a, const YearMonth& b) {
    return a.year != b.year ? a.year < b.year : a.month < b.month;
  }
};

// Monthly market shares in percent; each month holds all producers and sums
// to 100 within table rounding.
struct ProducerTable {
  std::map<YearMonth, Eigen::VectorXd> shares;

  void validate() const;
  bool has(const YearMonth& ym) const { return shares.count(ym) != 0; }
  const Eigen::VectorXd& at(const YearMonth& ym) const;  // throws if missing
};

// Per-month r vectors for 2020; every 2019 (and earlier) month is implicitly
// all-zero.
struct RSchedule {
  std::map<YearMonth, Eigen::VectorXd> r;

  Eigen::VectorXd r_for(const YearMonth& ym) const;
};

// Daily benchmark prices with aligned price-change contribution fractions and
// the total world supply in barrels per day.
struct PriceSeries {
  std::vector<std::string> dates;  // ISO dates, strictly increasing
  Eigen::VectorXd price;
  Eigen::VectorXd demand_contrib;
  Eigen::VectorXd supply_contrib;
  Eigen::VectorXd residual_contrib;
  double total_supply = 0.0;

  void validate() const;
  // Indices of days falling in the calendar month; every returned index has a
  // prior day in the series.
  std::vector<int> month_window(const YearMonth& ym) const;
};

ProducerTable load_producer_table(const std::string& csv_path);
RSchedule load_r_schedule(const std::string& csv_path);
PriceSeries load_price_series(const std::string& prices_csv,
                              const std::string& contributions_csv,
                              const std::string& total_supply_csv);

struct MarketData {
  ProducerTable shares;
  RSchedule rsched;
  PriceSeries prices;
};

// Loads shares.csv, r_schedule.csv, prices.csv, contributions.csv and
// total_supply.csv from a data directory.
MarketData load_market_data(const std::string& dir);

enum class MarketMode { InSample, OutOfSample };

std::string market_mode_name(MarketMode mode);

struct MarketRunConfig {
  YearMonth month;
  MarketMode mode = MarketMode::InSample;
  int nu = 800;
  double zeta_min = 0.05;
  double zeta_max = 0.1;
  std::uint64_t seed = 0;
  // 2020 months normally calibrate from the rolling previous month like 2019;
  // this pins them to January 2020 (in sample) / December 2019 (out of
  // sample) instead.
  bool fixed_2020_anchor = false;
  SolverConfig solver;

  void validate() const;
};

// Cost calibration from the anchoring month's shares (as fractions) plus the
// current month's r vector.
FirstStageParams calibrate_first_stage(const ProducerTable& shares, const RSchedule& rsched,
                                       const MarketRunConfig& cfg);

struct SampledScenarios {
  std::vector<ScenarioData> scenarios;
  double zeta = 0.0;           // one draw per run, shared by all scenarios
  std::vector<double> xis;     // per-scenario supply multipliers in [0.99, 1.01]
  std::vector<int> day_index;  // resampled day per scenario
};

SampledScenarios sample_scenarios(const PriceSeries& prices, const MarketRunConfig& cfg,
                                  const Eigen::VectorXd& a);

struct MarketResult {
  YearMonth month;
  MarketMode mode = MarketMode::InSample;
  Eigen::VectorXd computed_shares;  // percent, sums to 100
  EquilibriumSolution equilibrium;
  std::string algorithm;  // solver that produced the reported iterate
  bool first_stage_pd = false;
  double zeta = 0.0;
  int nu = 0;
  std::uint64_t seed = 0;
};

// Calibrates, samples, solves (alternating-block first, proximal-splitting
// fallback), and normalizes shares. Non-convergence of both solvers is
// reported through equilibrium.converged, not an exception.
MarketResult run_month(const ProducerTable& shares, const RSchedule& rsched,
                       const PriceSeries& prices, const MarketRunConfig& cfg);

nlohmann::json market_report_json(const MarketResult& result, const ProducerTable& shares);

// producer,month,real,in_sample,out_of_sample rows; a missing run for a month
// leaves its cell empty.
void write_shares_csv(std::ostream& out, const ProducerTable& shares,
                      const std::vector<MarketResult>& results);

double spearman_rank_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace slcp
