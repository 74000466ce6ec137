#include "slcp/market.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "slcp/format.hpp"
#include "slcp/rng.hpp"
#include "slcp/second_stage.hpp"

namespace slcp {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

double parse_number(const std::string& text, const std::string& where) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": not a number: '" + text + "'");
  }
  if (pos != text.size() || !std::isfinite(v))
    throw std::runtime_error(where + ": not a finite number: '" + text + "'");
  return v;
}

// Reads a CSV with an exact expected header; hands each data row (split into
// fields) to the callback together with a location string for errors.
void read_csv(const std::string& path, const std::string& expected_header,
              const std::function<void(const std::vector<std::string>&, const std::string&)>& on_row) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": empty file, expected header '" + expected_header + "'");
  if (strip_cr(line) != expected_header)
    throw std::runtime_error(path + ": bad header, expected '" + expected_header + "'");
  const std::size_t ncols = split_csv_line(expected_header).size();
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    std::string where = path + ":" + std::to_string(lineno);
    if (fields.size() != ncols)
      throw std::runtime_error(where + ": expected " + std::to_string(ncols) + " fields, got " +
                               std::to_string(fields.size()));
    on_row(fields, where);
  }
}

bool valid_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i == 4 || i == 7) continue;
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

// Ranks with ties averaged, for the rank correlation.
Eigen::VectorXd average_ranks(const Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return v(a) < v(b); });
  Eigen::VectorXd ranks(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && v(order[j + 1]) == v(order[i])) ++j;
    double rank = 0.5 * (i + j) + 1.0;
    for (int k = i; k <= j; ++k) ranks(order[k]) = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

int producer_index(const std::string& name) {
  for (int i = 0; i < kNumProducers; ++i)
    if (name == kProducers[i]) return i;
  throw std::runtime_error("unknown producer '" + name + "'");
}

YearMonth YearMonth::parse(const std::string& s) {
  auto fail = [&] { throw std::runtime_error("bad month '" + s + "', expected YYYY-MM"); };
  if (s.size() != 7 || s[4] != '-') fail();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i == 4) continue;
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) fail();
  }
  YearMonth ym;
  ym.year = std::stoi(s.substr(0, 4));
  ym.month = std::stoi(s.substr(5, 2));
  if (ym.year < 1 || ym.month < 1 || ym.month > 12) fail();
  return ym;
}

YearMonth YearMonth::prev() const {
  if (month == 1) return {year - 1, 12};
  return {year, month - 1};
}

std::string YearMonth::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
  return buf;
}

void ProducerTable::validate() const {
  if (shares.empty()) throw std::runtime_error("share table is empty");
  for (const auto& [ym, v] : shares) {
    if (v.size() != kNumProducers)
      throw std::runtime_error("share table " + ym.str() + ": wrong producer count");
    for (int i = 0; i < kNumProducers; ++i) {
      if (!std::isfinite(v(i)))
        throw std::runtime_error("share table " + ym.str() + ": missing value for " +
                                 kProducers[i]);
      if (v(i) <= 0.0)
        throw std::runtime_error("share table " + ym.str() + ": nonpositive share for " +
                                 kProducers[i]);
    }
    double total = v.sum();
    if (std::abs(total - 100.0) > 0.5)
      throw std::runtime_error("share table " + ym.str() + ": shares sum to " +
                               format_double(total) + ", expected 100 +/- 0.5");
  }
}

const Eigen::VectorXd& ProducerTable::at(const YearMonth& ym) const {
  auto it = shares.find(ym);
  if (it == shares.end())
    throw std::runtime_error("no market shares for " + ym.str());
  return it->second;
}

Eigen::VectorXd RSchedule::r_for(const YearMonth& ym) const {
  auto it = r.find(ym);
  if (it != r.end()) return it->second;
  if (ym.year <= 2019) return Eigen::VectorXd::Zero(kNumProducers);
  throw std::runtime_error("no r values for " + ym.str());
}

void PriceSeries::validate() const {
  const int n = static_cast<int>(dates.size());
  if (n < 2) throw std::runtime_error("price series needs at least two days");
  if (price.size() != n || demand_contrib.size() != n || supply_contrib.size() != n ||
      residual_contrib.size() != n)
    throw std::runtime_error("price series arrays have mismatched lengths");
  if (!(total_supply > 0.0) || !std::isfinite(total_supply))
    throw std::runtime_error("total supply must be positive");
  for (int t = 0; t < n; ++t) {
    if (!valid_iso_date(dates[t]))
      throw std::runtime_error("bad date '" + dates[t] + "', expected YYYY-MM-DD");
    if (t > 0 && !(dates[t - 1] < dates[t]))
      throw std::runtime_error("dates not strictly increasing at " + dates[t]);
    if (!(price(t) > 0.0) || !std::isfinite(price(t)))
      throw std::runtime_error("nonpositive price on " + dates[t]);
    if (!std::isfinite(demand_contrib(t)) || !std::isfinite(supply_contrib(t)) ||
        !std::isfinite(residual_contrib(t)))
      throw std::runtime_error("non-finite contribution on " + dates[t]);
  }
  // The reported contributions decompose the day-over-day price change.
  for (int t = 1; t < n; ++t) {
    double implied =
        (demand_contrib(t) + supply_contrib(t) + residual_contrib(t)) * price(t - 1);
    double actual = price(t) - price(t - 1);
    if (std::abs(implied - actual) > 0.02)
      throw std::runtime_error("price change decomposition off by " +
                               format_double(std::abs(implied - actual)) + " on " + dates[t]);
  }
}

std::vector<int> PriceSeries::month_window(const YearMonth& ym) const {
  const std::string key = ym.str();
  std::vector<int> out;
  for (int t = 1; t < static_cast<int>(dates.size()); ++t)
    if (dates[t].compare(0, 7, key) == 0) out.push_back(t);
  return out;
}

ProducerTable load_producer_table(const std::string& csv_path) {
  ProducerTable table;
  read_csv(csv_path, "producer,month,share_percent",
           [&](const std::vector<std::string>& f, const std::string& where) {
             int idx = producer_index(f[0]);
             YearMonth ym = YearMonth::parse(f[1]);
             double v = parse_number(f[2], where);
             auto [it, inserted] = table.shares.try_emplace(
                 ym, Eigen::VectorXd::Constant(kNumProducers,
                                               std::numeric_limits<double>::quiet_NaN()));
             if (!inserted && std::isfinite(it->second(idx)))
               throw std::runtime_error(where + ": duplicate share for " + f[0] + " " + f[1]);
             it->second(idx) = v;
           });
  table.validate();
  return table;
}

RSchedule load_r_schedule(const std::string& csv_path) {
  RSchedule sched;
  read_csv(csv_path, "producer,month,r_value",
           [&](const std::vector<std::string>& f, const std::string& where) {
             int idx = producer_index(f[0]);
             YearMonth ym = YearMonth::parse(f[1]);
             double v = parse_number(f[2], where);
             auto [it, inserted] = sched.r.try_emplace(
                 ym, Eigen::VectorXd::Constant(kNumProducers,
                                               std::numeric_limits<double>::quiet_NaN()));
             if (!inserted && std::isfinite(it->second(idx)))
               throw std::runtime_error(where + ": duplicate r for " + f[0] + " " + f[1]);
             it->second(idx) = v;
           });
  for (const auto& [ym, v] : sched.r)
    for (int i = 0; i < kNumProducers; ++i)
      if (!std::isfinite(v(i)))
        throw std::runtime_error(csv_path + ": missing r for " + std::string(kProducers[i]) +
                                 " " + ym.str());
  return sched;
}

PriceSeries load_price_series(const std::string& prices_csv,
                              const std::string& contributions_csv,
                              const std::string& total_supply_csv) {
  std::map<std::string, double> price_by_date;
  read_csv(prices_csv, "date,price",
           [&](const std::vector<std::string>& f, const std::string& where) {
             if (!valid_iso_date(f[0]))
               throw std::runtime_error(where + ": bad date '" + f[0] + "'");
             if (!price_by_date.emplace(f[0], parse_number(f[1], where)).second)
               throw std::runtime_error(where + ": duplicate date " + f[0]);
           });

  struct Contrib {
    double d, s, r;
  };
  std::map<std::string, Contrib> contrib_by_date;
  read_csv(contributions_csv, "date,demand_contrib,supply_contrib,residual_contrib",
           [&](const std::vector<std::string>& f, const std::string& where) {
             if (!valid_iso_date(f[0]))
               throw std::runtime_error(where + ": bad date '" + f[0] + "'");
             Contrib c{parse_number(f[1], where), parse_number(f[2], where),
                       parse_number(f[3], where)};
             if (!contrib_by_date.emplace(f[0], c).second)
               throw std::runtime_error(where + ": duplicate date " + f[0]);
           });

  if (price_by_date.size() != contrib_by_date.size())
    throw std::runtime_error(prices_csv + " and " + contributions_csv +
                             " cover different date sets");
  PriceSeries series;
  const int n = static_cast<int>(price_by_date.size());
  series.price.resize(n);
  series.demand_contrib.resize(n);
  series.supply_contrib.resize(n);
  series.residual_contrib.resize(n);
  int t = 0;
  for (const auto& [date, p] : price_by_date) {
    auto it = contrib_by_date.find(date);
    if (it == contrib_by_date.end())
      throw std::runtime_error(contributions_csv + ": missing date " + date);
    series.dates.push_back(date);
    series.price(t) = p;
    series.demand_contrib(t) = it->second.d;
    series.supply_contrib(t) = it->second.s;
    series.residual_contrib(t) = it->second.r;
    ++t;
  }

  bool have_supply = false;
  read_csv(total_supply_csv, "total_supply_barrels_per_day",
           [&](const std::vector<std::string>& f, const std::string& where) {
             if (have_supply) throw std::runtime_error(where + ": more than one value");
             series.total_supply = parse_number(f[0], where);
             have_supply = true;
           });
  if (!have_supply) throw std::runtime_error(total_supply_csv + ": no value");

  series.validate();
  return series;
}

MarketData load_market_data(const std::string& dir) {
  MarketData data;
  data.shares = load_producer_table(dir + "/shares.csv");
  data.rsched = load_r_schedule(dir + "/r_schedule.csv");
  data.prices = load_price_series(dir + "/prices.csv", dir + "/contributions.csv",
                                  dir + "/total_supply.csv");
  return data;
}

std::string market_mode_name(MarketMode mode) {
  return mode == MarketMode::InSample ? "in_sample" : "out_of_sample";
}

void MarketRunConfig::validate() const {
  if (month.year < 1 || month.month < 1 || month.month > 12)
    throw std::invalid_argument("market config: invalid month");
  if (nu < 1) throw std::invalid_argument("market config: nu must be >= 1");
  if (!(zeta_min > 0.0) || !(zeta_max < 1.0) || !(zeta_min <= zeta_max))
    throw std::invalid_argument("market config: zeta range must satisfy 0 < min <= max < 1");
}

FirstStageParams calibrate_first_stage(const ProducerTable& shares, const RSchedule& rsched,
                                       const MarketRunConfig& cfg) {
  cfg.validate();
  YearMonth anchor;
  if (cfg.fixed_2020_anchor && cfg.month.year == 2020)
    anchor = cfg.mode == MarketMode::InSample ? YearMonth{2020, 1} : YearMonth{2019, 12};
  else
    anchor = cfg.mode == MarketMode::InSample ? cfg.month : cfg.month.prev();

  // Shares enter as fractions; with percentages the 2020 r values would
  // dominate the quadratic costs and destroy first-stage convexity.
  Eigen::VectorXd lambda = shares.at(anchor) / 100.0;
  Eigen::VectorXd k = Eigen::VectorXd::Constant(kNumProducers, 0.1);
  k(0) = 0.11;
  k(1) = 0.115;
  k(2) = 0.095;

  FirstStageParams fs;
  fs.c = k.cwiseQuotient(lambda);
  fs.a = fs.c;
  fs.a(producer_index("USA")) *= 6.0;
  fs.a(producer_index("Canada")) *= 2.0;
  fs.r = rsched.r_for(cfg.month);
  fs.validate();
  return fs;
}

SampledScenarios sample_scenarios(const PriceSeries& prices, const MarketRunConfig& cfg,
                                  const Eigen::VectorXd& a) {
  cfg.validate();
  if (a.size() == 0 || !(a.array() > 0.0).all())
    throw std::invalid_argument("sample_scenarios: linear costs must be positive");

  YearMonth window_month =
      cfg.mode == MarketMode::InSample ? cfg.month : cfg.month.prev();
  std::vector<int> window = prices.month_window(window_month);
  if (window.empty())
    throw std::runtime_error("no price data for " + window_month.str());

  SampledScenarios out;
  SplitMix64 rng(cfg.seed);
  out.zeta = rng.uniform(cfg.zeta_min, cfg.zeta_max);
  Eigen::VectorXd beta = out.zeta * a;

  out.scenarios.reserve(cfg.nu);
  out.xis.reserve(cfg.nu);
  out.day_index.reserve(cfg.nu);
  for (int l = 0; l < cfg.nu; ++l) {
    int t = window[static_cast<int>(rng.next_below(window.size()))];
    double xi = rng.uniform(0.99, 1.01);
    double alpha0 = prices.price(t - 1);
    // Joint resample of one historical day: its demand and residual
    // contributions move the benchmark price; the supply effect is
    // endogenous through the inverse demand slope.
    double alpha = alpha0 * (1.0 + prices.demand_contrib(t) + prices.residual_contrib(t));
    double gamma = std::max(std::abs(alpha - alpha0) / (xi * prices.total_supply), 1e-12);
    ScenarioData sd;
    sd.h = beta;
    sd.gamma = gamma;
    sd.rho = beta.array() - alpha;
    out.scenarios.push_back(std::move(sd));
    out.xis.push_back(xi);
    out.day_index.push_back(t);
  }
  return out;
}

MarketResult run_month(const ProducerTable& shares, const RSchedule& rsched,
                       const PriceSeries& prices, const MarketRunConfig& cfg) {
  FirstStageParams fs = calibrate_first_stage(shares, rsched, cfg);
  SampledScenarios sampled = sample_scenarios(prices, cfg, fs.a);

  TwoStageGame game;
  game.J = kNumProducers;
  game.first_stage = fs;
  game.scenarios = std::move(sampled.scenarios);
  game.validate();

  MarketResult out;
  out.month = cfg.month;
  out.mode = cfg.mode;
  out.zeta = sampled.zeta;
  out.nu = cfg.nu;
  out.seed = cfg.seed;
  out.first_stage_pd = check_first_stage_convexity(fs).symmetric_pd;

  bool have = false;
  EquilibriumSolution best;
  std::string algorithm;
  try {
    best = solve_aba(game, cfg.solver);
    algorithm = "aba";
    have = true;
  } catch (const LcpSolveError&) {
  } catch (const BoxQpError&) {
  }
  if (!have || !best.converged) {
    try {
      EquilibriumSolution ph = solve_pha(game, cfg.solver);
      if (!have || ph.converged || ph.residual < best.residual) {
        best = std::move(ph);
        algorithm = "pha";
        have = true;
      }
    } catch (const LcpSolveError&) {
    }
  }
  if (!have)
    throw std::runtime_error("run_month: no solver produced an iterate for " + cfg.month.str());

  out.equilibrium = std::move(best);
  out.algorithm = algorithm;
  double total = out.equilibrium.x.sum();
  if (!(total > 0.0))
    throw std::runtime_error("run_month: zero total production for " + cfg.month.str());
  out.computed_shares = 100.0 * out.equilibrium.x / total;
  return out;
}

nlohmann::json market_report_json(const MarketResult& result, const ProducerTable& shares) {
  nlohmann::json j;
  j["month"] = result.month.str();
  j["mode"] = market_mode_name(result.mode);
  nlohmann::json computed = nlohmann::json::object();
  for (int i = 0; i < kNumProducers; ++i)
    computed[kProducers[i]] = result.computed_shares(i);
  j["computed_shares"] = computed;
  if (shares.has(result.month)) {
    const Eigen::VectorXd& real = shares.at(result.month);
    nlohmann::json real_obj = nlohmann::json::object();
    for (int i = 0; i < kNumProducers; ++i) real_obj[kProducers[i]] = real(i);
    j["real_shares"] = real_obj;
  } else {
    j["real_shares"] = nullptr;
  }
  j["residual"] = result.equilibrium.residual;
  j["iterations"] = result.equilibrium.iterations;
  j["converged"] = result.equilibrium.converged;
  j["algorithm"] = result.algorithm;
  j["zeta"] = result.zeta;
  j["nu"] = result.nu;
  j["seed"] = result.seed;
  j["first_stage_pd"] = result.first_stage_pd;
  j["contraction_estimate"] = result.equilibrium.contraction_estimate;
  return j;
}

void write_shares_csv(std::ostream& out, const ProducerTable& shares,
                      const std::vector<MarketResult>& results) {
  std::map<YearMonth, std::pair<const MarketResult*, const MarketResult*>> by_month;
  for (const auto& r : results) {
    auto& slot = by_month[r.month];
    (r.mode == MarketMode::InSample ? slot.first : slot.second) = &r;
  }
  out << "producer,month,real,in_sample,out_of_sample\n";
  for (const auto& [ym, slot] : by_month) {
    const bool have_real = shares.has(ym);
    for (int i = 0; i < kNumProducers; ++i) {
      out << kProducers[i] << ',' << ym.str() << ',';
      if (have_real) out << format_double(shares.at(ym)(i));
      out << ',';
      if (slot.first) out << format_double(slot.first->computed_shares(i));
      out << ',';
      if (slot.second) out << format_double(slot.second->computed_shares(i));
      out << '\n';
    }
  }
}

double spearman_rank_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("spearman_rank_correlation: need two equal-length vectors");
  Eigen::VectorXd ra = average_ranks(a);
  Eigen::VectorXd rb = average_ranks(b);
  ra.array() -= ra.mean();
  rb.array() -= rb.mean();
  double denom = std::sqrt(ra.squaredNorm() * rb.squaredNorm());
  if (denom == 0.0)
    throw std::invalid_argument("spearman_rank_correlation: constant input");
  return ra.dot(rb) / denom;
}

}  // namespace slcp
