#include "slcp/game.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace slcp {

void FirstStageParams::validate() const {
  const auto n = c.size();
  if (n == 0) throw std::invalid_argument("FirstStageParams: empty");
  if (a.size() != n || r.size() != n)
    throw std::invalid_argument("FirstStageParams: c, a, r lengths differ");
  if (!c.allFinite() || !a.allFinite() || !r.allFinite())
    throw std::invalid_argument("FirstStageParams: non-finite entries");
  if ((c.array() <= 0.0).any())
    throw std::invalid_argument("FirstStageParams: c must be positive");
}

void ScenarioData::validate(int agents) const {
  if (h.size() != agents || rho.size() != agents)
    throw std::invalid_argument("ScenarioData: h or rho length mismatch");
  if (!h.allFinite() || !rho.allFinite() || !std::isfinite(gamma))
    throw std::invalid_argument("ScenarioData: non-finite entries");
  if ((h.array() <= 0.0).any()) throw std::invalid_argument("ScenarioData: h must be positive");
  if (gamma <= 0.0) throw std::invalid_argument("ScenarioData: gamma must be positive");
}

void TwoStageGame::validate() const {
  first_stage.validate();
  if (J != first_stage.agents()) throw std::invalid_argument("TwoStageGame: J mismatch");
  if (scenarios.empty()) throw std::invalid_argument("TwoStageGame: no scenarios");
  for (const auto& s : scenarios) s.validate(J);
}

Eigen::MatrixXd first_stage_matrix(const FirstStageParams& fs) {
  fs.validate();
  const int n = fs.agents();
  Eigen::MatrixXd m = fs.r * Eigen::RowVectorXd::Ones(n);
  m.diagonal().array() += fs.c.array() + fs.r.array();
  return m;
}

Eigen::MatrixXd scenario_hessian(const ScenarioData& s) {
  const int n = static_cast<int>(s.h.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, s.gamma);
  m.diagonal().array() += s.h.array() + s.gamma;
  return m;
}

Eigen::VectorXd scenario_hessian_apply(const ScenarioData& s, const Eigen::VectorXd& y) {
  double total = y.sum();
  return (s.h.array() + s.gamma) * y.array() + s.gamma * total;
}

ConvexityReport check_first_stage_convexity(const FirstStageParams& fs) {
  fs.validate();
  const int n = fs.agents();
  ConvexityReport rep;
  rep.diagonally_dominant = true;
  rep.min_dominance_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) off += std::abs(fs.r(i) + fs.r(j));
    double margin = fs.c(i) + 2.0 * fs.r(i) - 0.5 * off;
    rep.min_dominance_margin = std::min(rep.min_dominance_margin, margin);
    if (margin <= 0.0) rep.diagonally_dominant = false;
  }
  Eigen::MatrixXd sym = first_stage_matrix(fs);
  sym = 0.5 * (sym + sym.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  rep.symmetric_pd = llt.info() == Eigen::Success;
  return rep;
}

LcpProblem build_scenario_matrix(const ScenarioData& s, const Eigen::VectorXd& x) {
  const int n = static_cast<int>(s.h.size());
  s.validate(n);
  if (x.size() != n) throw std::invalid_argument("build_scenario_matrix: x length mismatch");
  if (!x.allFinite() || (x.array() < 0.0).any())
    throw std::invalid_argument("build_scenario_matrix: x must be nonnegative");

  LcpProblem p;
  p.M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  p.M.topLeftCorner(n, n) = scenario_hessian(s);
  p.M.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  p.M.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
  p.q.resize(2 * n);
  p.q << s.rho, x;
  return p;
}

LcpProblem assemble_big_lcp(const TwoStageGame& g) {
  g.validate();
  const int J = g.J;
  const int nu = g.num_scenarios();
  const Eigen::Index n = static_cast<Eigen::Index>(J) * (2 * nu + 1);

  LcpProblem p;
  p.M = Eigen::MatrixXd::Zero(n, n);
  p.q = Eigen::VectorXd::Zero(n);

  p.M.topLeftCorner(J, J) = first_stage_matrix(g.first_stage);
  p.q.head(J) = g.first_stage.a;

  const double inv_nu = 1.0 / nu;
  for (int l = 0; l < nu; ++l) {
    const Eigen::Index off = J + static_cast<Eigen::Index>(l) * 2 * J;
    // First-stage row block: -(1/nu) B with B = (0, I), so the s columns.
    p.M.block(0, off + J, J, J) = -inv_nu * Eigen::MatrixXd::Identity(J, J);
    // Scenario rows: B' x in the s rows, M(xi_l) on the diagonal.
    p.M.block(off + J, 0, J, J) = Eigen::MatrixXd::Identity(J, J);
    const auto& s = g.scenarios[l];
    p.M.block(off, off, J, J) = scenario_hessian(s);
    p.M.block(off, off + J, J, J) = Eigen::MatrixXd::Identity(J, J);
    p.M.block(off + J, off, J, J) = -Eigen::MatrixXd::Identity(J, J);
    p.q.segment(off, J) = s.rho;
  }
  return p;
}

double big_lcp_residual(const TwoStageGame& g, const Eigen::VectorXd& x,
                        const std::vector<Eigen::VectorXd>& ys,
                        const std::vector<Eigen::VectorXd>& ss) {
  g.validate();
  const int J = g.J;
  const int nu = g.num_scenarios();
  if (x.size() != J) throw std::invalid_argument("big_lcp_residual: x length mismatch");
  if (static_cast<int>(ys.size()) != nu || static_cast<int>(ss.size()) != nu)
    throw std::invalid_argument("big_lcp_residual: scenario count mismatch");

  Eigen::VectorXd mean_s = Eigen::VectorXd::Zero(J);
  for (int l = 0; l < nu; ++l) {
    if (ys[l].size() != J || ss[l].size() != J)
      throw std::invalid_argument("big_lcp_residual: block length mismatch");
    mean_s += ss[l];
  }
  mean_s /= static_cast<double>(nu);

  Eigen::VectorXd row0 =
      first_stage_matrix(g.first_stage) * x + g.first_stage.a - mean_s;
  double sq = x.cwiseMin(row0).squaredNorm();
  for (int l = 0; l < nu; ++l) {
    const auto& s = g.scenarios[l];
    Eigen::VectorXd ry = scenario_hessian_apply(s, ys[l]) + ss[l] + s.rho;
    Eigen::VectorXd rs = x - ys[l];
    sq += ys[l].cwiseMin(ry).squaredNorm() + ss[l].cwiseMin(rs).squaredNorm();
  }
  return std::sqrt(sq);
}

Eigen::VectorXd evaluate_profits(const TwoStageGame& g, const Eigen::VectorXd& x,
                                 const std::vector<Eigen::VectorXd>& ys,
                                 const Eigen::VectorXd& alpha,
                                 const std::vector<Eigen::VectorXd>& beta) {
  g.validate();
  const int J = g.J;
  const int nu = g.num_scenarios();
  if (x.size() != J) throw std::invalid_argument("evaluate_profits: x length mismatch");
  if (static_cast<int>(ys.size()) != nu || static_cast<int>(beta.size()) != nu ||
      alpha.size() != nu)
    throw std::invalid_argument("evaluate_profits: scenario count mismatch");

  Eigen::VectorXd expected = Eigen::VectorXd::Zero(J);
  for (int l = 0; l < nu; ++l) {
    const auto& s = g.scenarios[l];
    const auto& y = ys[l];
    if (y.size() != J || beta[l].size() != J)
      throw std::invalid_argument("evaluate_profits: block length mismatch");
    if ((y.array() < -1e-12).any() || ((y - x).array() > 1e-12).any())
      throw std::invalid_argument("evaluate_profits: y must lie in [0, x]");
    double price = alpha(l) - s.gamma * y.sum();
    expected.array() += price * y.array() - 0.5 * s.h.array() * y.array().square() -
                        beta[l].array() * y.array();
  }
  expected /= static_cast<double>(nu);

  const auto& fs = g.first_stage;
  double total_x = x.sum();
  Eigen::VectorXd cost = 0.5 * fs.c.array() * x.array().square() + fs.a.array() * x.array() +
                         fs.r.array() * x.array() * total_x;
  return expected - cost;
}

namespace {

using nlohmann::json;

Eigen::VectorXd vector_field(const json& j, const std::string& field, int expected_len,
                             const std::string& context) {
  if (!j.contains(field))
    throw std::invalid_argument("game JSON: missing field '" + context + field + "'");
  const json& arr = j.at(field);
  if (!arr.is_array())
    throw std::invalid_argument("game JSON: field '" + context + field + "' must be an array");
  if (expected_len >= 0 && static_cast<int>(arr.size()) != expected_len)
    throw std::invalid_argument("game JSON: field '" + context + field + "' has wrong length");
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number())
      throw std::invalid_argument("game JSON: field '" + context + field + "' must be numeric");
    v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return v;
}

json to_json_array(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

}  // namespace

std::string game_to_json(const TwoStageGame& g) {
  g.validate();
  json j;
  j["J"] = g.J;
  j["c"] = to_json_array(g.first_stage.c);
  j["a"] = to_json_array(g.first_stage.a);
  j["r"] = to_json_array(g.first_stage.r);
  json scen = json::array();
  for (const auto& s : g.scenarios) {
    json js;
    js["h"] = to_json_array(s.h);
    js["gamma"] = s.gamma;
    js["rho"] = to_json_array(s.rho);
    scen.push_back(std::move(js));
  }
  j["scenarios"] = std::move(scen);
  return j.dump(2) + "\n";
}

TwoStageGame game_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("game JSON: parse error: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("game JSON: top level must be an object");
  if (!j.contains("J") || !j.at("J").is_number_integer())
    throw std::invalid_argument("game JSON: missing or non-integer field 'J'");

  TwoStageGame g;
  g.J = j.at("J").get<int>();
  if (g.J <= 0) throw std::invalid_argument("game JSON: field 'J' must be positive");
  g.first_stage.c = vector_field(j, "c", g.J, "");
  g.first_stage.a = vector_field(j, "a", g.J, "");
  g.first_stage.r = vector_field(j, "r", g.J, "");

  if (!j.contains("scenarios") || !j.at("scenarios").is_array())
    throw std::invalid_argument("game JSON: missing array field 'scenarios'");
  for (const json& js : j.at("scenarios")) {
    ScenarioData s;
    s.h = vector_field(js, "h", g.J, "scenarios.");
    if (!js.contains("gamma") || !js.at("gamma").is_number())
      throw std::invalid_argument("game JSON: missing numeric field 'scenarios.gamma'");
    s.gamma = js.at("gamma").get<double>();
    s.rho = vector_field(js, "rho", g.J, "scenarios.");
    g.scenarios.push_back(std::move(s));
  }
  g.validate();
  return g;
}

void save_game(const TwoStageGame& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_game: cannot open " + path);
  out << game_to_json(g);
  if (!out) throw std::runtime_error("save_game: write failed for " + path);
}

TwoStageGame load_game(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_game: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return game_from_json(buf.str());
}

}  // namespace slcp
