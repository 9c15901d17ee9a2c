#pragma once

#include "decouple/ekeland.hpp"
#include "decouple/multiplier.hpp"
#include "decouple/semicontinuity.hpp"

#include <json.hpp>
#include <ostream>

/// JSON documents and CSV traces for the analysis results.
namespace decouple::report {

using json = nlohmann::ordered_json;

/// Infinite values become the strings "inf" and "-inf"; NaN becomes null.
inline json num(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}
inline json num(const ExtReal& v) { return num(v.value()); }

inline json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

inline json point(const Point& p) {
  json a = json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i) a.push_back(num(p[i]));
  return a;
}

inline json to_json(const Verdict& v) {
  json j;
  j["status"] = to_string(v.status);
  json w = json::array();
  for (const auto& p : v.witness) w.push_back(point(p));
  j["witness"] = w;
  if (v.status == VerdictStatus::Inconclusive) {
    j["finest_resolution"] = num(v.finest_resolution);
    j["trend"] = v.trend;
  }
  j["note"] = v.note;
  return j;
}

inline json to_json(const Quantity& q) {
  return {{"value", num(q.value)}, {"verdict", to_json(q.verdict)}, {"trace", nums(q.trace)}};
}

inline json to_json(const DecouplingReport& r) {
  json j;
  j["lambda"] = to_json(r.lambda);
  j["lambda_circ"] = to_json(r.lambda_circ);
  j["lambda_dag"] = to_json(r.lambda_dag);
  j["theta_circ"] = to_json(r.theta_circ);
  j["theta_dag"] = to_json(r.theta_dag);
  j["inf_sum"] = num(r.inf_sum);
  j["etas"] = nums(r.etas);
  j["lambda_dag_members"] = nums(r.lambda_dag_members);
  j["theta_dag_members"] = nums(r.theta_dag_members);
  j["violations"] = r.violations;
  j["invariants"] = to_json(r.invariants);
  return j;
}

inline json to_json(const Certificate& c) {
  json j;
  j["property"] = to_string(c.property);
  j["verdict"] = to_json(c.verdict);
  json per = json::array();
  for (const auto& e : c.per_eps) {
    json x;
    x["eps"] = e.eps;
    x["status"] = to_string(e.status);
    x["eta"] = e.eta ? num(*e.eta) : json(nullptr);
    x["level_pass"] = e.level_pass;
    x["violations"] = nums(e.violations);
    json w = json::array();
    for (const auto& p : e.witness) w.push_back(point(p));
    x["witness"] = w;
    per.push_back(x);
  }
  j["per_eps"] = per;
  return j;
}

inline json to_json(const NearCertificate& c) {
  json radii = json::array();
  for (const auto& [d, cert] : c.radii) radii.push_back({{"radius", d}, {"certificate", to_json(cert)}});
  return {{"verdict", to_json(c.verdict)}, {"radii", radii}};
}

inline json to_json(const SetPairReport& r) {
  return {{"verdict", to_json(r.verdict)}, {"value", num(r.value)}, {"trace", nums(r.trace)}};
}

inline json to_json(const SubtransversalityReport& r) {
  return {{"verdict", to_json(r.verdict)}, {"alpha", num(r.alpha)}, {"trace", nums(r.trace)}};
}

inline json to_json(const SubgradientTest& t) {
  return {{"verdict", to_json(t.verdict)}, {"quotients", nums(t.quotients)}};
}

inline json to_json(const MinClassification& m) {
  return {{"verdict", to_json(m.verdict)}, {"value", num(m.value)}, {"lambda_dag", num(m.lambda_dag)},
          {"margin", num(m.margin)}};
}

inline json to_json(const StationarityReport& r) {
  return {{"verdict", to_json(r.verdict)}, {"plain", to_json(r.plain)}, {"eps_grid", nums(r.eps_grid)},
          {"radii", nums(r.radii)}, {"limits", nums(r.limits)}, {"passes", r.passes}};
}

inline json to_json(const PenalizedResult& r) {
  json j;
  j["x1hat"] = point(r.x1hat);
  j["x2hat"] = point(r.x2hat);
  j["eps_prime"] = num(r.eps_prime);
  j["rho"] = num(r.rho);
  j["alpha"] = num(r.alpha);
  j["xi"] = num(r.xi);
  j["gamma"] = num(r.gamma);
  j["c"] = num(r.c);
  j["base_value"] = num(r.base_value);
  j["phi_value"] = num(r.phi_value);
  j["slope"] = num(r.slope);
  j["slope_bound"] = num(r.slope_bound);
  j["cloud_size"] = r.cloud_size;
  j["closeness"] = r.closeness;
  j["coupling"] = r.coupling;
  j["value_ok"] = r.value_ok;
  j["slope_check"] = to_json(r.slope_check);
  return j;
}

inline json to_json(const FuzzyWitness& w) {
  return {{"x1", point(w.x1)},       {"x2", point(w.x2)},
          {"v1", point(w.v1)},       {"v2", point(w.v2)},
          {"residual", num(w.residual)}, {"near_base", w.near_base},
          {"values_close", w.values_close}};
}

inline json to_json(const ChainWitness& w) {
  return {{"x", point(w.x)}, {"y", point(w.y)}, {"ystar", point(w.ystar)}, {"v", point(w.v)},
          {"residual", num(w.residual)}};
}

/// Columns of equal or shorter length, padded with empty cells.
using Columns = std::vector<std::pair<std::string, std::vector<double>>>;

inline std::string csv_cell(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& os, const Columns& cols) {
  std::size_t rows = 0;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    os << (c ? "," : "") << cols[c].first;
    rows = std::max(rows, cols[c].second.size());
  }
  os << "\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      os << (c ? "," : "");
      if (r < cols[c].second.size()) os << csv_cell(cols[c].second[r]);
    }
    os << "\n";
  }
}

inline Columns trace_columns(const DecouplingReport& r) {
  std::vector<double> level;
  for (std::size_t j = 0; j < r.etas.size(); ++j) level.push_back(static_cast<double>(j));
  return {{"level", level},
          {"eta", r.etas},
          {"lambda", r.lambda.trace},
          {"lambda_circ", r.lambda_circ.trace},
          {"lambda_dag", r.lambda_dag.trace},
          {"theta_circ", r.theta_circ.trace},
          {"theta_dag", r.theta_dag.trace}};
}

}  // namespace decouple::report
