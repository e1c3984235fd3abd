#include "mmc/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <Eigen/Core>

namespace mmc {

using nlohmann::json;

namespace {

// JSON has no infinities; they become strings so the field stays present.
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json to_json(const Estimate& e) {
  json j{{"value", num(e.value)}, {"radius", num(e.radius)}, {"provenance", e.provenance()}};
  if (!e.exact) {
    j["samples"] = e.samples;
    j["seed"] = e.seed;
  }
  return j;
}

json to_json(const BoundParams& p) {
  return {{"beta", p.beta}, {"delta", p.delta}, {"tau", p.tau}, {"C", p.C}, {"phi", p.phi()}};
}

json to_json(const BoundReport& r) {
  json j{{"shape", {r.n, r.m}},
         {"params", to_json(r.params)},
         {"alpha", r.eps.alpha},
         {"epsilon", r.eps.epsilon},
         {"lambda", r.lambda},
         {"threshold", r.threshold},
         {"rhs_general", num(r.rhs_general)},
         {"rhs_gaussian", r.rhs_gaussian ? num(*r.rhs_gaussian) : json(nullptr)},
         {"components",
          {{"B1", to_json(r.components.b1)},
           {"B1_prime", to_json(r.components.b1p)},
           {"B2", to_json(r.components.b2)},
           {"B2_prime", to_json(r.components.b2p)},
           {"B3", to_json(r.components.b3)}}}};
  return j;
}

json to_json(const OptimizedParams& o) {
  return {{"feasible", o.feasible}, {"beta", o.beta},
          {"delta", o.delta},       {"tau", o.tau},
          {"rhs", num(o.rhs)},      {"min_threshold", num(o.min_threshold)},
          {"evaluations", o.evaluations}};
}

json to_json(const GapReport& r, bool include_rows) {
  const auto& top = r.rows.at(r.argmax);
  json j{{"ensemble_a", r.name_a},
         {"ensemble_b", r.name_b},
         {"gaussian_pair", r.gaussian},
         {"bound", to_json(r.bound)},
         {"rhs_used", r.gaussian ? "rhs_gaussian" : "rhs_general"},
         {"rhs", num(r.rhs)},
         {"enlargement", r.enlargement},
         {"intervals", r.rows.size()},
         {"max_gap", r.max_gap},
         {"max_gap_se", r.max_gap_se},
         {"max_gap_interval", {num(top.interval.lo), num(top.interval.hi)}},
         {"pass_policy", "every interval: gap <= rhs + 2 * se"},
         {"pass", r.pass},
         {"samples", r.samples},
         {"seed_a", r.seed_a},
         {"seed_b", r.seed_b}};
  if (include_rows) {
    json rows = json::array();
    for (const auto& row : r.rows)
      rows.push_back({{"a", num(row.interval.lo)},
                      {"b", num(row.interval.hi)},
                      {"mu_hat", row.mu_hat},
                      {"nu_enlarged_hat", row.nu_enlarged_hat},
                      {"gap", row.gap},
                      {"se", row.se}});
    j["rows"] = std::move(rows);
  }
  return j;
}

json to_json(const CalibrationResult& c) {
  json scen = json::array();
  for (std::size_t s = 0; s < c.scenarios.size(); ++s) {
    const auto& sm = c.scenarios[s];
    scen.push_back({{"name", sm.name},
                    {"required_C", num(sm.required_c)},
                    {"feasible", sm.feasible},
                    {"margin_at_C_star", num(sm.margin)},
                    {"report", to_json(c.reports.at(s), false)}});
  }
  return {{"C_star", num(c.c_star)},
          {"finite", c.finite},
          {"binding_scenario", c.binding},
          {"pass_policy", "every interval: gap <= rhs + 2 * se"},
          {"scenarios", std::move(scen)}};
}

json to_json(const CheckResult& c) {
  return {{"name", c.name}, {"measured", num(c.measured)}, {"bound", num(c.bound)},
          {"pass", c.pass}};
}

json to_json(const std::vector<CheckResult>& checks) {
  json arr = json::array();
  std::size_t failed = 0;
  for (const auto& c : checks) {
    arr.push_back(to_json(c));
    if (!c.pass) ++failed;
  }
  return {{"checks", std::move(arr)},
          {"total", checks.size()},
          {"failed", failed},
          {"all_pass", failed == 0}};
}

std::string gap_csv(const std::vector<GapRow>& rows) {
  std::string out = "a,b,mu_hat,nu_enlarged_hat,gap,se\n";
  for (const auto& r : rows)
    out += fmt(r.interval.lo) + "," + fmt(r.interval.hi) + "," + fmt(r.mu_hat) + "," +
           fmt(r.nu_enlarged_hat) + "," + fmt(r.gap) + "," + fmt(r.se) + "\n";
  return out;
}

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json manifest(const std::string& command, const json& config, const json& seeds,
              const std::vector<std::string>& outputs) {
  return {{"tool", "mmc"},
          {"version", kVersion},
          {"eigen",
           std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
               "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"command", command},
          {"config_hash", config_hash(config)},
          {"config", config},
          {"seeds", seeds},
          {"outputs", outputs}};
}

void write_text(const std::string& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw EstimationError("cannot write " + path.string());
  out << text;
}

}  // namespace mmc
