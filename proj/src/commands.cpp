#include "mmc/cli.hpp"

#include <ostream>

#include "mmc/parallel.hpp"
#include "mmc/report.hpp"
#include "mmc/verify_suite.hpp"

namespace mmc {

using nlohmann::json;

namespace {

std::string file_stem(const std::string& a, const std::string& b) {
  std::string s = a + "_vs_" + b;
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  return s;
}

std::size_t component_samples(const RunConfig& cfg) {
  return cfg.budgets.component_samples ? cfg.budgets.component_samples : cfg.budgets.samples;
}

BoundComponents estimate_components(const SampleStream& a, const SampleStream& b,
                                    std::size_t samples, unsigned workers) {
  auto b2 = [&](const SampleStream& s) {
    // 1x1: E|X|^3 is the entry's third absolute moment when known
    if (s.spec().dim() == 1)
      if (const auto exact = exact_entry_third_moment(s.spec())) return Estimate::exact_value((*exact)(0));
    return estimate_B2(s, samples, workers);
  };
  BoundComponents c;
  c.b1 = estimate_B1(a, samples, workers);
  c.b1p = estimate_B1(b, samples, workers);
  c.b2 = b2(a);
  c.b2p = b2(b);
  c.b3 = Estimate::exact_value(
      compute_B3(exact_covariance(a.spec()), exact_covariance(b.spec())));
  return c;
}

std::uint64_t pair_seed(const RunConfig& cfg, std::size_t k) {
  return cfg.pairs.size() == 1 ? cfg.budgets.seed : derive_seed(cfg.budgets.seed, 1000 + k);
}

void finish(const std::string& command, const RunConfig& cfg, const json& doc,
            const json& seeds, std::vector<std::string> outputs) {
  outputs.push_back("manifest.json");
  write_text(cfg.output_dir, "manifest.json",
             manifest(command, doc, seeds, outputs).dump(2) + "\n");
}

GapOptions gap_options(const RunConfig& cfg, std::uint64_t seed) {
  GapOptions o;
  o.samples = cfg.budgets.samples;
  o.component_samples = cfg.budgets.component_samples;
  o.seed = seed;
  o.workers = cfg.budgets.workers;
  o.grid = cfg.grid;
  return o;
}

// Parameters for a pair; `optimize` needs component estimates first.
BoundParams params_for(const ParamsPolicy& policy, const RunConfig& cfg, const EnsembleSpec& a,
                       const EnsembleSpec& b, std::uint64_t seed, json* trace) {
  BoundComponents comps;
  if (policy.rule == ParamsPolicy::Rule::optimize)
    comps = estimate_components(SampleStream(a, derive_seed(seed, 1)),
                                SampleStream(b, derive_seed(seed, 2)), component_samples(cfg),
                                cfg.budgets.workers);
  OptimizedParams opt;
  const BoundParams p = resolve_params(policy, a.n, a.m, cfg.C, comps,
                                       a.is_gaussian() && b.is_gaussian(), &opt);
  if (trace && policy.rule == ParamsPolicy::Rule::optimize) *trace = to_json(opt);
  return p;
}

}  // namespace

CommandResult cmd_bound(const RunConfig& cfg, const json& doc) {
  CommandResult res;
  json reports = json::array(), seeds = json::array();
  std::vector<std::string> outputs;
  for (std::size_t k = 0; k < cfg.pairs.size(); ++k) {
    const auto& a = cfg.ensemble(cfg.pairs[k].first);
    const auto& b = cfg.ensemble(cfg.pairs[k].second);
    const std::uint64_t seed = pair_seed(cfg, k);
    const SampleStream sa(a, derive_seed(seed, 1)), sb(b, derive_seed(seed, 2));
    const bool gaussian = a.is_gaussian() && b.is_gaussian();
    const auto comps = estimate_components(sa, sb, component_samples(cfg), cfg.budgets.workers);
    OptimizedParams opt;
    const BoundParams params = resolve_params(cfg.params, a.n, a.m, cfg.C, comps, gaussian, &opt);
    json j = to_json(coupling_rhs(a.n, a.m, params, comps, gaussian));
    j["ensemble_a"] = a.name;
    j["ensemble_b"] = b.name;
    j["gaussian_pair"] = gaussian;
    if (cfg.params.rule == ParamsPolicy::Rule::optimize) j["optimizer"] = to_json(opt);
    const std::string name = "bound_" + file_stem(a.name, b.name) + ".json";
    write_text(cfg.output_dir, name, j.dump(2) + "\n");
    outputs.push_back(name);
    reports.push_back(j);
    seeds.push_back({{"pair", {a.name, b.name}}, {"seed_a", sa.seed()}, {"seed_b", sb.seed()}});
  }
  finish("bound", cfg, doc, {{"base", cfg.budgets.seed}, {"pairs", seeds}}, outputs);
  res.summary = {{"command", "bound"}, {"reports", reports}};
  return res;
}

CommandResult cmd_verify(const RunConfig& cfg, const json& doc) {
  VerifyOptions o;
  o.seed = cfg.budgets.seed;
  o.workers = cfg.budgets.workers;
  o.t_nodes = cfg.budgets.t_nodes;
  o.stein_samples = cfg.budgets.stein_samples;
  o.samples = cfg.budgets.samples;
  if (doc.contains("params") && cfg.params.rule == ParamsPolicy::Rule::fixed)
    o.params = std::array<double, 3>{cfg.params.beta, cfg.params.delta, cfg.params.tau};
  const auto checks = run_verify_suite(o);
  const json j = to_json(checks);
  write_text(cfg.output_dir, "verify.json", j.dump(2) + "\n");
  finish("verify", cfg, doc, {{"base", cfg.budgets.seed}}, {"verify.json"});
  CommandResult res;
  res.exit_code = j["all_pass"].get<bool>() ? kExitOk : kExitVerificationFailed;
  res.summary = {{"command", "verify"}, {"total", j["total"]}, {"failed", j["failed"]},
                 {"all_pass", j["all_pass"]}};
  for (const auto& c : checks)
    if (!c.pass) res.summary["failed_checks"].push_back(c.name);
  return res;
}

CommandResult cmd_simulate(const RunConfig& cfg, const json& doc) {
  CommandResult res;
  json summary = json::array(), seeds = json::array();
  std::vector<std::string> outputs;
  for (std::size_t k = 0; k < cfg.pairs.size(); ++k) {
    const auto& a = cfg.ensemble(cfg.pairs[k].first);
    const auto& b = cfg.ensemble(cfg.pairs[k].second);
    const std::uint64_t seed = pair_seed(cfg, k);
    json trace;
    const BoundParams params = params_for(cfg.params, cfg, a, b, seed, &trace);
    const GapReport rep = distributional_gap(a, b, params, gap_options(cfg, seed));
    json j = to_json(rep);
    if (!trace.is_null()) j["optimizer"] = trace;
    const std::string stem = "gap_" + file_stem(a.name, b.name);
    write_text(cfg.output_dir, stem + ".json", j.dump(2) + "\n");
    write_text(cfg.output_dir, stem + ".csv", gap_csv(rep.rows));
    outputs.push_back(stem + ".json");
    outputs.push_back(stem + ".csv");
    summary.push_back({{"pair", {a.name, b.name}},
                       {"max_gap", rep.max_gap},
                       {"max_gap_se", rep.max_gap_se},
                       {"rhs", j["rhs"]},
                       {"pass", rep.pass}});
    seeds.push_back({{"pair", {a.name, b.name}}, {"seed_a", rep.seed_a}, {"seed_b", rep.seed_b}});
  }
  finish("simulate", cfg, doc, {{"base", cfg.budgets.seed}, {"pairs", seeds}}, outputs);
  res.summary = {{"command", "simulate"}, {"pairs", summary}};
  return res;
}

CommandResult cmd_calibrate(const RunConfig& cfg, const json& doc) {
  if (!cfg.has_scenarios) throw ConfigError("scenarios", "missing required field 'scenarios'");
  if (cfg.scenarios.empty())
    throw ConfigError("scenarios", "calibration needs at least one scenario");
  std::vector<Scenario> scen;
  json traces = json::object();
  for (std::size_t k = 0; k < cfg.scenarios.size(); ++k) {
    const auto& sc = cfg.scenarios[k];
    const auto& a = cfg.ensemble(sc.a);
    const auto& b = cfg.ensemble(sc.b);
    json trace;
    const BoundParams p = params_for(sc.params ? *sc.params : cfg.params, cfg, a, b,
                                     derive_seed(cfg.budgets.seed, 100 + k), &trace);
    if (!trace.is_null()) traces[sc.name] = trace;
    scen.push_back({sc.name, a, b, p});
  }
  const auto cal = calibrate_C(scen, gap_options(cfg, cfg.budgets.seed));
  json j = to_json(cal);
  if (!traces.empty()) j["optimizer"] = traces;
  std::vector<std::string> outputs{"calibration.json"};
  write_text(cfg.output_dir, "calibration.json", j.dump(2) + "\n");
  json seeds = json::array();
  for (std::size_t s = 0; s < cal.reports.size(); ++s) {
    const std::string name = "calibration_" + file_stem(scen[s].a.name, scen[s].b.name) + ".csv";
    write_text(cfg.output_dir, name, gap_csv(cal.reports[s].rows));
    outputs.push_back(name);
    seeds.push_back({{"scenario", scen[s].name},
                     {"seed_a", cal.reports[s].seed_a},
                     {"seed_b", cal.reports[s].seed_b}});
  }
  finish("calibrate", cfg, doc, {{"base", cfg.budgets.seed}, {"scenarios", seeds}}, outputs);
  CommandResult res;
  res.summary = {{"command", "calibrate"},
                 {"C_star", j["C_star"]},
                 {"finite", cal.finite},
                 {"binding_scenario", cal.binding}};
  return res;
}

int run_command(const std::string& command, const std::optional<std::string>& config_path,
                const Overrides& overrides, std::ostream& out, std::ostream& err) {
  auto fail = [&](int code, const std::string& kind, const json& field, const std::string& msg) {
    err << json{{"error", kind}, {"field", field}, {"message", msg}, {"exit_code", code}}.dump()
        << "\n";
    return code;
  };
  try {
    if (command != "bound" && command != "verify" && command != "simulate" &&
        command != "calibrate")
      throw ConfigError("command", "unknown command '" + command + "'");
    json doc = json::object();
    if (config_path) doc = load_json_file(*config_path);
    else if (command != "verify") throw ConfigError("config", "--config is required");
    doc = apply_overrides(std::move(doc), overrides);
    const RunConfig cfg = parse_config(doc, command != "verify");

    CommandResult res;
    if (command == "bound") res = cmd_bound(cfg, doc);
    else if (command == "verify") res = cmd_verify(cfg, doc);
    else if (command == "simulate") res = cmd_simulate(cfg, doc);
    else res = cmd_calibrate(cfg, doc);
    out << res.summary.dump(2) << "\n";
    return res.exit_code;
  } catch (const ConfigError& e) {
    return fail(kExitConfigError, "config", e.field, e.what());
  } catch (const ConstraintError& e) {
    return fail(kExitConfigError, "constraint", nullptr, e.what());
  } catch (const DomainError& e) {
    return fail(kExitConfigError, "domain", nullptr, e.what());
  } catch (const EstimationError& e) {
    return fail(kExitEstimationError, "estimation", nullptr, e.what());
  } catch (const std::exception& e) {
    return fail(kExitEstimationError, "runtime", nullptr, e.what());
  }
}

}  // namespace mmc
