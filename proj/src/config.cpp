#include "mmc/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

namespace mmc {

using nlohmann::json;

const EnsembleSpec& RunConfig::ensemble(const std::string& name) const {
  for (const auto& e : ensembles)
    if (e.name == name) return e;
  throw ConfigError("ensembles", "unknown ensemble '" + name + "'");
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
}

json apply_overrides(json doc, const Overrides& ov) {
  if (!doc.is_object()) return doc;
  if (ov.C) doc["C"] = *ov.C;
  if (ov.seed) doc["budgets"]["seed"] = *ov.seed;
  if (ov.samples) doc["budgets"]["samples"] = *ov.samples;
  if (ov.workers) doc["budgets"]["workers"] = *ov.workers;
  if (ov.out) doc["output"]["dir"] = *ov.out;
  return doc;
}

namespace {

const json& require(const json& obj, const std::string& key, const std::string& path) {
  const std::string field = path.empty() ? key : path + "." + key;
  if (!obj.is_object() || !obj.contains(key))
    throw ConfigError(field, "missing required field '" + field + "'");
  return obj.at(key);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "'" + field + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(field, "'" + field + "' must be finite");
  return x;
}

double positive(const json& v, const std::string& field) {
  const double x = number(v, field);
  if (!(x > 0.0)) throw ConfigError(field, "'" + field + "' must be positive");
  return x;
}

std::uint64_t unsigned_int(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError(field, "'" + field + "' must be a nonnegative integer");
}

std::string string_value(const json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field, "'" + field + "' must be a string");
  return v.get<std::string>();
}

Eigen::MatrixXd matrix_value(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty() || !v[0].is_array())
    throw ConfigError(field, "'" + field + "' must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(v.size());
  const auto cols = static_cast<Eigen::Index>(v[0].size());
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ConfigError(field, "'" + field + "' rows must have equal length");
    for (Eigen::Index j = 0; j < cols; ++j)
      out(i, j) = number(row[static_cast<std::size_t>(j)],
                         field + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
  }
  return out;
}

EntryCovariance covariance_spec(const json& v, Eigen::Index d, const std::string& path) {
  const std::string kind = string_value(require(v, "kind", path), join(path, "kind"));
  if (kind == "identity") {
    const double var = v.contains("variance") ? positive(v["variance"], join(path, "variance")) : 1.0;
    return covariance::identity(d, var);
  }
  if (kind == "equicorrelated") {
    const double rho = number(require(v, "rho", path), join(path, "rho"));
    if (d > 1 && !(rho >= -1.0 / static_cast<double>(d - 1) && rho <= 1.0))
      throw ConfigError(join(path, "rho"), "rho is outside the PSD range");
    return covariance::equicorrelated(d, rho);
  }
  if (kind == "diagonal") {
    const auto& arr = require(v, "variances", path);
    if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != d)
      throw ConfigError(join(path, "variances"),
                        "variances must list n*m = " + std::to_string(d) + " values");
    Eigen::VectorXd var(d);
    for (Eigen::Index k = 0; k < d; ++k)
      var(k) = number(arr[static_cast<std::size_t>(k)], join(path, "variances"));
    if ((var.array() < 0.0).any())
      throw ConfigError(join(path, "variances"), "variances must be nonnegative");
    return covariance::diagonal(var);
  }
  if (kind == "explicit") {
    const Eigen::MatrixXd cov = matrix_value(require(v, "matrix", path), join(path, "matrix"));
    if (cov.rows() != d || cov.cols() != d)
      throw ConfigError(join(path, "matrix"),
                        "covariance must be (n*m) x (n*m) = " + std::to_string(d));
    return cov;
  }
  throw ConfigError(join(path, "kind"), "unknown covariance kind '" + kind + "'");
}

DriverSpec driver_spec(const json& v, const std::string& field) {
  DriverSpec d;
  std::string name;
  if (v.is_string()) {
    name = v.get<std::string>();
  } else if (v.is_object()) {
    name = string_value(require(v, "name", field), join(field, "name"));
    if (v.contains("df")) d.df = number(v["df"], join(field, "df"));
  } else {
    throw ConfigError(field, "'" + field + "' must be a name or {name, df}");
  }
  if (name == "rademacher") d.kind = Driver::rademacher;
  else if (name == "uniform") d.kind = Driver::uniform;
  else if (name == "centered_exponential") d.kind = Driver::centered_exponential;
  else if (name == "student_t") d.kind = Driver::student_t;
  else throw ConfigError(field, "unknown driver '" + name + "'");
  if (d.kind == Driver::student_t && !(d.df >= 4.0))
    throw ConfigError(join(field, "df"), "student_t needs df >= 4 for a finite B1");
  return d;
}

EnsembleSpec ensemble_spec(const json& v, const std::string& path) {
  if (!v.is_object()) throw ConfigError(path, "'" + path + "' must be an object");
  const std::string name = string_value(require(v, "name", path), join(path, "name"));
  const auto& shape = require(v, "shape", path);
  if (!shape.is_array() || shape.size() != 2)
    throw ConfigError(join(path, "shape"), "shape must be [n, m]");
  const auto n = static_cast<Eigen::Index>(unsigned_int(shape[0], join(path, "shape")));
  const auto m = static_cast<Eigen::Index>(unsigned_int(shape[1], join(path, "shape")));
  if (n < 1 || m < 1) throw ConfigError(join(path, "shape"), "shape entries must be >= 1");
  const Eigen::Index d = n * m;

  const std::string family = string_value(require(v, "family", path), join(path, "family"));
  EnsembleSpec spec;
  if (family == "gaussian") {
    spec = EnsembleSpec::gaussian(
        n, m, covariance_spec(require(v, "covariance", path), d, join(path, "covariance")),
        name);
  } else if (family == "iid") {
    spec = EnsembleSpec::iid(n, m, driver_spec(require(v, "driver", path), join(path, "driver")),
                             name);
  } else if (family == "linear_mix") {
    const DriverSpec drv = driver_spec(require(v, "driver", path), join(path, "driver"));
    Eigen::MatrixXd loadings;
    if (v.contains("loadings")) {
      loadings = matrix_value(v["loadings"], join(path, "loadings"));
      if (loadings.rows() != d)
        throw ConfigError(join(path, "loadings"), "loadings must have n*m rows");
    } else {
      const auto cov = covariance_spec(require(v, "covariance", path), d,
                                       join(path, "covariance"));
      try {
        loadings = covariance::factor(cov);
      } catch (const DomainError& e) {
        throw ConfigError(join(path, "covariance"), e.what());
      }
    }
    spec = EnsembleSpec::linear_mix(n, m, std::move(loadings), drv, name);
  } else {
    throw ConfigError(join(path, "family"), "unknown family '" + family + "'");
  }
  try {
    validate(spec);
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
  return spec;
}

ParamsPolicy params_policy(const json& v, const std::string& path) {
  if (!v.is_object()) throw ConfigError(path, "'" + path + "' must be an object");
  ParamsPolicy p;
  if (v.contains("rule")) {
    const std::string rule = string_value(v["rule"], join(path, "rule"));
    if (rule == "remark1") {
      p.rule = ParamsPolicy::Rule::remark1;
      p.tau = positive(require(v, "tau", path), join(path, "tau"));
    } else if (rule == "optimize") {
      p.rule = ParamsPolicy::Rule::optimize;
      p.threshold_cap = positive(require(v, "threshold_cap", path), join(path, "threshold_cap"));
    } else if (rule == "fixed") {
      p.rule = ParamsPolicy::Rule::fixed;
    } else {
      throw ConfigError(join(path, "rule"), "unknown params rule '" + rule + "'");
    }
    if (p.rule != ParamsPolicy::Rule::fixed) return p;
  }
  p.beta = positive(require(v, "beta", path), join(path, "beta"));
  p.delta = positive(require(v, "delta", path), join(path, "delta"));
  p.tau = positive(require(v, "tau", path), join(path, "tau"));
  if (!(p.tau * p.beta * (1.0 + p.delta) > 1.0))
    throw ConfigError(join(path, "tau"), "need tau > 1/(beta (1 + delta)), got tau*phi = " +
                                             std::to_string(p.tau * p.beta * (1.0 + p.delta)));
  return p;
}

void check_policy_for_shape(const ParamsPolicy& p, const EnsembleSpec& e,
                            const std::string& path) {
  if (p.rule == ParamsPolicy::Rule::remark1 && e.dim() < 2)
    throw ConfigError(join(path, "rule"),
                      "remark1 needs n*m >= 2 (ensemble '" + e.name + "' is 1x1)");
}

}  // namespace

RunConfig parse_config(const json& doc, bool require_ensembles) {
  if (!doc.is_object()) throw ConfigError("config", "config must be a JSON object");
  static const std::set<std::string> known{"ensembles", "params", "C",       "budgets",
                                           "grid",      "output", "pairs",   "scenarios"};
  for (const auto& [key, _] : doc.items())
    if (!known.count(key)) throw ConfigError(key, "unknown top-level key '" + key + "'");

  RunConfig cfg;
  if (require_ensembles || doc.contains("ensembles")) {
    const auto& arr = require(doc, "ensembles", "");
    if (!arr.is_array() || arr.empty())
      throw ConfigError("ensembles", "ensembles must be a nonempty array");
    std::set<std::string> names;
    for (std::size_t k = 0; k < arr.size(); ++k) {
      cfg.ensembles.push_back(ensemble_spec(arr[k], "ensembles[" + std::to_string(k) + "]"));
      if (!names.insert(cfg.ensembles.back().name).second)
        throw ConfigError("ensembles[" + std::to_string(k) + "].name",
                          "duplicate ensemble name '" + cfg.ensembles.back().name + "'");
    }
  }
  if (require_ensembles || doc.contains("params"))
    cfg.params = params_policy(require(doc, "params", ""), "params");
  for (const auto& e : cfg.ensembles) check_policy_for_shape(cfg.params, e, "params");

  if (doc.contains("C")) {
    cfg.C = number(doc["C"], "C");
    if (cfg.C < 0.0) throw ConfigError("C", "C must be nonnegative");
  }

  if (doc.contains("budgets")) {
    const auto& b = doc["budgets"];
    if (!b.is_object()) throw ConfigError("budgets", "budgets must be an object");
    if (b.contains("samples")) cfg.budgets.samples = unsigned_int(b["samples"], "budgets.samples");
    if (b.contains("component_samples"))
      cfg.budgets.component_samples =
          unsigned_int(b["component_samples"], "budgets.component_samples");
    if (b.contains("seed")) cfg.budgets.seed = unsigned_int(b["seed"], "budgets.seed");
    if (b.contains("workers"))
      cfg.budgets.workers = static_cast<unsigned>(unsigned_int(b["workers"], "budgets.workers"));
    if (b.contains("t_nodes"))
      cfg.budgets.t_nodes = static_cast<int>(unsigned_int(b["t_nodes"], "budgets.t_nodes"));
    if (b.contains("stein_samples"))
      cfg.budgets.stein_samples = unsigned_int(b["stein_samples"], "budgets.stein_samples");
    if (cfg.budgets.samples < 2) throw ConfigError("budgets.samples", "samples must be >= 2");
    if (cfg.budgets.t_nodes < 1) throw ConfigError("budgets.t_nodes", "t_nodes must be >= 1");
  }

  if (doc.contains("grid")) {
    const auto& g = doc["grid"];
    if (!g.is_object()) throw ConfigError("grid", "grid must be an object");
    if (g.contains("quantile_levels"))
      cfg.grid.quantile_levels =
          static_cast<int>(unsigned_int(g["quantile_levels"], "grid.quantile_levels"));
    if (g.contains("random_intervals"))
      cfg.grid.random_intervals =
          static_cast<int>(unsigned_int(g["random_intervals"], "grid.random_intervals"));
    if (cfg.grid.quantile_levels < 1)
      throw ConfigError("grid.quantile_levels", "quantile_levels must be >= 1");
    if (g.contains("intervals")) {
      const auto& arr = g["intervals"];
      if (!arr.is_array() || arr.empty())
        throw ConfigError("grid.intervals", "intervals must be a nonempty array of [a, b]");
      std::vector<Interval> ivs;
      for (std::size_t k = 0; k < arr.size(); ++k) {
        const std::string f = "grid.intervals[" + std::to_string(k) + "]";
        const auto& iv = arr[k];
        if (!iv.is_array() || iv.size() != 2) throw ConfigError(f, f + " must be [a, b]");
        // null endpoints stand for -inf / +inf
        const double lo = iv[0].is_null() ? -std::numeric_limits<double>::infinity()
                                          : number(iv[0], f);
        const double hi = iv[1].is_null() ? std::numeric_limits<double>::infinity()
                                          : number(iv[1], f);
        if (!(lo <= hi)) throw ConfigError(f, f + " needs a <= b");
        ivs.push_back({lo, hi});
      }
      cfg.grid.explicit_intervals = std::move(ivs);
    }
  }

  if (doc.contains("output")) {
    const auto& o = doc["output"];
    if (!o.is_object()) throw ConfigError("output", "output must be an object");
    if (o.contains("dir")) cfg.output_dir = string_value(o["dir"], "output.dir");
  }

  auto check_name = [&](const json& v, const std::string& field) {
    const std::string name = string_value(v, field);
    for (const auto& e : cfg.ensembles)
      if (e.name == name) return name;
    throw ConfigError(field, "unknown ensemble '" + name + "'");
  };
  auto check_shapes = [&](const std::string& a, const std::string& b, const std::string& f) {
    const auto &ea = cfg.ensemble(a), &eb = cfg.ensemble(b);
    if (ea.n != eb.n || ea.m != eb.m)
      throw ConfigError(f, "ensembles '" + a + "' and '" + b + "' have different shapes");
  };

  if (doc.contains("pairs")) {
    const auto& arr = doc["pairs"];
    if (!arr.is_array()) throw ConfigError("pairs", "pairs must be an array of [a, b]");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const std::string f = "pairs[" + std::to_string(k) + "]";
      if (!arr[k].is_array() || arr[k].size() != 2) throw ConfigError(f, f + " must be [a, b]");
      cfg.pairs.emplace_back(check_name(arr[k][0], f), check_name(arr[k][1], f));
      check_shapes(cfg.pairs.back().first, cfg.pairs.back().second, f);
    }
  } else if (!cfg.ensembles.empty()) {
    if (cfg.ensembles.size() == 1)
      cfg.pairs.emplace_back(cfg.ensembles[0].name, cfg.ensembles[0].name);
    for (std::size_t k = 1; k < cfg.ensembles.size(); ++k) {
      cfg.pairs.emplace_back(cfg.ensembles[0].name, cfg.ensembles[k].name);
      check_shapes(cfg.pairs.back().first, cfg.pairs.back().second, "pairs");
    }
  }

  if (doc.contains("scenarios")) {
    cfg.has_scenarios = true;
    const auto& arr = doc["scenarios"];
    if (!arr.is_array()) throw ConfigError("scenarios", "scenarios must be an array");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const std::string f = "scenarios[" + std::to_string(k) + "]";
      ScenarioConfig sc;
      sc.a = check_name(require(arr[k], "a", f), join(f, "a"));
      sc.b = check_name(require(arr[k], "b", f), join(f, "b"));
      check_shapes(sc.a, sc.b, f);
      sc.name = arr[k].contains("name") ? string_value(arr[k]["name"], join(f, "name"))
                                        : sc.a + "_vs_" + sc.b;
      if (arr[k].contains("params")) {
        sc.params = params_policy(arr[k]["params"], join(f, "params"));
        check_policy_for_shape(*sc.params, cfg.ensemble(sc.a), join(f, "params"));
      }
      cfg.scenarios.push_back(std::move(sc));
    }
  }
  return cfg;
}

BoundParams resolve_params(const ParamsPolicy& policy, Eigen::Index n, Eigen::Index m,
                           double C, const BoundComponents& comps, bool gaussian,
                           OptimizedParams* trace) {
  switch (policy.rule) {
    case ParamsPolicy::Rule::fixed:
      return {policy.beta, policy.delta, policy.tau, C};
    case ParamsPolicy::Rule::remark1: {
      const SmoothingParams sp = log_nm_parameters(n, m, policy.tau);
      return {sp.beta(), sp.delta(), policy.tau, C};
    }
    case ParamsPolicy::Rule::optimize: {
      const auto opt = optimize_parameters(comps, n, m, C, policy.threshold_cap, gaussian);
      if (trace) *trace = opt;
      if (!opt.feasible)
        throw ConfigError("params.threshold_cap",
                          "threshold cap is infeasible; smallest achievable threshold is " +
                              std::to_string(opt.min_threshold));
      return {opt.beta, opt.delta, opt.tau, C};
    }
  }
  throw ConfigError("params.rule", "unknown rule");
}

}  // namespace mmc
