#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mmc/bounds.hpp"
#include "mmc/empirical.hpp"
#include "mmc/ensembles.hpp"

namespace mmc {

/// How (beta, delta, tau) are chosen for a given shape.
struct ParamsPolicy {
  enum class Rule { fixed, remark1, optimize };
  Rule rule = Rule::fixed;
  double beta = 1.0;
  double delta = 1.0;
  double tau = 1.0;
  double threshold_cap = 0.0;  // optimize only
};

struct Budgets {
  std::size_t samples = 100000;
  std::size_t component_samples = 0;  // 0: same as samples
  std::uint64_t seed = 1;
  unsigned workers = 0;
  int t_nodes = 32;
  std::size_t stein_samples = 200000;
};

struct ScenarioConfig {
  std::string name;
  std::string a;
  std::string b;
  std::optional<ParamsPolicy> params;
};

struct RunConfig {
  std::vector<EnsembleSpec> ensembles;
  ParamsPolicy params;
  double C = 1.0;
  Budgets budgets;
  GridSpec grid;
  std::string output_dir = "out";
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<ScenarioConfig> scenarios;
  bool has_scenarios = false;

  const EnsembleSpec& ensemble(const std::string& name) const;
};

/// Command-line values that take precedence over the file.
struct Overrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<double> C;
  std::optional<std::size_t> samples;
};

/// Applies overrides to the raw document so the manifest records what ran.
nlohmann::json apply_overrides(nlohmann::json doc, const Overrides& ov);

/// Schema validation plus constraint checks. `require_ensembles` is false
/// for verify, which runs on built-in cases. Throws ConfigError naming the
/// offending field.
RunConfig parse_config(const nlohmann::json& doc, bool require_ensembles = true);

nlohmann::json load_json_file(const std::string& path);

/// Resolves a policy for one shape. `optimize` needs the components.
BoundParams resolve_params(const ParamsPolicy& policy, Eigen::Index n, Eigen::Index m,
                           double C, const BoundComponents& comps, bool gaussian,
                           OptimizedParams* trace = nullptr);

}  // namespace mmc
