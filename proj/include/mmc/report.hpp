#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mmc/bounds.hpp"
#include "mmc/empirical.hpp"
#include "mmc/stein.hpp"
#include "mmc/strassen.hpp"

namespace mmc {

inline constexpr const char* kVersion = "0.1.0";

/// One named invariant check: measured value against a bound.
struct CheckResult {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
};

nlohmann::json to_json(const Estimate& e);
nlohmann::json to_json(const BoundParams& p);
nlohmann::json to_json(const BoundReport& r);
nlohmann::json to_json(const OptimizedParams& o);
nlohmann::json to_json(const GapReport& r, bool include_rows = true);
nlohmann::json to_json(const CalibrationResult& c);
nlohmann::json to_json(const CheckResult& c);
nlohmann::json to_json(const std::vector<CheckResult>& checks);

/// Header a,b,mu_hat,nu_enlarged_hat,gap,se; infinite endpoints as -inf/inf.
std::string gap_csv(const std::vector<GapRow>& rows);

/// FNV-1a 64 of the compact dump, as 16 hex digits. nlohmann::json keeps
/// object keys sorted, so the dump is canonical.
std::string config_hash(const nlohmann::json& config);

nlohmann::json manifest(const std::string& command, const nlohmann::json& config,
                        const nlohmann::json& seeds, const std::vector<std::string>& outputs);

/// Writes text to dir/name, creating dir.
void write_text(const std::string& dir, const std::string& name, const std::string& text);

}  // namespace mmc
