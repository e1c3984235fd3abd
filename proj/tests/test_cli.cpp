#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mmc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const json& j, const std::string& name = "config.json") {
    const fs::path p = dir_ / name;
    std::ofstream(p) << j.dump(2);
    return p;
  }

  CliRun run(const std::string& args) {
    const fs::path o = dir_ / "stdout.txt", e = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + MMC_CLI_PATH + "\" " + args + " > \"" +
                            o.string() + "\" 2> \"" + e.string() + "\"";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
  }

  fs::path dir_;
};

json gaussian(const std::string& name, int n, int m, json cov) {
  return {{"name", name}, {"shape", {n, m}}, {"family", "gaussian"}, {"covariance", cov}};
}

json small_config(const fs::path& out) {
  return {{"ensembles",
           {gaussian("a", 4, 4, {{"kind", "identity"}}),
            gaussian("b", 4, 4, {{"kind", "identity"}})}},
          {"params", {{"rule", "remark1"}, {"tau", 1.0}}},
          {"C", 1.0},
          {"budgets", {{"samples", 4000}, {"component_samples", 2000}, {"seed", 3}}},
          {"grid", {{"quantile_levels", 9}, {"random_intervals", 4}}},
          {"output", {{"dir", out.string()}}}};
}

}  // namespace

TEST_F(CliTest, MissingFieldNamesIt) {
  json cfg = small_config(dir_ / "out");
  cfg["ensembles"][1].erase("shape");
  const auto r = run("bound --config " + write_config(cfg).string());
  EXPECT_EQ(r.code, 2);
  const json err = json::parse(r.err);
  EXPECT_EQ(err["error"], "config");
  EXPECT_EQ(err["field"], "ensembles[1].shape");
}

TEST_F(CliTest, UnknownTopLevelKey) {
  json cfg = small_config(dir_ / "out");
  cfg["extras"] = 1;
  const auto r = run("bound --config " + write_config(cfg).string());
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json::parse(r.err)["field"], "extras");
}

TEST_F(CliTest, TauBelowConstraintIsConfigError) {
  json cfg = small_config(dir_ / "out");
  cfg["params"] = {{"beta", 1.0}, {"delta", 1.0}, {"tau", 0.5}};
  const auto r = run("bound --config " + write_config(cfg).string());
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json::parse(r.err)["field"], "params.tau");
}

TEST_F(CliTest, CalibrateWithoutScenarios) {
  json cfg = small_config(dir_ / "out");
  cfg["scenarios"] = json::array();
  auto r = run("calibrate --config " + write_config(cfg).string());
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json::parse(r.err)["field"], "scenarios");
  cfg.erase("scenarios");
  r = run("calibrate --config " + write_config(cfg).string());
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, MissingConfigFile) {
  const auto r = run("simulate --config " + (dir_ / "nope.json").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json::parse(r.err)["field"], "config");
}

TEST_F(CliTest, BoundLogNmParameters) {
  const auto r = run("bound --config " + write_config(small_config(dir_ / "out")).string());
  ASSERT_EQ(r.code, 0) << r.err;
  const json b = json::parse(slurp(dir_ / "out" / "bound_a_vs_b.json"));
  EXPECT_NEAR(b["params"]["beta"].get<double>(), std::log(16.0), 1e-12);
  EXPECT_NEAR(b["params"]["beta"].get<double>(), 2.7726, 1e-4);
  // equal Gaussian covariances: B3 = 0, the bound is eps / (1 - eps)
  const double eps = b["epsilon"].get<double>();
  EXPECT_NEAR(b["rhs_gaussian"].get<double>(), eps / (1 - eps), 1e-15);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "manifest.json"));
}

TEST_F(CliTest, OverridesReachTheManifest) {
  const auto r = run("bound --config " + write_config(small_config(dir_ / "out")).string() +
                     " --out " + (dir_ / "other").string() + " --seed 11 --C 0.5 --samples 3000");
  ASSERT_EQ(r.code, 0) << r.err;
  const json m = json::parse(slurp(dir_ / "other" / "manifest.json"));
  EXPECT_EQ(m["command"], "bound");
  EXPECT_EQ(m["config"]["budgets"]["seed"], 11);
  EXPECT_EQ(m["config"]["C"], 0.5);
  EXPECT_EQ(m["config"]["budgets"]["samples"], 3000);
  EXPECT_EQ(m["config_hash"].get<std::string>().size(), 16u);
}

TEST_F(CliTest, SimulateIsByteIdenticalOnRerun) {
  const auto cfg = write_config(small_config(dir_ / "out"));
  ASSERT_EQ(run("simulate --config " + cfg.string()).code, 0);
  const std::string csv = slurp(dir_ / "out" / "gap_a_vs_b.csv");
  const std::string js = slurp(dir_ / "out" / "gap_a_vs_b.json");
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --workers 3").code, 0);
  EXPECT_EQ(slurp(dir_ / "out" / "gap_a_vs_b.csv"), csv);
  EXPECT_EQ(slurp(dir_ / "out" / "gap_a_vs_b.json"), js);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "a,b,mu_hat,nu_enlarged_hat,gap,se");
  const json m = json::parse(slurp(dir_ / "out" / "manifest.json"));
  EXPECT_EQ(m["command"], "simulate");
  EXPECT_EQ(m["outputs"], json({"gap_a_vs_b.json", "gap_a_vs_b.csv", "manifest.json"}));
}

TEST_F(CliTest, CalibrateWritesResult) {
  json cfg = small_config(dir_ / "out");
  cfg["scenarios"] = {{{"name", "same"}, {"a", "a"}, {"b", "b"}}};
  const auto r = run("calibrate --config " + write_config(cfg).string());
  ASSERT_EQ(r.code, 0) << r.err;
  const json c = json::parse(slurp(dir_ / "out" / "calibration.json"));
  EXPECT_EQ(c["C_star"], 0.0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "calibration_a_vs_b.csv"));
}

TEST_F(CliTest, VerifyPasses) {
  const auto r = run("verify --out " + (dir_ / "v").string());
  EXPECT_EQ(r.code, 0) << r.out;
  const json v = json::parse(slurp(dir_ / "v" / "verify.json"));
  EXPECT_TRUE(v["all_pass"].get<bool>());
  EXPECT_TRUE(fs::exists(dir_ / "v" / "manifest.json"));
}

TEST_F(CliTest, ShippedConfigParses) {
  json cfg = json::parse(slurp(fs::path(MMC_SOURCE_DIR) / "configs" / "equicorrelated_8x8.json"));
  cfg["budgets"]["samples"] = 2000;
  cfg["budgets"]["component_samples"] = 1000;
  cfg["output"]["dir"] = (dir_ / "eq").string();
  const auto r = run("bound --config " + write_config(cfg).string());
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "eq" / "bound_identity_vs_equi_0.1.json"));
}
