#include "loopgas/config.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace loopgas;

namespace {

const char* kMinimal = R"({"experiment": "density", "model": {"z": [0.5]}})";

std::string error_path(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key_path();
  }
  return "<no error>";
}

std::string error_text(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "<no error>";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(ParseConfig, MinimalGetsDocumentedDefaults) {
  const auto c = parse_config(kMinimal);
  EXPECT_EQ(c.experiment, Experiment::density);
  EXPECT_EQ(c.sampler.slices_per_beta, 32);
  EXPECT_EQ(c.sampler.k_max, 20);
  EXPECT_EQ(c.model.d, 2);
  EXPECT_EQ(c.model.beta, 1.0);
  EXPECT_EQ(c.seed, 1u);
  EXPECT_FALSE(c.model.interacting());
  ASSERT_EQ(c.x.size(), 1u);
  EXPECT_EQ(c.x[0][0], Point::Zero(2));
}

TEST(ParseConfig, FugacityRangeViolationNamesKey) {
  EXPECT_EQ(error_path(R"({"experiment": "density", "model": {"z": [1.2]}})"), "model.z[0]");
  EXPECT_EQ(error_path(R"({"experiment": "density", "model": {"z": [0.5, 0.0]}})"), "model.z[1]");
}

TEST(ParseConfig, UnknownKeySuggestsNearest) {
  const std::string msg = error_text(R"({"experiment": "density", "modle": {"z": [0.5]}, "model": {"z": [0.5]}})");
  EXPECT_NE(msg.find("modle"), std::string::npos);
  EXPECT_NE(msg.find("'model'"), std::string::npos);
  EXPECT_NE(error_text(R"({"experiment": "density", "model": {"z": [0.5]}, "sampler": {"K_mx": 3}})").find("'K_max'"),
            std::string::npos);
  EXPECT_NE(error_text(R"({"experiment": "densty", "model": {"z": [0.5]}})").find("'density'"), std::string::npos);
}

TEST(ParseConfig, TypeAndShapeErrors) {
  EXPECT_EQ(error_path(R"({"experiment": "density", "model": {"z": [0.5], "d": 2.5}})"), "model.d");
  EXPECT_EQ(error_path(R"({"experiment": "density", "model": {"z": "0.5"}})"), "model.z");
  EXPECT_EQ(error_path(R"({"experiment": "density", "model": {"z": [0.5]}, "kernel": {"x": [[[0.0]]]}})"),
            "kernel.x[0][0]");
  EXPECT_EQ(error_path(R"({"model": {"z": [0.5]}})"), "experiment");
  EXPECT_EQ(error_path(R"({"experiment": "density", "model": {"z": [0.5],
      "potentials": [{"types": [0, 0], "kind": "hard_core", "diameter": 0.5, "height": 1.0}]}})"),
            "model.potentials[0].height");
  EXPECT_EQ(error_path(R"({"experiment": "density", "model": {"z": [0.5],
      "potentials": [{"types": [0, 1], "kind": "hard_core", "diameter": 0.5}]}})"),
            "model.potentials[0].types[1]");
  EXPECT_EQ(error_path("{not json"), "");
  EXPECT_EQ(error_path(R"({"experiment": "oracle", "model": {"z": [0.5]}, "oracle": {"inner": [3], "middle": [1]}})"),
            "oracle.inner[0]");
}

TEST(ParseConfig, EchoIsLossless) {
  const auto c = parse_config(R"({
    "experiment": "kernel", "seed": 18446744073709551615,
    "model": {"d": 2, "beta": 0.7, "z": [0.1, 0.30000000000000004],
      "potentials": [{"types": [0, 1], "kind": "hard_core", "diameter": 0.3},
                     {"types": [1, 1], "kind": "smooth_bump", "height": 0.25, "range": 1.1, "hard_core": 0.1},
                     {"types": [0, 0], "kind": "tabulated", "r": [0, 0.5, 1], "v": [1, 0.3, 0], "range": 1}]},
    "geometry": {"L": 5, "L0": 0.75, "shift": [0.5, -0.25]},
    "sampler": {"S": 8, "K_max": 7, "mix": {"swap": 0}, "confine": false, "chains": 3},
    "kernel": {"x": [[[0.1, 0.2]], [[0.0, 0.0]]], "y": [[[0.2, 0.1]], [[0.1, 0.1]]], "chi": false},
    "external": {"kind": "points", "points": [[[6.0, 0.0]]]},
    "output": {"dir": "somewhere", "checkpoint": true}
  })");
  const auto again = parse_config(c.echo);
  EXPECT_EQ(again.echo, c.echo);
  EXPECT_EQ(again.seed, 18446744073709551615ull);
  EXPECT_EQ(again.model.z[1], 0.30000000000000004);
  for (int j = 0; j < 2; ++j)
    for (int jp = 0; jp < 2; ++jp) EXPECT_TRUE(again.model.potential(j, jp) == c.model.potential(j, jp));
  EXPECT_EQ(again.sampler.mix_swap, 0.0);
  EXPECT_FALSE(again.sampler.confine);
  EXPECT_EQ(again.external.points[0][0], c.external.points[0][0]);
  EXPECT_EQ(again.out_dir, c.out_dir);
}

TEST(RunExperiment, FreeValidatePasses) {
  auto c = parse_config(R"({"experiment": "free-validate", "seed": 3, "model": {"z": [0.5]},
      "geometry": {"L": 27, "L0": 1}, "sampler": {"S": 8, "samples": 64, "burn_in": 0, "sweeps_between": 1},
      "kernel": {"inner_samples": 16}})");
  const auto out = run_experiment(c);
  ASSERT_TRUE(out.verdict.has_value());
  EXPECT_TRUE(*out.verdict);
  EXPECT_EQ(out.rows.size(), 4u);
}

TEST(RunExperiment, OracleCompatibilityPasses) {
  const auto c = parse_config(R"({"experiment": "oracle", "model": {"d": 1, "z": [0.4, 0.6],
      "potentials": [{"types": [0, 1], "kind": "hard_core", "diameter": 0.5}]},
      "oracle": {"sites": 4, "n_max": [2, 2]}})");
  const auto out = run_experiment(c);
  ASSERT_TRUE(out.verdict.has_value());
  EXPECT_TRUE(*out.verdict);
  EXPECT_LT(out.rows.back().value, 1e-12);
}

TEST(RunExperiment, ShiftMarginViolationThrows) {
  const auto c = parse_config(R"({"experiment": "shift-invariance", "model": {"z": [0.5]},
      "geometry": {"L": 3, "L0": 0.5, "shift": [2, 0]}})");
  EXPECT_THROW(run_experiment(c), std::domain_error);
}

TEST(RunExperiment, InfeasibleBudgetNamesResource) {
  const auto c = parse_config(R"({"experiment": "kernel", "model": {"z": [0.5]},
      "sampler": {"samples": 4}})");
  try {
    run_experiment(c);
    FAIL() << "expected an infeasible budget";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("budget"), std::string::npos);
  }
}

TEST(RunExperiment, SameSeedByteIdenticalCsv) {
  const char* text = R"({"experiment": "density", "seed": 9, "model": {"z": [0.5],
      "potentials": [{"types": [0, 0], "kind": "square_well", "height": 1, "range": 0.5}]},
      "geometry": {"L": 3, "L0": 1}, "sampler": {"S": 4, "K_max": 6, "samples": 64, "burn_in": 10,
      "sweeps_between": 1, "chains": 2}})";
  const auto a = parse_config(text), b = parse_config(text);
  const std::string ca = results_csv(a, run_experiment(a).rows);
  const std::string cb = results_csv(b, run_experiment(b).rows);
  EXPECT_EQ(ca, cb);
  EXPECT_EQ(ca.rfind("experiment,quantity,params,value,std_error,n_samples,seed\n", 0), 0u);
  auto other = parse_config(text);
  other.seed = 10;
  EXPECT_NE(results_csv(other, run_experiment(other).rows), ca);
}

TEST(WriteArtifacts, FilesAndSummary) {
  const auto dir = std::filesystem::temp_directory_path() / "loopgas_config_test";
  std::filesystem::remove_all(dir);
  nlohmann::json j = nlohmann::json::parse(R"({"experiment": "density", "seed": 4, "model": {"z": [0.5]},
      "geometry": {"L": 3, "L0": 1}, "sampler": {"S": 4, "K_max": 6, "samples": 32, "burn_in": 5,
      "sweeps_between": 1}, "output": {"checkpoint": true}})");
  j["output"]["dir"] = dir.string();
  const auto c = parse_config(j.dump());
  const auto out = run_experiment(c);
  write_artifacts(c, out, 0.5, "test-version");
  EXPECT_EQ(slurp(dir / "results.csv"), results_csv(c, out.rows));
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary["version"], "test-version");
  EXPECT_EQ(summary["seed"], 4);
  EXPECT_EQ(summary["wall_time_s"], 0.5);
  EXPECT_EQ(parse_config(summary["config"].dump()).echo, c.echo);
  ASSERT_TRUE(std::filesystem::exists(dir / "chain.ckpt"));
  std::ifstream ck(dir / "chain.ckpt");
  LoopChain restored(c.model, Box::centered(2, 3.0), c.sampler, 0);
  EXPECT_NO_THROW(restored.load_checkpoint(ck));
  EXPECT_EQ(restored.sweeps_done(), out.chain->sweeps_done());
  std::filesystem::remove_all(dir);
}
