#pragma once

#include "loopgas/chain.hpp"
#include "loopgas/estimators.hpp"
#include "loopgas/model.hpp"
#include "loopgas/oracle.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace loopgas {

// Schema violation; `key_path` looks like "model.z[0]".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key_path, const std::string& reason);
  const std::string& key_path() const { return path_; }

 private:
  std::string path_;
};

enum class Experiment {
  free_validate,
  kernel,
  q_kernel,
  density,
  k_tail,
  shift_invariance,
  bridge_laws,
  analytic,
  oracle,
  b_condition
};

const std::vector<std::string>& experiment_names();
std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);

struct ExternalSpec {
  enum class Kind { none, lattice, scatter, points } kind = Kind::none;
  double spacing = 1.0;
  int per_type = 0;
  std::vector<std::vector<Point>> points;
};

struct OracleSpec {
  int sites = 4;
  double spacing = 1.0;
  std::vector<int> n_max;  // per type; defaults to 2
  std::vector<int> inner{1};
  std::vector<int> middle{1, 2};
  LatticeBoundary boundary = LatticeBoundary::free_ends;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::analytic;
  std::uint64_t seed = 1;
  ModelParams model;

  // geometry
  double L = 6.0;          // home box half-side
  double L0 = 0.5;         // box0 half-side
  double window = 0.0;     // density window half-side; 0 means L0
  std::vector<double> shift;  // shift-invariance displacement; defaults to (2 L0, 0, ...)

  // sampler
  SamplerSettings sampler;
  long burn_in = 500;
  long sweeps_between = 5;
  long samples = 2000;
  int chains = 1;
  int batches = 16;

  // kernel
  ClassicalConfig x, y;  // per type; defaults to one type-0 point at the origin
  int inner_samples = 16;
  bool chi = true;
  bool continuous_confinement = false;

  ExternalSpec external;

  // experiment parameters
  std::vector<int> k0{4, 9, 16};
  std::vector<double> thresholds{0.5, 1.0, 1.5};
  long draws = 100000;
  OracleSpec oracle;
  double b_c = 1.0;
  std::string b_counts = "ceil";  // ceil | linear | zero | lattice
  std::vector<double> b_grid;     // defaults to 1, 1.5, ..., 10

  // output
  std::filesystem::path out_dir = "loopgas_out";
  bool checkpoint = false;

  // Normalized JSON of every field above; parse_config(echo) reproduces this config.
  std::string echo;
};

// Strict parse of a JSON document. Throws ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::filesystem::path& path);

struct ResultRow {
  std::string quantity;
  std::string params;
  double value = 0.0;
  double std_error = 0.0;
  long n_samples = 0;
};

struct ExperimentOutcome {
  std::vector<ResultRow> rows;
  std::optional<bool> verdict;  // empty for experiments without a built-in threshold
  std::vector<std::string> notes;
  std::optional<LoopChain> chain;  // last chain, for the optional checkpoint
};

ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

// results.csv, summary.json and optionally chain.ckpt under cfg.out_dir.
void write_artifacts(const ExperimentConfig& cfg, const ExperimentOutcome& outcome, double wall_seconds,
                     const std::string& version);

// Rows as CSV text with the fixed header; values printed with %.17g.
std::string results_csv(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows);

}  // namespace loopgas
