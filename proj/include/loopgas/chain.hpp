#pragma once

#include "loopgas/loopgas.hpp"
#include "loopgas/space.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>

namespace loopgas {

struct SamplerSettings {
  int slices_per_beta = 32;
  int k_max = 20;
  // Relative frequencies of insert/delete, merge/split and wiggle moves.
  double mix_insert_delete = 4.0;
  double mix_swap = 2.0;
  double mix_wiggle = 4.0;
  int moves_per_sweep = 20;
  int max_loops = -1;       // negative: unbounded
  int audit_interval = 0;   // sweeps between cache audits; 0 disables
  bool confine = true;      // enforce the grid confinement indicator on the home box
};

struct MoveStats {
  long attempted = 0;
  long accepted = 0;
  double rate() const { return attempted ? static_cast<double>(accepted) / attempted : 0.0; }
};

enum class Move { insert_delete = 0, swap = 1, wiggle = 2 };

// Grand-canonical Metropolis-Hastings chain for the finite-volume loop gas.
class LoopChain {
 public:
  LoopChain(const ModelParams& m, Box home, SamplerSettings settings, std::uint64_t seed,
            std::optional<ExternalCC> external = std::nullopt, std::shared_ptr<const PathSpace> space = nullptr);

  bool update_insert_delete();
  bool update_swap();
  bool update_wiggle();
  bool step();   // one move drawn from the mix
  void sweep();  // settings.moves_per_sweep moves, plus the periodic audit
  void run(long sweeps);

  const LoopConfig& config() const { return config_; }
  const ModelParams& model() const { return model_; }
  const SamplerSettings& settings() const { return settings_; }
  const PathSpace& space() const { return *space_; }
  Rng& rng() { return rng_; }
  long sweeps_done() const { return sweeps_; }
  const MoveStats& stats(Move m) const { return stats_[static_cast<int>(m)]; }

  double energy() const { return energy_; }
  int K(int type) const { return k_sum_[type]; }
  double log_L(int type) const { return log_l_[type]; }

  // Recompute h, K and L from scratch and reset the caches; returns the relative energy drift.
  double audit();
  double max_audit_drift() const { return max_drift_; }

  // Replace the state (used by tests enumerating small state spaces).
  void set_loops(std::vector<Loop> loops);

  void save_checkpoint(std::ostream& os) const;
  void load_checkpoint(std::istream& is);

 private:
  double path_energy(const BridgePath& p, int type, std::initializer_list<std::size_t> skip) const;
  bool inside(const PathSamples& nodes, Index first, Index last) const;
  void add_loop(Loop l);
  void remove_loop(std::size_t i);
  int draw_k_and_type(int& type);
  double log_proposal(int type, int k) const;

  ModelParams model_;
  SamplerSettings settings_;
  std::shared_ptr<const PathSpace> space_;
  LoopConfig config_;
  Rng rng_;
  bool interacting_;
  long sweeps_ = 0;
  std::array<MoveStats, 3> stats_{};
  double energy_ = 0.0;
  std::vector<int> k_sum_;
  std::vector<double> log_l_;
  double max_drift_ = 0.0;
  // Insert proposal over (type, k), proportional to z^k / k * reference mass.
  std::vector<double> prop_cum_, prop_log_;
};

}  // namespace loopgas
