#pragma once

#include "loopgas/chain.hpp"

#include <span>
#include <string>
#include <vector>

namespace loopgas {

struct MeanError {
  double mean = 0.0;
  double std_error = 0.0;
  long n = 0;
};

// Batch-means estimate over a time-ordered series. Needs at least `batches` samples.
MeanError batch_means(std::span<const double> series, int batches = 16);

// Classical configuration: points per type.
using ClassicalConfig = std::vector<std::vector<Point>>;

struct KernelEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long n_samples = 0;
  int slices_per_beta = 0;
  double half_side = 0.0;
  int k_max = 0;
  std::uint64_t seed = 0;
  double truncation_bound = 0.0;  // bound on the weight dropped by k <= k_max, per path
  bool insufficient = false;      // budget below the batch minimum
  std::string note;

  // Statistical error combined with the truncation bound.
  double combined_error() const;
};

struct KernelBudget {
  long outer_samples = 256;   // background configurations (also batch-means series length)
  int inner_samples = 16;     // path draws per background configuration
  long burn_in_sweeps = 200;
  long sweeps_between = 2;
  int batches = 16;
  std::uint64_t seed = 1;
  SamplerSettings sampler;
  bool chi_enabled = true;            // false: diagnostic mode dropping chi and the emptiness condition
  bool continuous_confinement = false;  // weight by the continuous-time stay probability
};

// Reduced density matrix kernel of the interacting gas at (x0, y0) in box0, conditioned
// on the external configuration.
KernelEstimate estimate_kernel_F(const ClassicalConfig& x0, const ClassicalConfig& y0, const ModelParams& m,
                                 const Box& home, const Box& box0, const ExternalCC* ext, const KernelBudget& budget);

// Free reference kernel with only the chi indicator.
KernelEstimate estimate_Q(const ClassicalConfig& x0, const ClassicalConfig& y0, const ModelParams& m,
                          const Box& box0, const KernelBudget& budget);

struct DensityEstimate {
  std::vector<MeanError> density;                    // per type, anchors per unit volume
  std::vector<std::vector<double>> k_histogram;      // per type, mean anchors per volume by k (index k-1)
  std::vector<std::vector<double>> k_histogram_err;
  MeanError total;
  bool near_boundary = false;
  long samples = 0;
};

struct StreamBudget {
  long samples = 2000;
  long burn_in_sweeps = 500;
  long sweeps_between = 5;
  int batches = 16;
};

DensityEstimate estimate_density(LoopChain& chain, const Box& window, const StreamBudget& budget);

// Fraction of samples in which some type has K(loops anchored in box0) >= k0, for each k0.
std::vector<MeanError> estimate_K_tail(LoopChain& chain, const Box& box0, const std::vector<int>& k0,
                                       const StreamBudget& budget);

struct ShiftReport {
  std::vector<MeanError> density_a, density_b, difference;
  std::vector<std::vector<double>> histogram_a, histogram_b;  // per type, mean counts by k
  bool pass = false;
  double sigma_threshold = 3.0;
  long samples = 0;
  std::string label = "empirical consistency check (finite volume), not a proof of shift invariance";
};

// Throws std::domain_error if either window lacks the margin R + 3 sqrt(beta) inside the home box.
ShiftReport shift_invariance_probe(const ModelParams& m, const Box& home, const Box& box0, const Point& shift,
                                   const SamplerSettings& sampler, const StreamBudget& budget, std::uint64_t seed,
                                   const ExternalCC* ext = nullptr);

// Probability that a bridge x -> y of duration k beta avoids box0 at all intermediate
// integer times, estimated by sampling only the integer-time marginals.
double chi_survival_mc(const Point& x, const Point& y, int k, const Box& box0, double beta, long draws, Rng& rng,
                       double* std_error = nullptr);

}  // namespace loopgas
