#pragma once

#include "loopgas/model.hpp"
#include "loopgas/types.hpp"

#include <vector>

namespace loopgas {

// Discretized Brownian bridge of duration k*beta sampled at k*S+1 equally spaced times.
struct BridgePath {
  int k = 1;
  int slices_per_beta = 32;
  PathSamples samples;

  int dim() const { return static_cast<int>(samples.rows()); }
  Index node_count() const { return samples.cols(); }
  Index last() const { return samples.cols() - 1; }
  Point start() const { return samples.col(0); }
  Point end() const { return samples.col(samples.cols() - 1); }
  Point at(Index i) const { return samples.col(i); }
};

// Mass of the non-normalized bridge measure: (2 pi beta k)^{-d/2} exp(-|x-y|^2 / (2 k beta)).
double gaussian_mass(const Point& x, const Point& y, int k, double beta);
double log_gaussian_mass(const Point& x, const Point& y, int k, double beta);
double gaussian_mass(const Point& x, const Point& y, int k, const ModelParams& m);

// Levy midpoint construction; every grid point has the exact bridge law.
BridgePath sample_bridge(const Point& x, const Point& y, int k, int slices_per_beta, double beta, Rng& rng);

// Resample nodes strictly between `first` and `last` as a bridge between the two fixed
// endpoint nodes; `dt` is the time step between adjacent nodes.
void fill_bridge(PathSamples& nodes, Index first, Index last, double dt, Rng& rng);

// Probability that a 1-D bridge from u to v over time tau never leaves [lo, hi].
// Zero if either endpoint is outside.
double bridge_stay_probability(double u, double v, double lo, double hi, double tau);

// Product of per-interval stay probabilities over all coordinates and grid intervals
// of nodes[first..last]: the continuous-time confinement probability given the grid.
double confinement_probability(const PathSamples& nodes, Index first, Index last, double dt, const Box& box);

// Grid check plus one Bernoulli draw per interval for a crossing between grid points
// of the interval [center - a, center + a] in coordinate `coord`.
bool exceeds_continuous(const PathSamples& nodes, int coord, Index first, Index last, double center,
                        double a, double dt, Rng& rng);

// P(sup_{0<=t<=beta} |w(t) - x| > a) for a 1-D bridge from x to x + displacement over k*beta.
// Throws std::runtime_error if the series fails to converge.
double bridge_max_tail(double a, int k, double displacement, double beta);
double bridge_max_tail(double a, int k, double displacement, const ModelParams& m);

struct TailFit {
  double c0 = 0.0;
  double c1 = 0.0;
  std::vector<double> a_grid;
  std::vector<double> tails;      // envelope of escape probabilities per grid point
  std::vector<double> residuals;  // tail - c0 exp(-c1 a^2), all <= 0 on success
};

// Fit c0 exp(-c1 a^2) above the bridge escape probabilities: the loop case
// measured from the anchor and the pinned case with both ends in `box`, over k <= k_max.
// Throws std::runtime_error when the tails do not decay on the grid.
TailFit lemma21_fit(const ModelParams& m, const Box& box, int k_max, const std::vector<double>& a_grid);

// Continuity-modulus diagnostic: largest increment over windows of time eps, divided by
// sqrt(2 k0 beta eps ln(1/eps)).
double continuity_modulus_ratio(const BridgePath& path, double beta, double eps, int k0);

}  // namespace loopgas
