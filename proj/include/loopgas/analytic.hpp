#pragma once

#include "loopgas/bridge.hpp"
#include "loopgas/model.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace loopgas {

struct SeriesResult {
  double value = 0.0;
  int truncation_k = 0;
  double tail_bound = 0.0;
};

// sum_{k>=1} z^k k^a (2 pi beta k)^{-d/2}, with a certified tail below `tol`.
SeriesResult theta(int a, double z, int d, double beta, double tol = 1e-12);
SeriesResult theta(int a, double z, const ModelParams& m, double tol = 1e-12);

// sum_k z^k (2 pi beta k)^{-d/2} exp(-|x-y|^2 / (2 beta k)).
SeriesResult free_kernel(const Point& x, const Point& y, double z, double beta, double tol = 1e-12);
SeriesResult free_kernel(const Point& x, const Point& y, const ModelParams& m, int type = 0, double tol = 1e-12);

// Per-type external counts as a function of the box half-side L.
using CountFamily = std::function<std::vector<double>(double L)>;

struct BResult {
  double value = 0.0;
  double argmax_L = 0.0;
  bool unbounded_on_grid = false;  // supremum sits at the grid edge and is still rising
};

BResult b_of_c(const CountFamily& counts, double c, const ModelParams& m, const std::vector<double>& L_grid);

// exp(vol(box0) * sum_j z_j / (1 - z_j)).
double hs_bound(const Box& box0, const ModelParams& m);

struct AConstants {
  double a1 = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0;
};

// The four gradient bound constants. The per-type index j of the displays is maximized over.
// `vbar1` overrides the value derived from the potentials when given.
AConstants a_constants(const std::vector<int>& n, const Box& box0, const ModelParams& m, const TailFit& fit,
                       double b_value, std::optional<double> vbar1 = std::nullopt);

// The c argument of B paired with A4: (R + L0 + dist(0, box0))^2.
double a4_c_argument(const Box& box0, const ModelParams& m);

double tightness_bound(int k0, const Box& box0, const ModelParams& m);

// sum_{n=1}^{n_terms} exp(-beta/2 (n pi / (2L))^2).
double dirichlet_trace_series(double half_side, double beta, int n_terms = 10);
double dirichlet_trace_series(double half_side, const ModelParams& m, int n_terms = 10);

}  // namespace loopgas
