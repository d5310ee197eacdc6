#include "loopgas/bridge.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace loopgas {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void bisect(PathSamples& nodes, Index first, Index last, double dt, Rng& rng) {
  if (last - first < 2) return;
  const Index mid = first + (last - first) / 2;
  const double left = static_cast<double>(mid - first), right = static_cast<double>(last - mid);
  const double span = left + right;
  const double sd = std::sqrt(left * right / span * dt);
  for (Index c = 0; c < nodes.rows(); ++c)
    nodes(c, mid) = (right * nodes(c, first) + left * nodes(c, last)) / span + sd * rng.normal();
  bisect(nodes, first, mid, dt, rng);
  bisect(nodes, mid, last, dt, rng);
}

// Single-step Skorohod series, normalized by the bridge mass.
double tail_one_leg(double a, double w, double beta) {
  if (std::abs(w) >= a) return 1.0;
  double sum = 0.0;
  for (int l = 1;; ++l) {
    const double s = 2.0 * l * a;
    const double pair = std::exp(-((w - s) * (w - s) - w * w) / (2.0 * beta)) +
                        std::exp(-((w + s) * (w + s) - w * w) / (2.0 * beta));
    sum += (l % 2 == 1) ? pair : -pair;
    if (pair < 1e-14) break;
    if (l > 1000000) throw std::runtime_error("bridge_max_tail: Skorohod series did not converge");
  }
  return std::clamp(sum, 0.0, 1.0);
}

double heat(double x, double t) { return std::exp(-x * x / (2.0 * t)) / std::sqrt(kTwoPi * t); }

}  // namespace

double log_gaussian_mass(const Point& x, const Point& y, int k, double beta) {
  const double t = k * beta;
  return -0.5 * x.size() * std::log(kTwoPi * t) - (x - y).squaredNorm() / (2.0 * t);
}

double gaussian_mass(const Point& x, const Point& y, int k, double beta) {
  return std::exp(log_gaussian_mass(x, y, k, beta));
}

double gaussian_mass(const Point& x, const Point& y, int k, const ModelParams& m) {
  return gaussian_mass(x, y, k, m.beta);
}

void fill_bridge(PathSamples& nodes, Index first, Index last, double dt, Rng& rng) {
  bisect(nodes, first, last, dt, rng);
}

BridgePath sample_bridge(const Point& x, const Point& y, int k, int slices_per_beta, double beta, Rng& rng) {
  if (k < 1 || slices_per_beta < 1) throw std::invalid_argument("sample_bridge: k and S must be >= 1");
  if (x.size() != y.size()) throw std::invalid_argument("sample_bridge: endpoint dimensions differ");
  BridgePath p;
  p.k = k;
  p.slices_per_beta = slices_per_beta;
  const Index n = static_cast<Index>(k) * slices_per_beta;
  p.samples.resize(x.size(), n + 1);
  p.samples.col(0) = x;
  p.samples.col(n) = y;
  bisect(p.samples, 0, n, beta / slices_per_beta, rng);
  return p;
}

double bridge_stay_probability(double u, double v, double lo, double hi, double tau) {
  if (u < lo || u > hi || v < lo || v > hi) return 0.0;
  const double w = hi - lo;
  const double up = u - lo, vp = v - lo;
  // Cheap exit: even a single crossing is astronomically unlikely.
  const double du = std::min(up, w - up), dv = std::min(vp, w - vp);
  if (2.0 * du * dv / tau > 40.0) return 1.0;
  if (du == 0.0 || dv == 0.0) return 0.0;
  const double delta = vp - up;
  double sum = 1.0 - std::exp(-2.0 * up * vp / tau);
  for (int n = 1;; ++n) {
    double term = 0.0;
    for (int s : {n, -n}) {
      const double nw = s * w;
      term += std::exp(-2.0 * nw * (delta + nw) / tau) - std::exp(-2.0 * (up + nw) * (vp + nw) / tau);
    }
    sum += term;
    // Every later term is below exp(-2 n w (n w - w) / tau).
    if (2.0 * n * w * (n * w - w) / tau > 80.0 || n > 100000) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double confinement_probability(const PathSamples& nodes, Index first, Index last, double dt, const Box& box) {
  double p = 1.0;
  for (Index c = 0; c < nodes.rows(); ++c) {
    const double lo = box.center[c] - box.half_side, hi = box.center[c] + box.half_side;
    for (Index i = first; i < last; ++i) {
      p *= bridge_stay_probability(nodes(c, i), nodes(c, i + 1), lo, hi, dt);
      if (p == 0.0) return 0.0;
    }
  }
  return p;
}

bool exceeds_continuous(const PathSamples& nodes, int coord, Index first, Index last, double center,
                        double a, double dt, Rng& rng) {
  const double lo = center - a, hi = center + a;
  for (Index i = first; i <= last; ++i)
    if (nodes(coord, i) < lo || nodes(coord, i) > hi) return true;
  for (Index i = first; i < last; ++i) {
    const double stay = bridge_stay_probability(nodes(coord, i), nodes(coord, i + 1), lo, hi, dt);
    if (stay < 1.0 && rng.uniform() >= stay) return true;
  }
  return false;
}

double bridge_max_tail(double a, int k, double displacement, double beta) {
  if (!(a > 0.0)) throw std::invalid_argument("bridge_max_tail: a must be > 0");
  if (k < 1) throw std::invalid_argument("bridge_max_tail: k must be >= 1");
  if (!(beta > 0.0)) throw std::invalid_argument("bridge_max_tail: beta must be > 0");
  const double w = displacement;
  if (k == 1) return tail_one_leg(a, w, beta);
  // Condition on the position u at time beta; the first leg is a one-step bridge 0 -> u.
  const double rest = (k - 1) * beta;
  const double norm = heat(w, k * beta);
  auto integrand = [&](double u) { return heat(u, beta) * tail_one_leg(a, u, beta) * heat(w - u, rest); };
  using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double inf = std::numeric_limits<double>::infinity();
  double err = 0.0;
  const double inner = Quad::integrate(integrand, -a, a, 15, 1e-13, &err);
  const double outer = Quad::integrate(integrand, -inf, -a, 15, 1e-13, &err) +
                       Quad::integrate(integrand, a, inf, 15, 1e-13, &err);
  const double p = (inner + outer) / norm;
  if (!std::isfinite(p)) throw std::runtime_error("bridge_max_tail: quadrature did not converge");
  return std::clamp(p, 0.0, 1.0);
}

double bridge_max_tail(double a, int k, double displacement, const ModelParams& m) {
  return bridge_max_tail(a, k, displacement, m.beta);
}

TailFit lemma21_fit(const ModelParams& m, const Box& box, int k_max, const std::vector<double>& a_grid) {
  if (a_grid.empty()) throw std::invalid_argument("lemma21_fit: empty grid");
  for (std::size_t i = 0; i < a_grid.size(); ++i) {
    if (!(a_grid[i] > 0.0)) throw std::invalid_argument("lemma21_fit: grid must be positive");
    if (i > 0 && !(a_grid[i] > a_grid[i - 1])) throw std::invalid_argument("lemma21_fit: grid must increase");
  }
  if (k_max < 1) throw std::invalid_argument("lemma21_fit: k_max must be >= 1");
  const double sd = std::sqrt(static_cast<double>(m.d));
  const double diam = 2.0 * box.half_side;
  TailFit fit;
  fit.a_grid = a_grid;
  for (double a : a_grid) {
    // A Euclidean excursion beyond a forces some coordinate beyond a / sqrt(d).
    const double ac = a / sd;
    double worst = 0.0;
    for (int k = 1; k <= k_max; ++k) {
      worst = std::max(worst, m.d * bridge_max_tail(ac, k, 0.0, m.beta));
      for (int i = 1; i <= 8; ++i)
        worst = std::max(worst, m.d * bridge_max_tail(ac, k, diam * i / 8.0, m.beta));
    }
    fit.tails.push_back(std::min(worst, 1.0));
  }
  for (std::size_t i = 1; i < fit.tails.size(); ++i)
    if (fit.tails[i] > fit.tails[i - 1] + 1e-15)
      throw std::runtime_error("lemma21_fit: escape probabilities increase with a; no Gaussian envelope");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < a_grid.size(); ++i)
    if (fit.tails[i] > 0.0) {
      xs.push_back(a_grid[i] * a_grid[i]);
      ys.push_back(std::log(fit.tails[i]));
    }
  if (xs.size() >= 2) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if (!(slope < 0.0)) throw std::runtime_error("lemma21_fit: tails not log-quadratically dominated on the grid");
    fit.c1 = -slope;
  } else {
    fit.c1 = 1.0 / (2.0 * m.beta);
  }
  fit.c0 = 0.0;
  for (std::size_t i = 0; i < a_grid.size(); ++i)
    fit.c0 = std::max(fit.c0, fit.tails[i] * std::exp(fit.c1 * a_grid[i] * a_grid[i]));
  fit.c0 *= 1.0 + 1e-12;  // keeps rounding from lifting a residual above zero
  if (!(fit.c0 > 0.0)) fit.c0 = std::numeric_limits<double>::min();
  for (std::size_t i = 0; i < a_grid.size(); ++i)
    fit.residuals.push_back(fit.tails[i] - fit.c0 * std::exp(-fit.c1 * a_grid[i] * a_grid[i]));
  return fit;
}

double continuity_modulus_ratio(const BridgePath& path, double beta, double eps, int k0) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("continuity_modulus_ratio: eps must lie in (0,1)");
  const double dt = beta / path.slices_per_beta;
  const Index w = std::max<Index>(1, static_cast<Index>(std::lround(eps / dt)));
  double worst = 0.0;
  for (Index i = 0; i + w <= path.last(); ++i)
    worst = std::max(worst, (path.samples.col(i + w) - path.samples.col(i)).norm());
  return worst / std::sqrt(2.0 * k0 * beta * eps * std::log(1.0 / eps));
}

}  // namespace loopgas
