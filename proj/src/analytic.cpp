#include "loopgas/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace loopgas {

namespace {

constexpr double kPi = std::numbers::pi;

void require_fugacity(double z) {
  if (!(z > 0.0 && z < 1.0)) throw std::invalid_argument("fugacity must lie in (0,1)");
}

// sum_{k > K} k z^k
double weighted_geometric_tail(double z, int K) {
  return std::pow(z, K + 1) * ((K + 1) - K * z) / ((1.0 - z) * (1.0 - z));
}

double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace

SeriesResult theta(int a, double z, int d, double beta, double tol) {
  require_fugacity(z);
  if (!(beta > 0.0)) throw std::invalid_argument("theta: beta must be > 0");
  const double e = a - 0.5 * d;
  const double norm = std::pow(2.0 * kPi * beta, -0.5 * d);
  SeriesResult r;
  for (int k = 1; k < 100000000; ++k) {
    r.value += norm * std::pow(z, k) * std::pow(static_cast<double>(k), e);
    const double rho = z * std::pow(1.0 + 1.0 / (k + 1.0), std::max(e, 0.0));
    if (rho < 1.0) {
      const double next = norm * std::pow(z, k + 1) * std::pow(k + 1.0, e);
      const double tail = next / (1.0 - rho);
      if (tail < tol) {
        r.truncation_k = k;
        r.tail_bound = tail;
        return r;
      }
    }
  }
  throw std::runtime_error("theta: series did not reach the requested tolerance");
}

SeriesResult theta(int a, double z, const ModelParams& m, double tol) { return theta(a, z, m.d, m.beta, tol); }

SeriesResult free_kernel(const Point& x, const Point& y, double z, double beta, double tol) {
  require_fugacity(z);
  const int d = static_cast<int>(x.size());
  const double r2 = (x - y).squaredNorm();
  SeriesResult r;
  for (int k = 1;; ++k) {
    r.value += std::pow(z, k) * std::pow(2.0 * kPi * beta * k, -0.5 * d) * std::exp(-r2 / (2.0 * beta * k));
    // Dropping the Gaussian factor bounds every later term.
    const double tail = std::pow(z, k + 1) / (1.0 - z) * std::pow(2.0 * kPi * beta * (k + 1), -0.5 * d);
    if (tail < tol) {
      r.truncation_k = k;
      r.tail_bound = tail;
      return r;
    }
  }
}

SeriesResult free_kernel(const Point& x, const Point& y, const ModelParams& m, int type, double tol) {
  return free_kernel(x, y, m.z[type], m.beta, tol);
}

BResult b_of_c(const CountFamily& counts, double c, const ModelParams& m, const std::vector<double>& L_grid) {
  if (!(c > 0.0)) throw std::invalid_argument("b_of_c: c must be > 0");
  if (L_grid.empty()) throw std::invalid_argument("b_of_c: empty grid");
  for (double L : L_grid)
    if (!(L >= 1.0)) throw std::invalid_argument("b_of_c: grid points must satisfy L >= 1");
  BResult out;
  std::vector<double> values;
  for (double L : L_grid) {
    const std::vector<double> n = counts(L);
    if (static_cast<int>(n.size()) != m.q) throw std::invalid_argument("b_of_c: count family must return q values");
    const double A = (L * L - c * L) / (2.0 * m.beta);
    double total = 0.0;
    for (int i = 0; i < m.q; ++i) {
      if (n[i] == 0.0) continue;
      const double z = m.z[i];
      require_fugacity(z);
      double s = 0.0;
      for (int k = 1;; ++k) {
        s += std::pow(z, k) * k * std::exp(-A / k);
        const double lift = A < 0.0 ? std::exp(-A / (k + 1.0)) : 1.0;
        if (lift * weighted_geometric_tail(z, k) < 1e-12 * std::max(1.0, s)) break;
      }
      total += n[i] * s;
    }
    values.push_back(total);
  }
  const auto it = std::max_element(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(it - values.begin());
  out.value = *it;
  out.argmax_L = L_grid[idx];
  out.unbounded_on_grid = values.size() >= 2 && idx == values.size() - 1 && values[idx] > values[idx - 1];
  return out;
}

double hs_bound(const Box& box0, const ModelParams& m) {
  double s = 0.0;
  for (int j = 0; j < m.q; ++j) {
    require_fugacity(m.z[j]);
    s += m.z[j] / (1.0 - m.z[j]);
  }
  return std::exp(box0.volume() * s);
}

double a4_c_argument(const Box& box0, const ModelParams& m) {
  const double dist = box0.distance(Point::Zero(box0.dim()));
  const double r = m.interaction_range() + box0.half_side + dist;
  return r * r;
}

AConstants a_constants(const std::vector<int>& n, const Box& box0, const ModelParams& m, const TailFit& fit,
                       double b_value, std::optional<double> vbar1) {
  if (static_cast<int>(n.size()) != m.q) throw std::invalid_argument("a_constants: need one count per type");
  const double v1 = vbar1.value_or(m.vbar1());
  const double beta = m.beta;
  double prod_a = 1.0, prod_b = 1.0, sum_t0 = 0.0, sum_t1 = 0.0, max_t1 = 0.0, max_t2 = 0.0;
  for (int i = 0; i < m.q; ++i) {
    if (n[i] < 0) throw std::invalid_argument("a_constants: negative count");
    const double t0 = theta(0, m.z[i], m).value;
    const double t1 = theta(1, m.z[i], m).value;
    const double t2 = theta(2, m.z[i], m).value;
    sum_t0 += t0;
    sum_t1 += t1;
    max_t1 = std::max(max_t1, t1);
    max_t2 = std::max(max_t2, t2);
    const double f = factorial(n[i]) * std::pow(1.0 + t0, n[i]);
    prod_a *= f;
    prod_b *= f * n[i];
  }
  if (!std::isfinite(prod_a) || !std::isfinite(prod_b))
    throw std::overflow_error("a_constants: factorial products overflow; counts too large");
  AConstants a;
  a.a1 = 0.5 * beta * v1 * max_t2 * prod_a;
  a.a2 = beta * (m.q - 1) * v1 * sum_t1 * max_t1 * prod_b;
  // Gaussian envelope integrated over R^d around the cube: (2 L0 + sqrt(pi / c1))^d; the free constant c is 0.
  const double envelope = fit.c1 > 0.0 ? fit.c0 * std::pow(2.0 * box0.half_side + std::sqrt(kPi / fit.c1), m.d) : 0.0;
  a.a3 = 2.0 * beta * v1 * sum_t0 * max_t1 * prod_b * envelope;
  a.a4 = beta * v1 * prod_a * b_value;
  return a;
}

double tightness_bound(int k0, const Box& box0, const ModelParams& m) {
  if (k0 < 1) throw std::invalid_argument("tightness_bound: k0 must be >= 1");
  const double ups = box0.volume();
  const double root = std::sqrt(static_cast<double>(k0));
  const int n_low = static_cast<int>(std::floor(root));
  const int k_low = static_cast<int>(std::ceil(root));
  double prefactor = 1.0, sum = 0.0;
  for (int j = 0; j < m.q; ++j) prefactor *= std::exp(ups * (1.0 + theta(0, m.z[j], m).value));
  for (int i = 0; i < m.q; ++i) {
    const double z = m.z[i];
    const double tm1 = theta(-1, z, m).value;
    const double x = ups * tm1;
    // Poisson tail sum_{n > sqrt(k0)} x^n / n!, summed upward.
    double term = std::pow(x, n_low + 1) / factorial(n_low + 1), t1 = 0.0;
    for (int nn = n_low + 1; term > 1e-300 && nn < n_low + 10000; ++nn) {
      t1 += term;
      term *= x / (nn + 1);
      if (term < 1e-17 * t1) break;
    }
    // sum_{k >= sqrt(k0)} z^k / (k (2 pi beta k)^{d/2}), geometric tail bound.
    double t_k = 0.0;
    for (int k = k_low;; ++k) {
      const double tk = std::pow(z, k) / k * std::pow(2.0 * kPi * m.beta * k, -0.5 * m.d);
      t_k += tk;
      if (tk * z / (1.0 - z) < 1e-17 * t_k) break;
    }
    double t_n = 0.0;
    for (int nn = 1; nn <= n_low; ++nn) t_n += nn * std::pow(ups, nn) * std::pow(tm1, nn - 1) / factorial(nn);
    sum += t1 + t_k * t_n;
  }
  return prefactor * sum;
}

double dirichlet_trace_series(double half_side, double beta, int n_terms) {
  if (n_terms < 10) throw std::invalid_argument("dirichlet_trace_series: use at least 10 terms");
  if (!(half_side > 0.0) || !(beta > 0.0)) throw std::invalid_argument("dirichlet_trace_series: L and beta must be > 0");
  double s = 0.0;
  for (int n = 1; n <= n_terms; ++n) {
    const double kn = n * kPi / (2.0 * half_side);
    s += std::exp(-0.5 * beta * kn * kn);
  }
  return s;
}

double dirichlet_trace_series(double half_side, const ModelParams& m, int n_terms) {
  return dirichlet_trace_series(half_side, m.beta, n_terms);
}

}  // namespace loopgas
