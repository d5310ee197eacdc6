#include "loopgas/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace loopgas {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ClassicalConfig padded(const ClassicalConfig& c, int q) {
  if (static_cast<int>(c.size()) > q) throw std::invalid_argument("classical configuration has more types than the model");
  ClassicalConfig out = c;
  out.resize(static_cast<std::size_t>(q));
  return out;
}

// Per-leg multiplicity table w_k = z^k p_{k beta}(x, y), k = 1..k_max.
struct LegTable {
  std::vector<double> cum;  // normalized cumulative weights
  double total = 0.0;
};

LegTable leg_table(const Point& x, const Point& y, double z, int k_max, double beta) {
  LegTable t;
  t.cum.reserve(static_cast<std::size_t>(k_max));
  for (int k = 1; k <= k_max; ++k) {
    t.total += std::pow(z, k) * gaussian_mass(x, y, k, beta);
    t.cum.push_back(t.total);
  }
  for (auto& c : t.cum) c /= t.total;
  return t;
}

int draw_k(const LegTable& t, Rng& rng) {
  const double u = rng.uniform();
  const auto it = std::upper_bound(t.cum.begin(), t.cum.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - t.cum.begin(), static_cast<std::ptrdiff_t>(t.cum.size()) - 1)) + 1;
}

// All permutations of one type with their weights prod_l W[l][pi(l)].
struct PermTable {
  std::vector<std::vector<int>> perms;
  std::vector<double> cum;
  double total = 0.0;
};

PermTable perm_table(const std::vector<std::vector<double>>& w) {
  const int n = static_cast<int>(w.size());
  if (n > 6) throw std::invalid_argument("kernel estimators enumerate permutations; at most 6 points per type");
  PermTable t;
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  do {
    double prod = 1.0;
    for (int l = 0; l < n; ++l) prod *= w[l][p[l]];
    t.total += prod;
    t.perms.push_back(p);
    t.cum.push_back(t.total);
  } while (std::next_permutation(p.begin(), p.end()));
  if (t.total > 0.0)
    for (auto& c : t.cum) c /= t.total;
  return t;
}

double permanent(const std::vector<std::vector<double>>& w) { return perm_table(w).total; }

double truncation_tail(const ModelParams& m, int k_max) {
  // Per path: sum_{k > k_max} z^k (2 pi beta k)^{-d/2} <= z^{k_max+1} / (1 - z) * (2 pi beta (k_max+1))^{-d/2}.
  double worst = 0.0;
  for (int j = 0; j < m.q; ++j) {
    const double z = m.z[j];
    worst = std::max(worst, std::pow(z, k_max + 1) / (1.0 - z) *
                                std::pow(2.0 * std::numbers::pi * m.beta * (k_max + 1), -0.5 * m.d));
  }
  return worst;
}

bool any_bead_in(const LoopConfig& c, const Box& box0) {
  for (const auto& l : c.loops) {
    const int s = l.path.slices_per_beta;
    for (int m = 0; m <= l.path.k; ++m)
      if (box0.contains(l.path.samples.col(static_cast<Index>(m) * s))) return true;
  }
  return false;
}

bool mismatched(const ClassicalConfig& x0, const ClassicalConfig& y0) {
  for (std::size_t j = 0; j < x0.size(); ++j)
    if (x0[j].size() != y0[j].size()) return true;
  return false;
}

void require_inside(const ClassicalConfig& c, const Box& box0) {
  for (const auto& pts : c)
    for (const auto& x : pts)
      if (!box0.contains(x)) throw std::invalid_argument("kernel arguments must lie in box0");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

MeanError batch_means(std::span<const double> series, int batches) {
  if (batches < 2) throw std::invalid_argument("batch_means: need at least two batches");
  const long n = static_cast<long>(series.size());
  if (n < batches) throw std::invalid_argument("batch_means: fewer samples than batches");
  const long per = n / batches;
  std::vector<double> means(static_cast<std::size_t>(batches));
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (long i = b * per; i < (b + 1) * per; ++i) s += series[static_cast<std::size_t>(i)];
    means[b] = s / per;
  }
  MeanError r;
  r.n = per * batches;
  r.mean = std::accumulate(means.begin(), means.end(), 0.0) / batches;
  double var = 0.0;
  for (double v : means) var += (v - r.mean) * (v - r.mean);
  var /= (batches - 1);
  r.std_error = std::sqrt(var / batches);
  return r;
}

double KernelEstimate::combined_error() const { return std::hypot(std_error, truncation_bound); }

KernelEstimate estimate_kernel_F(const ClassicalConfig& x0_in, const ClassicalConfig& y0_in, const ModelParams& m,
                                 const Box& home, const Box& box0, const ExternalCC* ext, const KernelBudget& budget) {
  require_valid(m);
  const ClassicalConfig x0 = padded(x0_in, m.q), y0 = padded(y0_in, m.q);
  KernelEstimate est;
  est.slices_per_beta = budget.sampler.slices_per_beta;
  est.half_side = home.half_side;
  est.k_max = budget.sampler.k_max;
  est.seed = budget.seed;
  if (mismatched(x0, y0)) {
    est.note = "per-type cardinalities differ: kernel is exactly zero";
    return est;
  }
  require_inside(x0, box0);
  require_inside(y0, box0);
  if (!home.contains_box(box0)) throw std::invalid_argument("estimate_kernel_F: box0 must lie inside the home box");
  if (budget.outer_samples < std::max(16, budget.batches) || budget.inner_samples < 1) {
    est.insufficient = true;
    est.note = "insufficient samples: budget below the 16-batch minimum";
    return est;
  }
  const int s = budget.sampler.slices_per_beta;
  const int kmax = budget.sampler.k_max;
  int total_paths = 0;
  for (const auto& pts : x0) total_paths += static_cast<int>(pts.size());
  est.truncation_bound = total_paths > 0 ? truncation_tail(m, kmax) : 0.0;

  // Leg tables and permutation weights per type.
  std::vector<std::vector<std::vector<LegTable>>> legs(static_cast<std::size_t>(m.q));
  std::vector<PermTable> perms;
  double w_total = 1.0;
  for (int j = 0; j < m.q; ++j) {
    const auto n = x0[j].size();
    legs[j].resize(n);
    std::vector<std::vector<double>> w(n, std::vector<double>(n));
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t p = 0; p < n; ++p) {
        legs[j][l].push_back(leg_table(x0[j][l], y0[j][p], m.z[j], kmax, m.beta));
        w[l][p] = legs[j][l][p].total;
      }
    perms.push_back(perm_table(w));
    w_total *= perms.back().total;
  }

  const bool need_background = budget.chi_enabled || m.interacting();
  Rng rng = Rng::for_stream(budget.seed, 0);
  std::optional<LoopChain> chain;
  if (need_background) {
    std::optional<ExternalCC> e;
    if (ext) e = *ext;
    chain.emplace(m, home, budget.sampler, budget.seed ^ 0x9e3779b97f4a7c15ULL, e);
    chain->run(budget.burn_in_sweeps);
  }

  std::vector<double> series;
  series.reserve(static_cast<std::size_t>(budget.outer_samples));
  std::vector<BridgePath> paths;
  std::vector<PathRef> prefs;
  for (long o = 0; o < budget.outer_samples; ++o) {
    if (chain) chain->run(budget.sweeps_between);
    if (budget.chi_enabled && any_bead_in(chain->config(), box0)) {
      series.push_back(0.0);
      continue;
    }
    std::vector<PathRef> background;
    if (chain && m.interacting()) background = refs(chain->config());
    double acc = 0.0;
    for (int it = 0; it < budget.inner_samples; ++it) {
      paths.clear();
      prefs.clear();
      std::vector<int> types;
      for (int j = 0; j < m.q; ++j) {
        const auto& pt = perms[j];
        if (pt.perms.empty() || x0[j].empty()) continue;
        const double u = rng.uniform();
        const auto pi = std::min<std::size_t>(
            static_cast<std::size_t>(std::upper_bound(pt.cum.begin(), pt.cum.end(), u) - pt.cum.begin()),
            pt.perms.size() - 1);
        for (std::size_t l = 0; l < x0[j].size(); ++l) {
          const int target = pt.perms[pi][l];
          const int k = draw_k(legs[j][l][target], rng);
          paths.push_back(sample_bridge(x0[j][l], y0[j][target], k, s, m.beta, rng));
          types.push_back(j);
        }
      }
      for (std::size_t i = 0; i < paths.size(); ++i) prefs.push_back({types[i], &paths[i]});
      double g = 1.0;
      if (budget.chi_enabled && !chi_indicator(prefs, box0)) g = 0.0;
      if (g > 0.0) {
        if (budget.continuous_confinement) {
          for (const auto& p : paths) g *= confinement_probability(p.samples, 0, p.last(), m.beta / s, home);
        } else if (!alpha_indicator(prefs, home)) {
          g = 0.0;
        }
      }
      if (g > 0.0 && (m.interacting())) {
        const double h = energy_h(prefs, background, ext, m);
        g = (h == kInf) ? 0.0 : g * std::exp(-h);
      }
      acc += g;
    }
    series.push_back(w_total * acc / budget.inner_samples);
  }
  const MeanError me = batch_means(series, std::max(16, budget.batches));
  est.value = me.mean;
  est.std_error = me.std_error;
  est.n_samples = budget.outer_samples * budget.inner_samples;
  return est;
}

double chi_survival_mc(const Point& x, const Point& y, int k, const Box& box0, double beta, long draws, Rng& rng,
                       double* std_error) {
  if (k < 2) {
    if (std_error) *std_error = 0.0;
    return 1.0;
  }
  if (k == 2) {
    // The time-beta marginal is Gaussian with mean (x+y)/2 and variance beta/2 per coordinate.
    const double sd = std::sqrt(beta / 2.0);
    double inside = 1.0;
    for (Index c = 0; c < x.size(); ++c) {
      const double mu = 0.5 * (x[c] + y[c]);
      const double lo = box0.center[c] - box0.half_side, hi = box0.center[c] + box0.half_side;
      inside *= normal_cdf((hi - mu) / sd) - normal_cdf((lo - mu) / sd);
    }
    if (std_error) *std_error = 0.0;
    return 1.0 - inside;
  }
  long ok = 0;
  for (long i = 0; i < draws; ++i) {
    const BridgePath p = sample_bridge(x, y, k, 1, beta, rng);
    bool good = true;
    for (int mm = 1; mm < k && good; ++mm) good = !box0.contains(p.samples.col(mm));
    ok += good;
  }
  const double p = static_cast<double>(ok) / draws;
  if (std_error) *std_error = std::sqrt(p * (1.0 - p) / draws);
  return p;
}

KernelEstimate estimate_Q(const ClassicalConfig& x0_in, const ClassicalConfig& y0_in, const ModelParams& m,
                          const Box& box0, const KernelBudget& budget) {
  require_valid(m);
  const ClassicalConfig x0 = padded(x0_in, m.q), y0 = padded(y0_in, m.q);
  KernelEstimate est;
  est.slices_per_beta = budget.sampler.slices_per_beta;
  est.half_side = std::numeric_limits<double>::infinity();
  est.k_max = budget.sampler.k_max;
  est.seed = budget.seed;
  if (mismatched(x0, y0)) {
    est.note = "per-type cardinalities differ: kernel is exactly zero";
    return est;
  }
  require_inside(x0, box0);
  require_inside(y0, box0);
  const int batches = std::max(16, budget.batches);
  const long draws_total = budget.outer_samples * budget.inner_samples;
  const long per_batch = draws_total / batches;
  if (per_batch < 1) {
    est.insufficient = true;
    est.note = "insufficient samples: budget below the 16-batch minimum";
    return est;
  }
  const int kmax = budget.sampler.k_max;
  int total_paths = 0;
  for (const auto& pts : x0) total_paths += static_cast<int>(pts.size());
  est.truncation_bound = total_paths > 0 ? truncation_tail(m, kmax) : 0.0;
  Rng rng = Rng::for_stream(budget.seed, 1);
  // Q factorizes over types into permanents of per-leg sums z^k p_k P(chi survives);
  // independent per-entry estimates keep each batch value unbiased.
  std::vector<double> series;
  for (int b = 0; b < batches; ++b) {
    double q = 1.0;
    for (int j = 0; j < m.q; ++j) {
      const auto n = x0[j].size();
      std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
      for (std::size_t l = 0; l < n; ++l)
        for (std::size_t p = 0; p < n; ++p)
          for (int k = 1; k <= kmax; ++k) {
            const double w = std::pow(m.z[j], k) * gaussian_mass(x0[j][l], y0[j][p], k, m.beta);
            if (w < 1e-300) continue;
            a[l][p] += w * chi_survival_mc(x0[j][l], y0[j][p], k, box0, m.beta, per_batch, rng);
          }
      q *= permanent(a);
    }
    series.push_back(q);
  }
  const MeanError me = batch_means(series, batches);
  est.value = me.mean;
  est.std_error = me.std_error;
  est.n_samples = per_batch * batches;
  return est;
}

DensityEstimate estimate_density(LoopChain& chain, const Box& window, const StreamBudget& budget) {
  const ModelParams& m = chain.model();
  const int kmax = chain.settings().k_max;
  DensityEstimate out;
  out.near_boundary = !chain.config().home.contains_box(window, m.interaction_range());
  if (!chain.config().home.contains_box(window)) throw std::invalid_argument("estimate_density: window outside the home box");
  const double vol = window.volume();
  chain.run(budget.burn_in_sweeps);
  std::vector<std::vector<double>> series(static_cast<std::size_t>(m.q)), hist(static_cast<std::size_t>(m.q * kmax));
  std::vector<double> total;
  for (long i = 0; i < budget.samples; ++i) {
    chain.run(budget.sweeps_between);
    std::vector<double> count(static_cast<std::size_t>(m.q), 0.0), hk(static_cast<std::size_t>(m.q * kmax), 0.0);
    for (const auto& l : chain.config().loops)
      if (window.contains(l.anchor())) {
        count[l.type] += 1.0;
        hk[static_cast<std::size_t>(l.type * kmax + l.k() - 1)] += 1.0;
      }
    double t = 0.0;
    for (int j = 0; j < m.q; ++j) {
      series[j].push_back(count[j] / vol);
      t += count[j] / vol;
    }
    for (std::size_t b = 0; b < hk.size(); ++b) hist[b].push_back(hk[b] / vol);
    total.push_back(t);
  }
  out.samples = budget.samples;
  for (int j = 0; j < m.q; ++j) {
    out.density.push_back(batch_means(series[j], budget.batches));
    std::vector<double> h, he;
    for (int k = 0; k < kmax; ++k) {
      const auto me = batch_means(hist[static_cast<std::size_t>(j * kmax + k)], budget.batches);
      h.push_back(me.mean);
      he.push_back(me.std_error);
    }
    out.k_histogram.push_back(h);
    out.k_histogram_err.push_back(he);
  }
  out.total = batch_means(total, budget.batches);
  return out;
}

std::vector<MeanError> estimate_K_tail(LoopChain& chain, const Box& box0, const std::vector<int>& k0,
                                       const StreamBudget& budget) {
  for (int k : k0)
    if (k < 1) throw std::invalid_argument("estimate_K_tail: k0 must be >= 1");
  const int q = chain.model().q;
  chain.run(budget.burn_in_sweeps);
  std::vector<std::vector<double>> series(k0.size());
  for (long i = 0; i < budget.samples; ++i) {
    chain.run(budget.sweeps_between);
    std::vector<int> kk(static_cast<std::size_t>(q), 0);
    for (const auto& l : chain.config().loops)
      if (box0.contains(l.anchor())) kk[l.type] += l.k();
    const int kmax = *std::max_element(kk.begin(), kk.end());
    for (std::size_t t = 0; t < k0.size(); ++t) series[t].push_back(kmax >= k0[t] ? 1.0 : 0.0);
  }
  std::vector<MeanError> out;
  for (const auto& s : series) out.push_back(batch_means(s, budget.batches));
  return out;
}

ShiftReport shift_invariance_probe(const ModelParams& m, const Box& home, const Box& box0, const Point& shift,
                                   const SamplerSettings& sampler, const StreamBudget& budget, std::uint64_t seed,
                                   const ExternalCC* ext) {
  if (m.d != 2) throw std::invalid_argument("shift_invariance_probe: two-dimensional models only");
  const Box moved = box0.shifted(shift);
  const double margin = m.interaction_range() + 3.0 * std::sqrt(m.beta);
  if (!home.contains_box(box0, margin) || !home.contains_box(moved, margin))
    throw std::domain_error("shift_invariance_probe: margin violation; both windows need distance >= R + 3 sqrt(beta) = " +
                            std::to_string(margin) + " to the home boundary");
  std::optional<ExternalCC> e;
  if (ext) e = *ext;
  LoopChain chain(m, home, sampler, seed, e);
  chain.run(budget.burn_in_sweeps);
  const int kmax = sampler.k_max;
  const double vol = box0.volume();
  std::vector<std::vector<double>> sa(static_cast<std::size_t>(m.q)), sb(sa), sd(sa);
  ShiftReport r;
  r.histogram_a.assign(static_cast<std::size_t>(m.q), std::vector<double>(static_cast<std::size_t>(kmax), 0.0));
  r.histogram_b = r.histogram_a;
  for (long i = 0; i < budget.samples; ++i) {
    chain.run(budget.sweeps_between);
    std::vector<double> ca(static_cast<std::size_t>(m.q), 0.0), cb(ca);
    for (const auto& l : chain.config().loops) {
      if (box0.contains(l.anchor())) {
        ca[l.type] += 1.0;
        r.histogram_a[l.type][l.k() - 1] += 1.0;
      }
      if (moved.contains(l.anchor())) {
        cb[l.type] += 1.0;
        r.histogram_b[l.type][l.k() - 1] += 1.0;
      }
    }
    for (int j = 0; j < m.q; ++j) {
      sa[j].push_back(ca[j] / vol);
      sb[j].push_back(cb[j] / vol);
      sd[j].push_back((ca[j] - cb[j]) / vol);
    }
  }
  r.samples = budget.samples;
  r.pass = true;
  for (int j = 0; j < m.q; ++j) {
    r.density_a.push_back(batch_means(sa[j], budget.batches));
    r.density_b.push_back(batch_means(sb[j], budget.batches));
    r.difference.push_back(batch_means(sd[j], budget.batches));
    const auto& d = r.difference.back();
    if (std::abs(d.mean) > r.sigma_threshold * d.std_error && d.mean != 0.0) r.pass = false;
    for (auto& h : r.histogram_a[j]) h /= static_cast<double>(budget.samples);
    for (auto& h : r.histogram_b[j]) h /= static_cast<double>(budget.samples);
  }
  return r;
}

}  // namespace loopgas
