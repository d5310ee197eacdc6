#include "loopgas/chain.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace loopgas {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool accept(Rng& rng, double log_ratio) {
  if (std::isnan(log_ratio)) return false;
  if (log_ratio >= 0.0) return true;
  return std::log(rng.uniform()) < log_ratio;
}

}  // namespace

LoopChain::LoopChain(const ModelParams& m, Box home, SamplerSettings settings, std::uint64_t seed,
                     std::optional<ExternalCC> external, std::shared_ptr<const PathSpace> space)
    : model_(m), settings_(settings), space_(std::move(space)), rng_(seed) {
  require_valid(model_);
  if (settings_.k_max < 1) throw std::invalid_argument("LoopChain: k_max must be >= 1");
  if (settings_.slices_per_beta < 1) throw std::invalid_argument("LoopChain: S must be >= 1");
  if (settings_.mix_insert_delete < 0 || settings_.mix_swap < 0 || settings_.mix_wiggle < 0 ||
      settings_.mix_insert_delete + settings_.mix_swap + settings_.mix_wiggle <= 0)
    throw std::invalid_argument("LoopChain: update mix must be non-negative with positive total");
  if (home.dim() != m.d) throw std::invalid_argument("LoopChain: home box dimension differs from model");
  if (!space_) space_ = std::make_shared<ContinuumSpace>(home, m.beta, settings_.slices_per_beta);
  if (space_->slices_per_beta() != settings_.slices_per_beta)
    throw std::invalid_argument("LoopChain: path space and sampler disagree on S");
  config_.home = std::move(home);
  if (external && !external->empty()) config_.external = std::move(external);
  interacting_ = model_.interacting();
  k_sum_.assign(static_cast<std::size_t>(m.q), 0);
  log_l_.assign(static_cast<std::size_t>(m.q), 0.0);

  double total = 0.0;
  for (int j = 0; j < m.q; ++j)
    for (int k = 1; k <= settings_.k_max; ++k) {
      const double lw = k * std::log(m.z[j]) - std::log(static_cast<double>(k)) + space_->reference_log_mass(k);
      prop_log_.push_back(lw);
      total += std::exp(lw);
      prop_cum_.push_back(total);
    }
  for (auto& l : prop_log_) l -= std::log(total);
  for (auto& c : prop_cum_) c /= total;
}

double LoopChain::log_proposal(int type, int k) const {
  return prop_log_[static_cast<std::size_t>(type * settings_.k_max + (k - 1))];
}

int LoopChain::draw_k_and_type(int& type) {
  const double u = rng_.uniform();
  auto it = std::upper_bound(prop_cum_.begin(), prop_cum_.end(), u);
  auto idx = static_cast<int>(std::min<std::ptrdiff_t>(it - prop_cum_.begin(), static_cast<std::ptrdiff_t>(prop_cum_.size()) - 1));
  type = idx / settings_.k_max;
  return idx % settings_.k_max + 1;
}

bool LoopChain::inside(const PathSamples& nodes, Index first, Index last) const {
  if (!settings_.confine) return true;
  const Box& b = config_.home;
  for (Index i = first; i <= last; ++i)
    if ((nodes.col(i) - b.center).cwiseAbs().maxCoeff() > b.half_side) return false;
  return true;
}

double LoopChain::path_energy(const BridgePath& p, int type, std::initializer_list<std::size_t> skip) const {
  if (!interacting_) return 0.0;
  double h = self_energy(p, type, model_);
  for (std::size_t i = 0; i < config_.loops.size() && h < kInf; ++i) {
    if (std::find(skip.begin(), skip.end(), i) != skip.end()) continue;
    h += pair_energy(p, type, config_.loops[i].path, config_.loops[i].type, model_);
  }
  if (config_.external && h < kInf) h += external_energy(p, type, *config_.external, model_);
  return h;
}

void LoopChain::add_loop(Loop l) {
  k_sum_[l.type] += l.k();
  log_l_[l.type] += std::log(static_cast<double>(l.k()));
  config_.loops.push_back(std::move(l));
}

void LoopChain::remove_loop(std::size_t i) {
  const Loop& l = config_.loops[i];
  k_sum_[l.type] -= l.k();
  log_l_[l.type] -= std::log(static_cast<double>(l.k()));
  if (i + 1 != config_.loops.size()) config_.loops[i] = std::move(config_.loops.back());
  config_.loops.pop_back();
}

bool LoopChain::update_insert_delete() {
  MoveStats& st = stats_[static_cast<int>(Move::insert_delete)];
  ++st.attempted;
  const double n = static_cast<double>(config_.loops.size());
  const int s = settings_.slices_per_beta;
  if (rng_.uniform() < 0.5) {
    if (settings_.max_loops >= 0 && config_.loops.size() >= static_cast<std::size_t>(settings_.max_loops)) return false;
    int type = 0;
    const int k = draw_k_and_type(type);
    const Point x = space_->sample_anchor(rng_);
    const Index last = static_cast<Index>(k) * s;
    BridgePath p;
    p.k = k;
    p.slices_per_beta = s;
    p.samples.resize(model_.d, last + 1);
    p.samples.col(0) = x;
    p.samples.col(last) = x;
    space_->fill_bridge(p.samples, 0, last, rng_);
    if (!inside(p.samples, 0, last)) return false;
    const double dh = path_energy(p, type, {});
    if (dh == kInf) return false;
    const double log_r = k * std::log(model_.z[type]) - std::log(static_cast<double>(k)) +
                         space_->log_transition(x, x, last) + std::log(space_->anchor_measure()) -
                         log_proposal(type, k) - std::log(n + 1.0) - dh;
    if (!accept(rng_, log_r)) return false;
    energy_ += dh;
    add_loop(Loop(type, std::move(p)));
    ++st.accepted;
    return true;
  }
  if (config_.loops.empty()) return false;
  const std::size_t i = rng_.below(config_.loops.size());
  const Loop& l = config_.loops[i];
  const Index last = l.path.last();
  const double dh = path_energy(l.path, l.type, {i});
  const double log_r = -(l.k() * std::log(model_.z[l.type]) - std::log(static_cast<double>(l.k())) +
                         space_->log_transition(l.anchor(), l.anchor(), last) + std::log(space_->anchor_measure()) -
                         log_proposal(l.type, l.k()) - std::log(n)) +
                       dh;
  if (!accept(rng_, log_r)) return false;
  energy_ -= dh;
  remove_loop(i);
  ++st.accepted;
  return true;
}

bool LoopChain::update_swap() {
  MoveStats& st = stats_[static_cast<int>(Move::swap)];
  ++st.attempted;
  const std::size_t n = config_.loops.size();
  const int s = settings_.slices_per_beta;
  if (rng_.uniform() < 0.5) {
    // Merge A (anchor x1) with another same-type loop B (anchor x2) into C anchored at x1.
    if (n < 2) return false;
    const std::size_t ia = rng_.below(n);
    const int type = config_.loops[ia].type;
    std::vector<std::size_t> partners;
    for (std::size_t i = 0; i < n; ++i)
      if (i != ia && config_.loops[i].type == type) partners.push_back(i);
    if (partners.empty()) return false;
    const std::size_t ib = partners[rng_.below(partners.size())];
    const BridgePath& a = config_.loops[ia].path;
    const BridgePath& b = config_.loops[ib].path;
    const Index na = a.last(), nb = b.last();
    const int kc = a.k + b.k;
    if (kc > settings_.k_max) return false;
    const Point x1 = a.start(), x2 = b.start();
    const Point a_last = a.at(na - s), b_last = b.at(nb - s);
    BridgePath c;
    c.k = kc;
    c.slices_per_beta = s;
    c.samples.resize(model_.d, na + nb + 1);
    c.samples.leftCols(na + 1) = a.samples;
    c.samples.middleCols(na, nb + 1) = b.samples;
    c.samples.col(na + nb) = x1;
    space_->fill_bridge(c.samples, na - s, na, rng_);
    space_->fill_bridge(c.samples, na + nb - s, na + nb, rng_);
    if (!inside(c.samples, na - s, na) || !inside(c.samples, na + nb - s, na + nb)) return false;
    const double h_old = path_energy(a, type, {ia}) + path_energy(b, type, {ia, ib});
    const double h_new = path_energy(c, type, {ia, ib});
    if (h_new == kInf) return false;
    const double log_r = std::log(static_cast<double>(a.k) * b.k / kc) + space_->log_transition(a_last, x2, s) +
                         space_->log_transition(b_last, x1, s) - space_->log_transition(a_last, x1, s) -
                         space_->log_transition(b_last, x2, s) +
                         std::log(static_cast<double>(n) * static_cast<double>(partners.size())) -
                         std::log(static_cast<double>(n - 1) * (kc - 1)) - (h_new - h_old);
    if (!accept(rng_, log_r)) return false;
    energy_ += h_new - h_old;
    // Remove the higher index first so the lower one stays valid.
    remove_loop(std::max(ia, ib));
    remove_loop(std::min(ia, ib));
    add_loop(Loop(type, std::move(c)));
    ++st.accepted;
    return true;
  }
  // Split C at bead m*S into A (anchor x1) and B (anchor y).
  if (n == 0) return false;
  if (settings_.max_loops >= 0 && n >= static_cast<std::size_t>(settings_.max_loops)) return false;
  const std::size_t ic = rng_.below(n);
  const Loop& lc = config_.loops[ic];
  const BridgePath& c = lc.path;
  if (c.k < 2) return false;
  const int type = lc.type;
  const int m = 1 + static_cast<int>(rng_.below(static_cast<std::uint64_t>(c.k - 1)));
  const Index cut = static_cast<Index>(m) * s, nc = c.last();
  const Point x1 = c.start(), y = c.at(cut);
  const Point a_last = c.at(cut - s), b_last = c.at(nc - s);
  BridgePath a, b;
  a.k = m;
  b.k = c.k - m;
  a.slices_per_beta = b.slices_per_beta = s;
  a.samples = c.samples.leftCols(cut + 1);
  a.samples.col(cut) = x1;
  b.samples = c.samples.rightCols(nc - cut + 1);
  b.samples.col(nc - cut) = y;
  space_->fill_bridge(a.samples, cut - s, cut, rng_);
  space_->fill_bridge(b.samples, nc - cut - s, nc - cut, rng_);
  if (!inside(a.samples, cut - s, cut) || !inside(b.samples, nc - cut - s, nc - cut)) return false;
  const double h_old = path_energy(c, type, {ic});
  double h_new = path_energy(a, type, {ic});
  if (h_new < kInf) h_new += path_energy(b, type, {ic});
  if (h_new < kInf && interacting_) h_new += pair_energy(a, type, b, type, model_);
  if (h_new == kInf) return false;
  std::size_t same = 0;
  for (const auto& l : config_.loops) same += (l.type == type);
  // After the split there are n+1 loops and `same`+1 of this type; the reverse merge picks A then B.
  const double log_r = std::log(static_cast<double>(c.k) / (static_cast<double>(a.k) * b.k)) +
                       space_->log_transition(a_last, x1, s) + space_->log_transition(b_last, y, s) -
                       space_->log_transition(a_last, y, s) - space_->log_transition(b_last, x1, s) +
                       std::log(static_cast<double>(n) * (c.k - 1)) -
                       std::log(static_cast<double>(n + 1) * static_cast<double>(same)) - (h_new - h_old);
  if (!accept(rng_, log_r)) return false;
  energy_ += h_new - h_old;
  remove_loop(ic);
  add_loop(Loop(type, std::move(a)));
  add_loop(Loop(type, std::move(b)));
  ++st.accepted;
  return true;
}

bool LoopChain::update_wiggle() {
  MoveStats& st = stats_[static_cast<int>(Move::wiggle)];
  ++st.attempted;
  if (config_.loops.empty()) return false;
  const int s = settings_.slices_per_beta;
  const std::size_t i = rng_.below(config_.loops.size());
  const Loop& l = config_.loops[i];
  const Index first = static_cast<Index>(rng_.below(static_cast<std::uint64_t>(l.path.last() - s + 1)));
  BridgePath p = l.path;
  space_->fill_bridge(p.samples, first, first + s, rng_);
  if (!inside(p.samples, first, first + s)) return false;
  double dh = 0.0;
  if (interacting_) {
    const double h_new = path_energy(p, l.type, {i});
    if (h_new == kInf) return false;
    dh = h_new - path_energy(l.path, l.type, {i});
    if (!accept(rng_, -dh)) return false;
  }
  energy_ += dh;
  config_.loops[i].path = std::move(p);
  ++st.accepted;
  return true;
}

bool LoopChain::step() {
  const double total = settings_.mix_insert_delete + settings_.mix_swap + settings_.mix_wiggle;
  const double u = rng_.uniform() * total;
  if (u < settings_.mix_insert_delete) return update_insert_delete();
  if (u < settings_.mix_insert_delete + settings_.mix_swap) return update_swap();
  return update_wiggle();
}

void LoopChain::sweep() {
  for (int i = 0; i < settings_.moves_per_sweep; ++i) step();
  ++sweeps_;
  if (settings_.audit_interval > 0 && sweeps_ % settings_.audit_interval == 0) audit();
}

void LoopChain::run(long sweeps) {
  for (long i = 0; i < sweeps; ++i) sweep();
}

double LoopChain::audit() {
  const double h = energy_h(config_, model_);
  double drift = 0.0;
  if (h == kInf || energy_ == kInf) {
    drift = (h == energy_) ? 0.0 : kInf;
  } else {
    drift = std::abs(h - energy_) / std::max(1.0, std::abs(h));
  }
  for (int j = 0; j < model_.q; ++j) {
    if (functional_K(config_, j) != k_sum_[j]) throw std::logic_error("LoopChain: cached K out of sync");
    if (std::abs(log_functional_L(refs(config_), j) - log_l_[j]) > 1e-9)
      throw std::logic_error("LoopChain: cached L out of sync");
  }
  max_drift_ = std::max(max_drift_, drift);
  energy_ = h;
  return drift;
}

void LoopChain::set_loops(std::vector<Loop> loops) {
  config_.loops.clear();
  std::fill(k_sum_.begin(), k_sum_.end(), 0);
  std::fill(log_l_.begin(), log_l_.end(), 0.0);
  for (auto& l : loops) add_loop(std::move(l));
  energy_ = energy_h(config_, model_);
}

void LoopChain::save_checkpoint(std::ostream& os) const {
  os << "loopgas-chain 1\n";
  os << "sweeps " << sweeps_ << '\n';
  os << "stats";
  for (const auto& s : stats_) os << ' ' << s.attempted << ' ' << s.accepted;
  os << '\n';
  os << "rng\n";
  rng_.save(os);
  dump_config(os, config_);
}

void LoopChain::load_checkpoint(std::istream& is) {
  std::string tok;
  long version = 0;
  if (!(is >> tok >> version) || tok != "loopgas-chain" || version != 1)
    throw std::runtime_error("load_checkpoint: not a version-1 chain checkpoint");
  if (!(is >> tok >> sweeps_) || tok != "sweeps") throw std::runtime_error("load_checkpoint: missing sweep counter");
  if (!(is >> tok) || tok != "stats") throw std::runtime_error("load_checkpoint: missing move statistics");
  for (auto& s : stats_) is >> s.attempted >> s.accepted;
  if (!(is >> tok) || tok != "rng") throw std::runtime_error("load_checkpoint: missing generator state");
  rng_.load(is);
  LoopConfig c = load_config(is);
  if (c.home.dim() != config_.home.dim() || c.home.center != config_.home.center ||
      c.home.half_side != config_.home.half_side)
    throw std::runtime_error("load_checkpoint: home box differs from the configured one");
  set_loops(std::move(c.loops));
}

}  // namespace loopgas
