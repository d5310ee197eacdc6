#include "loopgas/loopgas.hpp"

#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace loopgas {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_grid(const BridgePath& a, const BridgePath& b) {
  if (a.slices_per_beta != b.slices_per_beta)
    throw std::invalid_argument("energy_h: mixed discretizations (S = " + std::to_string(a.slices_per_beta) +
                                " and " + std::to_string(b.slices_per_beta) + ")");
}

// Trapezoid sum over the equal-time nodes of leg `la` of a and leg `lb` of b.
double leg_pair(const BridgePath& a, Index la, const BridgePath& b, Index lb, const PairPotential& v, double r2max,
                double dt) {
  const Index s = a.slices_per_beta;
  const Index oa = la * s, ob = lb * s;
  const double d2min = v.hard_core_diameter() * v.hard_core_diameter();
  double sum = 0.0;
  for (Index i = 0; i <= s; ++i) {
    const double r2 = (a.samples.col(oa + i) - b.samples.col(ob + i)).squaredNorm();
    if (r2 >= r2max) continue;
    if (r2 < d2min) return kInf;
    const double w = (i == 0 || i == s) ? 0.5 : 1.0;
    sum += w * v(std::sqrt(r2));
  }
  return sum * dt;
}

struct Extent {
  Point lo, hi;
};

Extent extent(const BridgePath& p) {
  return {p.samples.rowwise().minCoeff(), p.samples.rowwise().maxCoeff()};
}

bool far_apart(const Extent& a, const Extent& b, double range) {
  const Point gap = (a.lo - b.hi).cwiseMax(b.lo - a.hi).cwiseMax(0.0);
  return gap.squaredNorm() >= range * range;
}

std::string hex(double x) {
  std::ostringstream os;
  os << std::hexfloat << x;
  return os.str();
}

double read_double(std::istream& is) {
  std::string tok;
  if (!(is >> tok)) throw std::runtime_error("load_config: unexpected end of input");
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw std::runtime_error("load_config: bad number '" + tok + "'");
  return v;
}

long read_int(std::istream& is) {
  long v = 0;
  if (!(is >> v)) throw std::runtime_error("load_config: expected integer");
  return v;
}

void expect(std::istream& is, const std::string& word) {
  std::string tok;
  if (!(is >> tok) || tok != word) throw std::runtime_error("load_config: expected '" + word + "', got '" + tok + "'");
}

Point read_point(std::istream& is, int d) {
  Point x(d);
  for (int i = 0; i < d; ++i) x[i] = read_double(is);
  return x;
}

}  // namespace

bool OpenPathSystem::consistent() const {
  const std::size_t n = starts.size();
  if (ends.size() != n || permutation.size() != n || paths.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (int p : permutation) {
    if (p < 0 || static_cast<std::size_t>(p) >= n || seen[p]) return false;
    seen[p] = true;
  }
  for (std::size_t l = 0; l < n; ++l)
    if (paths[l].start() != starts[l] || paths[l].end() != ends[permutation[l]]) return false;
  return true;
}

std::size_t LoopConfig::count(int type) const {
  std::size_t n = 0;
  for (const auto& l : loops) n += (l.type == type);
  return n;
}

bool LoopConfig::anchors_in_home() const {
  for (const auto& l : loops)
    if (!home.contains(l.anchor())) return false;
  return true;
}

std::vector<PathRef> refs(const LoopConfig& c) { return refs(std::span<const Loop>(c.loops)); }

std::vector<PathRef> refs(std::span<const Loop> loops) {
  std::vector<PathRef> out;
  out.reserve(loops.size());
  for (const auto& l : loops) out.push_back({l.type, &l.path});
  return out;
}

std::vector<PathRef> refs(std::span<const OpenPathSystem> systems) {
  std::vector<PathRef> out;
  for (const auto& s : systems)
    for (const auto& p : s.paths) out.push_back({s.type, &p});
  return out;
}

std::vector<PathRef> join(std::vector<PathRef> a, const std::vector<PathRef>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

int functional_K(std::span<const PathRef> c, int type) {
  int k = 0;
  for (const auto& r : c)
    if (r.type == type) k += r.path->k;
  return k;
}

int functional_K(const LoopConfig& c, int type) { return functional_K(refs(c), type); }

int functional_K(const OpenPathSystem& s) {
  int k = 0;
  for (const auto& p : s.paths) k += p.k;
  return k;
}

double functional_L(std::span<const PathRef> c, int type) {
  double l = 1.0;
  for (const auto& r : c)
    if (r.type == type) l *= r.path->k;
  return l;
}

double functional_L(const LoopConfig& c, int type) { return functional_L(refs(c), type); }

double log_functional_L(std::span<const PathRef> c, int type) {
  double l = 0.0;
  for (const auto& r : c)
    if (r.type == type) l += std::log(static_cast<double>(r.path->k));
  return l;
}

bool chi_indicator(std::span<const PathRef> c, const Box& box0) {
  for (const auto& r : c) {
    const BridgePath& p = *r.path;
    for (int m = 1; m < p.k; ++m)
      if (box0.contains(p.samples.col(static_cast<Index>(m) * p.slices_per_beta))) return false;
  }
  return true;
}

bool chi_indicator(const LoopConfig& c, const Box& box0) { return chi_indicator(refs(c), box0); }

bool alpha_indicator(std::span<const PathRef> c, const Box& box) {
  for (const auto& r : c) {
    const auto& s = r.path->samples;
    const auto dev = (s.colwise() - box.center).cwiseAbs();
    if (dev.size() > 0 && dev.maxCoeff() > box.half_side) return false;
  }
  return true;
}

bool alpha_indicator(const LoopConfig& c, const Box& box) { return alpha_indicator(refs(c), box); }

double self_energy(const BridgePath& p, int type, const ModelParams& m) {
  const PairPotential& v = m.potential(type, type);
  if (v.is_zero() || p.k < 2) return 0.0;
  const double dt = m.beta / p.slices_per_beta;
  const double r2max = v.range() * v.range();
  double h = 0.0;
  for (Index a = 0; a < p.k; ++a)
    for (Index b = a + 1; b < p.k; ++b) {
      h += leg_pair(p, a, p, b, v, r2max, dt);
      if (h == kInf) return kInf;
    }
  return h;
}

double pair_energy(const BridgePath& a, int ta, const BridgePath& b, int tb, const ModelParams& m) {
  require_same_grid(a, b);
  const PairPotential& v = m.potential(ta, tb);
  if (v.is_zero()) return 0.0;
  if (far_apart(extent(a), extent(b), v.range())) return 0.0;
  const double dt = m.beta / a.slices_per_beta;
  const double r2max = v.range() * v.range();
  double h = 0.0;
  for (Index la = 0; la < a.k; ++la)
    for (Index lb = 0; lb < b.k; ++lb) {
      h += leg_pair(a, la, b, lb, v, r2max, dt);
      if (h == kInf) return kInf;
    }
  return h;
}

double external_energy(const BridgePath& p, int type, const ExternalCC& ext, const ModelParams& m) {
  if (ext.empty()) return 0.0;
  const double dt = m.beta / p.slices_per_beta;
  const Extent e = extent(p);
  const Index s = p.slices_per_beta;
  double h = 0.0;
  for (int tp = 0; tp < static_cast<int>(ext.points.size()); ++tp) {
    const PairPotential& v = m.potential(type, tp);
    if (v.is_zero()) continue;
    const double r2max = v.range() * v.range();
    const double d2min = v.hard_core_diameter() * v.hard_core_diameter();
    for (const Point& x : ext.points[tp]) {
      if (far_apart(e, Extent{x, x}, v.range())) continue;
      for (Index leg = 0; leg < p.k; ++leg) {
        double sum = 0.0;
        for (Index i = 0; i <= s; ++i) {
          const double r2 = (p.samples.col(leg * s + i) - x).squaredNorm();
          if (r2 >= r2max) continue;
          if (r2 < d2min) return kInf;
          sum += ((i == 0 || i == s) ? 0.5 : 1.0) * v(std::sqrt(r2));
        }
        h += sum * dt;
      }
    }
  }
  return h;
}

double energy_h(std::span<const PathRef> a, std::span<const PathRef> b, const ExternalCC* ext,
                const ModelParams& m) {
  double h = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    h += self_energy(*a[i].path, a[i].type, m);
    for (std::size_t j = i + 1; j < a.size(); ++j) h += pair_energy(*a[i].path, a[i].type, *a[j].path, a[j].type, m);
    for (const auto& r : b) h += pair_energy(*a[i].path, a[i].type, *r.path, r.type, m);
    if (ext) h += external_energy(*a[i].path, a[i].type, *ext, m);
    if (h == kInf) return kInf;
  }
  return h;
}

double energy_h(const LoopConfig& c, const ModelParams& m) {
  const auto r = refs(c);
  return energy_h(r, {}, c.external ? &*c.external : nullptr, m);
}

double log_weight(const LoopConfig& c, const std::optional<Box>& box0_exclusion, const ModelParams& m) {
  const auto r = refs(c);
  if (box0_exclusion && !chi_indicator(r, *box0_exclusion)) return -kInf;
  double w = 0.0;
  for (int j = 0; j < m.q; ++j) w += functional_K(r, j) * std::log(m.z[j]) - log_functional_L(r, j);
  const double h = energy_h(r, {}, c.external ? &*c.external : nullptr, m);
  if (h == kInf) return -kInf;
  return w - h;
}

void dump_config(std::ostream& os, const LoopConfig& c) {
  const int d = c.home.dim();
  os << "loopgas-config 1\n";
  os << "dim " << d << '\n';
  os << "home";
  for (int i = 0; i < d; ++i) os << ' ' << hex(c.home.center[i]);
  os << ' ' << hex(c.home.half_side) << '\n';
  if (c.external) {
    os << "external " << c.external->points.size() << '\n';
    for (std::size_t j = 0; j < c.external->points.size(); ++j) {
      os << "type " << j << ' ' << c.external->points[j].size() << '\n';
      for (const auto& x : c.external->points[j]) {
        for (int i = 0; i < d; ++i) os << (i ? " " : "") << hex(x[i]);
        os << '\n';
      }
    }
  } else {
    os << "external none\n";
  }
  os << "loops " << c.loops.size() << '\n';
  for (const auto& l : c.loops) {
    os << "loop " << l.type << ' ' << l.path.k << ' ' << l.path.slices_per_beta << '\n';
    for (Index n = 0; n < l.path.node_count(); ++n) {
      for (int i = 0; i < d; ++i) os << (i ? " " : "") << hex(l.path.samples(i, n));
      os << '\n';
    }
  }
  os << "end\n";
}

LoopConfig load_config(std::istream& is) {
  expect(is, "loopgas-config");
  if (read_int(is) != 1) throw std::runtime_error("load_config: unsupported format version");
  expect(is, "dim");
  const long d = read_int(is);
  if (d < 1 || d > 3) throw std::runtime_error("load_config: dimension out of range");
  LoopConfig c;
  expect(is, "home");
  c.home.center = read_point(is, static_cast<int>(d));
  c.home.half_side = read_double(is);
  expect(is, "external");
  std::string tok;
  is >> tok;
  if (tok != "none") {
    const long q = std::stol(tok);
    ExternalCC ext;
    ext.points.resize(static_cast<std::size_t>(q));
    for (long j = 0; j < q; ++j) {
      expect(is, "type");
      if (read_int(is) != j) throw std::runtime_error("load_config: external types out of order");
      const long n = read_int(is);
      for (long i = 0; i < n; ++i) ext.points[j].push_back(read_point(is, static_cast<int>(d)));
    }
    c.external = std::move(ext);
  }
  expect(is, "loops");
  const long n = read_int(is);
  if (n < 0) throw std::runtime_error("load_config: negative loop count");
  c.loops.reserve(static_cast<std::size_t>(n));
  for (long l = 0; l < n; ++l) {
    expect(is, "loop");
    Loop loop;
    loop.type = static_cast<int>(read_int(is));
    loop.path.k = static_cast<int>(read_int(is));
    loop.path.slices_per_beta = static_cast<int>(read_int(is));
    if (loop.path.k < 1 || loop.path.slices_per_beta < 1) throw std::runtime_error("load_config: bad loop header");
    const Index nodes = static_cast<Index>(loop.path.k) * loop.path.slices_per_beta + 1;
    loop.path.samples.resize(d, nodes);
    for (Index i = 0; i < nodes; ++i)
      for (long c2 = 0; c2 < d; ++c2) loop.path.samples(c2, i) = read_double(is);
    c.loops.push_back(std::move(loop));
  }
  expect(is, "end");
  return c;
}

}  // namespace loopgas
