#include "loopgas/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace loopgas {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Second derivatives of the natural cubic spline through (x, y).
std::vector<double> natural_spline_moments(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> m(n, 0.0);
  if (n < 3) return m;
  std::vector<double> diag(n - 2), upper(n - 2), rhs(n - 2);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
    diag[i - 1] = 2.0 * (h0 + h1);
    upper[i - 1] = h1;
    rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
  }
  // Thomas sweep; the lower diagonal equals the previous row's upper entry.
  for (std::size_t i = 1; i < diag.size(); ++i) {
    const double w = upper[i - 1] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  for (std::size_t i = diag.size(); i-- > 0;) {
    const double next = (i + 1 < diag.size()) ? m[i + 2] : 0.0;
    m[i + 1] = (rhs[i] - upper[i] * next) / diag[i];
  }
  return m;
}

}  // namespace

PairPotential::PairPotential() = default;

PairPotential PairPotential::square_well(double height, double range, double hard_core) {
  PairPotential p;
  p.kind_ = ProfileKind::square_well;
  p.height_ = height;
  p.range_ = range;
  p.hard_core_ = hard_core;
  p.finish();
  return p;
}

PairPotential PairPotential::smooth_bump(double height, double range, double hard_core) {
  PairPotential p;
  p.kind_ = ProfileKind::smooth_bump;
  p.height_ = height;
  p.range_ = range;
  p.hard_core_ = hard_core;
  p.finish();
  return p;
}

PairPotential PairPotential::hard_core(double diameter) {
  PairPotential p;
  p.range_ = diameter;
  p.hard_core_ = diameter;
  p.finish();
  return p;
}

PairPotential PairPotential::tabulated(std::vector<double> r, std::vector<double> v, double range,
                                       double hard_core) {
  if (r.size() != v.size() || r.size() < 2)
    throw std::invalid_argument("tabulated potential needs at least two (r, V) nodes of equal count");
  for (std::size_t i = 1; i < r.size(); ++i)
    if (!(r[i] > r[i - 1])) throw std::invalid_argument("tabulated potential radii must increase strictly");
  PairPotential p;
  p.kind_ = ProfileKind::tabulated;
  p.range_ = range;
  p.hard_core_ = hard_core;
  p.table_r_ = std::move(r);
  p.table_v_ = std::move(v);
  p.spline_m_ = natural_spline_moments(p.table_r_, p.table_v_);
  p.finish();
  return p;
}

double PairPotential::profile(double r) const {
  switch (kind_) {
    case ProfileKind::zero:
      return 0.0;
    case ProfileKind::square_well:
      return r < range_ ? height_ : 0.0;
    case ProfileKind::smooth_bump: {
      if (r >= range_) return 0.0;
      const double u = 1.0 - (r / range_) * (r / range_);
      return height_ * u * u * u;
    }
    case ProfileKind::tabulated: {
      const auto& x = table_r_;
      const auto& y = table_v_;
      if (r <= x.front()) return y.front();
      if (r >= x.back()) return y.back();
      const auto hi = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), r) - x.begin());
      const std::size_t lo = hi - 1;
      const double h = x[hi] - x[lo];
      const double a = (x[hi] - r) / h, b = (r - x[lo]) / h;
      return a * y[lo] + b * y[hi] +
             ((a * a * a - a) * spline_m_[lo] + (b * b * b - b) * spline_m_[hi]) * h * h / 6.0;
    }
  }
  return 0.0;
}

double PairPotential::operator()(double r) const {
  if (r < hard_core_) return kInf;
  if (r >= range_) return 0.0;
  return profile(r);
}

bool PairPotential::is_zero() const { return hard_core_ == 0.0 && (range_ == 0.0 || kind_ == ProfileKind::zero || vbar_[0] == 0.0); }

bool PairPotential::operator==(const PairPotential& o) const {
  return kind_ == o.kind_ && height_ == o.height_ && range_ == o.range_ && hard_core_ == o.hard_core_ &&
         table_r_ == o.table_r_ && table_v_ == o.table_v_;
}

void PairPotential::finish() {
  if (!(hard_core_ >= 0.0)) throw std::invalid_argument("hard-core diameter must be >= 0");
  if (!(range_ >= hard_core_)) throw std::invalid_argument("range R must be >= hard-core diameter D");
  vbar_[0] = vbar_[1] = vbar_[2] = 0.0;
  const double width = range_ - hard_core_;
  if (width <= 0.0 || kind_ == ProfileKind::zero) return;
  // Central differences strictly inside (D, R); jumps at the ends do not count.
  const int n = 4000;
  const double h = 1e-4 * width;
  for (int i = 1; i < n; ++i) {
    const double r = hard_core_ + width * i / n;
    if (r - h <= hard_core_ || r + h >= range_) continue;
    const double v0 = profile(r), vm = profile(r - h), vp = profile(r + h);
    vbar_[0] = std::max(vbar_[0], std::abs(v0));
    vbar_[1] = std::max(vbar_[1], std::abs(vp - vm) / (2.0 * h));
    vbar_[2] = std::max(vbar_[2], std::abs(vp - 2.0 * v0 + vm) / (h * h));
  }
  // Clean up finite-difference noise on piecewise constant profiles.
  const double scale = std::max(vbar_[0], 1.0);
  if (vbar_[1] < 1e-9 * scale) vbar_[1] = 0.0;
  if (vbar_[2] < 1e-5 * scale) vbar_[2] = 0.0;
}

double potential_eval(const PairPotential& p, double r) {
  if (!(r >= 0.0)) throw std::domain_error("potential_eval: negative distance");
  return p(r);
}

ModelParams ModelParams::free_gas(int d, double beta, const Eigen::VectorXd& z) {
  ModelParams m;
  m.d = d;
  m.q = static_cast<int>(z.size());
  m.beta = beta;
  m.z = z;
  m.potentials.assign(static_cast<std::size_t>(m.q * m.q), PairPotential::zero());
  return m;
}

void ModelParams::set_potential(int j, int jp, const PairPotential& p) {
  if (potentials.size() != static_cast<std::size_t>(q * q)) potentials.assign(static_cast<std::size_t>(q * q), PairPotential());
  potentials[j * q + jp] = p;
  potentials[jp * q + j] = p;
}

bool ModelParams::interacting() const {
  return std::any_of(potentials.begin(), potentials.end(), [](const PairPotential& p) { return !p.is_zero(); });
}

double ModelParams::interaction_range() const {
  double r = 0.0;
  for (const auto& p : potentials)
    if (!p.is_zero()) r = std::max(r, p.range());
  return r;
}

double ModelParams::max_hard_core() const {
  double r = 0.0;
  for (const auto& p : potentials) r = std::max(r, p.hard_core_diameter());
  return r;
}

double ModelParams::vbar0() const {
  double v = 0.0;
  for (const auto& p : potentials) v = std::max(v, p.vbar0());
  return v;
}

double ModelParams::vbar1() const {
  double v = 0.0;
  for (const auto& p : potentials) v = std::max(v, p.vbar1());
  return v;
}

double ModelParams::vbar2() const {
  double v = 0.0;
  for (const auto& p : potentials) v = std::max(v, p.vbar2());
  return v;
}

std::vector<std::string> validate_params(const ModelParams& m) {
  std::vector<std::string> out;
  auto fail = [&](const std::string& s) { out.push_back(s); };
  if (m.d < 1 || m.d > 3) fail("dimension d must be 1, 2 or 3 (got " + std::to_string(m.d) + ")");
  if (m.q < 1) {
    fail("type count q must be >= 1");
    return out;
  }
  if (!(m.beta > 0.0) || !std::isfinite(m.beta)) fail("inverse temperature beta must be finite and > 0");
  if (m.z.size() != m.q) {
    fail("fugacity vector has " + std::to_string(m.z.size()) + " entries, expected q = " + std::to_string(m.q));
  } else {
    for (int j = 0; j < m.q; ++j)
      if (!(m.z[j] > 0.0 && m.z[j] < 1.0)) {
        std::ostringstream os;
        os << "fugacity not in (0,1): z[" << j << "] = " << m.z[j];
        fail(os.str());
      }
  }
  if (m.potentials.size() != static_cast<std::size_t>(m.q * m.q)) {
    fail("potential table must have q*q entries");
    return out;
  }
  for (int j = 0; j < m.q; ++j)
    for (int jp = j + 1; jp < m.q; ++jp)
      if (!(m.potential(j, jp) == m.potential(jp, j)))
        fail("asymmetric potential table at (" + std::to_string(j) + "," + std::to_string(jp) + ")");
  for (int j = 0; j < m.q; ++j)
    for (int jp = j; jp < m.q; ++jp) {
      const auto& p = m.potential(j, jp);
      const std::string tag = "(" + std::to_string(j) + "," + std::to_string(jp) + ")";
      const double lo = p.hard_core_diameter(), hi = p.range();
      std::vector<double> grid;
      const int n = 2000;
      for (int i = 0; i < n; ++i) grid.push_back(lo + (hi - lo) * i / n);
      for (double r : p.table_r()) if (r >= lo && r < hi) grid.push_back(r);
      for (double r : grid)
        if (p.profile(r) < 0.0) {
          std::ostringstream os;
          os << "potential negative at r = " << r << " for pair " << tag;
          fail(os.str());
          break;
        }
      for (int i = 0; i <= n; ++i) {
        const double r = hi + (hi + 1.0) * i / n;
        if (p.kind() != ProfileKind::square_well && p.kind() != ProfileKind::smooth_bump && p.profile(r) != 0.0) {
          std::ostringstream os;
          os << "nonzero profile beyond R = " << hi << " (V(" << r << ") = " << p.profile(r) << ") for pair " << tag;
          fail(os.str());
          break;
        }
      }
    }
  return out;
}

void require_valid(const ModelParams& m) {
  const auto v = validate_params(m);
  if (v.empty()) return;
  std::string msg = "invalid model parameters:";
  for (const auto& s : v) msg += "\n  " + s;
  throw std::invalid_argument(msg);
}

bool Box::contains(const Point& x) const { return (x - center).cwiseAbs().maxCoeff() <= half_side; }

double Box::volume() const { return std::pow(2.0 * half_side, dim()); }

double Box::distance(const Point& x) const {
  return ((x - center).cwiseAbs().array() - half_side).max(0.0).matrix().norm();
}

bool Box::contains_box(const Box& inner, double margin) const {
  const double slack = 1e-12 * std::max(1.0, half_side);
  return ((inner.center - center).cwiseAbs().array() + inner.half_side + margin <= half_side + slack).all();
}

bool ExternalCC::empty() const { return count() == 0; }

std::size_t ExternalCC::count() const {
  std::size_t n = 0;
  for (const auto& v : points) n += v.size();
  return n;
}

bool ExternalCC::in_annulus(const Box& box, double range) const {
  for (const auto& v : points)
    for (const auto& x : v) {
      const double dist = box.distance(x);
      if (!(dist > 0.0 && dist <= range)) return false;
    }
  return true;
}

ExternalCC ExternalCC::lattice(const Box& box, double range, double spacing, int q) {
  if (!(spacing > 0.0)) throw std::invalid_argument("external lattice spacing must be > 0");
  const int d = box.dim();
  const int n = static_cast<int>(std::ceil((box.half_side + range) / spacing));
  std::vector<Point> pts;
  Eigen::VectorXi idx = Eigen::VectorXi::Constant(d, -n);
  while (true) {
    Point x = box.center + spacing * idx.cast<double>();
    const double dist = box.distance(x);
    if (dist > 0.0 && dist <= range) pts.push_back(x);
    int c = 0;
    while (c < d && ++idx[c] > n) idx[c++] = -n;
    if (c == d) break;
  }
  ExternalCC ext;
  ext.points.assign(static_cast<std::size_t>(q), pts);
  return ext;
}

ExternalCC ExternalCC::scatter(const Box& box, double range, int per_type, int q, Rng& rng) {
  ExternalCC ext;
  ext.points.resize(static_cast<std::size_t>(q));
  if (!(range > 0.0)) {
    if (per_type > 0) throw std::invalid_argument("external scatter needs a positive interaction range");
    return ext;
  }
  const double outer = box.half_side + range;
  const int d = box.dim();
  for (int j = 0; j < q; ++j) {
    while (static_cast<int>(ext.points[j].size()) < per_type) {
      Point x(d);
      for (int i = 0; i < d; ++i) x[i] = box.center[i] + outer * (2.0 * rng.uniform() - 1.0);
      const double dist = box.distance(x);
      if (dist > 0.0 && dist <= range) ext.points[j].push_back(x);
    }
  }
  return ext;
}

}  // namespace loopgas
