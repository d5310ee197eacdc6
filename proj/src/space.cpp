#include "loopgas/space.hpp"

#include "loopgas/bridge.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace loopgas {

ContinuumSpace::ContinuumSpace(Box home, double beta, int slices_per_beta)
    : home_(std::move(home)), beta_(beta), s_(slices_per_beta) {
  if (!(beta_ > 0.0) || s_ < 1) throw std::invalid_argument("ContinuumSpace: need beta > 0 and S >= 1");
}

Point ContinuumSpace::sample_anchor(Rng& rng) const {
  Point x(home_.dim());
  for (int i = 0; i < home_.dim(); ++i) x[i] = home_.center[i] + home_.half_side * (2.0 * rng.uniform() - 1.0);
  return x;
}

double ContinuumSpace::log_transition(const Point& x, const Point& y, Index steps) const {
  const double t = beta_ * static_cast<double>(steps) / s_;
  return -0.5 * x.size() * std::log(2.0 * std::numbers::pi * t) - (x - y).squaredNorm() / (2.0 * t);
}

void ContinuumSpace::fill_bridge(PathSamples& nodes, Index first, Index last, Rng& rng) const {
  loopgas::fill_bridge(nodes, first, last, beta_ / s_, rng);
}

double ContinuumSpace::reference_log_mass(int k) const {
  return -0.5 * home_.dim() * std::log(2.0 * std::numbers::pi * beta_ * k);
}

LatticeSpace::LatticeSpace(int sites, double spacing, double beta, int slices_per_beta, Index max_steps)
    : sites_(sites), spacing_(spacing), s_(slices_per_beta) {
  if (sites < 1 || !(spacing > 0.0) || !(beta > 0.0) || slices_per_beta < 1 || max_steps < 1)
    throw std::invalid_argument("LatticeSpace: bad parameters");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(sites, sites);
  for (int i = 0; i + 1 < sites; ++i) {
    h(i, i) += 0.5;
    h(i + 1, i + 1) += 0.5;
    h(i, i + 1) -= 0.5;
    h(i + 1, i) -= 0.5;
  }
  h /= spacing * spacing;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const double dt = beta / slices_per_beta;
  powers_.reserve(static_cast<std::size_t>(max_steps + 1));
  for (Index n = 0; n <= max_steps; ++n) {
    const Eigen::VectorXd decay = (-dt * static_cast<double>(n) * es.eigenvalues().array()).exp();
    powers_.push_back(es.eigenvectors() * decay.asDiagonal() * es.eigenvectors().transpose());
  }
}

int LatticeSpace::site_of(double x) const {
  const long s = std::lround(x / spacing_);
  if (s < 0 || s >= sites_ || std::abs(x - s * spacing_) > 1e-9 * spacing_)
    throw std::invalid_argument("LatticeSpace: position is not a lattice site");
  return static_cast<int>(s);
}

Point LatticeSpace::position(int site) const { return Point::Constant(1, site * spacing_); }

const Eigen::MatrixXd& LatticeSpace::power(Index steps) const {
  if (steps < 0 || steps >= static_cast<Index>(powers_.size()))
    throw std::out_of_range("LatticeSpace: transition power beyond precomputed range");
  return powers_[static_cast<std::size_t>(steps)];
}

Box LatticeSpace::bounding_box() const {
  const double half = 0.5 * (sites_ - 1) * spacing_;
  return Box(Point::Constant(1, half), half);
}

Point LatticeSpace::sample_anchor(Rng& rng) const { return position(static_cast<int>(rng.below(sites_))); }

double LatticeSpace::log_transition(const Point& x, const Point& y, Index steps) const {
  const double p = power(steps)(site_of(x[0]), site_of(y[0]));
  return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

void LatticeSpace::fill_bridge(PathSamples& nodes, Index first, Index last, Rng& rng) const {
  const int target = site_of(nodes(0, last));
  int current = site_of(nodes(0, first));
  for (Index i = first + 1; i < last; ++i) {
    const Eigen::MatrixXd& step = power(1);
    const Eigen::MatrixXd& rest = power(last - i);
    Eigen::VectorXd w(sites_);
    for (int s = 0; s < sites_; ++s) w[s] = step(current, s) * rest(s, target);
    double u = rng.uniform() * w.sum();
    int next = sites_ - 1;
    for (int s = 0; s < sites_; ++s) {
      if (u < w[s]) {
        next = s;
        break;
      }
      u -= w[s];
    }
    nodes(0, i) = next * spacing_;
    current = next;
  }
}

double LatticeSpace::reference_log_mass(int k) const {
  return std::log(power(static_cast<Index>(k) * s_).trace() / sites_);
}

}  // namespace loopgas
