#pragma once

#include "loopgas/model.hpp"
#include "loopgas/types.hpp"

#include <vector>

namespace loopgas {

// Where loops live: anchor reference measure and the one-step transition law.
// A "step" is one grid interval of length beta / S.
class PathSpace {
 public:
  virtual ~PathSpace() = default;

  virtual int dim() const = 0;
  virtual int slices_per_beta() const = 0;
  virtual Point sample_anchor(Rng& rng) const = 0;
  // Total mass of the anchor reference measure (volume, or site count on a lattice).
  virtual double anchor_measure() const = 0;
  virtual double log_transition(const Point& x, const Point& y, Index steps) const = 0;
  // Resample nodes strictly between first and last from the bridge law.
  virtual void fill_bridge(PathSamples& nodes, Index first, Index last, Rng& rng) const = 0;
  // Anchor-independent proxy for log p_{k beta}(x, x); only shapes the proposal of k.
  virtual double reference_log_mass(int k) const = 0;
};

class ContinuumSpace final : public PathSpace {
 public:
  ContinuumSpace(Box home, double beta, int slices_per_beta);

  int dim() const override { return home_.dim(); }
  int slices_per_beta() const override { return s_; }
  Point sample_anchor(Rng& rng) const override;
  double anchor_measure() const override { return home_.volume(); }
  double log_transition(const Point& x, const Point& y, Index steps) const override;
  void fill_bridge(PathSamples& nodes, Index first, Index last, Rng& rng) const override;
  double reference_log_mass(int k) const override;

 private:
  Box home_;
  double beta_;
  int s_;
};

// One-dimensional chain of sites at positions i * spacing with the heat kernel of the
// halved graph Laplacian (free ends). A small exactly enumerable surrogate of the continuum.
class LatticeSpace final : public PathSpace {
 public:
  LatticeSpace(int sites, double spacing, double beta, int slices_per_beta, Index max_steps);

  int dim() const override { return 1; }
  int slices_per_beta() const override { return s_; }
  Point sample_anchor(Rng& rng) const override;
  double anchor_measure() const override { return static_cast<double>(sites_); }
  double log_transition(const Point& x, const Point& y, Index steps) const override;
  void fill_bridge(PathSamples& nodes, Index first, Index last, Rng& rng) const override;
  double reference_log_mass(int k) const override;

  int sites() const { return sites_; }
  int site_of(double x) const;
  Point position(int site) const;
  const Eigen::MatrixXd& power(Index steps) const;
  Box bounding_box() const;

 private:
  int sites_;
  double spacing_;
  int s_;
  std::vector<Eigen::MatrixXd> powers_;  // powers_[n] = T^n
};

}  // namespace loopgas
