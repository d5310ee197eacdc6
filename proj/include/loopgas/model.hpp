#pragma once

#include "loopgas/types.hpp"

#include <string>
#include <vector>

namespace loopgas {

enum class ProfileKind { zero, square_well, smooth_bump, tabulated };

// Radial pair potential: +inf on [0, D), smooth profile on [D, R), zero beyond R.
class PairPotential {
 public:
  PairPotential();  // V == 0

  static PairPotential zero() { return PairPotential(); }
  static PairPotential square_well(double height, double range, double hard_core = 0.0);
  // height * (1 - (r/R)^2)^3 on [0, R): twice continuously differentiable at R.
  static PairPotential smooth_bump(double height, double range, double hard_core = 0.0);
  static PairPotential hard_core(double diameter);
  // Natural cubic spline through (r_i, v_i). Values beyond the last node are held constant,
  // so a table that does not vanish at `range` is caught by validate_params.
  static PairPotential tabulated(std::vector<double> r, std::vector<double> v, double range,
                                 double hard_core = 0.0);

  double operator()(double r) const;
  // Raw smooth profile, ignoring the hard core and the support cut.
  double profile(double r) const;

  ProfileKind kind() const { return kind_; }
  double hard_core_diameter() const { return hard_core_; }
  double range() const { return range_; }
  double height() const { return height_; }
  double vbar0() const { return vbar_[0]; }
  double vbar1() const { return vbar_[1]; }
  double vbar2() const { return vbar_[2]; }
  bool is_zero() const;

  const std::vector<double>& table_r() const { return table_r_; }
  const std::vector<double>& table_v() const { return table_v_; }

  bool operator==(const PairPotential& other) const;

 private:
  void finish();

  ProfileKind kind_ = ProfileKind::zero;
  double height_ = 0.0;
  double range_ = 0.0;
  double hard_core_ = 0.0;
  std::vector<double> table_r_, table_v_, spline_m_;
  double vbar_[3] = {0.0, 0.0, 0.0};
};

// Throws std::domain_error for r < 0.
double potential_eval(const PairPotential& p, double r);

struct ModelParams {
  int d = 2;
  int q = 1;
  double beta = 1.0;
  Eigen::VectorXd z = Eigen::VectorXd::Constant(1, 0.5);
  std::vector<PairPotential> potentials = std::vector<PairPotential>(1);  // row-major q x q

  static ModelParams free_gas(int d, double beta, const Eigen::VectorXd& z);

  const PairPotential& potential(int j, int jp) const { return potentials[j * q + jp]; }
  void set_potential(int j, int jp, const PairPotential& p);

  bool interacting() const;
  double interaction_range() const;  // max R over type pairs
  double max_hard_core() const;
  double vbar0() const;
  double vbar1() const;
  double vbar2() const;
};

// Every violated invariant as a readable line; empty means valid.
std::vector<std::string> validate_params(const ModelParams& m);
// Throws std::invalid_argument listing all violations.
void require_valid(const ModelParams& m);

struct Box {
  Point center;
  double half_side = 1.0;

  Box() = default;
  Box(Point c, double l) : center(std::move(c)), half_side(l) {}
  static Box centered(int d, double l) { return Box(Point::Zero(d), l); }

  int dim() const { return static_cast<int>(center.size()); }
  bool contains(const Point& x) const;
  double volume() const;
  // Euclidean distance from x to the closed box (0 inside).
  double distance(const Point& x) const;
  Box shifted(const Point& s) const { return Box(center + s, half_side); }
  // True if `inner` sits inside this box with at least `margin` to spare in every coordinate.
  bool contains_box(const Box& inner, double margin = 0.0) const;
};

// Static classical configuration outside the home box, per type.
struct ExternalCC {
  std::vector<std::vector<Point>> points;

  bool empty() const;
  std::size_t count() const;
  std::size_t count(int type) const { return type < static_cast<int>(points.size()) ? points[type].size() : 0; }
  // Each point must satisfy 0 < dist_Eu(x, box) <= range.
  bool in_annulus(const Box& box, double range) const;

  // Square lattice of the given spacing restricted to the annulus, same points for every type.
  static ExternalCC lattice(const Box& box, double range, double spacing, int q);
  // `per_type` uniform points in the annulus (rejection from the enclosing cube).
  static ExternalCC scatter(const Box& box, double range, int per_type, int q, Rng& rng);
};

}  // namespace loopgas
