#include "loopgas/oracle.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

using namespace loopgas;

namespace {

ModelParams one_type(double z) { return ModelParams::free_gas(1, 1.0, Eigen::VectorXd::Constant(1, z)); }

Eigen::VectorXd spectrum(const Eigen::MatrixXd& h) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h, Eigen::EigenvaluesOnly).eigenvalues();
}

// Half the path-graph Laplacian written out by hand.
Eigen::MatrixXd path_kinetic(int n) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    k(i, i) += 0.5;
    k(i + 1, i + 1) += 0.5;
    k(i, i + 1) = k(i + 1, i) = -0.5;
  }
  return k;
}

ModelParams wr_model() {
  ModelParams m = ModelParams::free_gas(1, 1.0, Eigen::Vector2d(0.4, 0.6));
  m.set_potential(0, 1, PairPotential::hard_core(0.5));
  return m;
}

}  // namespace

TEST(Hamiltonian, TwoSiteSpectrum) {
  const auto m = one_type(0.5);
  const auto lm = LatticeModel::line(2, 1.0, m, {1});
  const auto ev = spectrum(build_hamiltonian(lm, {1}, nullptr));
  ASSERT_EQ(ev.size(), 2);
  EXPECT_NEAR(ev[0], 0.0, 1e-14);
  EXPECT_NEAR(ev[1], 1.0, 1e-14);
  EXPECT_EQ(build_hamiltonian(lm, {0}, nullptr).rows(), 1);
}

TEST(Hamiltonian, KilledBoundaryAddsCoordination) {
  const auto m = one_type(0.5);
  auto lm = LatticeModel::line(2, 1.0, m, {1});
  lm.boundary = LatticeBoundary::killed;
  const auto ev = spectrum(build_hamiltonian(lm, {1}, nullptr));
  EXPECT_NEAR(ev[0], 0.5, 1e-14);
  EXPECT_NEAR(ev[1], 1.5, 1e-14);
}

TEST(Hamiltonian, SpacingScalesKinetic) {
  const auto m = one_type(0.5);
  const auto lm = LatticeModel::line(3, 0.5, m, {1});
  EXPECT_LT((lm.kinetic() - 4.0 * path_kinetic(3)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Hamiltonian, HardCoreRemovesStates) {
  ModelParams m = one_type(0.5);
  m.set_potential(0, 0, PairPotential::hard_core(1.5));
  const auto lm = LatticeModel::line(2, 1.0, m, {2});
  OccupationBasis b;
  EXPECT_EQ(build_hamiltonian(lm, {2}, nullptr, &b).rows(), 0);
  m.set_potential(0, 0, PairPotential::hard_core(0.5));
  build_hamiltonian(lm, {2}, nullptr, &b);
  ASSERT_EQ(b.dim(), 1);
  EXPECT_EQ(b.states[0], (std::vector<int>{1, 1}));
}

TEST(Hamiltonian, FreeTwoBosonsTensorSum) {
  const auto m = one_type(0.5);
  const auto lm = LatticeModel::line(3, 1.0, m, {2});
  const auto one = spectrum(path_kinetic(3));
  std::vector<double> sums;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) sums.push_back(one[i] + one[j]);
  std::sort(sums.begin(), sums.end());
  const auto two = spectrum(build_hamiltonian(lm, {2}, nullptr));
  ASSERT_EQ(two.size(), 6);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(two[i], sums[i], 1e-12);
}

TEST(Hamiltonian, SectorTooLargeRejected) {
  const auto m = one_type(0.5);
  const auto lm = LatticeModel::line(30, 1.0, m, {5});
  EXPECT_THROW(build_hamiltonian(lm, {5}, nullptr), std::length_error);
}

TEST(Partition, TwoSiteValue) {
  const auto m = one_type(0.5);
  const auto r = partition_functions(LatticeModel::line(2, 1.0, m, {1}), nullptr);
  EXPECT_NEAR(r.grand, 1.683939720585721, 1e-12);
}

TEST(Partition, SectorAdditivityAndFreeFactorization) {
  // Free bosons: Xi_n is the complete homogeneous symmetric polynomial of e^{-beta e_i}.
  const auto m = one_type(0.3);
  const auto lm = LatticeModel::line(3, 1.0, m, {3});
  const auto r = partition_functions(lm, nullptr);
  const auto e = spectrum(path_kinetic(3));
  std::vector<double> w(3);
  for (int i = 0; i < 3; ++i) w[i] = std::exp(-e[i]);
  std::vector<double> h(4, 0.0);
  h[0] = 1.0;
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) {
      h[2] += w[a] * w[b];
      for (int c = b; c < 3; ++c) h[3] += w[a] * w[b] * w[c];
    }
  h[1] = w[0] + w[1] + w[2];
  double grand = 0.0;
  for (const auto& s : r.sectors) {
    EXPECT_NEAR(s.xi, h[s.n[0]], 1e-12) << "n = " << s.n[0];
    grand += std::pow(0.3, s.n[0]) * s.xi;
  }
  EXPECT_NEAR(r.grand, grand, 1e-12);
  EXPECT_GT(r.truncation_bound, 0.0);
}

TEST(Partition, VacuumLimitAndMonotoneInZ) {
  const auto tiny = partition_functions(LatticeModel::line(3, 1.0, one_type(1e-12), {2}), nullptr);
  EXPECT_NEAR(tiny.grand, 1.0, 1e-10);
  double prev = 0.0;
  for (double z : {0.1, 0.3, 0.5, 0.7}) {
    const auto m = one_type(z);
    const double g = partition_functions(LatticeModel::line(3, 1.0, m, {2}), nullptr).grand;
    EXPECT_GT(g, prev);
    prev = g;
  }
}

TEST(Partition, RepulsionNeverIncreasesSectors) {
  const auto free = one_type(0.5);
  ModelParams rep = free;
  rep.set_potential(0, 0, PairPotential::square_well(0.7, 1.5));
  const auto a = partition_functions(LatticeModel::line(3, 1.0, free, {3}), nullptr);
  const auto b = partition_functions(LatticeModel::line(3, 1.0, rep, {3}), nullptr);
  for (std::size_t i = 0; i < a.sectors.size(); ++i) {
    if (a.sectors[i].n[0] >= 2) EXPECT_LT(b.sectors[i].xi, a.sectors[i].xi);
    else EXPECT_NEAR(b.sectors[i].xi, a.sectors[i].xi, 1e-13);
    EXPECT_GE(b.sectors[i].min_eigenvalue, a.sectors[i].min_eigenvalue - 1e-12);
  }
}

TEST(DensityMatrix, TraceSymmetryPositivity) {
  const auto m = wr_model();
  const auto lm = LatticeModel::line(3, 1.0, m, {2, 2});
  const auto r = density_matrix(lm, nullptr);
  EXPECT_NEAR(r.matrix.trace(), 1.0, 1e-12);
  EXPECT_LT((r.matrix - r.matrix.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_GE(spectrum(r.matrix).minCoeff(), -1e-10);
  EXPECT_EQ(r.basis.dim(), r.matrix.rows());
}

TEST(DensityMatrix, VacuumProjectorAtSmallFugacity) {
  const auto m = one_type(1e-12);
  const auto r = density_matrix(LatticeModel::line(3, 1.0, m, {2}), nullptr);
  const int vac = r.basis.index.at(std::vector<int>(3, 0));
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(r.matrix.rows(), r.matrix.cols());
  p(vac, vac) = 1.0;
  EXPECT_LT((r.matrix - p).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(PartialTrace, AllAndNothing) {
  const auto m = wr_model();
  const auto lm = LatticeModel::line(3, 1.0, m, {1, 1});
  const auto r = density_matrix(lm, nullptr);
  const auto all = partial_trace(r, {0, 1, 2});
  EXPECT_EQ(all.basis.dim(), r.basis.dim());
  double worst = 0.0;
  for (int a = 0; a < r.basis.dim(); ++a)
    for (int b = 0; b < r.basis.dim(); ++b)
      worst = std::max(worst, std::abs(all.matrix(all.basis.index.at(r.basis.states[a]),
                                                   all.basis.index.at(r.basis.states[b])) -
                                       r.matrix(a, b)));
  EXPECT_LT(worst, 1e-15);
  const auto none = partial_trace(r, {});
  ASSERT_EQ(none.matrix.rows(), 1);
  EXPECT_NEAR(none.matrix(0, 0), 1.0, 1e-12);
  EXPECT_THROW(partial_trace(partial_trace(r, {0}), {1}), std::invalid_argument);
}

TEST(PartialTrace, ReducedMatrixIsState) {
  const auto m = wr_model();
  const auto r = density_matrix(LatticeModel::line(4, 1.0, m, {2, 2}), nullptr);
  const auto red = partial_trace(r, {1, 2});
  EXPECT_NEAR(red.matrix.trace(), 1.0, 1e-12);
  EXPECT_GE(spectrum(red.matrix).minCoeff(), -1e-10);
  // Single-site occupation statistics survive the reduction.
  double direct = 0.0, reduced = 0.0;
  for (int i = 0; i < r.basis.dim(); ++i) direct += r.matrix(i, i) * r.basis.states[i][1];
  for (int i = 0; i < red.basis.dim(); ++i) reduced += red.matrix(i, i) * red.basis.states[i][0];
  EXPECT_NEAR(direct, reduced, 1e-13);
}

TEST(Compatibility, WidomRowlinsonInstance) {
  const auto m = wr_model();
  const auto lm = LatticeModel::line(4, 1.0, m, {2, 2});
  EXPECT_LT(check_compatibility(lm, nullptr, {1}, {1, 2}), 1e-12);
  EXPECT_LT(check_compatibility(lm, nullptr, {1, 2}, {0, 1, 2}), 1e-12);
  EXPECT_THROW(check_compatibility(lm, nullptr, {3}, {1, 2}), std::invalid_argument);
}

TEST(Compatibility, WithExternalConfiguration) {
  ModelParams m = wr_model();
  m.set_potential(0, 0, PairPotential::square_well(0.3, 1.2));
  const auto lm = LatticeModel::line(4, 1.0, m, {2, 1});
  ExternalCC ext;
  ext.points = {{Point::Constant(1, -1.0)}, {Point::Constant(1, 4.0)}};
  const auto with = partition_functions(lm, &ext);
  const auto without = partition_functions(lm, nullptr);
  EXPECT_NE(with.grand, without.grand);
  EXPECT_LT(check_compatibility(lm, &ext, {2}, {1, 2, 3}), 1e-12);
}
