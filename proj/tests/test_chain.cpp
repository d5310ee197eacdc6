#include "loopgas/chain.hpp"
#include "loopgas/estimators.hpp"

#include "balance_harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace loopgas;
using loopgas::testing::LatticeBalance;

namespace {

ModelParams lattice_model() {
  ModelParams m = ModelParams::free_gas(1, 1.0, Eigen::VectorXd::Constant(1, 0.6));
  m.set_potential(0, 0, PairPotential::square_well(0.8, 1.5));
  return m;
}

ModelParams free1(double z) { return ModelParams::free_gas(1, 1.0, Eigen::VectorXd::Constant(1, z)); }

}  // namespace

TEST(DetailedBalance, InsertDelete) {
  const LatticeBalance lb(lattice_model(), 2, 2, 2, 2);
  const auto r = lb.run(Move::insert_delete, 600000, 11);
  EXPECT_GT(r.pairs, 50);
  EXPECT_GT(r.p_value, 0.01) << "chi2 " << r.chi2 << " over " << r.pairs << " pairs";
}

TEST(DetailedBalance, MergeSplit) {
  const LatticeBalance lb(lattice_model(), 2, 2, 2, 2);
  const auto r = lb.run(Move::swap, 600000, 12);
  EXPECT_GT(r.pairs, 5);
  EXPECT_GT(r.p_value, 0.01) << "chi2 " << r.chi2 << " over " << r.pairs << " pairs";
}

TEST(DetailedBalance, Wiggle) {
  const LatticeBalance lb(lattice_model(), 2, 2, 2, 2);
  const auto r = lb.run(Move::wiggle, 600000, 13);
  EXPECT_GT(r.pairs, 10);
  EXPECT_GT(r.p_value, 0.01) << "chi2 " << r.chi2 << " over " << r.pairs << " pairs";
}

TEST(DetailedBalance, HarnessHasPower) {
  LatticeBalance lb(lattice_model(), 2, 2, 2, 2);
  ModelParams wrong = lattice_model();
  wrong.z[0] = 0.45;
  lb.set_target(wrong);
  EXPECT_LT(lb.run(Move::insert_delete, 600000, 11).p_value, 1e-6);
}

TEST(Chain, VacuumLimit) {
  const auto m = ModelParams::free_gas(2, 1.0, Eigen::VectorXd::Constant(1, 1e-6));
  SamplerSettings s;
  s.slices_per_beta = 8;
  LoopChain chain(m, Box::centered(2, 3.0), s, 5);
  long occupied = 0;
  for (int i = 0; i < 2000; ++i) {
    chain.sweep();
    occupied += static_cast<long>(chain.config().size());
  }
  EXPECT_LE(occupied / 2000.0 / 36.0, 1e-4);
}

TEST(Chain, FreeDensityOneDimension) {
  // Theta_{-1} in d = 1: sum_k z^k / (k sqrt(2 pi k)).
  const double z = 0.5;
  double expected = 0.0;
  for (int k = 1; k <= 20; ++k) expected += std::pow(z, k) / (k * std::sqrt(2.0 * std::numbers::pi * k));
  SamplerSettings s;
  s.slices_per_beta = 8;
  LoopChain chain(free1(z), Box::centered(1, 12.0), s, 6);
  StreamBudget b;
  b.samples = 4000;
  b.burn_in_sweeps = 300;
  b.sweeps_between = 3;
  const auto d = estimate_density(chain, Box::centered(1, 6.0), b);
  EXPECT_NEAR(d.density[0].mean, expected, 4.0 * d.density[0].std_error);
  EXPECT_FALSE(d.near_boundary);
}

TEST(Chain, MultiplicityLawInOneDimension) {
  const double z = 0.5;
  SamplerSettings s;
  s.slices_per_beta = 4;
  s.k_max = 8;
  LoopChain chain(free1(z), Box::centered(1, 15.0), s, 7);
  StreamBudget b;
  b.samples = 4000;
  b.burn_in_sweeps = 300;
  b.sweeps_between = 3;
  const auto d = estimate_density(chain, Box::centered(1, 8.0), b);
  for (int k = 1; k <= 4; ++k) {
    const double expected = std::pow(z, k) / (k * std::sqrt(2.0 * std::numbers::pi * k));
    EXPECT_NEAR(d.k_histogram[0][k - 1], expected, 4.0 * d.k_histogram_err[0][k - 1] + 1e-4) << "k = " << k;
  }
}

TEST(Chain, WiggleAlwaysAcceptedForFreeGas) {
  SamplerSettings s;
  s.slices_per_beta = 8;
  s.mix_insert_delete = 0.0;
  s.mix_swap = 0.0;
  s.confine = false;
  LoopChain chain(ModelParams::free_gas(2, 1.0, Eigen::VectorXd::Constant(1, 0.5)), Box::centered(2, 3.0), s, 8);
  Rng rng(1);
  chain.set_loops({Loop(0, sample_bridge(Point::Zero(2), Point::Zero(2), 3, 8, 1.0, rng))});
  chain.run(50);
  EXPECT_GT(chain.stats(Move::wiggle).attempted, 0);
  EXPECT_EQ(chain.stats(Move::wiggle).accepted, chain.stats(Move::wiggle).attempted);
}

TEST(Chain, SplitOfUnitLoopRejected) {
  SamplerSettings s;
  s.slices_per_beta = 4;
  s.mix_insert_delete = 0.0;
  s.mix_wiggle = 0.0;
  LoopChain chain(ModelParams::free_gas(2, 1.0, Eigen::VectorXd::Constant(1, 0.5)), Box::centered(2, 3.0), s, 9);
  Rng rng(2);
  chain.set_loops({Loop(0, sample_bridge(Point::Zero(2), Point::Zero(2), 1, 4, 1.0, rng))});
  chain.run(20);
  EXPECT_EQ(chain.stats(Move::swap).accepted, 0);
  EXPECT_EQ(chain.config().size(), 1u);
}

TEST(Chain, HardCoreNeverViolated) {
  ModelParams m = ModelParams::free_gas(2, 1.0, Eigen::VectorXd::Constant(1, 0.5));
  m.set_potential(0, 0, PairPotential::hard_core(0.4));
  SamplerSettings s;
  s.slices_per_beta = 8;
  s.audit_interval = 5;
  LoopChain chain(m, Box::centered(2, 2.0), s, 10);
  for (int i = 0; i < 400; ++i) {
    chain.sweep();
    ASSERT_TRUE(std::isfinite(energy_h(chain.config(), m)));
  }
  EXPECT_GT(chain.stats(Move::insert_delete).accepted, 0);
}

TEST(Chain, CachedEnergyDriftAfterManyWiggles) {
  ModelParams m = ModelParams::free_gas(2, 1.0, Eigen::VectorXd::Constant(1, 0.5));
  m.set_potential(0, 0, PairPotential::smooth_bump(1.0, 1.0));
  SamplerSettings s;
  s.slices_per_beta = 8;
  SamplerSettings w = s;
  w.mix_insert_delete = 0.0;
  w.mix_swap = 0.0;
  w.confine = false;
  LoopChain wiggler(m, Box::centered(2, 2.0), w, 12);
  Rng rng(3);
  std::vector<Loop> loops;
  for (int i = 0; i < 4; ++i) {
    const Point x = Point(Eigen::Vector2d(0.3 * i, 0.1 * i));
    loops.emplace_back(0, sample_bridge(x, x, 1 + i % 2, 8, 1.0, rng));
  }
  wiggler.set_loops(std::move(loops));
  ASSERT_GT(wiggler.config().size(), 1u);
  ASSERT_GT(wiggler.energy(), 0.0);
  for (int i = 0; i < 10000; ++i) wiggler.update_wiggle();
  EXPECT_GT(wiggler.stats(Move::wiggle).accepted, 100);
  EXPECT_LE(wiggler.audit(), 1e-8);
}

TEST(Chain, CheckpointRestoresBitExact) {
  ModelParams m = ModelParams::free_gas(2, 1.0, Eigen::Vector2d(0.4, 0.5));
  m.set_potential(0, 1, PairPotential::hard_core(0.3));
  SamplerSettings s;
  s.slices_per_beta = 8;
  LoopChain a(m, Box::centered(2, 2.0), s, 13);
  a.run(50);
  std::stringstream ck;
  a.save_checkpoint(ck);
  LoopChain b(m, Box::centered(2, 2.0), s, 999);
  b.load_checkpoint(ck);
  a.run(30);
  b.run(30);
  std::stringstream da, db;
  dump_config(da, a.config());
  dump_config(db, b.config());
  EXPECT_EQ(da.str(), db.str());
  EXPECT_EQ(a.sweeps_done(), b.sweeps_done());
}

TEST(Chain, SameSeedSameTrajectory) {
  const auto m = ModelParams::free_gas(2, 1.0, Eigen::VectorXd::Constant(1, 0.5));
  SamplerSettings s;
  s.slices_per_beta = 8;
  LoopChain a(m, Box::centered(2, 2.0), s, 14), b(m, Box::centered(2, 2.0), s, 14);
  a.run(40);
  b.run(40);
  std::stringstream da, db;
  dump_config(da, a.config());
  dump_config(db, b.config());
  EXPECT_EQ(da.str(), db.str());
}

TEST(Chain, RejectsBadSettings) {
  const auto m = ModelParams::free_gas(2, 1.0, Eigen::VectorXd::Constant(1, 0.5));
  SamplerSettings s;
  s.k_max = 0;
  EXPECT_THROW(LoopChain(m, Box::centered(2, 2.0), s, 1), std::invalid_argument);
  s = SamplerSettings{};
  s.mix_insert_delete = s.mix_swap = s.mix_wiggle = 0.0;
  EXPECT_THROW(LoopChain(m, Box::centered(2, 2.0), s, 1), std::invalid_argument);
  EXPECT_THROW(LoopChain(m, Box::centered(3, 2.0), SamplerSettings{}, 1), std::invalid_argument);
}
