#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <random>

namespace loopgas {

// Points live in d <= 3 dimensions; the fixed maximum keeps them off the heap.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

// Column i is the path position at time i * beta / S.
using PathSamples = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, Eigen::Dynamic>;

using Index = Eigen::Index;

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1);

  // Stream for chain `index` of a run seeded with `seed`.
  static Rng for_stream(std::uint64_t seed, std::uint64_t index);

  double uniform();  // [0, 1)
  double normal();   // standard normal
  std::uint64_t below(std::uint64_t n);  // uniform on {0, ..., n-1}
  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return engine_; }

  void save(std::ostream& os) const;
  void load(std::istream& is);

  bool operator==(const Rng& other) const;

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace loopgas
