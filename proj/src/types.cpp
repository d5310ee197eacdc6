#include "loopgas/types.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

namespace loopgas {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

Rng Rng::for_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  Rng rng;
  rng.engine_.seed(seq);
  return rng;
}

double Rng::uniform() { return std::generate_canonical<double, 53>(engine_); }

double Rng::normal() { return normal_(engine_); }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: empty range");
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
}

void Rng::save(std::ostream& os) const { os << engine_ << '\n' << normal_ << '\n'; }

void Rng::load(std::istream& is) {
  is >> engine_ >> normal_;
  if (!is) throw std::runtime_error("Rng::load: malformed generator state");
}

bool Rng::operator==(const Rng& other) const {
  return engine_ == other.engine_ && normal_ == other.normal_;
}

}  // namespace loopgas
