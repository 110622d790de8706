#include "pdmp/rng.hpp"

#include <cmath>

namespace pdmp {

Rng Rng::stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32), 0x9e3779b9u};
  Rng r(0);
  r.engine_.seed(seq);
  return r;
}

double Rng::exponential() { return -std::log(uniform()); }

std::size_t Rng::below(std::size_t n) {
  auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return k < n ? k : n - 1;
}

}  // namespace pdmp
