#pragma once

#include <cstdint>
#include <random>

namespace pdmp {

// Per-stream generator. Streams are keyed by (master seed, stream index) so
// that path i draws the same numbers whatever the worker layout.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t bits() { return engine_(); }
  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  double exponential();
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace pdmp
