#pragma once

#include <array>
#include <cstdint>
#include <optional>

namespace demr {

// xoshiro256** seeded through splitmix64. Output streams are identical on
// every platform; Gaussian draws use Box-Muller with the second variate
// cached.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);
  double gaussian();

  // Independent child stream. The child depends only on this generator's
  // seed and `stream`, never on how many draws were taken from the parent.
  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_;
  std::optional<double> spare_;
};

std::uint64_t splitmix64(std::uint64_t& x);

}  // namespace demr
