#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace gencarve {

// xoshiro256** 1.0, seeded through splitmix64. Every random decision in the
// toolkit goes through this generator so datasets and pools can be replayed
// from the manifest's (name, version, seed) triple in any language.
class Rng {
 public:
  static constexpr std::string_view kName = "xoshiro256starstar";
  static constexpr int kVersion = 1;

  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  // Uniform double in [0, 1) with 53 random bits.
  double unit();

 private:
  std::array<std::uint64_t, 4> s_;
};

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t fnv1a64(std::string_view text);

// Seed for a named sub-stream ("dataset", "pool", "sample", "decode") of a
// root seed. Sub-streams are independent so re-running one phase never
// perturbs another.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

}  // namespace gencarve
