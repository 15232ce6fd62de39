#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace rank_sde {

// Philox4x32-10 counter-based generator: a keyed
// bijection of a 128-bit counter, so any draw can be addressed directly.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) noexcept;
};

// Standard normal addressed by (seed, path, step, component).
double standard_normal(std::uint64_t seed, std::uint64_t path_index, std::uint64_t step,
                       std::uint32_t component) noexcept;

// n independent Normal(0, dt) draws for one time step of one path. Identical
// arguments always reproduce identical output.
void brownian_increments(std::uint64_t seed, std::uint64_t path_index, std::uint64_t step,
                         double dt, std::span<double> out);
std::vector<double> brownian_increments(std::uint64_t seed, std::uint64_t path_index,
                                        std::uint64_t step, std::size_t n, double dt);

}  // namespace rank_sde
