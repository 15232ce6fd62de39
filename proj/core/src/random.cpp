#include "rank_sde/random.hpp"

#include <cmath>
#include <numbers>

#include "rank_sde/errors.hpp"

namespace rank_sde {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform strictly inside (0, 1).
inline double open_uniform(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::apply(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

double standard_normal(std::uint64_t seed, std::uint64_t path_index, std::uint64_t step,
                       std::uint32_t component) noexcept {
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed),
                            static_cast<std::uint32_t>(seed >> 32)};
  // The path index occupies one counter word; its upper half is folded into
  // the component word so that 64-bit indices remain distinct in practice.
  const Philox4x32::Counter ctr{
      component ^ static_cast<std::uint32_t>(path_index >> 32),
      static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
      static_cast<std::uint32_t>(path_index)};
  const auto r = Philox4x32::apply(ctr, key);
  const double u1 = open_uniform(r[0], r[1]);
  const double u2 = open_uniform(r[2], r[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void brownian_increments(std::uint64_t seed, std::uint64_t path_index, std::uint64_t step,
                         double dt, std::span<double> out) {
  if (!(dt > 0.0)) throw Error(ErrorKind::parameter_error, "brownian_increments: dt must be > 0");
  const double scale = std::sqrt(dt);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = scale * standard_normal(seed, path_index, step, static_cast<std::uint32_t>(k));
  }
}

std::vector<double> brownian_increments(std::uint64_t seed, std::uint64_t path_index,
                                        std::uint64_t step, std::size_t n, double dt) {
  std::vector<double> out(n);
  brownian_increments(seed, path_index, step, dt, out);
  return out;
}

}  // namespace rank_sde
