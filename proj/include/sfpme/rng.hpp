#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace sfpme {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// A draw is a pure function of (counter, key): there is no internal state,
/// so any element of any stream can be regenerated on demand and streams
/// evaluated from different threads never interact.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Uniform in the open interval (0, 1) from 64 random bits (53 used).
constexpr double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
  // 52 bits keep bits + 0.5 exact, so the largest value is 1 - 2^-53
  const std::uint64_t bits = (std::uint64_t{hi} << 32 | lo) >> 12;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Coordinates of one block of two standard normals.
struct StreamCoordinate {
  std::uint64_t seed = 0;
  std::uint32_t tag = 0;
  std::uint32_t path = 0;
  std::uint64_t step = 0;
  std::uint32_t block = 0;
};

/// Two independent N(0, 1) draws (Box-Muller) at the given coordinate.
inline std::pair<double, double> normal_pair(const StreamCoordinate& c) noexcept {
  const Philox4x32::Counter ctr{c.block, static_cast<std::uint32_t>(c.step),
                                static_cast<std::uint32_t>(c.step >> 32), c.path};
  const Philox4x32::Key key{static_cast<std::uint32_t>(c.seed),
                            static_cast<std::uint32_t>(c.seed >> 32) ^
                                (c.tag * 0x5BD1E995u)};
  const auto r = Philox4x32::generate(ctr, key);
  const double u1 = to_open_unit(r[0], r[1]);
  const double u2 = to_open_unit(r[2], r[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace sfpme
