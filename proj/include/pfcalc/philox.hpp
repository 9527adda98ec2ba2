#pragma once

#include <array>
#include <cstdint>

namespace pfcalc {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). The output
/// is a pure function of (counter, key), so any document can be simulated
/// independently of the others and of the worker that handles it.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter apply(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Uniform draws addressed by (seed; item, slot, stream).
class CounterRng {
public:
  explicit constexpr CounterRng(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  /// Value in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t item, std::uint32_t slot,
                           std::uint32_t stream) const noexcept {
    const auto out = Philox4x32::apply({static_cast<std::uint32_t>(item),
                                        static_cast<std::uint32_t>(item >> 32), slot,
                                        stream},
                                       key_);
    const std::uint64_t bits = (std::uint64_t{out[0]} << 32) | out[1];
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  /// True with probability p (exactly never for p = 0, always for p = 1).
  constexpr bool bernoulli(double p, std::uint64_t item, std::uint32_t slot,
                           std::uint32_t stream) const noexcept {
    return uniform(item, slot, stream) < p;
  }

private:
  Philox4x32::Key key_;
};

}  // namespace pfcalc
