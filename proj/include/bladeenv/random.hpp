#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>

namespace bladeenv {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// The 64-bit seed is the key; the 128-bit counter is split into a 64-bit
/// substream id and a 64-bit block index, so `Rng(seed, i)` gives an
/// independent, reproducible stream for work item `i` regardless of the
/// order in which items are processed.
class Rng {
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t substream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next_u64(); }
  std::uint64_t next_u64();
  std::uint32_t next_u32();

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Standard normal via Box-Muller on this stream's uniforms.
  double normal();

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t substream() const noexcept { return substream_; }

  /// Raw Philox4x32-10 block function.
  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                             std::array<std::uint32_t, 2> key);

private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t substream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  std::optional<double> spare_normal_;
};

/// Derives a child seed from a parent seed and a label (SplitMix64 over FNV-1a of the label).
std::uint64_t derive_seed(std::uint64_t parent, const char* label);

}  // namespace bladeenv
