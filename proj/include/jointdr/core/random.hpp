#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace jointdr {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// A generator is identified by (seed, stream); the 128-bit counter is
/// (block, stream) and the key is the seed. Two generators with the same seed
/// and different streams never share a block, so any unit of work (a bootstrap
/// replicate, a simulated row, a block of draws) gets a reproducible private
/// sequence by using its index as the stream. Composite ids are folded with
/// substream().
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();
  void discard(std::uint64_t count);

  /// One application of the 10-round bijection.
  static Block apply(Block counter, Key key);

 private:
  void refill();

  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Block buffer_{};
  unsigned used_ = 4;
};

using Rng = Philox4x32;

/// Mixes a parent stream id with a child index (splitmix64 finalizer).
std::uint64_t substream(std::uint64_t parent, std::uint64_t child);

/// Uniform double on the open interval (0, 1) with 53 random bits.
double uniform_open01(Rng& rng);

}  // namespace jointdr
