#pragma once

#include <array>
#include <cstdint>

namespace jaam {

/// Philox4x32-10 counter-based generator.
///
/// Output block n of stream s under key k is philox(k, {n_lo, n_hi, s_lo, s_hi}).
/// Words are consumed in order x0, x1, x2, x3 of each block. This is the
/// whole replay contract: any implementation of Philox4x32-10 plus the key
/// derivation in `derive_key` reproduces every draw made by this library.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;

  Philox4x32(std::uint64_t key, std::uint64_t stream) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return 0xffffffffu; }

  result_type operator()() noexcept;

  /// Single-block evaluation, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 2> key,
                                            std::array<std::uint32_t, 4> counter) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> buffer_{};
  int next_ = 4;
};

/// Tags separating the independent noise sources of one trajectory.
enum class StreamTag : std::uint64_t {
  Jumps = 1,    // waiting times and marks
  Wiener = 2,   // fine-grid or on-demand Brownian increments
  Levy = 3,     // Levy-area series coefficients
  Bridge = 4,   // Brownian-bridge split points
  Timing = 5,   // uncoupled noise for efficiency runs (plus scheme offset)
};

/// key = splitmix64(splitmix64(splitmix64(seed) ^ path) ^ tag)
std::uint64_t derive_key(std::uint64_t master_seed, std::uint64_t path_index,
                         std::uint64_t tag) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Variates drawn from one Philox stream.
///
/// uniform(): 53-bit mantissa from two consecutive words (hi first),
///   u = (bits + 0.5) * 2^-53, so u lies in the open interval (0, 1).
/// normal(): Box-Muller on (u1, u2); both outputs are used, cos branch first.
/// exponential(rate): -log(u) / rate.
class RandomStream {
 public:
  RandomStream(std::uint64_t key, std::uint64_t stream) noexcept : engine_(key, stream) {}

  static RandomStream for_path(std::uint64_t master_seed, std::uint64_t path_index,
                               StreamTag tag, std::uint64_t stream = 0) noexcept {
    return {derive_key(master_seed, path_index, static_cast<std::uint64_t>(tag)), stream};
  }

  double uniform() noexcept;
  double normal() noexcept;
  double exponential(double rate) noexcept;

 private:
  Philox4x32 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace jaam
