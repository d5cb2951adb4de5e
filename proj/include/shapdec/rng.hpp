#pragma once

#include <cmath>
#include <cstdint>

#include "shapdec/normal.hpp"

namespace shapdec {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix64(mix64(parent ^ 0x6A09E667F3BCC909ULL) + mix64(index + kGolden));
}

}  // namespace detail

/// Counter-based random stream.
///
/// Output n of a stream is mix64(key + (n + 1) * golden), so a stream is fully
/// determined by its key and position. Keys are derived by hashing
/// (seed, stream index); `substream(k)` derives a child key the same way.
/// Only integer arithmetic is used for the raw bits, and the floating-point
/// transforms below are plain expressions, so sequences are identical on
/// every IEEE-754 platform.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_index)
      : seed_(seed), index_(stream_index), key_(detail::derive_key(detail::mix64(seed), stream_index)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_index() const noexcept { return index_; }

  /// Independent child stream. Pure in (this stream's key, k).
  RngStream substream(std::uint64_t k) const noexcept {
    RngStream child;
    child.seed_ = seed_;
    child.index_ = k;
    child.key_ = detail::derive_key(key_, k);
    return child;
  }

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGolden);
  }

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept {
    const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(wide >> 64);
  }

  /// Standard normal by inversion.
  double normal() noexcept { return normal_quantile(uniform_open()); }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t index_ = 0;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace shapdec
