#pragma once

#include <cstdint>
#include <random>

namespace pite {

using Engine = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Addressable random stream. A stream is identified by its key; child
/// streams are derived by index, so the draws a computation sees depend only
/// on its position in the (seed, index, index, ...) tree and never on which
/// thread runs it or in what order.
class RandomStream {
 public:
  explicit constexpr RandomStream(std::uint64_t seed) noexcept
      : key_(detail::splitmix64(seed ^ 0x6a09e667f3bcc908ULL)) {}

  constexpr RandomStream substream(std::uint64_t index) const noexcept {
    RandomStream child(0);
    child.key_ = detail::splitmix64(key_ ^ detail::splitmix64(index + 0x243f6a8885a308d3ULL));
    return child;
  }

  Engine engine() const {
    const std::uint64_t a = key_;
    const std::uint64_t b = detail::splitmix64(key_);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return Engine(seq);
  }

  constexpr std::uint64_t key() const noexcept { return key_; }

  friend constexpr bool operator==(const RandomStream&, const RandomStream&) = default;

 private:
  std::uint64_t key_;
};

}  // namespace pite
