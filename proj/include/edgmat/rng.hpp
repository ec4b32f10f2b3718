#pragma once

#include <cstdint>
#include <string_view>

namespace edgmat {

/// Counter-based 64-bit generator.
///
/// Draw n of a stream is SplitMix64's finalizer applied to
/// `key + (n + 1) * 0x9e3779b97f4a7c15`, where the key is derived from
/// `(seed, tag)`. Draws are a pure function of (key, counter), so a kernel can
/// reserve a block of counters and evaluate them in any order or in parallel
/// and still match a sequential run bit for bit.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::string_view tag);

  static std::uint64_t mix(std::uint64_t z) noexcept;
  static std::uint64_t draw(std::uint64_t key, std::uint64_t counter) noexcept;
  static double uniform(std::uint64_t key, std::uint64_t counter) noexcept;

  std::uint64_t at(std::uint64_t counter) const noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform_at(std::uint64_t counter) const noexcept;

  std::uint64_t next() noexcept { return at(counter_++); }
  double next_uniform() noexcept { return uniform_at(counter_++); }
  /// Uniform integer in [0, bound); bound > 0.
  std::uint64_t next_below(std::uint64_t bound) noexcept;
  /// Standard normal via Box-Muller (consumes two draws).
  double next_normal() noexcept;

  /// Returns the first counter of a block of n draws and advances past it.
  std::uint64_t reserve(std::uint64_t n) noexcept {
    const std::uint64_t base = counter_;
    counter_ += n;
    return base;
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace edgmat
