#include "edgmat/rng.hpp"

#include <cmath>
#include <numbers>

namespace edgmat {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::string_view tag)
    : key_(mix(mix(seed) ^ fnv1a(tag))) {}

std::uint64_t CounterRng::mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t CounterRng::draw(std::uint64_t key, std::uint64_t counter) noexcept {
  return mix(key + (counter + 1) * kGamma);
}

double CounterRng::uniform(std::uint64_t key, std::uint64_t counter) noexcept {
  return static_cast<double>(draw(key, counter) >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::at(std::uint64_t counter) const noexcept { return draw(key_, counter); }

double CounterRng::uniform_at(std::uint64_t counter) const noexcept {
  return uniform(key_, counter);
}

namespace {
__extension__ using u128 = unsigned __int128;
}  // namespace

std::uint64_t CounterRng::next_below(std::uint64_t bound) noexcept {
  // Lemire's multiply-shift with rejection.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const u128 m = static_cast<u128>(next()) * bound;
    if (static_cast<std::uint64_t>(m) >= threshold) {
      return static_cast<std::uint64_t>(m >> 64);
    }
  }
}

double CounterRng::next_normal() noexcept {
  const double u1 = 1.0 - next_uniform();  // (0, 1]
  const double u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace edgmat
