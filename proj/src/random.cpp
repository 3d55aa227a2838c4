#include "madi/random.hpp"

#include <cmath>
#include <numbers>

namespace madi {

double CounterRng::uniform01() noexcept {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = (*this)();
  __uint128_t m = static_cast<__uint128_t>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = (*this)();
      m = static_cast<__uint128_t>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double CounterRng::normal() noexcept {
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double CounterRng::exponential() noexcept {
  double u = uniform01();
  while (u <= 0.0) u = uniform01();
  return -std::log(u);
}

std::uint64_t derive_key(std::uint64_t master_seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t key = CounterRng::mix(master_seed ^ 0x6A09E667F3BCC909ull);
  std::uint64_t depth = 0;
  for (std::uint64_t component : path) {
    ++depth;
    key = CounterRng::mix(key ^ CounterRng::mix(component + depth * CounterRng::kGamma));
  }
  return key;
}

}  // namespace madi
