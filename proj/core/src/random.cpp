#include "cxr/random.hpp"

#include <limits>
#include <stdexcept>

namespace cxr {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::string_view> tags) {
  std::uint64_t state = splitmix64(master);
  for (const auto tag : tags) {
    std::uint64_t h = kFnvOffset;
    for (unsigned char c : tag) {
      h ^= c;
      h *= kFnvPrime;
    }
    // separator so ("ab","c") and ("a","bc") differ
    h ^= 0xff;
    h *= kFnvPrime;
    state = splitmix64(state ^ h);
  }
  return state;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below: bound must be positive");
  // Rejection sampling on the largest multiple of bound.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double Rng::unit() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

}  // namespace cxr
