#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace cxr {

/// Derives a sub-seed from a master seed and a list of tags. The mapping is
/// stable across platforms and standard libraries, so adding a new tag
/// (say, a new class) never perturbs the streams of existing ones.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::string_view> tags);

/// Portable random stream. std::mt19937_64 is fully specified by the
/// standard; the distributions layered on top of it here are written out
/// explicitly because the std:: distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 bits of resolution.
  double unit();

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cxr
