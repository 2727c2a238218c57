#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace cxr::toy {

/// Writes a synthetic chest-radiograph-like corpus:
///   <root>/covid/*.png   hazy bright opacities in the lower lung fields
///   <root>/normal/*.png  clear dark lung fields
///   <root>/viral/*.png   streaky interstitial pattern
/// Images are 8-bit greyscale, `side` x `side`, distinct byte content.
struct ToyCorpusOptions {
  int per_class = 10;
  int side = 96;
  std::uint64_t seed = 7;
  std::map<std::string, int> per_class_override;  ///< subdir -> count
};

void write_toy_corpus(const std::filesystem::path& root, const ToyCorpusOptions& options);

}  // namespace cxr::toy
