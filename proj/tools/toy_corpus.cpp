#include "toy_corpus.hpp"

#include "cxr/random.hpp"
#include "cxr/raster.hpp"

#include <algorithm>
#include <cmath>

namespace cxr::toy {

namespace {

enum class Pattern { Covid, Normal, Viral };

Raster draw(Pattern pattern, int side, Rng& rng) {
  Raster img(side, side, 1);
  const double s = side;
  // Two elliptical lung fields with a little jitter in placement.
  const double jx = rng.uniform(-0.03, 0.03) * s;
  const double jy = rng.uniform(-0.03, 0.03) * s;
  const double phase = rng.uniform(0.0, 6.283);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      double v = 150.0;  // soft tissue
      for (const double cx : {0.32 * s + jx, 0.68 * s + jx}) {
        const double dx = (x - cx) / (0.16 * s);
        const double dy = (y - (0.5 * s + jy)) / (0.32 * s);
        const double r2 = dx * dx + dy * dy;
        if (r2 < 1.0) {
          double lung = 45.0;
          switch (pattern) {
            case Pattern::Normal: break;
            case Pattern::Covid:
              // opacity increasing towards the lower periphery
              lung += 140.0 * std::clamp(0.3 + 0.9 * (y - 0.45 * s) / (0.4 * s), 0.0, 1.0);
              break;
            case Pattern::Viral:
              lung += 50.0 + 45.0 * std::sin(0.9 * x + 0.4 * y + phase);
              break;
          }
          v = lung + (v - lung) * r2 * r2;
        }
      }
      v += rng.uniform(-12.0, 12.0);
      img.at(x, y) = static_cast<float>(std::round(std::clamp(v, 0.0, 255.0)));
    }
  }
  return img;
}

}  // namespace

void write_toy_corpus(const std::filesystem::path& root, const ToyCorpusOptions& options) {
  const std::pair<std::string, Pattern> classes[] = {
      {"covid", Pattern::Covid}, {"normal", Pattern::Normal}, {"viral", Pattern::Viral}};
  for (const auto& [dir, pattern] : classes) {
    const auto it = options.per_class_override.find(dir);
    const int count = it == options.per_class_override.end() ? options.per_class : it->second;
    std::filesystem::create_directories(root / dir);
    Rng rng(derive_seed(options.seed, {"toy", dir}));
    for (int i = 0; i < count; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "%s_%04d.png", dir.c_str(), i);
      write_png(draw(pattern, options.side, rng), root / dir / name);
    }
  }
}

}  // namespace cxr::toy
