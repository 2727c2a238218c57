#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cxr {

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major, channel-interleaved float image. Intensities are in 8-bit
/// units ([0, 255]) regardless of the source bit depth, so "one intensity
/// level" means the same thing everywhere.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> pixels;

  Raster() = default;
  Raster(int w, int h, int c, float fill = 0.0f)
      : width(w), height(h), channels(c),
        pixels(static_cast<std::size_t>(w) * h * c, fill) {}

  [[nodiscard]] bool empty() const { return pixels.empty(); }

  [[nodiscard]] std::size_t offset(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  [[nodiscard]] float at(int x, int y, int c = 0) const { return pixels[offset(x, y, c)]; }
  float& at(int x, int y, int c = 0) { return pixels[offset(x, y, c)]; }

  friend bool operator==(const Raster&, const Raster&) = default;
};

/// Decodes PNG/JPEG (anything the codec backend understands). Colour images
/// come back as RGB, alpha is dropped, 16-bit data is rescaled to [0, 255].
Raster decode_raster(std::span<const std::byte> encoded);
Raster read_raster(const std::filesystem::path& file);

Raster resize_bilinear(const Raster& image, int width, int height);

/// Replicates a single-channel raster to three channels; 3-channel input is
/// returned unchanged.
Raster to_three_channels(const Raster& image);

/// 8-bit PNG encoding (values clamped and rounded).
std::vector<unsigned char> encode_png(const Raster& image);
void write_png(const Raster& image, const std::filesystem::path& file);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& file);

}  // namespace cxr
