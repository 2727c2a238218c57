#include "cxr/model_input.hpp"

namespace cxr {

Raster load_resized(const std::filesystem::path& file, int side) {
  return resize_bilinear(read_raster(file), side, side);
}

ImageTensor standardize(const Raster& resized, const BackboneInputSpec& spec) {
  if (resized.width != spec.input_side || resized.height != spec.input_side)
    throw std::invalid_argument("standardize: raster is " + std::to_string(resized.width) + "x" +
                                std::to_string(resized.height) + ", expected side " +
                                std::to_string(spec.input_side));
  const auto rgb = to_three_channels(resized);
  ImageTensor out{3, rgb.height, rgb.width, {}};
  const std::size_t plane = static_cast<std::size_t>(rgb.width) * rgb.height;
  out.values.resize(3 * plane);
  for (int c = 0; c < 3; ++c) {
    const float mean = spec.normalization.mean[c];
    const float inv_std = 1.0f / spec.normalization.stddev[c];
    float* dst = out.values.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) dst[i] = (rgb.pixels[3 * i + c] / 255.0f - mean) * inv_std;
  }
  return out;
}

ImageTensor load_model_input(const ImageRecord& record, const BackboneInputSpec& spec,
                             const std::filesystem::path& root) {
  Raster resized;
  try {
    resized = load_resized(root / std::filesystem::path(record.path), spec.input_side);
  } catch (const DecodeError& e) {
    throw ModelInputError(record.record_id, e.what());
  }
  return standardize(resized, spec);
}

}  // namespace cxr
