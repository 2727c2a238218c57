#pragma once

#include "cxr/backbone_registry.hpp"
#include "cxr/catalog.hpp"
#include "cxr/raster.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace cxr {

class ModelInputError : public std::runtime_error {
 public:
  ModelInputError(std::string record_id, const std::string& what)
      : std::runtime_error(record_id + ": " + what), record_id_(std::move(record_id)) {}
  [[nodiscard]] const std::string& record_id() const { return record_id_; }

 private:
  std::string record_id_;
};

/// Channel-major (C x H x W) float array ready for a backbone.
struct ImageTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> values;
};

/// Decodes and resizes to side x side (bilinear, no crop). Intensities stay
/// in [0, 255]; augmentation operates on this representation.
Raster load_resized(const std::filesystem::path& file, int side);

/// Grey-to-RGB replication, scaling to [0, 1], then per-channel
/// standardisation with the backbone's statistics.
ImageTensor standardize(const Raster& resized, const BackboneInputSpec& spec);

ImageTensor load_model_input(const ImageRecord& record, const BackboneInputSpec& spec,
                             const std::filesystem::path& root);

}  // namespace cxr
