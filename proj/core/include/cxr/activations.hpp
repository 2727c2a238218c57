#pragma once

#include "cxr/catalog.hpp"
#include "cxr/network.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace cxr {

class LayerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One convolution in forward-call order. `ordinal` is 1-based, so the
/// 14th convolution is addressable as "conv#14".
struct LayerInfo {
  int ordinal = 0;
  std::string path;
  std::int64_t channels = 0, height = 0, width = 0;
};

/// Enumerates every convolution by running one zero image through the
/// network in inference mode. Parameters are not modified.
std::vector<LayerInfo> layer_inventory(const Classifier& model);

/// Accepts a dotted module path ("features.conv0") or an ordinal
/// ("conv#14"). Unknown names throw LayerError listing the closest paths.
const LayerInfo& resolve_layer(const std::vector<LayerInfo>& inventory, const std::string& identifier);

/// Channel-major activations of one layer for one input.
struct ActivationMap {
  std::string layer;
  std::string record_id;
  std::int64_t channels = 0, height = 0, width = 0;
  std::vector<float> values;
  /// Set by normalize_map for channels that were constant (now all zero).
  std::vector<bool> constant_channels;

  [[nodiscard]] float at(std::int64_t c, std::int64_t y, std::int64_t x) const {
    return values[static_cast<std::size_t>((c * height + y) * width + x)];
  }
  [[nodiscard]] std::span<const float> channel(std::int64_t c) const {
    return std::span(values).subspan(static_cast<std::size_t>(c * height * width),
                                     static_cast<std::size_t>(height * width));
  }
};

/// One inference pass over `input` (3 x side x side) capturing `layer`.
ActivationMap capture_activations(const Classifier& model, const torch::Tensor& input, const std::string& layer,
                                  const std::string& record_id = {});

/// Decodes and standardises the record first.
ActivationMap capture_activations(const Classifier& model, const ImageRecord& record,
                                  const std::filesystem::path& root, const std::string& layer);

/// Per-channel min-max rescale to [0, 1]; constant channels become zero
/// and are flagged.
ActivationMap normalize_map(ActivationMap map);

/// Channel with the largest mean absolute activation, lowest index on ties.
std::int64_t strongest_channel(const ActivationMap& map);

}  // namespace cxr
