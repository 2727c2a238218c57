#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace cxr {

enum class Backbone {
  SqueezeNet,
  MobileNetV2,
  ResNet18,
  ResNet101,
  InceptionV3,
  CheXNet,
  DenseNet201,
  VGG19,
};

enum class PretrainCorpus { GeneralImages, ChestXray, None };

/// Per-channel standardisation applied after scaling pixels to [0, 1].
struct NormalizationStats {
  std::array<float, 3> mean{};
  std::array<float, 3> stddev{};
};

struct BackboneInputSpec {
  Backbone backbone = Backbone::ResNet18;
  int input_side = 224;
  int channel_count = 3;
  NormalizationStats normalization;
};

/// Static facts about a backbone. `head_location` is the dotted module path
/// of the classifier layer that gets replaced for the new task.
struct BackboneSpec {
  Backbone backbone;
  std::string_view name;
  int input_side;
  PretrainCorpus pretrain_corpus;
  std::string_view head_location;
  std::string_view weight_file;  ///< file name looked up in the weight directory
  NormalizationStats normalization;
};

std::span<const BackboneSpec> all_backbones();
const BackboneSpec& backbone_spec(Backbone backbone);
BackboneInputSpec input_spec(Backbone backbone);

std::string_view to_string(Backbone backbone);
std::string_view to_string(PretrainCorpus corpus);
/// Case-insensitive; accepts e.g. "resnet18", "ResNet18", "mobilenetv2".
std::optional<Backbone> parse_backbone(std::string_view text);

}  // namespace cxr
