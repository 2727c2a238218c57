#include "cxr/backbone_registry.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>

namespace cxr {

namespace {

constexpr NormalizationStats kImageNet{{0.485f, 0.456f, 0.406f}, {0.229f, 0.224f, 0.225f}};
// Inception v3 weights expect inputs scaled to [-1, 1].
constexpr NormalizationStats kInception{{0.5f, 0.5f, 0.5f}, {0.5f, 0.5f, 0.5f}};

constexpr std::array<BackboneSpec, 8> kBackbones{{
    {Backbone::SqueezeNet, "SqueezeNet", 227, PretrainCorpus::GeneralImages, "classifier.1",
     "squeezenet1_1.pt", kImageNet},
    {Backbone::MobileNetV2, "MobileNetv2", 224, PretrainCorpus::GeneralImages, "classifier.1",
     "mobilenet_v2.pt", kImageNet},
    {Backbone::ResNet18, "ResNet18", 224, PretrainCorpus::GeneralImages, "fc", "resnet18.pt",
     kImageNet},
    {Backbone::ResNet101, "ResNet101", 224, PretrainCorpus::GeneralImages, "fc", "resnet101.pt",
     kImageNet},
    {Backbone::InceptionV3, "InceptionV3", 299, PretrainCorpus::GeneralImages, "fc",
     "inception_v3.pt", kInception},
    {Backbone::CheXNet, "CheXNet", 224, PretrainCorpus::ChestXray, "classifier", "chexnet.pt",
     kImageNet},
    {Backbone::DenseNet201, "DenseNet201", 224, PretrainCorpus::GeneralImages, "classifier",
     "densenet201.pt", kImageNet},
    {Backbone::VGG19, "VGG19", 224, PretrainCorpus::GeneralImages, "classifier.6", "vgg19.pt",
     kImageNet},
}};

std::string lower(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '-' || c == '_' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::span<const BackboneSpec> all_backbones() { return kBackbones; }

const BackboneSpec& backbone_spec(Backbone backbone) {
  for (const auto& spec : kBackbones)
    if (spec.backbone == backbone) return spec;
  throw std::invalid_argument("unknown backbone");
}

BackboneInputSpec input_spec(Backbone backbone) {
  const auto& spec = backbone_spec(backbone);
  return {backbone, spec.input_side, 3, spec.normalization};
}

std::string_view to_string(Backbone backbone) { return backbone_spec(backbone).name; }

std::string_view to_string(PretrainCorpus corpus) {
  switch (corpus) {
    case PretrainCorpus::GeneralImages: return "GENERAL_IMAGES";
    case PretrainCorpus::ChestXray: return "CHEST_XRAY";
    case PretrainCorpus::None: return "NONE";
  }
  return "NONE";
}

std::optional<Backbone> parse_backbone(std::string_view text) {
  const auto key = lower(text);
  for (const auto& spec : kBackbones)
    if (lower(spec.name) == key) return spec.backbone;
  if (key == "densenet121") return Backbone::CheXNet;
  if (key == "squeezenet11" || key == "squeezenet1.1") return Backbone::SqueezeNet;
  return std::nullopt;
}

}  // namespace cxr
