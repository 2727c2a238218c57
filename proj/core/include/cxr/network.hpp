#pragma once

#include "cxr/backbone_registry.hpp"

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace cxr {

class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Observes the output of every tapped convolution during a forward pass.
/// Inventory mode records each layer once in call order; capture mode keeps
/// a copy of one named layer's output.
class ActivationTap {
 public:
  enum class Mode { Off, Inventory, Capture };

  struct Entry {
    std::string path;
    std::vector<std::int64_t> shape;  ///< N x C x H x W
  };

  void observe(const std::string& path, const torch::Tensor& output);

  Mode mode = Mode::Off;
  std::vector<Entry> inventory;
  std::string target;
  torch::Tensor captured;
};

/// A Conv2d that reports its output to the network's ActivationTap.
class TapConv2dImpl : public torch::nn::Conv2dImpl {
 public:
  using torch::nn::Conv2dImpl::Conv2dImpl;
  torch::Tensor forward(const torch::Tensor& input);

  std::string path;
  std::shared_ptr<ActivationTap> tap;
};
TORCH_MODULE(TapConv2d);

/// Shorthand used by the backbone definitions.
TapConv2d conv(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride = 1,
               std::int64_t padding = 0, bool bias = false, std::int64_t groups = 1);

class NetworkImpl : public torch::nn::Module {
 public:
  explicit NetworkImpl(Backbone backbone) : backbone_(backbone) {}

  Backbone backbone() const { return backbone_; }

  /// Scores (logits), N x num_classes.
  torch::Tensor forward(const torch::Tensor& x) { return classify(features(x)); }

  /// The tensor the classifier layer consumes.
  virtual torch::Tensor features(const torch::Tensor& x) = 0;
  virtual torch::Tensor classify(const torch::Tensor& features) = 0;

  /// Re-draws the classifier layer's parameters from torch's generator.
  virtual void reset_head() = 0;

  const std::shared_ptr<ActivationTap>& tap() const { return tap_; }

  /// Names every TapConv2d by its dotted path and connects it to tap().
  void attach_tap();

 private:
  Backbone backbone_;
  std::shared_ptr<ActivationTap> tap_ = std::make_shared<ActivationTap>();
};

/// Architecture only, parameters at their default initialisation.
std::shared_ptr<NetworkImpl> make_network(Backbone backbone, std::int64_t num_classes);

/// Where pretrained state dicts are looked up. Each file is a torch-pickled
/// plain dict of parameter name to tensor (see tools/export_weights.py).
struct WeightSource {
  std::filesystem::path directory;
  /// Without weights, keep the random initialisation instead of failing.
  bool allow_untrained = false;
};

struct WeightProvenance {
  PretrainCorpus corpus = PretrainCorpus::None;
  std::string source;     ///< file that was loaded, empty if none
  bool fallback = false;  ///< CheXNet built from general-image DenseNet121 weights
};

/// Copies every non-head parameter and buffer from the backbone's weight
/// file. Throws NetworkError naming the backbone and the directory if the
/// file is missing (unless allow_untrained), and on missing or mis-shaped
/// entries.
WeightProvenance load_pretrained(NetworkImpl& net, const BackboneSpec& spec, const WeightSource& source);

/// Parameters whose path is the head location or below it.
std::vector<torch::Tensor> head_parameters(NetworkImpl& net, const BackboneSpec& spec);
bool is_head_parameter(const std::string& name, const BackboneSpec& spec);

struct Classifier {
  std::shared_ptr<NetworkImpl> net;
  const BackboneSpec* spec = nullptr;
  std::vector<std::string> class_names;
  WeightProvenance provenance;

  [[nodiscard]] int num_classes() const { return static_cast<int>(class_names.size()); }
};

/// Pretrained backbone with a freshly initialised `class_names.size()`-way
/// head. The head draw depends only on `seed`. Requires 2 or 3 classes.
Classifier build_classifier(const BackboneSpec& spec, std::vector<std::string> class_names,
                            const WeightSource& weights, std::uint64_t seed);

/// Device named by CXR_DEVICE ("cpu", "cuda", "cuda:1"); CPU when unset.
torch::Device selected_device();

/// SHA-256 over every parameter and buffer, name by name, in a fixed order.
std::string parameter_checksum(NetworkImpl& net);

}  // namespace cxr
