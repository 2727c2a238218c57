#include "nets.hpp"

namespace cxr::nets {
namespace {

namespace nn = torch::nn;

constexpr std::int64_t kBottleneckFactor = 4;

class DenseLayerImpl : public nn::Module {
 public:
  DenseLayerImpl(std::int64_t in, std::int64_t growth) {
    norm1 = register_module("norm1", batch_norm(in));
    register_module("relu1", nn::ReLU());
    conv1 = register_module("conv1", conv(in, kBottleneckFactor * growth, 1));
    norm2 = register_module("norm2", batch_norm(kBottleneckFactor * growth));
    register_module("relu2", nn::ReLU());
    conv2 = register_module("conv2", conv(kBottleneckFactor * growth, growth, 3, 1, 1));
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto h = conv1(torch::relu(norm1(x)));
    h = conv2(torch::relu(norm2(h)));
    return torch::cat({x, h}, 1);
  }

 private:
  nn::BatchNorm2d norm1{nullptr}, norm2{nullptr};
  TapConv2d conv1{nullptr}, conv2{nullptr};
};
TORCH_MODULE(DenseLayer);

class DenseBlockImpl : public nn::Module {
 public:
  DenseBlockImpl(int layers, std::int64_t in, std::int64_t growth) {
    for (int i = 0; i < layers; ++i)
      layers_.push_back(register_module("denselayer" + std::to_string(i + 1), DenseLayer(in + i * growth, growth)));
  }

  torch::Tensor forward(torch::Tensor x) {
    for (auto& layer : layers_) x = layer(x);
    return x;
  }

 private:
  std::vector<DenseLayer> layers_;
};
TORCH_MODULE(DenseBlock);

class TransitionImpl : public nn::Module {
 public:
  TransitionImpl(std::int64_t in, std::int64_t out) {
    norm = register_module("norm", batch_norm(in));
    register_module("relu", nn::ReLU());
    conv_ = register_module("conv", conv(in, out, 1));
  }

  torch::Tensor forward(const torch::Tensor& x) {
    return torch::avg_pool2d(conv_(torch::relu(norm(x))), 2, 2);
  }

 private:
  nn::BatchNorm2d norm{nullptr};
  TapConv2d conv_{nullptr};
};
TORCH_MODULE(Transition);

class DenseNetImpl : public NetworkImpl {
 public:
  DenseNetImpl(Backbone backbone, std::int64_t init_features, std::int64_t growth, std::array<int, 4> blocks,
               std::int64_t num_classes)
      : NetworkImpl(backbone) {
    nn::Sequential features;
    features->push_back("conv0", conv(3, init_features, 7, 2, 3));
    features->push_back("norm0", batch_norm(init_features));
    features->push_back("relu0", nn::ReLU());
    features->push_back("pool0", nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2).padding(1)));
    std::int64_t channels = init_features;
    for (int i = 0; i < 4; ++i) {
      features->push_back("denseblock" + std::to_string(i + 1), DenseBlock(blocks[i], channels, growth));
      channels += blocks[i] * growth;
      if (i != 3) {
        features->push_back("transition" + std::to_string(i + 1), Transition(channels, channels / 2));
        channels /= 2;
      }
    }
    features->push_back("norm5", batch_norm(channels));
    features_ = register_module("features", features);
    classifier_ = register_module("classifier", nn::Linear(channels, num_classes));
  }

  torch::Tensor features(const torch::Tensor& x) override {
    const auto h = torch::relu(features_->forward(x));
    return torch::adaptive_avg_pool2d(h, {1, 1}).flatten(1);
  }

  torch::Tensor classify(const torch::Tensor& f) override { return classifier_(f); }
  void reset_head() override { classifier_->reset_parameters(); }

 private:
  nn::Sequential features_{nullptr};
  nn::Linear classifier_{nullptr};
};

}  // namespace

std::shared_ptr<NetworkImpl> densenet(Backbone backbone, std::int64_t init_features, std::int64_t growth,
                                      std::array<int, 4> blocks, std::int64_t num_classes) {
  return std::make_shared<DenseNetImpl>(backbone, init_features, growth, blocks, num_classes);
}

}  // namespace cxr::nets
