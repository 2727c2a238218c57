#include "nets.hpp"

namespace cxr::nets {
namespace {

namespace nn = torch::nn;

class FireImpl : public nn::Module {
 public:
  FireImpl(std::int64_t in, std::int64_t squeeze_planes, std::int64_t e1, std::int64_t e3) {
    squeeze = register_module("squeeze", conv(in, squeeze_planes, 1, 1, 0, true));
    register_module("squeeze_activation", nn::ReLU());
    expand1x1 = register_module("expand1x1", conv(squeeze_planes, e1, 1, 1, 0, true));
    register_module("expand1x1_activation", nn::ReLU());
    expand3x3 = register_module("expand3x3", conv(squeeze_planes, e3, 3, 1, 1, true));
    register_module("expand3x3_activation", nn::ReLU());
  }

  torch::Tensor forward(const torch::Tensor& x) {
    const auto s = torch::relu(squeeze(x));
    return torch::cat({torch::relu(expand1x1(s)), torch::relu(expand3x3(s))}, 1);
  }

 private:
  TapConv2d squeeze{nullptr}, expand1x1{nullptr}, expand3x3{nullptr};
};
TORCH_MODULE(Fire);

nn::MaxPool2d ceil_pool() { return nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2).ceil_mode(true)); }

class SqueezeNetImpl : public NetworkImpl {
 public:
  explicit SqueezeNetImpl(std::int64_t num_classes) : NetworkImpl(Backbone::SqueezeNet) {
    features_ = register_module(
        "features",
        nn::Sequential(conv(3, 64, 3, 2, 0, true), nn::ReLU(), ceil_pool(), Fire(64, 16, 64, 64),
                       Fire(128, 16, 64, 64), ceil_pool(), Fire(128, 32, 128, 128), Fire(256, 32, 128, 128),
                       ceil_pool(), Fire(256, 48, 192, 192), Fire(384, 48, 192, 192), Fire(384, 64, 256, 256),
                       Fire(512, 64, 256, 256)));
    dropout_ = nn::Dropout(0.5);
    final_conv_ = conv(512, num_classes, 1, 1, 0, true);
    classifier_ = register_module("classifier", nn::Sequential(dropout_, final_conv_, nn::ReLU(),
                                                               nn::AdaptiveAvgPool2d(1)));
  }

  torch::Tensor features(const torch::Tensor& x) override { return features_->forward(x); }

  torch::Tensor classify(const torch::Tensor& f) override { return classifier_->forward(f).flatten(1); }

  void reset_head() override {
    torch::NoGradGuard guard;
    torch::nn::init::normal_(final_conv_->weight, 0.0, 0.01);
    torch::nn::init::zeros_(final_conv_->bias);
  }

 private:
  nn::Sequential features_{nullptr}, classifier_{nullptr};
  nn::Dropout dropout_{nullptr};
  TapConv2d final_conv_{nullptr};
};

}  // namespace

std::shared_ptr<NetworkImpl> squeezenet1_1(std::int64_t num_classes) {
  return std::make_shared<SqueezeNetImpl>(num_classes);
}

}  // namespace cxr::nets
