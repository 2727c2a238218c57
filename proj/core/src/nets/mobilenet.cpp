#include "nets.hpp"

namespace cxr::nets {
namespace {

namespace nn = torch::nn;

// Sequential with a concrete forward() so it can nest inside another one.
class ConvBNReLUImpl : public nn::SequentialImpl {
 public:
  ConvBNReLUImpl(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride, std::int64_t groups) {
    push_back(conv(in, out, kernel, stride, (kernel - 1) / 2, false, groups));
    push_back(batch_norm(out));
    push_back(nn::ReLU6());
  }
  torch::Tensor forward(torch::Tensor x) { return nn::SequentialImpl::forward(x); }
};
TORCH_MODULE(ConvBNReLU);

ConvBNReLU conv_bn_relu6(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride = 1,
                         std::int64_t groups = 1) {
  return ConvBNReLU(in, out, kernel, stride, groups);
}

class InvertedResidualImpl : public nn::Module {
 public:
  InvertedResidualImpl(std::int64_t in, std::int64_t out, std::int64_t stride, std::int64_t expand_ratio)
      : residual_(stride == 1 && in == out) {
    const std::int64_t hidden = in * expand_ratio;
    nn::Sequential layers;
    if (expand_ratio != 1) layers->push_back(conv_bn_relu6(in, hidden, 1));
    layers->push_back(conv_bn_relu6(hidden, hidden, 3, stride, hidden));
    layers->push_back(conv(hidden, out, 1));
    layers->push_back(batch_norm(out));
    conv_ = register_module("conv", layers);
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto out = conv_->forward(x);
    return residual_ ? x + out : out;
  }

 private:
  bool residual_;
  nn::Sequential conv_{nullptr};
};
TORCH_MODULE(InvertedResidual);

class MobileNetV2Impl : public NetworkImpl {
 public:
  explicit MobileNetV2Impl(std::int64_t num_classes) : NetworkImpl(Backbone::MobileNetV2) {
    struct Stage {
      std::int64_t t, c, n, s;
    };
    constexpr Stage stages[] = {{1, 16, 1, 1},  {6, 24, 2, 2},  {6, 32, 3, 2}, {6, 64, 4, 2},
                                {6, 96, 3, 1},  {6, 160, 3, 2}, {6, 320, 1, 1}};
    nn::Sequential features;
    features->push_back(conv_bn_relu6(3, 32, 3, 2));
    std::int64_t channels = 32;
    for (const auto& st : stages) {
      for (std::int64_t i = 0; i < st.n; ++i) {
        features->push_back(InvertedResidual(channels, st.c, i == 0 ? st.s : 1, st.t));
        channels = st.c;
      }
    }
    features->push_back(conv_bn_relu6(channels, 1280, 1));
    features_ = register_module("features", features);
    fc_ = nn::Linear(1280, num_classes);
    classifier_ = register_module("classifier", nn::Sequential(nn::Dropout(0.2), fc_));
  }

  torch::Tensor features(const torch::Tensor& x) override {
    return torch::adaptive_avg_pool2d(features_->forward(x), {1, 1}).flatten(1);
  }

  torch::Tensor classify(const torch::Tensor& f) override { return classifier_->forward(f); }
  void reset_head() override {
    torch::NoGradGuard guard;
    torch::nn::init::normal_(fc_->weight, 0.0, 0.01);
    torch::nn::init::zeros_(fc_->bias);
  }

 private:
  nn::Sequential features_{nullptr}, classifier_{nullptr};
  nn::Linear fc_{nullptr};
};

}  // namespace

std::shared_ptr<NetworkImpl> mobilenet_v2(std::int64_t num_classes) {
  return std::make_shared<MobileNetV2Impl>(num_classes);
}

}  // namespace cxr::nets
