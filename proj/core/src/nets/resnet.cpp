#include "nets.hpp"

namespace cxr::nets {
namespace {

namespace nn = torch::nn;

class BlockImpl : public nn::Module {
 public:
  BlockImpl(std::int64_t inplanes, std::int64_t planes, std::int64_t stride, bool bottleneck)
      : bottleneck_(bottleneck) {
    const std::int64_t expansion = bottleneck ? 4 : 1;
    if (bottleneck) {
      conv1 = register_module("conv1", conv(inplanes, planes, 1));
      bn1 = register_module("bn1", batch_norm(planes));
      conv2 = register_module("conv2", conv(planes, planes, 3, stride, 1));
      bn2 = register_module("bn2", batch_norm(planes));
      conv3 = register_module("conv3", conv(planes, planes * expansion, 1));
      bn3 = register_module("bn3", batch_norm(planes * expansion));
    } else {
      conv1 = register_module("conv1", conv(inplanes, planes, 3, stride, 1));
      bn1 = register_module("bn1", batch_norm(planes));
      conv2 = register_module("conv2", conv(planes, planes, 3, 1, 1));
      bn2 = register_module("bn2", batch_norm(planes));
    }
    if (stride != 1 || inplanes != planes * expansion) {
      downsample = register_module(
          "downsample", nn::Sequential(conv(inplanes, planes * expansion, 1, stride), batch_norm(planes * expansion)));
    }
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto out = torch::relu(bn1(conv1(x)));
    out = bn2(conv2(out));
    if (bottleneck_) out = bn3(conv3(torch::relu(out)));
    const auto identity = downsample ? downsample->forward(x) : x;
    return torch::relu(out + identity);
  }

 private:
  bool bottleneck_;
  TapConv2d conv1{nullptr}, conv2{nullptr}, conv3{nullptr};
  nn::BatchNorm2d bn1{nullptr}, bn2{nullptr}, bn3{nullptr};
  nn::Sequential downsample{nullptr};
};
TORCH_MODULE(Block);

class ResNetImpl : public NetworkImpl {
 public:
  ResNetImpl(Backbone backbone, std::array<int, 4> blocks, bool bottleneck, std::int64_t num_classes)
      : NetworkImpl(backbone) {
    const std::int64_t expansion = bottleneck ? 4 : 1;
    conv1_ = register_module("conv1", conv(3, 64, 7, 2, 3));
    bn1_ = register_module("bn1", batch_norm(64));
    std::int64_t inplanes = 64;
    const std::array<std::int64_t, 4> planes{64, 128, 256, 512};
    for (int i = 0; i < 4; ++i) {
      nn::Sequential layer;
      for (int b = 0; b < blocks[i]; ++b) {
        const std::int64_t stride = (b == 0 && i > 0) ? 2 : 1;
        layer->push_back(Block(inplanes, planes[i], stride, bottleneck));
        inplanes = planes[i] * expansion;
      }
      layers_[i] = register_module("layer" + std::to_string(i + 1), layer);
    }
    fc_ = register_module("fc", nn::Linear(512 * expansion, num_classes));
  }

  torch::Tensor features(const torch::Tensor& x) override {
    auto h = torch::relu(bn1_(conv1_(x)));
    h = torch::max_pool2d(h, 3, 2, 1);
    for (auto& layer : layers_) h = layer->forward(h);
    return torch::adaptive_avg_pool2d(h, {1, 1}).flatten(1);
  }

  torch::Tensor classify(const torch::Tensor& f) override { return fc_(f); }
  void reset_head() override { fc_->reset_parameters(); }

 private:
  TapConv2d conv1_{nullptr};
  nn::BatchNorm2d bn1_{nullptr};
  std::array<nn::Sequential, 4> layers_{nn::Sequential{nullptr}, nn::Sequential{nullptr},
                                        nn::Sequential{nullptr}, nn::Sequential{nullptr}};
  nn::Linear fc_{nullptr};
};

}  // namespace

std::shared_ptr<NetworkImpl> resnet(Backbone backbone, std::array<int, 4> blocks, bool bottleneck,
                                    std::int64_t num_classes) {
  return std::make_shared<ResNetImpl>(backbone, blocks, bottleneck, num_classes);
}

}  // namespace cxr::nets
