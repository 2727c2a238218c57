#include "nets.hpp"

namespace cxr::nets {
namespace {

namespace nn = torch::nn;

class VGG19Impl : public NetworkImpl {
 public:
  explicit VGG19Impl(std::int64_t num_classes) : NetworkImpl(Backbone::VGG19) {
    constexpr int kPool = 0;
    constexpr int cfg[] = {64,  64,  kPool, 128, 128, kPool, 256, 256, 256, 256, kPool,
                           512, 512, 512,   512, kPool, 512, 512, 512, 512, kPool};
    nn::Sequential features;
    std::int64_t channels = 3;
    for (const int v : cfg) {
      if (v == kPool) {
        features->push_back(nn::MaxPool2d(nn::MaxPool2dOptions(2).stride(2)));
      } else {
        features->push_back(conv(channels, v, 3, 1, 1, true));
        features->push_back(nn::ReLU());
        channels = v;
      }
    }
    features_ = register_module("features", features);
    fc1_ = nn::Linear(512 * 7 * 7, 4096);
    fc2_ = nn::Linear(4096, 4096);
    fc3_ = nn::Linear(4096, num_classes);
    drop1_ = nn::Dropout(0.5);
    drop2_ = nn::Dropout(0.5);
    register_module("classifier", nn::Sequential(fc1_, nn::ReLU(), drop1_, fc2_, nn::ReLU(), drop2_, fc3_));
  }

  torch::Tensor features(const torch::Tensor& x) override {
    auto h = torch::adaptive_avg_pool2d(features_->forward(x), {7, 7}).flatten(1);
    h = drop1_(torch::relu(fc1_(h)));
    return drop2_(torch::relu(fc2_(h)));
  }

  torch::Tensor classify(const torch::Tensor& f) override { return fc3_(f); }
  void reset_head() override { fc3_->reset_parameters(); }

 private:
  nn::Sequential features_{nullptr};
  nn::Linear fc1_{nullptr}, fc2_{nullptr}, fc3_{nullptr};
  nn::Dropout drop1_{nullptr}, drop2_{nullptr};
};

}  // namespace

std::shared_ptr<NetworkImpl> vgg19(std::int64_t num_classes) { return std::make_shared<VGG19Impl>(num_classes); }

}  // namespace cxr::nets
