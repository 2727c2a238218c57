#pragma once

// Backbone architectures. Module and parameter names follow torchvision so
// its state dicts load without renaming.

#include "cxr/network.hpp"

#include <array>

namespace cxr::nets {

std::shared_ptr<NetworkImpl> resnet(Backbone backbone, std::array<int, 4> blocks, bool bottleneck,
                                    std::int64_t num_classes);
std::shared_ptr<NetworkImpl> densenet(Backbone backbone, std::int64_t init_features, std::int64_t growth,
                                      std::array<int, 4> blocks, std::int64_t num_classes);
std::shared_ptr<NetworkImpl> squeezenet1_1(std::int64_t num_classes);
std::shared_ptr<NetworkImpl> mobilenet_v2(std::int64_t num_classes);
std::shared_ptr<NetworkImpl> inception_v3(std::int64_t num_classes);
std::shared_ptr<NetworkImpl> vgg19(std::int64_t num_classes);

inline torch::nn::BatchNorm2d batch_norm(std::int64_t channels, double eps = 1e-5) {
  return torch::nn::BatchNorm2d(torch::nn::BatchNorm2dOptions(channels).eps(eps));
}

}  // namespace cxr::nets
