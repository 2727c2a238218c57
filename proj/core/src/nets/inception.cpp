#include "nets.hpp"

namespace cxr::nets {
namespace {

namespace nn = torch::nn;
using torch::ExpandingArray;

class BasicConv2dImpl : public nn::Module {
 public:
  BasicConv2dImpl(std::int64_t in, std::int64_t out, ExpandingArray<2> kernel, ExpandingArray<2> stride = 1,
                  ExpandingArray<2> padding = 0) {
    conv_ = register_module(
        "conv", TapConv2d(nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding).bias(false)));
    bn_ = register_module("bn", batch_norm(out, 0.001));
  }

  torch::Tensor forward(const torch::Tensor& x) { return torch::relu(bn_(conv_(x))); }

 private:
  TapConv2d conv_{nullptr};
  nn::BatchNorm2d bn_{nullptr};
};
TORCH_MODULE(BasicConv2d);

torch::Tensor avg3(const torch::Tensor& x) { return torch::avg_pool2d(x, 3, 1, 1); }
torch::Tensor max3s2(const torch::Tensor& x) { return torch::max_pool2d(x, 3, 2); }

#define CXR_BRANCH(name, ...) \
  name = register_module(#name, BasicConv2d(std::shared_ptr<BasicConv2dImpl>(new BasicConv2dImpl(__VA_ARGS__))))

class InceptionAImpl : public nn::Module {
 public:
  InceptionAImpl(std::int64_t in, std::int64_t pool_features) {
    CXR_BRANCH(branch1x1, in, 64, 1);
    CXR_BRANCH(branch5x5_1, in, 48, 1);
    CXR_BRANCH(branch5x5_2, 48, 64, 5, 1, 2);
    CXR_BRANCH(branch3x3dbl_1, in, 64, 1);
    CXR_BRANCH(branch3x3dbl_2, 64, 96, 3, 1, 1);
    CXR_BRANCH(branch3x3dbl_3, 96, 96, 3, 1, 1);
    CXR_BRANCH(branch_pool, in, pool_features, 1);
  }

  torch::Tensor forward(const torch::Tensor& x) {
    return torch::cat({branch1x1(x), branch5x5_2(branch5x5_1(x)),
                       branch3x3dbl_3(branch3x3dbl_2(branch3x3dbl_1(x))), branch_pool(avg3(x))},
                      1);
  }

 private:
  BasicConv2d branch1x1{nullptr}, branch5x5_1{nullptr}, branch5x5_2{nullptr}, branch3x3dbl_1{nullptr},
      branch3x3dbl_2{nullptr}, branch3x3dbl_3{nullptr}, branch_pool{nullptr};
};
TORCH_MODULE(InceptionA);

class InceptionBImpl : public nn::Module {
 public:
  explicit InceptionBImpl(std::int64_t in) {
    CXR_BRANCH(branch3x3, in, 384, 3, 2);
    CXR_BRANCH(branch3x3dbl_1, in, 64, 1);
    CXR_BRANCH(branch3x3dbl_2, 64, 96, 3, 1, 1);
    CXR_BRANCH(branch3x3dbl_3, 96, 96, 3, 2);
  }

  torch::Tensor forward(const torch::Tensor& x) {
    return torch::cat({branch3x3(x), branch3x3dbl_3(branch3x3dbl_2(branch3x3dbl_1(x))), max3s2(x)}, 1);
  }

 private:
  BasicConv2d branch3x3{nullptr}, branch3x3dbl_1{nullptr}, branch3x3dbl_2{nullptr}, branch3x3dbl_3{nullptr};
};
TORCH_MODULE(InceptionB);

class InceptionCImpl : public nn::Module {
 public:
  InceptionCImpl(std::int64_t in, std::int64_t c7) {
    CXR_BRANCH(branch1x1, in, 192, 1);
    CXR_BRANCH(branch7x7_1, in, c7, 1);
    CXR_BRANCH(branch7x7_2, c7, c7, {1, 7}, 1, {0, 3});
    CXR_BRANCH(branch7x7_3, c7, 192, {7, 1}, 1, {3, 0});
    CXR_BRANCH(branch7x7dbl_1, in, c7, 1);
    CXR_BRANCH(branch7x7dbl_2, c7, c7, {7, 1}, 1, {3, 0});
    CXR_BRANCH(branch7x7dbl_3, c7, c7, {1, 7}, 1, {0, 3});
    CXR_BRANCH(branch7x7dbl_4, c7, c7, {7, 1}, 1, {3, 0});
    CXR_BRANCH(branch7x7dbl_5, c7, 192, {1, 7}, 1, {0, 3});
    CXR_BRANCH(branch_pool, in, 192, 1);
  }

  torch::Tensor forward(const torch::Tensor& x) {
    const auto b7 = branch7x7_3(branch7x7_2(branch7x7_1(x)));
    const auto d7 = branch7x7dbl_5(branch7x7dbl_4(branch7x7dbl_3(branch7x7dbl_2(branch7x7dbl_1(x)))));
    return torch::cat({branch1x1(x), b7, d7, branch_pool(avg3(x))}, 1);
  }

 private:
  BasicConv2d branch1x1{nullptr}, branch7x7_1{nullptr}, branch7x7_2{nullptr}, branch7x7_3{nullptr},
      branch7x7dbl_1{nullptr}, branch7x7dbl_2{nullptr}, branch7x7dbl_3{nullptr}, branch7x7dbl_4{nullptr},
      branch7x7dbl_5{nullptr}, branch_pool{nullptr};
};
TORCH_MODULE(InceptionC);

class InceptionDImpl : public nn::Module {
 public:
  explicit InceptionDImpl(std::int64_t in) {
    CXR_BRANCH(branch3x3_1, in, 192, 1);
    CXR_BRANCH(branch3x3_2, 192, 320, 3, 2);
    CXR_BRANCH(branch7x7x3_1, in, 192, 1);
    CXR_BRANCH(branch7x7x3_2, 192, 192, {1, 7}, 1, {0, 3});
    CXR_BRANCH(branch7x7x3_3, 192, 192, {7, 1}, 1, {3, 0});
    CXR_BRANCH(branch7x7x3_4, 192, 192, 3, 2);
  }

  torch::Tensor forward(const torch::Tensor& x) {
    const auto b3 = branch3x3_2(branch3x3_1(x));
    const auto b7 = branch7x7x3_4(branch7x7x3_3(branch7x7x3_2(branch7x7x3_1(x))));
    return torch::cat({b3, b7, max3s2(x)}, 1);
  }

 private:
  BasicConv2d branch3x3_1{nullptr}, branch3x3_2{nullptr}, branch7x7x3_1{nullptr}, branch7x7x3_2{nullptr},
      branch7x7x3_3{nullptr}, branch7x7x3_4{nullptr};
};
TORCH_MODULE(InceptionD);

class InceptionEImpl : public nn::Module {
 public:
  explicit InceptionEImpl(std::int64_t in) {
    CXR_BRANCH(branch1x1, in, 320, 1);
    CXR_BRANCH(branch3x3_1, in, 384, 1);
    CXR_BRANCH(branch3x3_2a, 384, 384, {1, 3}, 1, {0, 1});
    CXR_BRANCH(branch3x3_2b, 384, 384, {3, 1}, 1, {1, 0});
    CXR_BRANCH(branch3x3dbl_1, in, 448, 1);
    CXR_BRANCH(branch3x3dbl_2, 448, 384, 3, 1, 1);
    CXR_BRANCH(branch3x3dbl_3a, 384, 384, {1, 3}, 1, {0, 1});
    CXR_BRANCH(branch3x3dbl_3b, 384, 384, {3, 1}, 1, {1, 0});
    CXR_BRANCH(branch_pool, in, 192, 1);
  }

  torch::Tensor forward(const torch::Tensor& x) {
    const auto s = branch3x3_1(x);
    const auto d = branch3x3dbl_2(branch3x3dbl_1(x));
    return torch::cat({branch1x1(x), torch::cat({branch3x3_2a(s), branch3x3_2b(s)}, 1),
                       torch::cat({branch3x3dbl_3a(d), branch3x3dbl_3b(d)}, 1), branch_pool(avg3(x))},
                      1);
  }

 private:
  BasicConv2d branch1x1{nullptr}, branch3x3_1{nullptr}, branch3x3_2a{nullptr}, branch3x3_2b{nullptr},
      branch3x3dbl_1{nullptr}, branch3x3dbl_2{nullptr}, branch3x3dbl_3a{nullptr}, branch3x3dbl_3b{nullptr},
      branch_pool{nullptr};
};
TORCH_MODULE(InceptionE);

#undef CXR_BRANCH

// The auxiliary classifier is not built.
class InceptionV3Impl : public NetworkImpl {
 public:
  explicit InceptionV3Impl(std::int64_t num_classes) : NetworkImpl(Backbone::InceptionV3) {
    stem_.push_back(register_module("Conv2d_1a_3x3", BasicConv2d(3, 32, 3, 2)));
    stem_.push_back(register_module("Conv2d_2a_3x3", BasicConv2d(32, 32, 3)));
    stem_.push_back(register_module("Conv2d_2b_3x3", BasicConv2d(32, 64, 3, 1, 1)));
    stem2_.push_back(register_module("Conv2d_3b_1x1", BasicConv2d(64, 80, 1)));
    stem2_.push_back(register_module("Conv2d_4a_3x3", BasicConv2d(80, 192, 3)));
    mixed_->push_back(register_module("Mixed_5b", InceptionA(192, 32)));
    mixed_->push_back(register_module("Mixed_5c", InceptionA(256, 64)));
    mixed_->push_back(register_module("Mixed_5d", InceptionA(288, 64)));
    mixed_->push_back(register_module("Mixed_6a", InceptionB(288)));
    mixed_->push_back(register_module("Mixed_6b", InceptionC(768, 128)));
    mixed_->push_back(register_module("Mixed_6c", InceptionC(768, 160)));
    mixed_->push_back(register_module("Mixed_6d", InceptionC(768, 160)));
    mixed_->push_back(register_module("Mixed_6e", InceptionC(768, 192)));
    mixed_->push_back(register_module("Mixed_7a", InceptionD(768)));
    mixed_->push_back(register_module("Mixed_7b", InceptionE(1280)));
    mixed_->push_back(register_module("Mixed_7c", InceptionE(2048)));
    dropout_ = register_module("dropout", nn::Dropout(0.5));
    fc_ = register_module("fc", nn::Linear(2048, num_classes));
  }

  torch::Tensor features(const torch::Tensor& x) override {
    auto h = x;
    for (auto& m : stem_) h = m(h);
    h = max3s2(h);
    for (auto& m : stem2_) h = m(h);
    h = max3s2(h);
    h = mixed_->forward(h);
    return dropout_(torch::adaptive_avg_pool2d(h, {1, 1}).flatten(1));
  }

  torch::Tensor classify(const torch::Tensor& f) override { return fc_(f); }
  void reset_head() override { fc_->reset_parameters(); }

 private:
  std::vector<BasicConv2d> stem_, stem2_;
  // unregistered container: the blocks are registered under their own names
  nn::Sequential mixed_;
  nn::Dropout dropout_{nullptr};
  nn::Linear fc_{nullptr};
};

}  // namespace

std::shared_ptr<NetworkImpl> inception_v3(std::int64_t num_classes) {
  return std::make_shared<InceptionV3Impl>(num_classes);
}

}  // namespace cxr::nets
