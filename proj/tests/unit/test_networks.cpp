#include "cxr/network.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace {

c10::IValue read_pickle(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return torch::pickle_load(bytes);
}

void write_state(cxr::NetworkImpl& net, const fs::path& file) {
  c10::Dict<std::string, torch::Tensor> dict;
  for (const auto& p : net.named_parameters()) dict.insert(p.key(), p.value().detach());
  for (const auto& b : net.named_buffers()) dict.insert(b.key(), b.value().detach());
  const auto bytes = torch::pickle_save(c10::IValue(dict));
  std::ofstream(file, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("cxr_net_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const cxr::BackboneSpec& spec_of(cxr::Backbone b) { return cxr::backbone_spec(b); }

// Reference features come from torchvision via tools/export_weights.py; the
// directory is reused between runs. CXR_REFERENCE_DIR points at a prepared one.
fs::path reference_dir() {
  if (const char* env = std::getenv("CXR_REFERENCE_DIR")) return env;
  return fs::current_path() / "torchvision_reference";
}

bool ensure_reference(const std::string& model) {
  const auto dir = reference_dir();
  if (fs::exists(dir / (model + ".ref.pt"))) return true;
  if (std::getenv("CXR_REFERENCE_DIR")) return false;
  const std::string cmd = "python3 " + std::string(CXR_SOURCE_DIR) + "/tools/export_weights.py --random --reference --out '" +
                          dir.string() + "' --models " + model + " > /dev/null 2>&1";
  return std::system(cmd.c_str()) == 0 && fs::exists(dir / (model + ".ref.pt"));
}

struct ParityCase {
  cxr::Backbone backbone;
  const char* model;
};

void PrintTo(const ParityCase& c, std::ostream* os) { *os << c.model; }

class TorchvisionParity : public ::testing::TestWithParam<ParityCase> {};

}  // namespace

TEST_P(TorchvisionParity, PreHeadFeaturesMatch) {
  const auto [backbone, model] = GetParam();
  if (!ensure_reference(model)) GTEST_SKIP() << "torchvision reference for " << model << " unavailable";
  const auto dir = reference_dir();
  // the weight file for CheXNet is looked up under its own name
  const auto weights = scratch(std::string("parity_") + model);
  fs::copy_file(dir / (std::string(model) + ".pt"), weights / spec_of(backbone).weight_file);

  auto c = cxr::build_classifier(spec_of(backbone), {"A", "B"}, {weights, false}, 1);
  const auto ref = read_pickle(dir / (std::string(model) + ".ref.pt")).toGenericDict();
  const auto input = ref.at("input").toTensor();
  const auto expected = ref.at("features").toTensor();
  c.net->eval();
  torch::NoGradGuard guard;
  const auto got = c.net->features(input);
  ASSERT_EQ(got.sizes(), expected.sizes());
  const double scale = expected.abs().max().item<double>();
  EXPECT_LT((got - expected).abs().max().item<double>(), 1e-4 * std::max(scale, 1.0)) << model;
  fs::remove_all(weights);
}

INSTANTIATE_TEST_SUITE_P(Backbones, TorchvisionParity,
                         ::testing::Values(ParityCase{cxr::Backbone::SqueezeNet, "squeezenet1_1"},
                                           ParityCase{cxr::Backbone::MobileNetV2, "mobilenet_v2"},
                                           ParityCase{cxr::Backbone::ResNet18, "resnet18"},
                                           ParityCase{cxr::Backbone::ResNet101, "resnet101"},
                                           ParityCase{cxr::Backbone::InceptionV3, "inception_v3"},
                                           ParityCase{cxr::Backbone::CheXNet, "densenet121"},
                                           ParityCase{cxr::Backbone::DenseNet201, "densenet201"},
                                           ParityCase{cxr::Backbone::VGG19, "vgg19"}),
                         [](const auto& info) { return std::string(info.param.model); });

TEST(Classifier, EveryBackboneScoresEachClass) {
  for (const auto& spec : cxr::all_backbones()) {
    for (const std::vector<std::string>& names : {std::vector<std::string>{"a", "b"}, {"a", "b", "c"}}) {
      auto c = cxr::build_classifier(spec, names, {{}, true}, 3);
      c.net->eval();
      torch::NoGradGuard guard;
      const auto out = c.net->forward(torch::rand({2, 3, spec.input_side, spec.input_side}));
      EXPECT_EQ(out.sizes(), (std::vector<std::int64_t>{2, static_cast<std::int64_t>(names.size())})) << spec.name;
      EXPECT_EQ(c.provenance.corpus, cxr::PretrainCorpus::None);
    }
  }
}

TEST(Classifier, RejectsUnsupportedClassCounts) {
  const auto& spec = spec_of(cxr::Backbone::ResNet18);
  EXPECT_THROW(cxr::build_classifier(spec, {"a"}, {{}, true}, 0), cxr::NetworkError);
  EXPECT_THROW(cxr::build_classifier(spec, {"a", "b", "c", "d"}, {{}, true}, 0), cxr::NetworkError);
}

TEST(Classifier, MissingWeightsNameBackboneAndDirectory) {
  const auto dir = scratch("missing");
  try {
    cxr::build_classifier(spec_of(cxr::Backbone::ResNet18), {"a", "b"}, {dir, false}, 0);
    FAIL() << "expected NetworkError";
  } catch (const cxr::NetworkError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("ResNet18"), std::string::npos) << msg;
    EXPECT_NE(msg.find(dir.string()), std::string::npos) << msg;
  }
}

TEST(Classifier, LoadsBackboneButNotHead) {
  const auto dir = scratch("load");
  torch::manual_seed(11);
  auto donor = cxr::make_network(cxr::Backbone::ResNet18, 1000);
  write_state(*donor, dir / "resnet18.pt");

  const auto& spec = spec_of(cxr::Backbone::ResNet18);
  auto c = cxr::build_classifier(spec, {"a", "b", "c"}, {dir, false}, 5);
  EXPECT_EQ(c.provenance.corpus, cxr::PretrainCorpus::GeneralImages);
  EXPECT_FALSE(c.provenance.fallback);
  const auto mine = c.net->named_parameters();
  for (const auto& p : donor->named_parameters()) {
    if (cxr::is_head_parameter(p.key(), spec)) continue;
    EXPECT_TRUE(torch::equal(p.value(), mine[p.key()])) << p.key();
  }
  EXPECT_EQ(mine["fc.weight"].size(0), 3);
  for (const auto& p : c.net->parameters()) EXPECT_TRUE(p.requires_grad());
}

TEST(Classifier, MisShapedEntryIsAnError) {
  const auto dir = scratch("shape");
  auto donor = cxr::make_network(cxr::Backbone::ResNet18, 2);
  {
    torch::NoGradGuard guard;
    donor->named_parameters()["conv1.weight"].set_data(torch::zeros({64, 3, 3, 3}));
  }
  write_state(*donor, dir / "resnet18.pt");
  EXPECT_THROW(cxr::build_classifier(spec_of(cxr::Backbone::ResNet18), {"a", "b"}, {dir, false}, 0),
               cxr::NetworkError);
}

TEST(Classifier, CheXNetFallsBackToGeneralDenseNetVisibly) {
  const auto dir = scratch("chexnet");
  auto donor = cxr::make_network(cxr::Backbone::CheXNet, 1000);
  write_state(*donor, dir / "densenet121.pt");
  auto c = cxr::build_classifier(spec_of(cxr::Backbone::CheXNet), {"a", "b"}, {dir, false}, 0);
  EXPECT_TRUE(c.provenance.fallback);
  EXPECT_EQ(c.provenance.corpus, cxr::PretrainCorpus::GeneralImages);
  EXPECT_NE(c.provenance.source.find("densenet121.pt"), std::string::npos);

  fs::rename(dir / "densenet121.pt", dir / "chexnet.pt");
  auto direct = cxr::build_classifier(spec_of(cxr::Backbone::CheXNet), {"a", "b"}, {dir, false}, 0);
  EXPECT_FALSE(direct.provenance.fallback);
  EXPECT_EQ(direct.provenance.corpus, cxr::PretrainCorpus::ChestXray);
}

TEST(Classifier, HeadDrawDependsOnlyOnSeed) {
  const auto& spec = spec_of(cxr::Backbone::SqueezeNet);
  auto a = cxr::build_classifier(spec, {"a", "b"}, {{}, true}, 42);
  torch::rand({100});
  auto b = cxr::build_classifier(spec, {"a", "b"}, {{}, true}, 42);
  auto c = cxr::build_classifier(spec, {"a", "b"}, {{}, true}, 43);
  EXPECT_EQ(cxr::parameter_checksum(*a.net), cxr::parameter_checksum(*b.net));
  EXPECT_NE(cxr::parameter_checksum(*a.net), cxr::parameter_checksum(*c.net));
}

TEST(Classifier, HeadParametersAreTheReplacedLayer) {
  for (const auto& spec : cxr::all_backbones()) {
    auto net = cxr::make_network(spec.backbone, 3);
    const auto head = cxr::head_parameters(*net, spec);
    ASSERT_FALSE(head.empty()) << spec.name;
    EXPECT_EQ(head.front().size(0), 3) << spec.name;
  }
}

TEST(Device, DefaultsToCpu) {
  unsetenv("CXR_DEVICE");
  EXPECT_EQ(cxr::selected_device(), torch::Device(torch::kCPU));
  setenv("CXR_DEVICE", "not-a-device", 1);
  EXPECT_THROW(cxr::selected_device(), cxr::NetworkError);
  unsetenv("CXR_DEVICE");
}
