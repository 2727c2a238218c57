#include "cxr/network.hpp"

#include "cxr/checksum.hpp"
#include "cxr/random.hpp"
#include "log.hpp"
#include "nets/nets.hpp"


#include <cstdlib>
#include <fstream>
#include <map>
#include <regex>

namespace cxr {

void ActivationTap::observe(const std::string& path, const torch::Tensor& output) {
  switch (mode) {
    case Mode::Off:
      return;
    case Mode::Inventory:
      inventory.push_back({path, output.sizes().vec()});
      return;
    case Mode::Capture:
      if (path == target) captured = output.detach().to(torch::kCPU).clone();
      return;
  }
}

torch::Tensor TapConv2dImpl::forward(const torch::Tensor& input) {
  auto out = torch::nn::Conv2dImpl::forward(input);
  if (tap) tap->observe(path, out);
  return out;
}

TapConv2d conv(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride,
               std::int64_t padding, bool bias, std::int64_t groups) {
  return TapConv2d(torch::nn::Conv2dOptions(in, out, kernel)
                       .stride(stride)
                       .padding(padding)
                       .bias(bias)
                       .groups(groups));
}

void NetworkImpl::attach_tap() {
  for (const auto& item : named_modules("", /*include_self=*/false)) {
    if (auto c = std::dynamic_pointer_cast<TapConv2dImpl>(item.value())) {
      c->path = item.key();
      c->tap = tap_;
    }
  }
}

std::shared_ptr<NetworkImpl> make_network(Backbone backbone, std::int64_t num_classes) {
  std::shared_ptr<NetworkImpl> net;
  switch (backbone) {
    case Backbone::SqueezeNet: net = nets::squeezenet1_1(num_classes); break;
    case Backbone::MobileNetV2: net = nets::mobilenet_v2(num_classes); break;
    case Backbone::ResNet18: net = nets::resnet(backbone, {2, 2, 2, 2}, false, num_classes); break;
    case Backbone::ResNet101: net = nets::resnet(backbone, {3, 4, 23, 3}, true, num_classes); break;
    case Backbone::InceptionV3: net = nets::inception_v3(num_classes); break;
    case Backbone::CheXNet: net = nets::densenet(backbone, 64, 32, {6, 12, 24, 16}, num_classes); break;
    case Backbone::DenseNet201: net = nets::densenet(backbone, 64, 32, {6, 12, 48, 32}, num_classes); break;
    case Backbone::VGG19: net = nets::vgg19(num_classes); break;
  }
  net->attach_tap();
  return net;
}

bool is_head_parameter(const std::string& name, const BackboneSpec& spec) {
  const std::string head(spec.head_location);
  return name == head || name.starts_with(head + ".");
}

std::vector<torch::Tensor> head_parameters(NetworkImpl& net, const BackboneSpec& spec) {
  std::vector<torch::Tensor> out;
  for (const auto& p : net.named_parameters())
    if (is_head_parameter(p.key(), spec)) out.push_back(p.value());
  return out;
}

namespace {

// Checkpoints in the wild carry wrapper prefixes ("module.", "densenet121.")
// and the pre-0.4 DenseNet naming ("norm.1" for "norm1").
std::string canonical_key(std::string key) {
  for (const std::string prefix : {"module.", "densenet121.", "model."}) {
    while (key.starts_with(prefix)) key.erase(0, prefix.size());
  }
  if (key.find("denselayer") == std::string::npos) return key;
  static const std::regex legacy(R"(\.(norm|relu|conv)\.([12])\.)");
  return std::regex_replace(key, legacy, ".$1$2.");
}

std::map<std::string, torch::Tensor> read_state_dict(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  c10::IValue value;
  try {
    value = torch::pickle_load(bytes);
  } catch (const c10::Error& e) {
    throw NetworkError("cannot unpickle " + file.string() + ": " + e.what_without_backtrace());
  }
  if (!value.isGenericDict()) throw NetworkError(file.string() + " does not hold a dict of tensors");
  std::map<std::string, torch::Tensor> out;
  for (const auto& item : value.toGenericDict()) {
    if (!item.key().isString() || !item.value().isTensor()) continue;
    out[canonical_key(item.key().toStringRef())] = item.value().toTensor();
  }
  return out;
}

}  // namespace

WeightProvenance load_pretrained(NetworkImpl& net, const BackboneSpec& spec, const WeightSource& source) {
  WeightProvenance prov;
  std::filesystem::path file = source.directory / spec.weight_file;
  prov.corpus = spec.pretrain_corpus;
  if (!source.directory.empty() && !std::filesystem::exists(file) && spec.backbone == Backbone::CheXNet) {
    const auto general = source.directory / "densenet121.pt";
    if (std::filesystem::exists(general)) {
      detail::log_warn("CheXNet: " + file.string() + " not found, falling back to general-image weights " +
                       general.string());
      file = general;
      prov.corpus = PretrainCorpus::GeneralImages;
      prov.fallback = true;
    }
  }
  if (source.directory.empty() || !std::filesystem::exists(file)) {
    const std::string where = source.directory.empty() ? "<no weight directory configured>" : file.string();
    if (!source.allow_untrained)
      throw NetworkError("no pretrained weights for " + std::string(spec.name) + " at " + where);
    detail::log_warn(std::string(spec.name) + ": no pretrained weights at " + where +
                     "; training from random initialisation");
    prov.corpus = PretrainCorpus::None;
    return prov;
  }

  const auto state = read_state_dict(file);
  torch::NoGradGuard guard;
  std::vector<std::string> missing;
  std::size_t used = 0;
  auto assign = [&](const std::string& name, torch::Tensor& target) {
    if (is_head_parameter(name, spec)) return;
    const auto it = state.find(name);
    if (it == state.end()) {
      if (!name.ends_with("num_batches_tracked")) missing.push_back(name);
      return;
    }
    if (it->second.sizes() != target.sizes())
      throw NetworkError(std::string(spec.name) + ": shape mismatch for " + name + " in " + file.string());
    target.copy_(it->second.to(target.dtype()));
    ++used;
  };
  for (auto& p : net.named_parameters()) assign(p.key(), p.value());
  for (auto& b : net.named_buffers()) assign(b.key(), b.value());
  if (!missing.empty()) {
    throw NetworkError(std::string(spec.name) + ": " + std::to_string(missing.size()) +
                       " entries missing from " + file.string() + ", first: " + missing.front());
  }
  detail::log_debug(std::string(spec.name) + ": loaded " + std::to_string(used) + " tensors from " + file.string());
  prov.source = file.string();
  return prov;
}

Classifier build_classifier(const BackboneSpec& spec, std::vector<std::string> class_names,
                            const WeightSource& weights, std::uint64_t seed) {
  if (class_names.size() < 2 || class_names.size() > 3)
    throw NetworkError("classifier needs 2 or 3 classes, got " + std::to_string(class_names.size()));
  torch::manual_seed(derive_seed(seed, {"init", spec.name}));
  Classifier c;
  c.spec = &spec;
  c.net = make_network(spec.backbone, static_cast<std::int64_t>(class_names.size()));
  c.provenance = load_pretrained(*c.net, spec, weights);
  torch::manual_seed(derive_seed(seed, {"head"}));
  c.net->reset_head();
  for (auto& p : c.net->parameters()) p.set_requires_grad(true);
  c.class_names = std::move(class_names);
  return c;
}

torch::Device selected_device() {
  const char* env = std::getenv("CXR_DEVICE");
  if (env == nullptr || *env == '\0') return torch::kCPU;
  try {
    torch::Device device(env);
    if (device.is_cuda() && !torch::cuda::is_available())
      throw NetworkError(std::string("CXR_DEVICE=") + env + " but no CUDA device is available");
    return device;
  } catch (const c10::Error&) {
    throw NetworkError(std::string("CXR_DEVICE=") + env + " is not a device name");
  }
}

std::string parameter_checksum(NetworkImpl& net) {
  std::string digest_list;
  auto add = [&](const std::string& name, const torch::Tensor& t) {
    const auto cpu = t.detach().to(torch::kCPU).contiguous();
    const auto* data = static_cast<const std::byte*>(cpu.data_ptr());
    digest_list += name + ":" + sha256_hex(std::span(data, cpu.nbytes())) + "\n";
  };
  for (const auto& p : net.named_parameters()) add(p.key(), p.value());
  for (const auto& b : net.named_buffers()) add(b.key(), b.value());
  return sha256_hex(digest_list);
}

}  // namespace cxr
