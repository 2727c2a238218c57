#include "cxr/trainer.hpp"

#include "cxr/checksum.hpp"
#include "cxr/model_input.hpp"
#include "cxr/random.hpp"
#include "io_util.hpp"
#include "log.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numeric>
#include <set>

namespace cxr {

using nlohmann::json;

// ---- example sources ------------------------------------------------------

TensorSource::TensorSource(torch::Tensor inputs, std::vector<int> targets, std::vector<std::string> ids)
    : inputs_(std::move(inputs)), targets_(std::move(targets)), ids_(std::move(ids)) {
  if (inputs_.dim() != 4 || inputs_.size(0) != static_cast<std::int64_t>(targets_.size()))
    throw std::invalid_argument("TensorSource: inputs must be N x C x H x W with one target per row");
  if (ids_.empty())
    for (std::size_t i = 0; i < targets_.size(); ++i) ids_.push_back("t" + std::to_string(i));
  if (ids_.size() != targets_.size()) throw std::invalid_argument("TensorSource: one id per row required");
}

RecordSource::RecordSource(const Manifest& manifest, const std::vector<std::string>& record_ids,
                           std::vector<Label> class_order, BackboneInputSpec spec,
                           std::vector<AugmentedRecord> augmented, float fill, std::size_t cache_bytes)
    : root_(manifest.root), augmented_(std::move(augmented)), spec_(spec), fill_(fill), cache_bytes_(cache_bytes) {
  std::map<std::string, std::size_t> position;
  records_.reserve(record_ids.size());
  for (const auto& id : record_ids) {
    const auto* r = manifest.find(id);
    if (r == nullptr) throw std::invalid_argument("record " + id + " is not in the manifest");
    position[id] = records_.size();
    records_.push_back(*r);
  }
  auto target_of = [&](Label label) {
    const auto it = std::find(class_order.begin(), class_order.end(), label);
    if (it == class_order.end())
      throw std::invalid_argument("label " + std::string(to_string(label)) + " is outside the class order");
    return static_cast<int>(it - class_order.begin());
  };
  for (const auto& r : records_) items_.push_back({&r, target_of(r.label), nullptr});
  for (const auto& a : augmented_) {
    const auto it = position.find(a.parent_record_id);
    if (it == position.end())
      throw std::invalid_argument("augmented record " + a.derived_id + " has no parent in this source");
    const auto& parent = records_[it->second];
    items_.push_back({&parent, target_of(parent.label), &a});
  }
}

std::string RecordSource::id(std::size_t i) const {
  const auto& item = items_.at(i);
  return item.augmented ? item.augmented->derived_id : item.record->record_id;
}

std::string RecordSource::parent_id(std::size_t i) const { return items_.at(i).record->record_id; }

int RecordSource::target(std::size_t i) const { return items_.at(i).target; }

Raster RecordSource::resized(const ImageRecord& record) const {
  {
    std::lock_guard lock(mutex_);
    const auto it = cache_.find(record.record_id);
    if (it != cache_.end()) return it->second;
  }
  Raster img;
  try {
    img = load_resized(root_ / record.path, spec_.input_side);
  } catch (const std::exception& e) {
    throw ModelInputError(record.record_id, e.what());
  }
  std::lock_guard lock(mutex_);
  const auto bytes = img.pixels.size() * sizeof(float);
  if (cached_bytes_ + bytes <= cache_bytes_) {
    cache_.emplace(record.record_id, img);
    cached_bytes_ += bytes;
  }
  return img;
}

torch::Tensor RecordSource::input(std::size_t i) const {
  const auto& item = items_.at(i);
  auto img = resized(*item.record);
  if (item.augmented) img = apply_transform(img, item.augmented->transform, fill_);
  auto t = standardize(img, spec_);
  return torch::from_blob(t.values.data(), {t.channels, t.height, t.width}, torch::kFloat32).clone();
}

// ---- training -------------------------------------------------------------

void TrainingConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning rate must be finite and non-negative");
  if (!(momentum >= 0.0) || momentum >= 1.0) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
}

namespace {

struct Batch {
  torch::Tensor inputs;
  torch::Tensor targets;
};

Batch gather(const ExampleSource& source, std::span<const std::size_t> indices, const torch::Device& device) {
  std::vector<torch::Tensor> inputs;
  std::vector<std::int64_t> targets;
  inputs.reserve(indices.size());
  for (const auto i : indices) {
    inputs.push_back(source.input(i));
    targets.push_back(source.target(i));
  }
  return {torch::stack(inputs).to(device), torch::tensor(targets, torch::kLong).to(device)};
}

using Snapshot = std::vector<torch::Tensor>;

Snapshot snapshot(NetworkImpl& net) {
  Snapshot s;
  for (const auto& p : net.parameters()) s.push_back(p.detach().clone());
  for (const auto& b : net.buffers()) s.push_back(b.detach().clone());
  return s;
}

void restore(NetworkImpl& net, const Snapshot& s) {
  torch::NoGradGuard guard;
  std::size_t i = 0;
  for (auto& p : net.parameters()) p.copy_(s[i++]);
  for (auto& b : net.buffers()) b.copy_(s[i++]);
}

void set_training_mode(NetworkImpl& net, const BackboneSpec& spec, bool head_only) {
  net.train();
  if (!head_only) return;
  for (const auto& item : net.named_modules("", false)) {
    if (!is_head_parameter(item.key(), spec) && std::dynamic_pointer_cast<torch::nn::BatchNorm2dImpl>(item.value()))
      item.value()->eval();
  }
}

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

Evaluation evaluate(NetworkImpl& net, const ExampleSource& source, int batch_size, const torch::Device& device) {
  torch::NoGradGuard guard;
  net.eval();
  double loss = 0.0;
  std::int64_t correct = 0;
  std::vector<std::size_t> order(source.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const auto n = std::min<std::size_t>(batch_size, order.size() - start);
    const auto batch = gather(source, std::span(order).subspan(start, n), device);
    const auto logits = net.forward(batch.inputs);
    loss += torch::nn::functional::cross_entropy(
                logits, batch.targets, torch::nn::functional::CrossEntropyFuncOptions().reduction(torch::kSum))
                .item<double>();
    correct += logits.argmax(1).eq(batch.targets).sum().item<std::int64_t>();
  }
  const auto total = static_cast<double>(source.size());
  return {loss / total, static_cast<double>(correct) / total};
}

}  // namespace

FoldModel train_fold(Classifier model, const ExampleSource& train, const ExampleSource& validation,
                     const TrainingConfig& config, int fold) {
  config.validate();
  if (train.size() == 0) throw TrainingError("training set is empty");
  if (validation.size() == 0) throw TrainingError("validation set is empty");
  std::set<std::string> train_parents;
  for (std::size_t i = 0; i < train.size(); ++i) train_parents.insert(train.parent_id(i));
  for (std::size_t i = 0; i < validation.size(); ++i) {
    if (train_parents.contains(validation.parent_id(i)))
      throw TrainingError("record " + validation.parent_id(i) + " is in both training and validation sets");
  }

  const auto fold_tag = std::to_string(fold);
  if (config.deterministic) at::globalContext().setDeterministicAlgorithms(true, /*warn_only=*/true);
  torch::manual_seed(derive_seed(config.seed, {"train", fold_tag}));

  const auto device = selected_device();
  auto& net = *model.net;
  const auto& spec = *model.spec;
  net.to(device);

  std::vector<torch::Tensor> trainable;
  for (auto& p : net.named_parameters()) {
    const bool learn = !config.head_only || is_head_parameter(p.key(), spec);
    p.value().set_requires_grad(learn);
    if (learn) trainable.push_back(p.value());
  }
  torch::optim::SGD optimizer(trainable, torch::optim::SGDOptions(config.learning_rate).momentum(config.momentum));

  FoldModel result;
  result.fold = fold;
  result.config = config;
  Snapshot best;
  double best_loss = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train.size());
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, {"epoch", fold_tag, std::to_string(epoch)}));
    rng.shuffle(std::span(order));

    set_training_mode(net, spec, config.head_only);
    double loss_sum = 0.0;
    std::int64_t correct = 0;
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const auto n = std::min<std::size_t>(config.batch_size, order.size() - start);
      const auto batch = gather(train, std::span(order).subspan(start, n), device);
      optimizer.zero_grad();
      const auto logits = net.forward(batch.inputs);
      const auto loss = torch::nn::functional::cross_entropy(logits, batch.targets);
      const double value = loss.item<double>();
      if (!std::isfinite(value)) {
        throw TrainingError(std::string(spec.name) + " fold " + fold_tag + ": non-finite loss at epoch " +
                            std::to_string(epoch) + ", batch " + std::to_string(batch_index + 1));
      }
      loss.backward();
      optimizer.step();
      loss_sum += value * static_cast<double>(n);
      correct += logits.detach().argmax(1).eq(batch.targets).sum().item<std::int64_t>();
    }

    const auto val = evaluate(net, validation, config.batch_size, device);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(train.size()),
                    static_cast<double>(correct) / static_cast<double>(train.size()), val.loss, val.accuracy};
    result.history.push_back(rec);
    detail::log_info(std::string(spec.name) + " fold " + fold_tag + " epoch " + std::to_string(epoch) + "/" +
                     std::to_string(config.epochs) + ": train loss " + detail::fixed(rec.train_loss, 4) + " acc " +
                     detail::fixed(rec.train_accuracy, 4) + ", val loss " + detail::fixed(rec.val_loss, 4) +
                     " acc " + detail::fixed(rec.val_accuracy, 4));
    if (val.loss < best_loss) {
      best_loss = val.loss;
      best = snapshot(net);
      result.best_epoch = epoch;
    }
  }

  restore(net, best);
  net.eval();
  for (auto& p : net.parameters()) p.set_requires_grad(true);
  result.classifier = std::move(model);
  return result;
}

// ---- inference ------------------------------------------------------------

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

std::vector<Prediction> predict(const Classifier& model, const ExampleSource& inputs, int batch_size) {
  if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
  const auto side = model.spec->input_side;
  const auto device = selected_device();
  auto& net = *model.net;
  net.to(device);
  net.eval();
  torch::NoGradGuard guard;

  std::vector<Prediction> out;
  out.reserve(inputs.size());
  for (std::size_t start = 0; start < inputs.size(); start += batch_size) {
    const auto n = std::min<std::size_t>(batch_size, inputs.size() - start);
    std::vector<torch::Tensor> batch;
    for (std::size_t i = start; i < start + n; ++i) {
      auto t = inputs.input(i);
      if (t.dim() != 3 || t.size(0) != 3 || t.size(1) != side || t.size(2) != side) {
        throw NetworkError(std::string(model.spec->name) + " expects 3x" + std::to_string(side) + "x" +
                           std::to_string(side) + " input; " + inputs.id(i) + " is " +
                           c10::str(t.sizes()));
      }
      batch.push_back(std::move(t));
    }
    const auto probs =
        torch::softmax(net.forward(torch::stack(batch).to(device)).to(torch::kCPU).to(torch::kFloat64), 1)
            .contiguous();
    const auto* p = probs.data_ptr<double>();
    const auto k = probs.size(1);
    for (std::size_t r = 0; r < n; ++r) {
      Prediction pred;
      pred.id = inputs.id(start + r);
      pred.target = inputs.target(start + r);
      pred.probabilities.assign(p + r * k, p + (r + 1) * k);
      pred.predicted = argmax(pred.probabilities);
      out.push_back(std::move(pred));
    }
  }
  return out;
}

// ---- persistence ----------------------------------------------------------

std::string history_tsv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch\ttrain_loss\ttrain_acc\tval_loss\tval_acc\n";
  for (const auto& h : history) {
    out += std::to_string(h.epoch) + "\t" + detail::fixed(h.train_loss, 6) + "\t" + detail::fixed(h.train_accuracy, 6) +
           "\t" + detail::fixed(h.val_loss, 6) + "\t" + detail::fixed(h.val_accuracy, 6) + "\n";
  }
  return out;
}

namespace {

json config_json(const TrainingConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"momentum", c.momentum},   {"batch_size", c.batch_size},
          {"epochs", c.epochs},               {"seed", c.seed},           {"head_only", c.head_only},
          {"deterministic", c.deterministic}};
}

}  // namespace

void save_fold_model(const FoldModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto weights = dir / "model.pt";
  model.classifier.net->to(torch::kCPU);
  torch::save(model.classifier.net, weights.string());
  json history = json::array();
  for (const auto& h : model.history)
    history.push_back({h.epoch, h.train_loss, h.train_accuracy, h.val_loss, h.val_accuracy});
  const json meta = {
      {"backbone", std::string(model.classifier.spec->name)},
      {"fold", model.fold},
      {"class_names", model.classifier.class_names},
      {"best_epoch", model.best_epoch},
      {"config", config_json(model.config)},
      {"pretrain_corpus", std::string(to_string(model.classifier.provenance.corpus))},
      {"weight_source", model.classifier.provenance.source},
      {"weight_fallback", model.classifier.provenance.fallback},
      {"weights_sha256", sha256_file(weights)},
      {"history", history},
  };
  detail::write_text_file(dir / "metadata.json", meta.dump(2) + "\n");
  detail::write_text_file(dir / "history.tsv", history_tsv(model.history));
}

FoldModel load_fold_model(const std::filesystem::path& dir) {
  json meta;
  try {
    meta = json::parse(detail::read_text_file(dir / "metadata.json"));
  } catch (const std::exception& e) {
    throw TrainingError("cannot read " + (dir / "metadata.json").string() + ": " + e.what());
  }
  const auto weights = dir / "model.pt";
  if (!std::filesystem::exists(weights)) throw TrainingError("missing " + weights.string());
  if (sha256_file(weights) != meta.at("weights_sha256").get<std::string>())
    throw TrainingError("checksum mismatch for " + weights.string());
  const auto backbone = parse_backbone(meta.at("backbone").get<std::string>());
  if (!backbone) throw TrainingError("unknown backbone in " + (dir / "metadata.json").string());

  FoldModel model;
  model.fold = meta.at("fold").get<int>();
  model.best_epoch = meta.at("best_epoch").get<int>();
  const auto& cfg = meta.at("config");
  model.config.learning_rate = cfg.at("learning_rate");
  model.config.momentum = cfg.at("momentum");
  model.config.batch_size = cfg.at("batch_size");
  model.config.epochs = cfg.at("epochs");
  model.config.seed = cfg.at("seed");
  model.config.head_only = cfg.at("head_only");
  model.config.deterministic = cfg.at("deterministic");
  for (const auto& h : meta.at("history"))
    model.history.push_back({h[0].get<int>(), h[1].get<double>(), h[2].get<double>(), h[3].get<double>(),
                             h[4].get<double>()});

  auto& c = model.classifier;
  c.spec = &backbone_spec(*backbone);
  c.class_names = meta.at("class_names").get<std::vector<std::string>>();
  c.net = make_network(*backbone, static_cast<std::int64_t>(c.class_names.size()));
  torch::load(c.net, weights.string());
  c.net->eval();
  const auto corpus = meta.at("pretrain_corpus").get<std::string>();
  c.provenance.corpus = corpus == "CHEST_XRAY"       ? PretrainCorpus::ChestXray
                        : corpus == "GENERAL_IMAGES" ? PretrainCorpus::GeneralImages
                                                     : PretrainCorpus::None;
  c.provenance.source = meta.at("weight_source").get<std::string>();
  c.provenance.fallback = meta.at("weight_fallback").get<bool>();
  return model;
}

// ---- gradient check -------------------------------------------------------

GradientCheck head_gradient_check(const torch::Tensor& features, const std::vector<int>& targets, int num_classes,
                                  std::uint64_t seed, int hidden) {
  if (features.dim() != 2 || features.size(0) != static_cast<std::int64_t>(targets.size()))
    throw std::invalid_argument("features must be N x D with one target per row");
  torch::manual_seed(derive_seed(seed, {"gradient-check"}));
  const auto opts = torch::TensorOptions().dtype(torch::kFloat64);
  const auto x = features.detach().to(torch::kCPU).to(torch::kFloat64);
  const auto d = x.size(1);
  const auto y = torch::tensor(std::vector<std::int64_t>(targets.begin(), targets.end()), torch::kLong);
  auto w1 = (torch::randn({hidden, d}, opts) / std::sqrt(static_cast<double>(d))).requires_grad_(true);
  auto b1 = (torch::randn({hidden}, opts) * 0.1).requires_grad_(true);
  auto w2 = (torch::randn({num_classes, hidden}, opts) / std::sqrt(static_cast<double>(hidden))).requires_grad_(true);
  auto b2 = (torch::randn({num_classes}, opts) * 0.1).requires_grad_(true);

  auto loss_fn = [&] {
    return torch::nn::functional::cross_entropy(torch::linear(torch::tanh(torch::linear(x, w1, b1)), w2, b2), y);
  };
  loss_fn().backward();

  GradientCheck result;
  constexpr double kStep = 1e-6;
  torch::NoGradGuard guard;
  for (auto* param : {&w1, &b1, &w2, &b2}) {
    auto flat = param->view({-1});
    const auto analytic = param->grad().view({-1});
    auto numeric = torch::empty_like(analytic);
    for (std::int64_t i = 0; i < flat.numel(); ++i) {
      const double original = flat[i].item<double>();
      flat[i] = original + kStep;
      const double up = loss_fn().item<double>();
      flat[i] = original - kStep;
      const double down = loss_fn().item<double>();
      flat[i] = original;
      numeric[i] = (up - down) / (2.0 * kStep);
    }
    // ||a - n|| / max(||a||, ||n||) per tensor; element-wise ratios blow up
    // on near-zero gradients where both sides are dominated by round-off
    const double diff = (analytic - numeric).norm().item<double>();
    const double scale = std::max(analytic.norm().item<double>(), numeric.norm().item<double>());
    result.max_relative_error = std::max(result.max_relative_error, scale > 0.0 ? diff / scale : diff);
    result.checked += static_cast<std::size_t>(flat.numel());
  }
  return result;
}

}  // namespace cxr
