#pragma once

#include "cxr/augment.hpp"
#include "cxr/catalog.hpp"
#include "cxr/network.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cxr {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Indexed examples with integer targets. `input(i)` is a C x H x W float
/// tensor already standardised for the backbone.
class ExampleSource {
 public:
  virtual ~ExampleSource() = default;
  [[nodiscard]] virtual std::size_t size() const = 0;
  [[nodiscard]] virtual std::string id(std::size_t i) const = 0;
  /// Record an augmented example was derived from; the id itself otherwise.
  [[nodiscard]] virtual std::string parent_id(std::size_t i) const { return id(i); }
  [[nodiscard]] virtual int target(std::size_t i) const = 0;
  [[nodiscard]] virtual torch::Tensor input(std::size_t i) const = 0;
};

/// In-memory examples, mostly for tests.
class TensorSource : public ExampleSource {
 public:
  /// `inputs` is N x C x H x W.
  TensorSource(torch::Tensor inputs, std::vector<int> targets, std::vector<std::string> ids = {});

  [[nodiscard]] std::size_t size() const override { return targets_.size(); }
  [[nodiscard]] std::string id(std::size_t i) const override { return ids_[i]; }
  [[nodiscard]] int target(std::size_t i) const override { return targets_[i]; }
  [[nodiscard]] torch::Tensor input(std::size_t i) const override { return inputs_[static_cast<std::int64_t>(i)]; }

 private:
  torch::Tensor inputs_;
  std::vector<int> targets_;
  std::vector<std::string> ids_;
};

/// Manifest records (and optionally augmented copies of them) decoded on
/// demand. Resized parents are cached up to `cache_bytes`; augmentation is
/// applied to the resized raster before standardisation.
class RecordSource : public ExampleSource {
 public:
  RecordSource(const Manifest& manifest, const std::vector<std::string>& record_ids,
               std::vector<Label> class_order, BackboneInputSpec spec,
               std::vector<AugmentedRecord> augmented = {}, float fill = 0.0f,
               std::size_t cache_bytes = std::size_t{512} << 20);

  [[nodiscard]] std::size_t size() const override { return items_.size(); }
  [[nodiscard]] std::string id(std::size_t i) const override;
  [[nodiscard]] std::string parent_id(std::size_t i) const override;
  [[nodiscard]] int target(std::size_t i) const override;
  [[nodiscard]] torch::Tensor input(std::size_t i) const override;

 private:
  struct Item {
    const ImageRecord* record = nullptr;
    int target = 0;
    const AugmentedRecord* augmented = nullptr;
  };

  Raster resized(const ImageRecord& record) const;

  std::filesystem::path root_;
  std::vector<ImageRecord> records_;
  std::vector<AugmentedRecord> augmented_;
  std::vector<Item> items_;
  BackboneInputSpec spec_;
  float fill_;
  std::size_t cache_bytes_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, Raster> cache_;
  mutable std::size_t cached_bytes_ = 0;
};

struct TrainingConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 16;
  int epochs = 20;
  std::uint64_t seed = 0;
  /// Freeze everything but the classifier layer (backbone batch norm stays
  /// in inference mode).
  bool head_only = false;
  /// Ask torch for deterministic kernels.
  bool deterministic = true;

  /// Throws std::invalid_argument unless every hyperparameter is positive
  /// (learning rate and momentum may be zero) and epochs >= 1.
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  ///< 1-based
  double train_loss = 0, train_accuracy = 0, val_loss = 0, val_accuracy = 0;
};

struct FoldModel {
  Classifier classifier;
  int fold = 0;
  TrainingConfig config;
  std::vector<EpochRecord> history;
  int best_epoch = 0;  ///< epoch whose parameters the model holds
};

/// Mini-batch SGD with momentum on cross-entropy for exactly
/// `config.epochs` epochs, batches reshuffled each epoch from the seed.
/// Returns the parameters from the epoch with the lowest validation loss
/// (earliest on ties). Throws TrainingError on overlapping or empty sets
/// and on a non-finite loss, naming the epoch and batch.
FoldModel train_fold(Classifier model, const ExampleSource& train, const ExampleSource& validation,
                     const TrainingConfig& config, int fold = 0);

struct Prediction {
  std::string id;
  int target = -1;
  std::vector<double> probabilities;
  int predicted = 0;
};

/// Softmax scores in inference mode. Throws NetworkError if an input is not
/// 3 x side x side for the classifier's backbone.
std::vector<Prediction> predict(const Classifier& model, const ExampleSource& inputs, int batch_size = 16);

/// Index of the largest value, the lowest index among ties.
int argmax(std::span<const double> values);

/// `<dir>/model.pt`, `<dir>/metadata.json`, `<dir>/history.tsv`.
void save_fold_model(const FoldModel& model, const std::filesystem::path& dir);

/// Rebuilds the architecture from the metadata and loads model.pt after
/// verifying its recorded checksum. Throws TrainingError on mismatch.
FoldModel load_fold_model(const std::filesystem::path& dir);

/// "epoch\ttrain_loss\ttrain_acc\tval_loss\tval_acc" plus one line per epoch.
std::string history_tsv(const std::vector<EpochRecord>& history);

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

/// Compares autograd gradients of mean cross-entropy with central finite
/// differences for every weight of a two-layer tanh head on fixed
/// `features` (N x D), in double precision. The error of each parameter
/// tensor is ||analytic - numeric|| / max(||analytic||, ||numeric||).
GradientCheck head_gradient_check(const torch::Tensor& features, const std::vector<int>& targets, int num_classes,
                                  std::uint64_t seed, int hidden = 8);

}  // namespace cxr
