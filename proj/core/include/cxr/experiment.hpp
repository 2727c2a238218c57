#pragma once

#include "cxr/augment.hpp"
#include "cxr/backbone_registry.hpp"
#include "cxr/labels.hpp"
#include "cxr/trainer.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cxr {

/// Invalid or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExplainConfig {
  bool enabled = true;
  /// Conv ordinals (`conv#N`) or module paths.
  std::vector<std::string> layers{"conv#1", "conv#14", "conv#29"};
};

/// One study arm: a scheme, with or without augmentation, over a list of
/// backbones.
struct RunConfig {
  std::filesystem::path corpus_root;
  /// Reuse a manifest written by `cxrscreen catalog` instead of ingesting.
  std::filesystem::path manifest;
  Scheme scheme = Scheme::ThreeClass;
  bool augment = true;
  std::vector<Backbone> backbones;
  int k = 5;
  std::uint64_t seed = 0;
  double validation_fraction = 0.10;
  AugmentationSpec augmentation;
  TrainingConfig training;
  std::filesystem::path output_dir;
  WeightSource weights;
  /// Subsample every class to this many records. Unset: two-class runs
  /// without augmentation go down to the smallest class, others keep all.
  std::optional<std::size_t> balance_per_class;
  ExplainConfig explain;

  /// Throws ConfigError: corpus root (or manifest) and weight directory must
  /// exist, k >= 2, fraction in (0, 1), training and augmentation valid.
  void validate() const;
};

/// Relative paths are resolved against `base_dir`. Unknown keys are errors.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig read_run_config(const std::filesystem::path& file);
nlohmann::json run_config_json(const RunConfig& config);

/// `<timestamp>-<scheme>-<aug|noaug>`.
std::string run_directory_name(const RunConfig& config, const std::string& timestamp);

struct RunPlan {
  std::filesystem::path run_dir;
  std::vector<std::string> stages;
};

/// What run_experiment would do, without touching the filesystem.
RunPlan plan_run(const RunConfig& config, const std::string& timestamp);

struct RunOutcome {
  std::filesystem::path run_dir;
  nlohmann::json report;
  std::vector<std::string> failed_backbones;
};

/// catalog -> split -> augment -> train -> evaluate -> explain for every
/// backbone, writing `<output_dir>/<run name>/{manifest,splits,models,
/// metrics,explain,report}`. A backbone whose fold fails is reported as
/// failed and the others still run. The report lists every file of the run
/// with its checksum. Throws ConfigError on an invalid config and
/// std::runtime_error if the run directory is locked.
RunOutcome run_experiment(const RunConfig& config);

}  // namespace cxr
