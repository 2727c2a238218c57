#pragma once

#include "cxr/catalog.hpp"
#include "cxr/labels.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cxr {

class SplitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Record ids of one fold, each list sorted.
struct FoldAssignment {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;

  friend bool operator==(const FoldAssignment&, const FoldAssignment&) = default;
};

/// Stratified k-fold assignment of a manifest's records.
struct SplitPlan {
  int k = 5;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::ThreeClass;
  double validation_fraction = 0.0;  ///< 0 until carve_validation runs
  std::vector<FoldAssignment> folds;
  std::map<std::string, Label> labels;  ///< record_id -> class

  [[nodiscard]] Label label_of(const std::string& record_id) const;

  friend bool operator==(const SplitPlan&, const SplitPlan&) = default;
};

/// Shuffles each class by a seed derived from (seed, class) and deals the
/// records round-robin into k test buckets. Every non-test record of a fold
/// lands in that fold's training pool. Classes of the scheme with no
/// records yield empty rows; 0 < population < k is an error.
SplitPlan stratified_kfold(const Manifest& manifest, int k, std::uint64_t seed, Scheme scheme);

/// Moves round(fraction * pool) records of every (fold, class) training
/// pool into validation.
SplitPlan carve_validation(const SplitPlan& plan, double fraction);

struct SplitCountRow {
  Label label = Label::Covid19;
  int fold = 0;
  std::size_t population = 0;
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
  std::size_t augmented_train = 0;  ///< originals plus copies; 0 until filled
};

struct SplitCountTable {
  std::vector<SplitCountRow> rows;  ///< ordered by class, then fold

  [[nodiscard]] const SplitCountRow& row(Label label, int fold) const;
  SplitCountRow& row(Label label, int fold);
};

SplitCountTable split_counts(const SplitPlan& plan);

/// Fixed-width text table: one line per class and fold.
std::string render_split_table(const SplitCountTable& table);

/// Human-readable violations of the plan's structural invariants
/// (partition, disjoint roles, stratification). Empty when the plan is
/// valid.
std::vector<std::string> plan_violations(const SplitPlan& plan);

std::string split_plan_json(const SplitPlan& plan);
SplitPlan parse_split_plan(const std::string& json_text);
void write_split_plan(const SplitPlan& plan, const std::filesystem::path& file);
SplitPlan read_split_plan(const std::filesystem::path& file);

}  // namespace cxr
