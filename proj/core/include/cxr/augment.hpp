#pragma once

#include "cxr/catalog.hpp"
#include "cxr/raster.hpp"
#include "cxr/splits.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace cxr {

/// Signed translation bounds as fractions of width (x) and height (y).
struct TranslationRange {
  double min_x = -0.05;
  double max_x = 0.05;
  double min_y = -0.05;
  double max_y = 0.05;
};

struct AugmentationSpec {
  /// Cycled through for classes in `rotated_classes`; positive is
  /// counter-clockwise, in degrees.
  std::vector<double> rotation_degrees{-15.0, -10.0, -5.0, 5.0, 10.0, 15.0};
  TranslationRange translation;
  std::map<Label, int> copies_per_class{
      {Label::Covid19, 6}, {Label::Normal, 1}, {Label::ViralPneumonia, 1}};
  std::set<Label> rotated_classes{Label::Covid19};
  float fill_value = 0.0f;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on negative copy counts or translation
  /// bounds outside [-0.5, 0.5].
  void validate() const;
};

enum class TransformKind { RotateTranslate, Translate };

/// Everything needed to regenerate an augmented image from its parent.
struct TransformDescriptor {
  TransformKind kind = TransformKind::Translate;
  double angle_degrees = 0.0;
  double dx = 0.0;  ///< fraction of width, positive shifts right
  double dy = 0.0;  ///< fraction of height, positive shifts down

  friend bool operator==(const TransformDescriptor&, const TransformDescriptor&) = default;
};

struct AugmentedRecord {
  std::string parent_record_id;
  std::string derived_id;
  Label label = Label::Covid19;
  TransformDescriptor transform;

  friend bool operator==(const AugmentedRecord&, const AugmentedRecord&) = default;
};

/// Rotation about the image centre ((w-1)/2, (h-1)/2) with bilinear
/// sampling. Pixels whose source falls outside the frame take `fill`.
/// Requires |degrees| <= 45.
Raster rotate(const Raster& image, double degrees, float fill = 0.0f);

/// Sub-pixel shift by dx * width and dy * height. Requires |dx|, |dy| <= 0.5.
Raster translate(const Raster& image, double dx, double dy, float fill = 0.0f);

/// Rotation followed by translation, resampled once.
Raster apply_transform(const Raster& image, const TransformDescriptor& transform,
                       float fill = 0.0f);

struct FoldExpansion {
  int fold = 0;
  std::vector<AugmentedRecord> records;
  std::map<Label, std::size_t> original_train;
  std::map<Label, std::size_t> augmented_train;  ///< originals plus copies
};

/// Draws the augmentation descriptors for one fold's training records.
/// Validation and test records are never touched. Descriptors depend only
/// on (spec.seed, fold, parent record id), so they do not shift when other
/// records are added.
FoldExpansion expand_training_fold(const SplitPlan& plan, int fold, const AugmentationSpec& spec);

/// Copies a fold expansion's totals into the count table's augmented column.
void record_expansion(SplitCountTable& table, const FoldExpansion& expansion);

/// Parents of augmented records that are not training records of the fold.
std::vector<std::string> leaked_parents(const SplitPlan& plan, const FoldExpansion& expansion);

std::string describe(const TransformDescriptor& transform);

/// Writes `<run>/aug/<fold>/<class>/<derived_id>.png` at the parent's
/// native resolution plus `<run>/aug/<fold>/descriptors.tsv`.
void materialize_fold(const FoldExpansion& expansion, const Manifest& manifest,
                      const AugmentationSpec& spec, const std::filesystem::path& run_dir);

void write_descriptor_sidecar(const FoldExpansion& expansion, const std::filesystem::path& file);

}  // namespace cxr
