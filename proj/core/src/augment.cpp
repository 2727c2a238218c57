#include "cxr/augment.hpp"

#include "cxr/random.hpp"
#include "io_util.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace cxr {

namespace {

/// Inverse map from output pixel to source coordinates:
/// src = M * (x, y) + t.
struct InverseAffine {
  double m00, m01, m10, m11, tx, ty;
};

float sample_bilinear(const Raster& img, double sx, double sy, int c, float fill) {
  const double fx0 = std::floor(sx);
  const double fy0 = std::floor(sy);
  const double fx = sx - fx0;
  const double fy = sy - fy0;
  // Beyond a one-pixel margin every neighbour is fill.
  if (fx0 < -1.0 || fy0 < -1.0 || fx0 >= img.width || fy0 >= img.height) return fill;
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);
  auto px = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return fill;
    return img.at(x, y, c);
  };
  const double top = (1.0 - fx) * px(x0, y0) + fx * px(x0 + 1, y0);
  const double bottom = (1.0 - fx) * px(x0, y0 + 1) + fx * px(x0 + 1, y0 + 1);
  return static_cast<float>((1.0 - fy) * top + fy * bottom);
}

Raster warp(const Raster& image, const InverseAffine& map, float fill) {
  Raster out(image.width, image.height, image.channels);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double sx = map.m00 * x + map.m01 * y + map.tx;
      const double sy = map.m10 * x + map.m11 * y + map.ty;
      for (int c = 0; c < image.channels; ++c) out.at(x, y, c) = sample_bilinear(image, sx, sy, c, fill);
    }
  }
  return out;
}

/// Output pixel p maps back to source R^-1 (p - shift - centre) + centre,
/// where R rotates counter-clockwise on screen (y axis pointing down).
InverseAffine rotate_then_shift(const Raster& image, double degrees, double shift_x, double shift_y) {
  const double theta = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double cx = (image.width - 1) / 2.0;
  const double cy = (image.height - 1) / 2.0;
  // R^-1 = [[c, -s], [s, c]] in (x, y-down) coordinates.
  const double ux = -shift_x - cx;
  const double uy = -shift_y - cy;
  return {c, -s, s, c, c * ux - s * uy + cx, s * ux + c * uy + cy};
}

void check_translation(double dx, double dy) {
  if (std::abs(dx) > 0.5 || std::abs(dy) > 0.5)
    throw std::invalid_argument("translation fractions must lie within [-0.5, 0.5]");
}

void check_rotation(double degrees) {
  if (!(std::abs(degrees) <= 45.0)) throw std::invalid_argument("rotation angle must lie within [-45, 45] degrees");
}

}  // namespace

void AugmentationSpec::validate() const {
  for (const auto& [label, n] : copies_per_class)
    if (n < 0) throw std::invalid_argument("negative copy count for " + std::string(to_string(label)));
  for (const double b : {translation.min_x, translation.max_x, translation.min_y, translation.max_y})
    if (!(std::abs(b) <= 0.5)) throw std::invalid_argument("translation bounds must lie within [-0.5, 0.5]");
  if (translation.min_x > translation.max_x || translation.min_y > translation.max_y)
    throw std::invalid_argument("translation lower bound exceeds upper bound");
  for (const double a : rotation_degrees) check_rotation(a);
}

Raster rotate(const Raster& image, double degrees, float fill) {
  check_rotation(degrees);
  if (image.empty()) throw std::invalid_argument("rotate: empty image");
  if (degrees == 0.0) return image;
  return warp(image, rotate_then_shift(image, degrees, 0.0, 0.0), fill);
}

Raster translate(const Raster& image, double dx, double dy, float fill) {
  check_translation(dx, dy);
  if (image.empty()) throw std::invalid_argument("translate: empty image");
  if (dx == 0.0 && dy == 0.0) return image;
  return warp(image, {1.0, 0.0, 0.0, 1.0, -dx * image.width, -dy * image.height}, fill);
}

Raster apply_transform(const Raster& image, const TransformDescriptor& t, float fill) {
  check_translation(t.dx, t.dy);
  if (t.kind == TransformKind::Translate || t.angle_degrees == 0.0) return translate(image, t.dx, t.dy, fill);
  check_rotation(t.angle_degrees);
  if (image.empty()) throw std::invalid_argument("apply_transform: empty image");
  return warp(image,
              rotate_then_shift(image, t.angle_degrees, t.dx * image.width, t.dy * image.height), fill);
}

FoldExpansion expand_training_fold(const SplitPlan& plan, int fold, const AugmentationSpec& spec) {
  spec.validate();
  if (fold < 0 || fold >= static_cast<int>(plan.folds.size()))
    throw std::out_of_range("fold index " + std::to_string(fold) + " out of range");
  const auto& assignment = plan.folds[static_cast<std::size_t>(fold)];
  if (assignment.train.empty()) throw std::invalid_argument("fold " + std::to_string(fold) + " has no training records");

  std::set<Label> present;
  for (const auto& [id, label] : plan.labels) present.insert(label);
  for (const auto& [label, n] : spec.copies_per_class)
    if (n > 0 && !present.contains(label))
      spdlog::warn("augmentation copies configured for {} but the plan has no such records; ignored",
                   to_string(label));

  FoldExpansion out;
  out.fold = fold;
  const auto fold_tag = std::to_string(fold);
  for (const auto& parent : assignment.train) {
    const auto label = plan.label_of(parent);
    ++out.original_train[label];
    ++out.augmented_train[label];
    const auto it = spec.copies_per_class.find(label);
    const int copies = it == spec.copies_per_class.end() ? 0 : it->second;
    if (copies == 0) continue;

    Rng rng(derive_seed(spec.seed, {"augment", fold_tag, parent}));
    const bool rotated = spec.rotated_classes.contains(label) && !spec.rotation_degrees.empty();
    for (int j = 0; j < copies; ++j) {
      TransformDescriptor t;
      if (rotated) {
        t.kind = TransformKind::RotateTranslate;
        t.angle_degrees = spec.rotation_degrees[static_cast<std::size_t>(j) % spec.rotation_degrees.size()];
      }
      t.dx = rng.uniform(spec.translation.min_x, spec.translation.max_x);
      t.dy = rng.uniform(spec.translation.min_y, spec.translation.max_y);
      out.records.push_back({parent, parent + "~a" + std::to_string(j), label, t});
      ++out.augmented_train[label];
    }
  }
  return out;
}

void record_expansion(SplitCountTable& table, const FoldExpansion& expansion) {
  for (auto& row : table.rows) {
    if (row.fold != expansion.fold) continue;
    const auto it = expansion.augmented_train.find(row.label);
    row.augmented_train = it == expansion.augmented_train.end() ? 0 : it->second;
  }
}

std::vector<std::string> leaked_parents(const SplitPlan& plan, const FoldExpansion& expansion) {
  const auto& fold = plan.folds.at(static_cast<std::size_t>(expansion.fold));
  const std::unordered_set<std::string> train(fold.train.begin(), fold.train.end());
  std::vector<std::string> leaked;
  for (const auto& r : expansion.records)
    if (!train.contains(r.parent_record_id)) leaked.push_back(r.parent_record_id);
  return leaked;
}

std::string describe(const TransformDescriptor& t) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.precision(6);
  out << std::fixed;
  if (t.kind == TransformKind::RotateTranslate) out << "angle=" << t.angle_degrees << ';';
  out << "dx=" << t.dx << ";dy=" << t.dy;
  return out.str();
}

void write_descriptor_sidecar(const FoldExpansion& expansion, const std::filesystem::path& file) {
  std::ostringstream out;
  out << "derived_id\tparent_record_id\tkind\tparameters\n";
  for (const auto& r : expansion.records) {
    out << r.derived_id << '\t' << r.parent_record_id << '\t'
        << (r.transform.kind == TransformKind::RotateTranslate ? "rotate_translate" : "translate")
        << '\t' << describe(r.transform) << '\n';
  }
  detail::write_text_file(file, out.str());
}

void materialize_fold(const FoldExpansion& expansion, const Manifest& manifest,
                      const AugmentationSpec& spec, const std::filesystem::path& run_dir) {
  const auto base = run_dir / "aug" / std::to_string(expansion.fold);
  std::string cached_parent;
  Raster parent_image;
  for (const auto& r : expansion.records) {
    if (r.parent_record_id != cached_parent) {
      const auto* record = manifest.find(r.parent_record_id);
      if (!record) throw std::invalid_argument("parent " + r.parent_record_id + " not in manifest");
      parent_image = read_raster(manifest.resolve(*record));
      cached_parent = r.parent_record_id;
    }
    write_png(apply_transform(parent_image, r.transform, spec.fill_value),
              base / std::string(to_string(r.label)) / (r.derived_id + ".png"));
  }
  write_descriptor_sidecar(expansion, base / "descriptors.tsv");
}

}  // namespace cxr
