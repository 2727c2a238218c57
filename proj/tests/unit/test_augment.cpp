#include "cxr/augment.hpp"
#include "cxr/catalog.hpp"
#include "cxr/checksum.hpp"
#include "oracles.hpp"
#include "toy_corpus.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace cxr;

namespace {

float max_abs_diff(const Raster& a, const Raster& b) {
  float worst = 0.0f;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) worst = std::max(worst, std::abs(a.pixels[i] - b.pixels[i]));
  return worst;
}

std::pair<int, int> argmax_pixel(const Raster& img) {
  const auto it = std::max_element(img.pixels.begin(), img.pixels.end());
  const auto idx = static_cast<int>(it - img.pixels.begin());
  return {idx % img.width, idx / img.width};
}

SplitPlan plan_with_counts(std::map<Label, int> train_counts) {
  SplitPlan plan;
  plan.k = 2;
  plan.folds.resize(2);
  int n = 0;
  for (const auto& [label, count] : train_counts) {
    for (int i = 0; i < count; ++i, ++n) {
      const auto id = "r" + std::to_string(100000 + n);
      plan.labels[id] = label;
      plan.folds[0].train.push_back(id);
      plan.folds[1].test.push_back(id);
    }
  }
  // a few held-out records in fold 0
  for (int i = 0; i < 5; ++i) {
    const auto id = "v" + std::to_string(i);
    plan.labels[id] = Label::Covid19;
    (i < 2 ? plan.folds[0].validation : plan.folds[0].test).push_back(id);
    plan.folds[1].train.push_back(id);
  }
  return plan;
}

}  // namespace

TEST(Rotate, ZeroAngleIsBitIdentical) {
  const auto img = oracle::gradient_pattern(32, 1);
  EXPECT_EQ(rotate(img, 0.0), img);
}

TEST(Rotate, QuarterTurnMovesPixelCounterClockwise) {
  Raster img(9, 9, 1, 0.0f);
  img.at(6, 4) = 255.0f;  // two pixels right of centre (4, 4)
  // |angle| is capped at 45, so compose two eighth turns for the quarter turn
  const auto quarter = rotate(rotate(img, 45.0), 45.0);
  EXPECT_EQ(argmax_pixel(quarter), std::make_pair(4, 2));  // now above the centre

  Raster even(8, 8, 1, 0.0f);
  even.at(5, 2) = 255.0f;  // up-right of centre (3.5, 3.5)
  EXPECT_EQ(argmax_pixel(rotate(rotate(even, 45.0), 45.0)), std::make_pair(2, 2));
}

TEST(Rotate, MatchesIndependentInverseMappingOracle) {
  for (int variant = 0; variant < 3; ++variant) {
    const auto img = oracle::gradient_pattern(32, variant);
    for (const double angle : {15.0, -15.0, 5.0, -10.0}) {
      const auto ours = rotate(img, angle);
      const auto ref = oracle::inverse_mapping_rotate(img, angle, 0.0f);
      EXPECT_LE(max_abs_diff(ours, ref), 1.0f) << "variant " << variant << " angle " << angle;
    }
  }
}

TEST(Rotate, RejectsLargeAngles) {
  EXPECT_THROW(rotate(oracle::gradient_pattern(8), 46.0), std::invalid_argument);
}

TEST(Translate, ZeroShiftIsBitIdentical) {
  const auto img = oracle::gradient_pattern(17, 2);
  EXPECT_EQ(translate(img, 0.0, 0.0), img);
}

TEST(Translate, HalfWidthOnTwoByTwoShiftsOneColumn) {
  Raster img(2, 2, 1);
  img.at(0, 0) = 10; img.at(1, 0) = 20;
  img.at(0, 1) = 30; img.at(1, 1) = 40;
  const auto out = translate(img, 0.5, 0.0);
  EXPECT_EQ(out.at(0, 0), 0.0f);
  EXPECT_EQ(out.at(0, 1), 0.0f);
  EXPECT_EQ(out.at(1, 0), 10.0f);
  EXPECT_EQ(out.at(1, 1), 30.0f);
}

TEST(Translate, RoundTripIsCloseAwayFromBorder) {
  const auto img = oracle::gradient_pattern(128, 1);
  const auto back = translate(translate(img, 0.05, 0.0), -0.05, 0.0);
  float worst = 0.0f;
  for (int y = 12; y < 128 - 12; ++y)
    for (int x = 12; x < 128 - 12; ++x) worst = std::max(worst, std::abs(back.at(x, y) - img.at(x, y)));
  EXPECT_LE(worst, 2.0f);
}

TEST(Geometry, DimensionsAndRangePreserved) {
  const auto img = oracle::gradient_pattern(40, 2);
  const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const float floor_v = std::min(*lo, 0.0f), ceil_v = std::max(*hi, 0.0f);
  for (const auto& out : {rotate(img, 12.5), translate(img, -0.2, 0.13),
                          apply_transform(img, {TransformKind::RotateTranslate, -7.0, 0.03, -0.04})}) {
    EXPECT_EQ(out.width, img.width);
    EXPECT_EQ(out.height, img.height);
    for (const float v : out.pixels) {
      ASSERT_GE(v, floor_v - 1e-3f);
      ASSERT_LE(v, ceil_v + 1e-3f);
    }
  }
}

TEST(ExpandTrainingFold, DefaultMultiplicities) {
  const auto plan = plan_with_counts({{Label::Covid19, 304}, {Label::Normal, 1137}, {Label::ViralPneumonia, 1069}});
  AugmentationSpec spec;
  spec.seed = 3;
  const auto expansion = expand_training_fold(plan, 0, spec);
  EXPECT_EQ(expansion.augmented_train.at(Label::Covid19), 2128u);
  EXPECT_EQ(expansion.augmented_train.at(Label::Normal), 2274u);
  EXPECT_EQ(expansion.augmented_train.at(Label::ViralPneumonia), 2138u);
  EXPECT_EQ(expansion.records.size(), 304u * 6 + 1137u + 1069u);
  EXPECT_TRUE(leaked_parents(plan, expansion).empty());

  auto table = split_counts(plan);
  record_expansion(table, expansion);
  EXPECT_EQ(table.row(Label::Covid19, 0).augmented_train, 2128u);
  EXPECT_EQ(table.row(Label::Covid19, 1).augmented_train, 0u);
}

TEST(ExpandTrainingFold, CovidCopiesUseEachRotationOnce) {
  const auto plan = plan_with_counts({{Label::Covid19, 3}, {Label::Normal, 3}});
  AugmentationSpec spec;
  const auto expansion = expand_training_fold(plan, 0, spec);
  std::map<std::string, std::vector<double>> angles;
  for (const auto& r : expansion.records) {
    EXPECT_LE(std::abs(r.transform.dx), 0.05);
    EXPECT_LE(std::abs(r.transform.dy), 0.05);
    if (r.label == Label::Covid19) {
      EXPECT_EQ(r.transform.kind, TransformKind::RotateTranslate);
      angles[r.parent_record_id].push_back(r.transform.angle_degrees);
    } else {
      EXPECT_EQ(r.transform.kind, TransformKind::Translate);
    }
  }
  for (auto& [parent, list] : angles) {
    std::sort(list.begin(), list.end());
    EXPECT_EQ(list, (std::vector<double>{-15, -10, -5, 5, 10, 15}));
  }
}

TEST(ExpandTrainingFold, ZeroCopiesAndDeterminism) {
  const auto plan = plan_with_counts({{Label::Covid19, 10}, {Label::Normal, 12}});
  AugmentationSpec none;
  none.copies_per_class = {{Label::Covid19, 0}, {Label::Normal, 0}};
  const auto empty = expand_training_fold(plan, 0, none);
  EXPECT_TRUE(empty.records.empty());
  EXPECT_EQ(empty.augmented_train.at(Label::Covid19), 10u);
  EXPECT_EQ(empty.augmented_train.at(Label::Normal), 12u);

  AugmentationSpec spec;
  spec.seed = 17;
  EXPECT_EQ(expand_training_fold(plan, 0, spec).records, expand_training_fold(plan, 0, spec).records);
  spec.seed = 18;
  EXPECT_NE(expand_training_fold(plan, 0, spec).records, expand_training_fold(plan, 0, AugmentationSpec{}).records);
}

TEST(ExpandTrainingFold, RejectsInvalidSpecsAndEmptyFolds) {
  const auto plan = plan_with_counts({{Label::Covid19, 4}});
  AugmentationSpec bad;
  bad.copies_per_class[Label::Covid19] = -1;
  EXPECT_THROW(expand_training_fold(plan, 0, bad), std::invalid_argument);
  AugmentationSpec wide;
  wide.translation.max_x = 0.6;
  EXPECT_THROW(expand_training_fold(plan, 0, wide), std::invalid_argument);

  SplitPlan empty = plan;
  empty.folds[0].train.clear();
  EXPECT_THROW(expand_training_fold(empty, 0, AugmentationSpec{}), std::invalid_argument);
}

TEST(Materialize, WritesImagesAndSidecar) {
  const auto root = oracle::scratch_dir("aug-corpus");
  toy::write_toy_corpus(root, {2, 24, 5, {}});
  const auto m = ingest_directory(root, {{"covid", Label::Covid19}, {"normal", Label::Normal}}).manifest;
  SplitPlan plan;
  plan.k = 2;
  plan.folds.resize(2);
  for (const auto& r : m.records) {
    plan.labels[r.record_id] = r.label;
    plan.folds[0].train.push_back(r.record_id);
  }
  const auto expansion = expand_training_fold(plan, 0, AugmentationSpec{});
  const auto run = oracle::scratch_dir("aug-run");
  materialize_fold(expansion, m, AugmentationSpec{}, run);
  const auto sidecar = run / "aug" / "0" / "descriptors.tsv";
  ASSERT_TRUE(std::filesystem::exists(sidecar));
  for (const auto& r : expansion.records) {
    const auto png = run / "aug" / "0" / std::string(to_string(r.label)) / (r.derived_id + ".png");
    ASSERT_TRUE(std::filesystem::exists(png)) << png;
    EXPECT_EQ(read_raster(png).width, 24);
  }
}
