#include "cxr/catalog.hpp"
#include "cxr/checksum.hpp"
#include "cxr/trainer.hpp"
#include "oracles.hpp"
#include "toy_corpus.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <numeric>

namespace fs = std::filesystem;

namespace {

const cxr::BackboneSpec& resnet18() { return cxr::backbone_spec(cxr::Backbone::ResNet18); }

cxr::Classifier fresh(std::uint64_t seed = 1) { return cxr::build_classifier(resnet18(), {"A", "B"}, {{}, true}, seed); }

cxr::TensorSource tensors(int n, std::uint64_t seed, const std::string& prefix) {
  torch::manual_seed(seed);
  auto x = torch::randn({n, 3, 224, 224});
  std::vector<int> y;
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    y.push_back(i % 2);
    // make the classes separable by brightness
    x[i] += (i % 2 == 0 ? -1.0 : 1.0);
    ids.push_back(prefix + std::to_string(i));
  }
  return cxr::TensorSource(x, y, ids);
}

cxr::TrainingConfig quick(int epochs, int batch = 4) {
  cxr::TrainingConfig c;
  c.epochs = epochs;
  c.batch_size = batch;
  c.seed = 17;
  return c;
}

}  // namespace

TEST(TrainingConfig, Validation) {
  cxr::TrainingConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.learning_rate, 1e-3);
  EXPECT_DOUBLE_EQ(c.momentum, 0.9);
  EXPECT_EQ(c.batch_size, 16);
  EXPECT_EQ(c.epochs, 20);
  c.epochs = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.learning_rate = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.momentum = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Train, ZeroLearningRateKeepsParametersAndLoss) {
  auto model = fresh();
  std::map<std::string, torch::Tensor> before;
  for (const auto& p : model.net->named_parameters()) before[p.key()] = p.value().detach().clone();
  auto cfg = quick(3, 8);
  cfg.learning_rate = 0.0;
  const auto fm = cxr::train_fold(model, tensors(8, 1, "t"), tensors(4, 2, "v"), cfg);
  for (const auto& p : fm.classifier.net->named_parameters()) EXPECT_TRUE(torch::equal(p.value(), before[p.key()])) << p.key();
  ASSERT_EQ(fm.history.size(), 3u);
  for (const auto& h : fm.history) EXPECT_NEAR(h.train_loss, fm.history.front().train_loss, 1e-5);
}

TEST(Train, KeepsTheLowestValidationLossEpoch) {
  const auto fm = cxr::train_fold(fresh(), tensors(8, 1, "t"), tensors(4, 2, "v"), quick(3));
  ASSERT_EQ(fm.history.size(), 3u);
  ASSERT_GE(fm.best_epoch, 1);
  const double chosen = fm.history[static_cast<std::size_t>(fm.best_epoch - 1)].val_loss;
  for (const auto& h : fm.history) EXPECT_LE(chosen, h.val_loss);
  // the restored parameters reproduce the chosen epoch's validation loss
  const auto preds = cxr::predict(fm.classifier, tensors(4, 2, "v"));
  double loss = 0;
  for (const auto& p : preds) loss -= std::log(p.probabilities[static_cast<std::size_t>(p.target)]);
  EXPECT_NEAR(loss / 4.0, chosen, 1e-4);
}

TEST(Train, NonFiniteLossNamesEpochAndBatch) {
  auto bad = torch::zeros({4, 3, 224, 224});
  bad[2][0][0][0] = std::numeric_limits<float>::quiet_NaN();
  cxr::TensorSource train(bad, {0, 1, 0, 1}, {"a", "b", "c", "d"});
  try {
    cxr::train_fold(fresh(), train, tensors(2, 3, "v"), quick(1, 4));
    FAIL();
  } catch (const cxr::TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1, batch 1"), std::string::npos) << e.what();
  }
}

TEST(Train, RejectsOverlapAndEmptySets) {
  EXPECT_THROW(cxr::train_fold(fresh(), tensors(4, 1, "x"), tensors(2, 1, "x"), quick(1)), cxr::TrainingError);
  cxr::TensorSource empty(torch::zeros({0, 3, 224, 224}), {}, {});
  EXPECT_THROW(cxr::train_fold(fresh(), empty, tensors(2, 1, "v"), quick(1)), cxr::TrainingError);
}

TEST(Train, HeadOnlyLeavesBackboneUntouched) {
  auto model = fresh();
  const auto before = model.net->named_parameters()["layer1.0.conv1.weight"].detach().clone();
  auto cfg = quick(1);
  cfg.head_only = true;
  const auto fm = cxr::train_fold(model, tensors(8, 1, "t"), tensors(4, 2, "v"), cfg);
  EXPECT_TRUE(torch::equal(fm.classifier.net->named_parameters()["layer1.0.conv1.weight"], before));
}

TEST(Train, RepeatRunsPredictIdenticalLabels) {
  const auto held_out = tensors(6, 9, "h");
  auto run = [&] {
    const auto fm = cxr::train_fold(fresh(4), tensors(8, 1, "t"), tensors(4, 2, "v"), quick(2));
    std::vector<int> labels;
    for (const auto& p : cxr::predict(fm.classifier, held_out)) labels.push_back(p.predicted);
    return labels;
  };
  EXPECT_EQ(run(), run());
}

TEST(Predict, ProbabilitiesAreNormalisedAndPure) {
  const auto model = fresh();
  torch::manual_seed(5);
  auto x = torch::randn({5, 3, 224, 224});
  x[4] = x[1].clone();
  const auto preds = cxr::predict(model, cxr::TensorSource(x, {0, 1, 0, 1, 1}, {"a", "b", "c", "d", "e"}), 2);
  ASSERT_EQ(preds.size(), 5u);
  for (const auto& p : preds) {
    ASSERT_EQ(p.probabilities.size(), 2u);
    EXPECT_NEAR(std::accumulate(p.probabilities.begin(), p.probabilities.end(), 0.0), 1.0, 1e-6);
    for (double v : p.probabilities) EXPECT_GE(v, 0.0);
    EXPECT_EQ(p.predicted, cxr::argmax(p.probabilities));
  }
  EXPECT_EQ(preds[4].probabilities, preds[1].probabilities);
  EXPECT_EQ(preds[2].id, "c");
  EXPECT_EQ(preds[3].target, 1);
}

TEST(Predict, WrongSideNamesExpectedSide) {
  cxr::TensorSource small(torch::zeros({1, 3, 100, 100}), {0}, {"a"});
  try {
    cxr::predict(fresh(), small);
    FAIL();
  } catch (const cxr::NetworkError& e) {
    EXPECT_NE(std::string(e.what()).find("224"), std::string::npos) << e.what();
  }
}

TEST(Predict, ArgmaxTiesGoToLowestIndex) {
  EXPECT_EQ(cxr::argmax(std::vector<double>{0.2, 0.4, 0.4}), 1);
  EXPECT_EQ(cxr::argmax(std::vector<double>{0.5, 0.5}), 0);
  EXPECT_EQ(cxr::argmax(std::vector<double>{0.1, 0.2, 0.7}), 2);
}

TEST(Persistence, RoundTripAndTamperDetection) {
  const auto fm = cxr::train_fold(fresh(), tensors(4, 1, "t"), tensors(2, 2, "v"), quick(2));
  const auto dir = cxr::oracle::scratch_dir("fold_model") / "fold0";
  cxr::save_fold_model(fm, dir);
  ASSERT_TRUE(fs::exists(dir / "history.tsv"));
  std::ifstream tsv(dir / "history.tsv");
  std::string header;
  std::getline(tsv, header);
  EXPECT_EQ(header, "epoch\ttrain_loss\ttrain_acc\tval_loss\tval_acc");

  const auto loaded = cxr::load_fold_model(dir);
  EXPECT_EQ(loaded.best_epoch, fm.best_epoch);
  EXPECT_EQ(loaded.history.size(), 2u);
  EXPECT_EQ(loaded.classifier.class_names, fm.classifier.class_names);
  EXPECT_EQ(cxr::parameter_checksum(*loaded.classifier.net), cxr::parameter_checksum(*fm.classifier.net));
  const auto probe = tensors(3, 8, "p");
  const auto a = cxr::predict(fm.classifier, probe), b = cxr::predict(loaded.classifier, probe);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].probabilities, b[i].probabilities);

  {
    std::fstream f(dir / "model.pt", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(100);
    f.put('\x5a');
  }
  EXPECT_THROW(cxr::load_fold_model(dir), cxr::TrainingError);
}

TEST(GradientCheck, TwoLayerHeadMatchesFiniteDifferences) {
  torch::manual_seed(2);
  const auto features = torch::randn({12, 16}, torch::kFloat64);
  std::vector<int> targets;
  for (int i = 0; i < 12; ++i) targets.push_back(i % 3);
  const auto check = cxr::head_gradient_check(features, targets, 3, 7);
  EXPECT_GT(check.checked, 0u);
  EXPECT_LT(check.max_relative_error, 1e-4);
}

TEST(RecordSource, DecodesRecordsAndAugmentedCopies) {
  const auto root = cxr::oracle::scratch_dir("record_source");
  cxr::toy::write_toy_corpus(root, {.per_class = 2, .side = 48, .seed = 1, .per_class_override = {}});
  const auto manifest = cxr::ingest_directory(root, cxr::detect_class_layout(root)).manifest;
  std::vector<std::string> ids;
  for (const auto& r : manifest.records)
    if (r.label != cxr::Label::ViralPneumonia) ids.push_back(r.record_id);
  const auto covid = manifest.records.front();
  ASSERT_EQ(covid.label, cxr::Label::Covid19);
  std::vector<cxr::AugmentedRecord> aug{{covid.record_id, covid.record_id + "#r1", cxr::Label::Covid19,
                                         {cxr::TransformKind::RotateTranslate, 10.0, 0.02, -0.01}}};
  cxr::RecordSource src(manifest, ids, {cxr::Label::Covid19, cxr::Label::Normal},
                        cxr::input_spec(cxr::Backbone::ResNet18), aug);
  ASSERT_EQ(src.size(), 5u);
  std::size_t derived = 0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto t = src.input(i);
    EXPECT_EQ(t.sizes(), (std::vector<std::int64_t>{3, 224, 224}));
    if (src.id(i) != src.parent_id(i)) {
      ++derived;
      EXPECT_EQ(src.parent_id(i), covid.record_id);
      EXPECT_EQ(src.target(i), 0);
    }
  }
  EXPECT_EQ(derived, 1u);
  EXPECT_THROW(cxr::RecordSource(manifest, {"nope"}, {cxr::Label::Covid19}, cxr::input_spec(cxr::Backbone::ResNet18)),
               std::invalid_argument);
}
