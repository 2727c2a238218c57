#include "commands.hpp"
#include "cxr/checksum.hpp"
#include "cxr/experiment.hpp"
#include "cxr/report.hpp"
#include "oracles.hpp"
#include "toy_corpus.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write(const fs::path& file, const std::string& text) {
  fs::create_directories(file.parent_path());
  std::ofstream(file, std::ios::binary) << text;
}

bool mentions(const std::vector<std::string>& lines, const std::string& needle) {
  for (const auto& l : lines)
    if (l.find(needle) != std::string::npos) return true;
  return false;
}

// A run directory with two artefacts and a report listing both.
fs::path fake_run(const std::string& tag) {
  const auto dir = cxr::oracle::scratch_dir(tag) / "20260101T000000Z-three_class-aug";
  write(dir / "metrics/A/metrics.json", "{}\n");
  write(dir / "splits/plan.json", "{\"k\": 2}\n");
  json report{{"backbones", json::array({{{"name", "A"}, {"status", "ok"}, {"document", "metrics/A/metrics.json"}}})},
              {"splits", {{"file", "splits/plan.json"}}}};
  report["files"] = cxr::checksum_tree(dir, {});
  write(dir / "report/report.json", report.dump(2));
  return dir;
}

}  // namespace

TEST(RunConfig, DefaultsAndRelativePaths) {
  const auto c = cxr::parse_run_config(json{{"corpus_root", "data"}, {"backbones", {"ResNet18", "DenseNet201"}}},
                                       "/base");
  EXPECT_EQ(c.corpus_root, fs::path("/base/data"));
  EXPECT_EQ(c.output_dir, fs::path("/base/runs"));
  EXPECT_EQ(c.scheme, cxr::Scheme::ThreeClass);
  EXPECT_TRUE(c.augment);
  EXPECT_EQ(c.k, 5);
  EXPECT_DOUBLE_EQ(c.validation_fraction, 0.10);
  EXPECT_EQ(c.training.epochs, 20);
  EXPECT_EQ(c.backbones.size(), 2u);
  EXPECT_FALSE(c.weights.allow_untrained);

  const auto abs = cxr::parse_run_config(json{{"corpus_root", "/x/y"}}, "/base");
  EXPECT_EQ(abs.corpus_root, fs::path("/x/y"));
}

TEST(RunConfig, RejectsUnknownKeysAndNames) {
  EXPECT_THROW(cxr::parse_run_config(json{{"corpus", "x"}}), cxr::ConfigError);
  EXPECT_THROW(cxr::parse_run_config(json{{"training", {{"lr", 0.1}}}}), cxr::ConfigError);
  EXPECT_THROW(cxr::parse_run_config(json{{"backbones", {"ResNet19"}}}), cxr::ConfigError);
  EXPECT_THROW(cxr::parse_run_config(json{{"scheme", "FOUR_CLASS"}}), cxr::ConfigError);
  EXPECT_THROW(cxr::parse_run_config(json{{"k", "five"}}), cxr::ConfigError);
  EXPECT_THROW(cxr::parse_run_config(json{{"augmentation", {{"copies_per_class", {{"BACTERIAL", 2}}}}}}),
               cxr::ConfigError);
}

TEST(RunConfig, SeedPropagatesAndJsonRoundTrips) {
  const auto c = cxr::parse_run_config(json{{"corpus_root", "/c"},
                                            {"seed", 9},
                                            {"scheme", "TWO_CLASS"},
                                            {"augment", false},
                                            {"augmentation", {{"copies_per_class", {{"COVID19", 3}}}}},
                                            {"training", {{"epochs", 4}, {"batch_size", 8}}},
                                            {"explain", {{"layers", {"conv#2"}}}}});
  EXPECT_EQ(c.training.seed, 9u);
  EXPECT_EQ(c.augmentation.seed, 9u);
  const auto again = cxr::parse_run_config(cxr::run_config_json(c));
  EXPECT_EQ(again.scheme, cxr::Scheme::TwoClass);
  EXPECT_FALSE(again.augment);
  EXPECT_EQ(again.training.epochs, 4);
  EXPECT_EQ(again.training.batch_size, 8);
  EXPECT_EQ(again.augmentation.copies_per_class.at(cxr::Label::Covid19), 3);
  EXPECT_EQ(again.explain.layers, std::vector<std::string>{"conv#2"});
  EXPECT_EQ(cxr::run_config_json(again), cxr::run_config_json(c));
}

TEST(RunConfig, ValidateNamesTheProblem) {
  const auto root = cxr::oracle::scratch_dir("config_validate");
  auto c = cxr::parse_run_config(json{{"corpus_root", (root / "missing").string()}});
  try {
    c.validate();
    FAIL();
  } catch (const cxr::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("corpus_root"), std::string::npos);
  }
  c.corpus_root = root;
  EXPECT_NO_THROW(c.validate());
  c.k = 1;
  EXPECT_THROW(c.validate(), cxr::ConfigError);
  c.k = 5;
  c.training.epochs = 0;
  EXPECT_THROW(c.validate(), cxr::ConfigError);
}

TEST(RunPlan, NamesAndBalancing) {
  const auto root = cxr::oracle::scratch_dir("plan");
  auto c = cxr::parse_run_config(json{{"corpus_root", root.string()}, {"output_dir", (root / "out").string()},
                                      {"scheme", "TWO_CLASS"}, {"augment", false}, {"backbones", {"ResNet18"}}});
  EXPECT_EQ(cxr::run_directory_name(c, "20260102T030405Z"), "20260102T030405Z-two_class-noaug");
  auto plan = cxr::plan_run(c, "T");
  EXPECT_EQ(plan.run_dir, root / "out" / "T-two_class-noaug");
  EXPECT_TRUE(mentions(plan.stages, "balanced to the smallest class"));
  EXPECT_TRUE(mentions(plan.stages, "augment: off"));
  EXPECT_TRUE(mentions(plan.stages, "explain ResNet18"));
  EXPECT_FALSE(fs::exists(root / "out"));

  c.augment = true;
  plan = cxr::plan_run(c, "T");
  EXPECT_FALSE(mentions(plan.stages, "balanced"));
  c.balance_per_class = 7;
  EXPECT_TRUE(mentions(cxr::plan_run(c, "T").stages, "balanced to 7 per class"));
}

TEST(ValidateRun, CleanRunHasNoProblems) { EXPECT_TRUE(cxr::validate_run(fake_run("vr_clean")).empty()); }

TEST(ValidateRun, DetectsTamperingAndMissingFiles) {
  auto dir = fake_run("vr_tamper");
  write(dir / "splits/plan.json", "{\"k\": 3}\n");
  auto problems = cxr::validate_run(dir);
  ASSERT_EQ(problems.size(), 1u);
  EXPECT_NE(problems[0].find("checksum mismatch"), std::string::npos);
  EXPECT_NE(problems[0].find("plan.json"), std::string::npos);

  dir = fake_run("vr_missing");
  fs::remove(dir / "metrics/A/metrics.json");
  problems = cxr::validate_run(dir);
  ASSERT_EQ(problems.size(), 1u);
  EXPECT_NE(problems[0].find("missing file"), std::string::npos);
}

TEST(ValidateRun, UnlistedReferenceAndBrokenReport) {
  auto dir = fake_run("vr_unlisted");
  auto report = json::parse(std::ifstream(dir / "report/report.json"));
  report["files"].erase("splits/plan.json");
  write(dir / "report/report.json", report.dump());
  auto problems = cxr::validate_run(dir);
  ASSERT_EQ(problems.size(), 1u);
  EXPECT_NE(problems[0].find("unlisted"), std::string::npos);

  write(dir / "report/report.json", "{ not json");
  problems = cxr::validate_run(dir);
  ASSERT_EQ(problems.size(), 1u);
  EXPECT_NE(problems[0].find("corrupt"), std::string::npos);

  fs::remove(dir / "report/report.json");
  EXPECT_NE(cxr::validate_run(dir).at(0).find("missing"), std::string::npos);
  EXPECT_THROW(cxr::load_run_report(dir), cxr::ReportError);
}

TEST(ResultTables, ArmsSideBySideAndFailures) {
  const json row{{"accuracy", 0.9970}, {"precision", 0.9970}, {"sensitivity", 0.9970}, {"f1", 0.9970},
                 {"specificity", 0.99551}};
  const json ok{{"name", "DenseNet201"}, {"status", "ok"}, {"table_row", row}, {"weighted", row}, {"macro", row}};
  const json failed{{"name", "VGG19"}, {"status", "failed"}, {"error", "boom"}};
  const json with{{"scheme", "TWO_CLASS"}, {"augment", true}, {"backbones", {ok, failed}}};
  const json without{{"scheme", "TWO_CLASS"}, {"augment", false}, {"backbones", {ok}}};
  const auto text = cxr::render_result_tables({without, with});
  EXPECT_NE(text.find("without augmentation"), std::string::npos);
  EXPECT_NE(text.find("99.70"), std::string::npos);
  EXPECT_NE(text.find("99.55"), std::string::npos);
  EXPECT_NE(text.find("failed"), std::string::npos);
  // VGG19 has no result without augmentation
  const auto vgg = text.find("VGG19");
  ASSERT_NE(vgg, std::string::npos);
  EXPECT_NE(text.substr(vgg, text.find('\n', vgg) - vgg).find(" - "), std::string::npos);
}

TEST(Cli, CatalogExitCodes) {
  const auto dir = cxr::oracle::scratch_dir("cli_catalog");
  std::ostringstream os, err;
  EXPECT_EQ(cxr::cli::cmd_catalog(dir / "nope", dir / "m.tsv", os, err), cxr::cli::kExitUsage);

  fs::create_directories(dir / "empty");
  err.str("");
  EXPECT_EQ(cxr::cli::cmd_catalog(dir / "empty", dir / "empty.tsv", os, err), cxr::cli::kExitOk);
  EXPECT_NE(err.str().find("warning"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "empty.tsv"));

  cxr::toy::write_toy_corpus(dir / "corpus", {.per_class = 3, .side = 32, .seed = 2, .per_class_override = {}});
  os.str("");
  EXPECT_EQ(cxr::cli::cmd_catalog(dir / "corpus", dir / "m.tsv", os, err), cxr::cli::kExitOk);
  EXPECT_NE(os.str().find("total"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "m.tsv.integrity.tsv"));

  EXPECT_EQ(cxr::cli::cmd_split(dir / "m.tsv", "THREE_CLASS", 3, 1, 0.2, dir / "plan.json", os, err), cxr::cli::kExitOk);
  EXPECT_TRUE(fs::exists(dir / "plan.json.counts.txt"));
  EXPECT_EQ(cxr::cli::cmd_split(dir / "m.tsv", "FIVE_CLASS", 3, 1, 0.1, dir / "p2.json", os, err), cxr::cli::kExitUsage);
  EXPECT_EQ(cxr::cli::cmd_split(dir / "m.tsv", "THREE_CLASS", 3, 1, 0.0, dir / "p2.json", os, err), cxr::cli::kExitUsage);
  EXPECT_EQ(cxr::cli::cmd_split(dir / "m.tsv", "THREE_CLASS", 1, 1, 0.1, dir / "p2.json", os, err), cxr::cli::kExitUsage);
  // 3 records per class cannot fill 5 folds
  EXPECT_EQ(cxr::cli::cmd_split(dir / "m.tsv", "THREE_CLASS", 5, 1, 0.1, dir / "p2.json", os, err), cxr::cli::kExitUsage);
}

TEST(Cli, RunAndReportExitCodes) {
  const auto dir = cxr::oracle::scratch_dir("cli_run");
  std::ostringstream os, err;
  EXPECT_EQ(cxr::cli::cmd_run(dir / "missing.json", false, os, err), cxr::cli::kExitUsage);
  write(dir / "bad.json", R"({"corpus_root": "corpus", "bogus": 1})");
  EXPECT_EQ(cxr::cli::cmd_run(dir / "bad.json", false, os, err), cxr::cli::kExitUsage);
  EXPECT_NE(err.str().find("bogus"), std::string::npos);

  cxr::toy::write_toy_corpus(dir / "corpus", {.per_class = 4, .side = 32, .seed = 2, .per_class_override = {}});
  fs::create_directories(dir / "no_weights");
  write(dir / "run.json", R"({"corpus_root": "corpus", "scheme": "TWO_CLASS", "augment": false, "k": 2,
                              "backbones": ["ResNet18"], "output_dir": "runs",
                              "weights": {"directory": "no_weights"}})");
  os.str("");
  EXPECT_EQ(cxr::cli::cmd_run(dir / "run.json", true, os, err), cxr::cli::kExitOk);
  EXPECT_NE(os.str().find("dry run"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "runs"));

  // the backbone fails for want of weights; the run still completes
  fs::path run_dir;
  err.str("");
  EXPECT_EQ(cxr::cli::cmd_run(dir / "run.json", false, os, err, &run_dir), cxr::cli::kExitPartialFailure);
  EXPECT_NE(err.str().find("ResNet18"), std::string::npos);
  EXPECT_TRUE(cxr::validate_run(run_dir).empty());
  EXPECT_FALSE(fs::exists(run_dir / ".lock"));
  const auto report = cxr::load_run_report(run_dir);
  EXPECT_EQ(report.at("backbones").at(0).at("status"), "failed");
  EXPECT_NE(report.at("backbones").at(0).at("error").get<std::string>().find("no_weights"), std::string::npos);
  EXPECT_EQ(report.at("manifest").at("class_counts").at("COVID19"), 4);

  fs::path second;
  EXPECT_EQ(cxr::cli::cmd_run(dir / "run.json", false, os, err, &second), cxr::cli::kExitPartialFailure);
  EXPECT_NE(second, run_dir);

  os.str("");
  EXPECT_EQ(cxr::cli::cmd_report({run_dir, second}, dir / "rendered", os, err), cxr::cli::kExitOk);
  EXPECT_TRUE(fs::exists(dir / "rendered" / "tables.txt"));
  EXPECT_NE(os.str().find("failed"), std::string::npos);

  std::ofstream(run_dir / "splits" / "plan.json", std::ios::app) << " ";
  err.str("");
  EXPECT_EQ(cxr::cli::cmd_report({run_dir}, {}, os, err), cxr::cli::kExitUsage);
  EXPECT_NE(err.str().find("checksum mismatch"), std::string::npos);
  EXPECT_EQ(cxr::cli::cmd_report({}, {}, os, err), cxr::cli::kExitUsage);
}
