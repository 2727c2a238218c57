#include "cxr/experiment.hpp"

#include "cxr/activations.hpp"
#include "cxr/catalog.hpp"
#include "cxr/checksum.hpp"
#include "cxr/metrics.hpp"
#include "cxr/panel.hpp"
#include "cxr/random.hpp"
#include "cxr/report.hpp"
#include "cxr/roc.hpp"
#include "cxr/splits.hpp"
#include "io_util.hpp"
#include "log.hpp"

#include <chrono>
#include <cstdio>
#include <set>

#ifndef CXR_VERSION
#define CXR_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace cxr {
namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.contains(key)) throw ConfigError("unknown key " + where + "." + key);
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

Label label_named(const std::string& text, const std::string& where) {
  const auto label = parse_label(text);
  if (!label) throw ConfigError("unknown class " + text + " in " + where);
  return *label;
}

fs::path resolve(const fs::path& base, const std::string& text) {
  if (text.empty()) return {};
  const fs::path p(text);
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::vector<std::string> class_names(Scheme scheme) {
  std::vector<std::string> out;
  for (const auto label : scheme_labels(scheme)) out.emplace_back(to_string(label));
  return out;
}

std::string rel(const fs::path& path, const fs::path& run_dir) { return fs::relative(path, run_dir).generic_string(); }

// Exclusive lock file, removed when the run finishes or throws.
class RunLock {
 public:
  explicit RunLock(fs::path file) : file_(std::move(file)) {
    FILE* f = std::fopen(file_.c_str(), "wx");
    if (f == nullptr) throw std::runtime_error("run directory is locked by another process: " + file_.string());
    std::fputs(detail::utc_timestamp().c_str(), f);
    std::fclose(f);
  }
  ~RunLock() {
    std::error_code ec;
    fs::remove(file_, ec);
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path file_;
};

json metric_set_json(const MetricSet& m) {
  return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"sensitivity", m.sensitivity}, {"f1", m.f1},
          {"specificity", m.specificity}};
}

json confusion_json(const ConfusionMatrix& cm) {
  json rows = json::array();
  for (std::size_t t = 0; t < cm.size(); ++t) {
    json row = json::array();
    for (std::size_t p = 0; p < cm.size(); ++p) row.push_back(cm.at(t, p));
    rows.push_back(row);
  }
  return {{"labels", cm.labels()}, {"rows", rows}, {"total", cm.total()}};
}

std::string predictions_tsv(const std::vector<Prediction>& preds, const std::vector<std::string>& names) {
  std::string out = "id\ttarget\tpredicted";
  for (const auto& n : names) out += "\tp_" + n;
  out += "\n";
  for (const auto& p : preds) {
    out += p.id + "\t" + names[static_cast<std::size_t>(p.target)] + "\t" + names[static_cast<std::size_t>(p.predicted)];
    for (double v : p.probabilities) out += "\t" + detail::fixed(v, 8);
    out += "\n";
  }
  return out;
}

bool balances(const RunConfig& cfg) {
  return cfg.balance_per_class.has_value() || (cfg.scheme == Scheme::TwoClass && !cfg.augment);
}

struct Prepared {
  Manifest manifest;  ///< restricted to the scheme, balanced when configured
  SplitPlan plan;
  std::vector<FoldExpansion> expansions;
  json manifest_section;
  json split_section;
};

Prepared prepare_data(const RunConfig& cfg, const fs::path& run_dir) {
  Prepared out;
  const auto mdir = run_dir / "manifest";
  fs::create_directories(mdir);

  Manifest full;
  if (!cfg.manifest.empty()) {
    detail::log_info("catalog: reusing " + cfg.manifest.string());
    full = read_manifest(cfg.manifest);
  } else {
    detail::log_info("catalog: ingesting " + cfg.corpus_root.string());
    auto ingest = ingest_directory(cfg.corpus_root, detect_class_layout(cfg.corpus_root));
    full = std::move(ingest.manifest);
    write_integrity_report(ingest.report, mdir / "integrity.tsv");
  }
  write_manifest(full, mdir / "manifest.tsv");

  auto scoped = restrict_to_scheme(full, cfg.scheme);
  if (balances(cfg)) {
    std::size_t per_class = cfg.balance_per_class.value_or(0);
    if (!cfg.balance_per_class) {
      per_class = std::numeric_limits<std::size_t>::max();
      for (const auto label : scheme_labels(cfg.scheme)) per_class = std::min(per_class, scoped.count(label));
    }
    scoped = balance_subsample(scoped, per_class, derive_seed(cfg.seed, {"balance"}));
  }
  write_manifest(scoped, mdir / "scheme_manifest.tsv");

  json counts = json::object();
  for (const auto label : scheme_labels(cfg.scheme)) counts[std::string(to_string(label))] = scoped.count(label);
  out.manifest_section = {{"file", "manifest/manifest.tsv"},
                          {"records", full.records.size()},
                          {"scheme_file", "manifest/scheme_manifest.tsv"},
                          {"scheme_records", scoped.records.size()},
                          {"class_counts", counts},
                          {"sha256", sha256_file(mdir / "manifest.tsv")},
                          {"scheme_sha256", sha256_file(mdir / "scheme_manifest.tsv")}};

  const auto sdir = run_dir / "splits";
  fs::create_directories(sdir);
  out.plan = carve_validation(stratified_kfold(scoped, cfg.k, cfg.seed, cfg.scheme), cfg.validation_fraction);
  if (const auto bad = plan_violations(out.plan); !bad.empty()) throw SplitError("split plan invalid: " + bad.front());
  write_split_plan(out.plan, sdir / "plan.json");

  auto table = split_counts(out.plan);
  json descriptor_files = json::array();
  for (int fold = 0; fold < cfg.k; ++fold) {
    if (!cfg.augment) continue;
    auto spec = cfg.augmentation;
    spec.seed = cfg.seed;
    auto expansion = expand_training_fold(out.plan, fold, spec);
    if (const auto leaked = leaked_parents(out.plan, expansion); !leaked.empty())
      throw SplitError("augmentation leaked record " + leaked.front() + " out of the training set");
    record_expansion(table, expansion);
    const auto file = sdir / ("augmentation_fold" + std::to_string(fold) + ".tsv");
    write_descriptor_sidecar(expansion, file);
    descriptor_files.push_back({{"fold", fold}, {"file", rel(file, run_dir)}});
    out.expansions.push_back(std::move(expansion));
  }
  detail::write_text_file(sdir / "counts.txt", render_split_table(table));

  json rows = json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"class", std::string(to_string(r.label))},
                    {"fold", r.fold},
                    {"population", r.population},
                    {"train", r.train},
                    {"validation", r.validation},
                    {"test", r.test},
                    {"augmented_train", r.augmented_train}});
  }
  out.split_section = {{"file", "splits/plan.json"},
                       {"sha256", sha256_file(sdir / "plan.json")},
                       {"counts", rows},
                       {"augmentation", descriptor_files}};
  out.manifest = std::move(scoped);
  return out;
}

json explain_backbone(const RunConfig& cfg, const Classifier& model, const Prepared& data, const fs::path& run_dir) {
  json section = {{"layers", json::object()}};
  try {
    const auto inventory = layer_inventory(model);
    for (const auto& id : cfg.explain.layers) {
      try {
        section["layers"][id] = resolve_layer(inventory, id).path;
      } catch (const LayerError& e) {
        section["layers"][id] = std::string("unresolved: ") + e.what();
      }
    }
    std::vector<PanelRow> rows;
    const auto& test = data.plan.folds.front().test;
    for (const auto label : scheme_labels(cfg.scheme)) {
      for (const auto& id : test) {
        if (data.plan.label_of(id) != label) continue;
        rows.push_back({std::string(to_string(label)), *data.manifest.find(id)});
        break;
      }
    }
    const auto png = run_dir / "explain" / (std::string(model.spec->name) + ".png");
    const auto cells = render_panel(model, rows, data.manifest.root, cfg.explain.layers, png);
    section["panel"] = rel(png, run_dir);
    section["sidecar"] = rel(png, run_dir) + ".json";
    std::size_t failed = 0;
    for (const auto& c : cells) failed += c.error.empty() ? 0 : 1;
    section["placeholder_cells"] = failed;
  } catch (const std::exception& e) {
    detail::log_warn(std::string(model.spec->name) + ": activation panel failed: " + e.what());
    section["error"] = e.what();
  }
  return section;
}

json run_backbone(const RunConfig& cfg, Backbone backbone, const Prepared& data, const fs::path& run_dir) {
  const auto& spec = backbone_spec(backbone);
  const std::string name(spec.name);
  const auto names = class_names(cfg.scheme);
  const std::vector<Label> order(scheme_labels(cfg.scheme).begin(), scheme_labels(cfg.scheme).end());
  const auto input = input_spec(backbone);
  const auto started = std::chrono::steady_clock::now();

  json result = {{"name", name},
                 {"input_side", spec.input_side},
                 {"normalization",
                  {{"mean", std::vector<float>(spec.normalization.mean.begin(), spec.normalization.mean.end())},
                   {"std", std::vector<float>(spec.normalization.stddev.begin(), spec.normalization.stddev.end())}}},
                 {"folds", json::array()}};

  ConfusionMatrix cm(names);
  std::vector<double> scores;
  std::vector<int> truth;
  const auto mdir = run_dir / "models" / name;
  const auto edir = run_dir / "metrics" / name;
  fs::create_directories(edir);

  for (int fold = 0; fold < cfg.k; ++fold) {
    const auto& assignment = data.plan.folds[static_cast<std::size_t>(fold)];
    detail::log_info(name + ": fold " + std::to_string(fold + 1) + "/" + std::to_string(cfg.k) + " (" +
                     std::to_string(assignment.train.size()) + " train, " +
                     std::to_string(assignment.validation.size()) + " validation, " +
                     std::to_string(assignment.test.size()) + " test)");
    const auto augmented = cfg.augment ? data.expansions[static_cast<std::size_t>(fold)].records
                                       : std::vector<AugmentedRecord>{};
    const RecordSource train(data.manifest, assignment.train, order, input, augmented, cfg.augmentation.fill_value);
    const RecordSource validation(data.manifest, assignment.validation, order, input);
    const RecordSource test(data.manifest, assignment.test, order, input);

    auto classifier = build_classifier(spec, names, cfg.weights, derive_seed(cfg.seed, {"fold", std::to_string(fold)}));
    result["pretrain_corpus"] = std::string(to_string(classifier.provenance.corpus));
    result["weight_fallback"] = classifier.provenance.fallback;
    result["weight_source"] = classifier.provenance.source;
    auto training = cfg.training;
    training.seed = cfg.seed;
    auto model = train_fold(std::move(classifier), train, validation, training, fold);

    const auto fold_dir = mdir / ("fold" + std::to_string(fold));
    save_fold_model(model, fold_dir);
    const auto preds = predict(model.classifier, test);
    const auto pred_file = edir / ("fold" + std::to_string(fold) + "_predictions.tsv");
    detail::write_text_file(pred_file, predictions_tsv(preds, names));

    std::vector<int> t, p;
    for (const auto& pr : preds) {
      t.push_back(pr.target);
      p.push_back(pr.predicted);
      truth.push_back(pr.target);
      scores.insert(scores.end(), pr.probabilities.begin(), pr.probabilities.end());
    }
    cm = accumulate(std::move(cm), t, p);
    result["folds"].push_back({{"fold", fold},
                               {"best_epoch", model.best_epoch},
                               {"test_records", preds.size()},
                               {"model", rel(fold_dir / "model.pt", run_dir)},
                               {"metadata", rel(fold_dir / "metadata.json", run_dir)},
                               {"history", rel(fold_dir / "history.tsv", run_dir)},
                               {"predictions", rel(pred_file, run_dir)}});

    if (fold == 0 && cfg.explain.enabled) result["explain"] = explain_backbone(cfg, model.classifier, data, run_dir);
  }

  const auto per_class = per_class_metrics(cm);
  const auto agg = aggregate(cm);
  const auto row = table_row(agg);
  json classes = json::array();
  for (std::size_t i = 0; i < per_class.per_class.size(); ++i) {
    const auto& m = per_class.per_class[i];
    auto entry = metric_set_json({m.accuracy, m.precision, m.sensitivity, m.f1, m.specificity});
    entry["class"] = per_class.labels[i];
    entry["support"] = agg.supports[i];
    entry["degenerate"] = m.degenerate;
    classes.push_back(entry);
  }
  result["confusion_matrix"] = confusion_json(cm);
  result["per_class"] = classes;
  result["weighted"] = metric_set_json(agg.weighted);
  result["macro"] = metric_set_json(agg.macro);
  result["overall_accuracy"] = agg.overall_accuracy;
  result["table_row"] = metric_set_json({row.accuracy, row.precision, row.sensitivity, row.f1, row.specificity});

  json auc = json::object(), roc_files = json::object();
  const auto roc = multiclass_roc(scores, truth, names);
  auto add_curve = [&](const RocCurve& curve, const std::string& key) {
    const auto file = edir / ("roc_" + key + ".tsv");
    write_roc_tsv(curve, file);
    auc[key] = curve.auc;
    roc_files[key] = rel(file, run_dir);
  };
  for (const auto& curve : roc.per_class) add_curve(curve, curve.positive_class);
  if (roc.micro) add_curve(*roc.micro, "micro");
  result["auc"] = auc;
  result["roc_files"] = roc_files;

  json document = result;
  document.erase("folds");
  document.erase("explain");
  const auto doc_file = edir / "metrics.json";
  detail::write_text_file(doc_file, document.dump(2) + "\n");
  result["document"] = rel(doc_file, run_dir);
  result["status"] = "ok";
  result["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace

void RunConfig::validate() const {
  if (manifest.empty()) {
    if (corpus_root.empty()) throw ConfigError("corpus_root is required");
    if (!fs::is_directory(corpus_root)) throw ConfigError("corpus_root does not exist: " + corpus_root.string());
  } else if (!fs::exists(manifest)) {
    throw ConfigError("manifest does not exist: " + manifest.string());
  }
  if (!weights.directory.empty() && !fs::is_directory(weights.directory))
    throw ConfigError("weight directory does not exist: " + weights.directory.string());
  if (output_dir.empty()) throw ConfigError("output_dir is required");
  if (k < 2) throw ConfigError("k must be at least 2");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation_fraction must lie in (0, 1)");
  if (balance_per_class && *balance_per_class == 0) throw ConfigError("balance_per_class must be positive");
  if (explain.enabled && explain.layers.empty()) throw ConfigError("explain.layers is empty");
  try {
    training.validate();
    augmentation.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig parse_run_config(const json& doc, const fs::path& base_dir) {
  check_keys(doc,
             {"corpus_root", "manifest", "scheme", "augment", "backbones", "k", "seed", "validation_fraction",
              "augmentation", "training", "output_dir", "weights", "balance_per_class", "explain"},
             "config");
  RunConfig c;
  const std::string top = "config";
  c.corpus_root = resolve(base_dir, get<std::string>(doc, "corpus_root", top, ""));
  c.manifest = resolve(base_dir, get<std::string>(doc, "manifest", top, ""));
  c.output_dir = resolve(base_dir, get<std::string>(doc, "output_dir", top, "runs"));
  const auto scheme_text = get<std::string>(doc, "scheme", top, "THREE_CLASS");
  const auto scheme = parse_scheme(scheme_text);
  if (!scheme) throw ConfigError("unknown scheme " + scheme_text);
  c.scheme = *scheme;
  c.augment = get<bool>(doc, "augment", top, true);
  for (const auto& name : get<std::vector<std::string>>(doc, "backbones", top, {})) {
    const auto b = parse_backbone(name);
    if (!b) throw ConfigError("unknown backbone " + name);
    c.backbones.push_back(*b);
  }
  c.k = get<int>(doc, "k", top, c.k);
  c.seed = get<std::uint64_t>(doc, "seed", top, c.seed);
  c.validation_fraction = get<double>(doc, "validation_fraction", top, c.validation_fraction);
  if (doc.contains("balance_per_class")) c.balance_per_class = get<std::size_t>(doc, "balance_per_class", top, 0);

  if (doc.contains("augmentation")) {
    const auto& a = doc.at("augmentation");
    const std::string where = "config.augmentation";
    check_keys(a, {"rotation_degrees", "translation", "copies_per_class", "rotated_classes", "fill_value"}, where);
    auto& s = c.augmentation;
    s.rotation_degrees = get<std::vector<double>>(a, "rotation_degrees", where, s.rotation_degrees);
    s.fill_value = get<float>(a, "fill_value", where, s.fill_value);
    if (a.contains("translation")) {
      const auto& t = a.at("translation");
      check_keys(t, {"min_x", "max_x", "min_y", "max_y"}, where + ".translation");
      s.translation.min_x = get<double>(t, "min_x", where, s.translation.min_x);
      s.translation.max_x = get<double>(t, "max_x", where, s.translation.max_x);
      s.translation.min_y = get<double>(t, "min_y", where, s.translation.min_y);
      s.translation.max_y = get<double>(t, "max_y", where, s.translation.max_y);
    }
    if (a.contains("copies_per_class")) {
      const auto& copies = a.at("copies_per_class");
      if (!copies.is_object()) throw ConfigError(where + ".copies_per_class must be an object");
      for (const auto& [cls, n] : copies.items()) {
        if (!n.is_number_integer()) throw ConfigError(where + ".copies_per_class." + cls + " must be an integer");
        s.copies_per_class[label_named(cls, where + ".copies_per_class")] = n.get<int>();
      }
    }
    if (a.contains("rotated_classes")) {
      s.rotated_classes.clear();
      for (const auto& cls : get<std::vector<std::string>>(a, "rotated_classes", where, {}))
        s.rotated_classes.insert(label_named(cls, where + ".rotated_classes"));
    }
  }
  if (doc.contains("training")) {
    const auto& t = doc.at("training");
    const std::string where = "config.training";
    check_keys(t, {"learning_rate", "momentum", "batch_size", "epochs", "head_only", "deterministic"}, where);
    auto& s = c.training;
    s.learning_rate = get<double>(t, "learning_rate", where, s.learning_rate);
    s.momentum = get<double>(t, "momentum", where, s.momentum);
    s.batch_size = get<int>(t, "batch_size", where, s.batch_size);
    s.epochs = get<int>(t, "epochs", where, s.epochs);
    s.head_only = get<bool>(t, "head_only", where, s.head_only);
    s.deterministic = get<bool>(t, "deterministic", where, s.deterministic);
  }
  if (doc.contains("weights")) {
    const auto& w = doc.at("weights");
    check_keys(w, {"directory", "allow_untrained"}, "config.weights");
    c.weights.directory = resolve(base_dir, get<std::string>(w, "directory", "config.weights", ""));
    c.weights.allow_untrained = get<bool>(w, "allow_untrained", "config.weights", false);
  }
  if (doc.contains("explain")) {
    const auto& e = doc.at("explain");
    check_keys(e, {"enabled", "layers"}, "config.explain");
    c.explain.enabled = get<bool>(e, "enabled", "config.explain", true);
    c.explain.layers = get<std::vector<std::string>>(e, "layers", "config.explain", c.explain.layers);
  }
  c.augmentation.seed = c.seed;
  c.training.seed = c.seed;
  return c;
}

RunConfig read_run_config(const fs::path& file) {
  json doc;
  try {
    doc = json::parse(detail::read_text_file(file));
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config " + file.string() + ": " + e.what());
  }
  return parse_run_config(doc, file.parent_path());
}

json run_config_json(const RunConfig& c) {
  std::vector<std::string> backbones;
  for (const auto b : c.backbones) backbones.emplace_back(to_string(b));
  json copies = json::object();
  for (const auto& [label, n] : c.augmentation.copies_per_class) copies[std::string(to_string(label))] = n;
  std::vector<std::string> rotated;
  for (const auto label : c.augmentation.rotated_classes) rotated.emplace_back(to_string(label));
  json doc = {
      {"corpus_root", c.corpus_root.string()},
      {"manifest", c.manifest.string()},
      {"scheme", std::string(to_string(c.scheme))},
      {"augment", c.augment},
      {"backbones", backbones},
      {"k", c.k},
      {"seed", c.seed},
      {"validation_fraction", c.validation_fraction},
      {"augmentation",
       {{"rotation_degrees", c.augmentation.rotation_degrees},
        {"translation",
         {{"min_x", c.augmentation.translation.min_x},
          {"max_x", c.augmentation.translation.max_x},
          {"min_y", c.augmentation.translation.min_y},
          {"max_y", c.augmentation.translation.max_y}}},
        {"copies_per_class", copies},
        {"rotated_classes", rotated},
        {"fill_value", c.augmentation.fill_value}}},
      {"training",
       {{"learning_rate", c.training.learning_rate},
        {"momentum", c.training.momentum},
        {"batch_size", c.training.batch_size},
        {"epochs", c.training.epochs},
        {"head_only", c.training.head_only},
        {"deterministic", c.training.deterministic}}},
      {"output_dir", c.output_dir.string()},
      {"weights", {{"directory", c.weights.directory.string()}, {"allow_untrained", c.weights.allow_untrained}}},
      {"explain", {{"enabled", c.explain.enabled}, {"layers", c.explain.layers}}},
  };
  if (c.balance_per_class) doc["balance_per_class"] = *c.balance_per_class;
  return doc;
}

std::string run_directory_name(const RunConfig& config, const std::string& timestamp) {
  std::string scheme(to_string(config.scheme));
  for (auto& ch : scheme) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return timestamp + "-" + scheme + "-" + (config.augment ? "aug" : "noaug");
}

RunPlan plan_run(const RunConfig& config, const std::string& timestamp) {
  config.validate();
  RunPlan plan;
  plan.run_dir = config.output_dir / run_directory_name(config, timestamp);
  auto& s = plan.stages;
  s.push_back(config.manifest.empty() ? "catalog: ingest " + config.corpus_root.string() + " -> manifest/manifest.tsv"
                                      : "catalog: reuse " + config.manifest.string() + " -> manifest/manifest.tsv");
  std::string scope = "scheme: " + std::string(to_string(config.scheme));
  if (balances(config))
    scope += config.balance_per_class ? ", balanced to " + std::to_string(*config.balance_per_class) + " per class"
                                      : ", balanced to the smallest class";
  s.push_back(scope + " -> manifest/scheme_manifest.tsv");
  s.push_back("split: stratified " + std::to_string(config.k) + "-fold, validation fraction " +
              detail::fixed(config.validation_fraction, 2) + ", seed " + std::to_string(config.seed) +
              " -> splits/plan.json");
  if (config.augment) {
    std::string copies;
    for (const auto& [label, n] : config.augmentation.copies_per_class)
      copies += (copies.empty() ? "" : ", ") + std::string(to_string(label)) + " x" + std::to_string(n);
    s.push_back("augment: training folds only (" + copies + "), descriptors -> splits/augmentation_fold<i>.tsv");
  } else {
    s.push_back("augment: off");
  }
  if (config.backbones.empty()) s.push_back("train: no backbones configured");
  for (const auto b : config.backbones) {
    const std::string name(to_string(b));
    s.push_back("train+evaluate " + name + ": " + std::to_string(config.k) + " folds x " +
                std::to_string(config.training.epochs) + " epochs, lr " + detail::fixed(config.training.learning_rate, 4) +
                ", momentum " + detail::fixed(config.training.momentum, 2) + ", batch " +
                std::to_string(config.training.batch_size) + " -> models/" + name + ", metrics/" + name);
    if (config.explain.enabled) {
      std::string layers;
      for (const auto& l : config.explain.layers) layers += (layers.empty() ? "" : ", ") + l;
      s.push_back("explain " + name + ": layers " + layers + " on fold 0 -> explain/" + name + ".png");
    }
  }
  s.push_back("report: report/report.json with checksums of every file");
  return plan;
}

RunOutcome run_experiment(const RunConfig& config) {
  config.validate();
  const auto timestamp = detail::compact_utc_timestamp();
  auto run_dir = plan_run(config, timestamp).run_dir;
  for (int n = 2; fs::exists(run_dir); ++n)
    run_dir = config.output_dir / (run_directory_name(config, timestamp) + "-" + std::to_string(n));
  for (const char* sub : {"manifest", "splits", "models", "metrics", "explain", "report"})
    fs::create_directories(run_dir / sub);
  RunLock lock(run_dir / ".lock");
  detail::log_info("run directory " + run_dir.string());

  const auto prepared = prepare_data(config, run_dir);
  if (config.backbones.empty()) detail::log_warn("no backbones configured; the report will be empty");

  RunOutcome outcome;
  outcome.run_dir = run_dir;
  json backbones = json::array();
  for (const auto b : config.backbones) {
    const auto started = std::chrono::steady_clock::now();
    try {
      backbones.push_back(run_backbone(config, b, prepared, run_dir));
    } catch (const std::exception& e) {
      detail::log_error(std::string(to_string(b)) + " failed: " + e.what());
      outcome.failed_backbones.emplace_back(to_string(b));
      backbones.push_back(
          {{"name", std::string(to_string(b))},
           {"status", "failed"},
           {"error", e.what()},
           {"wall_clock_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()}});
    }
  }

  json report = {
      {"tool", {{"name", "cxrscreen"}, {"version", CXR_VERSION}}},
      {"created_at", detail::utc_timestamp()},
      {"run_name", run_dir.filename().string()},
      {"config", run_config_json(config)},
      {"scheme", std::string(to_string(config.scheme))},
      {"augment", config.augment},
      {"class_names", class_names(config.scheme)},
      {"manifest", prepared.manifest_section},
      {"splits", prepared.split_section},
      {"backbones", backbones},
  };
  const auto files = checksum_tree(run_dir, {"report/report.json", ".lock"});
  report["files"] = files;
  detail::write_text_file(run_dir / "report" / "report.json", report.dump(2) + "\n");
  outcome.report = std::move(report);
  return outcome;
}

}  // namespace cxr
