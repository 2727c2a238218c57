#include "cxr/splits.hpp"

#include "cxr/random.hpp"
#include "io_util.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

namespace cxr {

namespace {

std::map<Label, std::vector<std::string>> ids_by_label(const SplitPlan& plan,
                                                       const std::vector<std::string>& ids) {
  std::map<Label, std::vector<std::string>> out;
  for (const auto& id : ids) out[plan.label_of(id)].push_back(id);
  return out;
}

}  // namespace

Label SplitPlan::label_of(const std::string& record_id) const {
  const auto it = labels.find(record_id);
  if (it == labels.end()) throw SplitError("record " + record_id + " is not part of the plan");
  return it->second;
}

SplitPlan stratified_kfold(const Manifest& manifest, int k, std::uint64_t seed, Scheme scheme) {
  if (k < 2) throw SplitError("k must be at least 2, got " + std::to_string(k));

  std::map<Label, std::vector<std::string>> members;
  for (const auto label : scheme_labels(scheme)) members[label];
  for (const auto& r : manifest.records) {
    if (!class_index(scheme, r.label))
      throw SplitError("manifest contains " + std::string(to_string(r.label)) +
                       " records, which are not part of " + std::string(to_string(scheme)));
    members[r.label].push_back(r.record_id);
  }

  SplitPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.scheme = scheme;
  plan.folds.resize(static_cast<std::size_t>(k));

  for (auto& [label, ids] : members) {
    if (ids.empty()) {
      spdlog::warn("class {} has no records; its split rows will be empty", to_string(label));
      continue;
    }
    if (ids.size() < static_cast<std::size_t>(k))
      throw SplitError("class " + std::string(to_string(label)) + " has " +
                       std::to_string(ids.size()) + " records, fewer than k = " + std::to_string(k));
    Rng rng(derive_seed(seed, {"kfold", to_string(label)}));
    rng.shuffle(std::span(ids));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto test_fold = i % static_cast<std::size_t>(k);
      plan.labels[ids[i]] = label;
      for (std::size_t f = 0; f < plan.folds.size(); ++f) {
        auto& fold = plan.folds[f];
        (f == test_fold ? fold.test : fold.train).push_back(ids[i]);
      }
    }
  }
  for (auto& fold : plan.folds) {
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.test.begin(), fold.test.end());
  }
  return plan;
}

SplitPlan carve_validation(const SplitPlan& plan, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw SplitError("validation fraction must lie in (0, 1)");
  SplitPlan out = plan;
  out.validation_fraction = fraction;
  for (std::size_t f = 0; f < out.folds.size(); ++f) {
    auto& fold = out.folds[f];
    if (!fold.validation.empty()) throw SplitError("plan already has validation sets");
    std::vector<std::string> train;
    for (auto& [label, pool] : ids_by_label(plan, fold.train)) {
      const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size())));
      if (n_val >= pool.size())
        throw SplitError("validation fraction leaves no training records for class " +
                         std::string(to_string(label)) + " in fold " + std::to_string(f));
      Rng rng(derive_seed(plan.seed, {"validation", to_string(label), std::to_string(f)}));
      rng.shuffle(std::span(pool));
      fold.validation.insert(fold.validation.end(), pool.begin(),
                             pool.begin() + static_cast<std::ptrdiff_t>(n_val));
      train.insert(train.end(), pool.begin() + static_cast<std::ptrdiff_t>(n_val), pool.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(fold.validation.begin(), fold.validation.end());
    fold.train = std::move(train);
  }
  return out;
}

const SplitCountRow& SplitCountTable::row(Label label, int fold) const {
  for (const auto& r : rows)
    if (r.label == label && r.fold == fold) return r;
  throw SplitError("no split row for " + std::string(to_string(label)) + " fold " + std::to_string(fold));
}

SplitCountRow& SplitCountTable::row(Label label, int fold) {
  return const_cast<SplitCountRow&>(std::as_const(*this).row(label, fold));
}

SplitCountTable split_counts(const SplitPlan& plan) {
  std::map<Label, std::size_t> population;
  for (const auto& [id, label] : plan.labels) ++population[label];

  SplitCountTable table;
  for (const auto label : scheme_labels(plan.scheme)) {
    for (int f = 0; f < static_cast<int>(plan.folds.size()); ++f) {
      const auto& fold = plan.folds[static_cast<std::size_t>(f)];
      SplitCountRow row;
      row.label = label;
      row.fold = f;
      row.population = population[label];
      auto tally = [&](const std::vector<std::string>& ids) {
        return static_cast<std::size_t>(std::count_if(ids.begin(), ids.end(), [&](const std::string& id) {
          return plan.label_of(id) == label;
        }));
      };
      row.train = tally(fold.train);
      row.validation = tally(fold.validation);
      row.test = tally(fold.test);
      table.rows.push_back(row);
    }
  }
  return table;
}

std::string render_split_table(const SplitCountTable& table) {
  std::ostringstream out;
  out << std::left << std::setw(17) << "Class" << std::right << std::setw(7) << "Total"
      << std::setw(6) << "Fold" << std::setw(8) << "Train" << std::setw(12) << "Validation"
      << std::setw(7) << "Test" << std::setw(11) << "Augmented" << '\n';
  for (const auto& r : table.rows) {
    out << std::left << std::setw(17) << to_string(r.label) << std::right << std::setw(7)
        << r.population << std::setw(6) << (r.fold + 1) << std::setw(8) << r.train << std::setw(12)
        << r.validation << std::setw(7) << r.test << std::setw(11) << r.augmented_train << '\n';
  }
  return out.str();
}

std::vector<std::string> plan_violations(const SplitPlan& plan) {
  std::vector<std::string> issues;
  if (static_cast<int>(plan.folds.size()) != plan.k)
    issues.push_back("fold count differs from k");

  std::multiset<std::string> tested;
  std::map<Label, std::size_t> population;
  for (const auto& [id, label] : plan.labels) ++population[label];

  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const auto& fold = plan.folds[f];
    std::set<std::string> seen;
    std::size_t total = 0;
    for (const auto* role : {&fold.train, &fold.validation, &fold.test}) {
      for (const auto& id : *role) {
        ++total;
        if (!plan.labels.contains(id)) issues.push_back("fold " + std::to_string(f) + ": unknown id " + id);
        if (!seen.insert(id).second)
          issues.push_back("fold " + std::to_string(f) + ": " + id + " appears in two roles");
      }
    }
    if (seen.size() != plan.labels.size() || total != plan.labels.size())
      issues.push_back("fold " + std::to_string(f) + ": roles do not cover the manifest");
    tested.insert(fold.test.begin(), fold.test.end());

    std::map<Label, std::size_t> test_counts;
    for (const auto& id : fold.test)
      if (plan.labels.contains(id)) ++test_counts[plan.labels.at(id)];
    for (const auto& [label, n] : population) {
      const double expected = static_cast<double>(n) / plan.k;
      if (std::abs(static_cast<double>(test_counts[label]) - expected) >= 1.0)
        issues.push_back("fold " + std::to_string(f) + ": class " + std::string(to_string(label)) +
                         " test count " + std::to_string(test_counts[label]) + " deviates from " +
                         detail::fixed(expected, 2));
    }
  }
  for (const auto& [id, label] : plan.labels) {
    const auto n = tested.count(id);
    if (n != 1) issues.push_back(id + " is tested " + std::to_string(n) + " times");
  }
  return issues;
}

std::string split_plan_json(const SplitPlan& plan) {
  nlohmann::ordered_json doc;
  doc["k"] = plan.k;
  doc["seed"] = plan.seed;
  doc["scheme"] = to_string(plan.scheme);
  doc["validation_fraction"] = plan.validation_fraction;
  auto& folds = doc["folds"];
  folds = nlohmann::ordered_json::array();
  for (const auto& fold : plan.folds)
    folds.push_back({{"train", fold.train}, {"validation", fold.validation}, {"test", fold.test}});
  auto& labels = doc["labels"];
  labels = nlohmann::ordered_json::object();
  for (const auto& [id, label] : plan.labels) labels[id] = to_string(label);
  return doc.dump(1) + "\n";
}

SplitPlan parse_split_plan(const std::string& json_text) {
  try {
    const auto doc = nlohmann::json::parse(json_text);
    SplitPlan plan;
    plan.k = doc.at("k").get<int>();
    plan.seed = doc.at("seed").get<std::uint64_t>();
    const auto scheme = parse_scheme(doc.at("scheme").get<std::string>());
    if (!scheme) throw SplitError("unknown scheme in split plan");
    plan.scheme = *scheme;
    plan.validation_fraction = doc.value("validation_fraction", 0.0);
    for (const auto& f : doc.at("folds"))
      plan.folds.push_back({f.at("train").get<std::vector<std::string>>(),
                            f.at("validation").get<std::vector<std::string>>(),
                            f.at("test").get<std::vector<std::string>>()});
    for (const auto& [id, text] : doc.at("labels").items()) {
      const auto label = parse_label(text.get<std::string>());
      if (!label) throw SplitError("unknown label for " + id);
      plan.labels[id] = *label;
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw SplitError(std::string("malformed split plan: ") + e.what());
  }
}

void write_split_plan(const SplitPlan& plan, const std::filesystem::path& file) {
  detail::write_text_file(file, split_plan_json(plan));
}

SplitPlan read_split_plan(const std::filesystem::path& file) {
  return parse_split_plan(detail::read_text_file(file));
}

}  // namespace cxr
