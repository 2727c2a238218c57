#include "cxr/report.hpp"

#include "cxr/checksum.hpp"
#include "cxr/metrics.hpp"
#include "io_util.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace cxr {
namespace {

constexpr const char* kReportFile = "report/report.json";

// Keys whose string values name files inside the run directory.
const std::set<std::string> kFileKeys{"file", "scheme_file", "document", "history", "model", "metadata", "predictions", "panel", "sidecar"};

void collect_references(const json& node, const std::string& key, std::vector<std::string>& out) {
  if (node.is_object()) {
    for (const auto& [k, v] : node.items()) {
      if (k == "files") continue;
      if (k == "roc_files" && v.is_object()) {
        for (const auto& [cls, path] : v.items())
          if (path.is_string()) out.push_back(path.get<std::string>());
        continue;
      }
      collect_references(v, k, out);
    }
  } else if (node.is_array()) {
    for (const auto& v : node) collect_references(v, key, out);
  } else if (node.is_string() && kFileKeys.contains(key) && !node.get<std::string>().empty()) {
    out.push_back(node.get<std::string>());
  }
}

std::string pad(const std::string& s, std::size_t width, bool right = true) {
  if (s.size() >= width) return s;
  return right ? std::string(width - s.size(), ' ') + s : s + std::string(width - s.size(), ' ');
}

constexpr std::array<const char*, 5> kColumns{"Accuracy", "Precision", "Sensitivity", "F1", "Specificity"};
constexpr std::array<const char*, 5> kKeys{"accuracy", "precision", "sensitivity", "f1", "specificity"};

std::string metric_cells(const json* backbone, const char* block) {
  std::string out;
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    std::string cell = "-";
    if (backbone != nullptr) {
      if (backbone->value("status", "") != "ok") {
        cell = i == 0 ? "failed" : "";
      } else {
        cell = format_percent(backbone->at(block).at(kKeys[i]).get<double>());
      }
    }
    out += " " + pad(cell, std::string(kColumns[i]).size() < 8 ? 8 : std::string(kColumns[i]).size());
  }
  return out;
}

std::string metric_header() {
  std::string out;
  for (const auto* c : kColumns) out += " " + pad(c, std::string(c).size() < 8 ? 8 : std::string(c).size());
  return out;
}

const json* find_backbone(const json* report, const std::string& name) {
  if (report == nullptr) return nullptr;
  for (const auto& b : report->at("backbones"))
    if (b.at("name") == name) return &b;
  return nullptr;
}

std::string arm_name(const json& report) { return report.at("augment").get<bool>() ? "with augmentation" : "without augmentation"; }

cv::Scalar palette(std::size_t i) {
  static const std::array<cv::Scalar, 8> colours{
      cv::Scalar(180, 119, 31), cv::Scalar(14, 127, 255), cv::Scalar(44, 160, 44),  cv::Scalar(40, 39, 214),
      cv::Scalar(189, 103, 148), cv::Scalar(75, 86, 140), cv::Scalar(194, 119, 227), cv::Scalar(34, 189, 188)};
  return colours[i % colours.size()];
}

std::string slug(std::string s) {
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  return s;
}

}  // namespace

std::map<std::string, std::string> checksum_tree(const fs::path& dir, const std::set<std::string>& exclude) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir).generic_string();
    if (exclude.contains(rel)) continue;
    out[rel] = sha256_file(entry.path());
  }
  return out;
}

std::vector<std::string> validate_run(const fs::path& run_dir) {
  std::vector<std::string> problems;
  const auto report_path = run_dir / kReportFile;
  if (!fs::exists(report_path)) return {"missing " + report_path.string()};
  json report;
  try {
    report = json::parse(detail::read_text_file(report_path));
  } catch (const std::exception& e) {
    return {"corrupt " + report_path.string() + ": " + e.what()};
  }
  if (!report.is_object() || !report.contains("files") || !report.contains("backbones"))
    return {"corrupt " + report_path.string() + ": missing files or backbones section"};

  const auto& files = report.at("files");
  for (const auto& [rel, sha] : files.items()) {
    const auto path = run_dir / rel;
    if (!fs::exists(path)) {
      problems.push_back("missing file " + path.string());
    } else if (sha256_file(path) != sha.get<std::string>()) {
      problems.push_back("checksum mismatch for " + path.string());
    }
  }
  std::vector<std::string> refs;
  collect_references(report, "", refs);
  for (const auto& rel : refs)
    if (!files.contains(rel)) problems.push_back("report references unlisted file " + (run_dir / rel).string());
  return problems;
}

json load_run_report(const fs::path& run_dir) {
  const auto problems = validate_run(run_dir);
  if (!problems.empty()) throw ReportError(problems.front());
  return json::parse(detail::read_text_file(run_dir / kReportFile));
}

std::string render_result_tables(const std::vector<json>& reports) {
  std::vector<std::string> schemes;
  for (const auto& r : reports) {
    const auto s = r.at("scheme").get<std::string>();
    if (std::find(schemes.begin(), schemes.end(), s) == schemes.end()) schemes.push_back(s);
  }

  std::ostringstream out;
  for (const auto& scheme : schemes) {
    const json* arms[2] = {nullptr, nullptr};  // without, with
    std::vector<std::string> names;
    for (const auto& r : reports) {
      if (r.at("scheme") != scheme) continue;
      arms[r.at("augment").get<bool>() ? 1 : 0] = &r;
      for (const auto& b : r.at("backbones")) {
        const auto n = b.at("name").get<std::string>();
        if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
      }
    }
    const auto header = metric_header();
    const std::size_t name_width = 12;
    out << scheme << " results, %\n";
    out << "accuracy: overall; precision, sensitivity, F1: support-weighted; specificity: macro mean\n\n";
    out << pad("", name_width, false) << " |" << pad("without augmentation", header.size(), false) << " |"
        << pad("with augmentation", header.size(), false) << "\n";
    out << pad("Backbone", name_width, false) << " |" << header << " |" << header << "\n";
    out << std::string(name_width + 4 + 2 * header.size(), '-') << "\n";
    for (const auto& n : names) {
      out << pad(n, name_width, false) << " |" << metric_cells(arms[0] ? find_backbone(arms[0], n) : nullptr, "table_row")
          << " |" << metric_cells(arms[1] ? find_backbone(arms[1], n) : nullptr, "table_row") << "\n";
    }
    out << "\n";

    for (const json* arm : arms) {
      if (arm == nullptr) continue;
      out << scheme << ", " << arm_name(*arm) << ": weighted | macro aggregates, %\n";
      out << pad("Backbone", name_width, false) << " |" << header << " |" << header << "\n";
      out << std::string(name_width + 4 + 2 * header.size(), '-') << "\n";
      for (const auto& b : arm->at("backbones")) {
        out << pad(b.at("name").get<std::string>(), name_width, false) << " |" << metric_cells(&b, "weighted") << " |"
            << metric_cells(&b, "macro") << "\n";
      }
      out << "\n";
    }
  }
  return out.str();
}

std::vector<RocPoint> read_roc_tsv(const fs::path& file) {
  std::vector<RocPoint> points;
  const auto lines = detail::read_lines(file);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = detail::split(lines[i], '\t');
    if (cells.size() != 2) throw ReportError("malformed ROC row in " + file.string() + ": " + lines[i]);
    points.push_back({std::stod(cells[0]), std::stod(cells[1])});
  }
  return points;
}

void plot_roc(const std::vector<RocSeries>& series, const std::string& title, const fs::path& png) {
  const int width = 520, height = 520, left = 60, right = 20, top = 40, bottom = 50;
  const int pw = width - left - right, ph = height - top - bottom;
  cv::Mat img(height, width, CV_8UC3, cv::Scalar(255, 255, 255));
  auto at = [&](double fpr, double tpr) {
    return cv::Point(left + static_cast<int>(std::lround(fpr * pw)), top + ph - static_cast<int>(std::lround(tpr * ph)));
  };
  const cv::Scalar black(0, 0, 0), grey(170, 170, 170);
  const auto font = cv::FONT_HERSHEY_SIMPLEX;

  for (int i = 0; i <= 10; ++i) {
    const double v = i / 10.0;
    cv::line(img, at(v, 0), at(v, 1), cv::Scalar(235, 235, 235), 1);
    cv::line(img, at(0, v), at(1, v), cv::Scalar(235, 235, 235), 1);
    if (i % 2 == 0) {
      const auto label = detail::fixed(v, 1);
      cv::putText(img, label, at(v, 0) + cv::Point(-10, 18), font, 0.4, black, 1, cv::LINE_AA);
      cv::putText(img, label, at(0, v) + cv::Point(-30, 4), font, 0.4, black, 1, cv::LINE_AA);
    }
  }
  for (int i = 0; i < 20; i += 2) cv::line(img, at(i / 20.0, i / 20.0), at((i + 1) / 20.0, (i + 1) / 20.0), grey, 1);
  cv::rectangle(img, at(0, 1), at(1, 0), black, 1);
  cv::putText(img, "false positive rate", {left + pw / 2 - 70, height - 12}, font, 0.5, black, 1, cv::LINE_AA);
  cv::putText(img, "TPR", {8, top + ph / 2}, font, 0.5, black, 1, cv::LINE_AA);
  cv::putText(img, title, {left, 25}, font, 0.55, black, 1, cv::LINE_AA);

  for (std::size_t s = 0; s < series.size(); ++s) {
    std::vector<cv::Point> pts;
    for (const auto& p : series[s].points) pts.push_back(at(p.fpr, p.tpr));
    if (!pts.empty()) cv::polylines(img, pts, false, palette(s), 2, cv::LINE_AA);
    const cv::Point legend(left + pw - 210, top + ph - 20 * static_cast<int>(series.size() - s));
    cv::line(img, legend + cv::Point(0, -4), legend + cv::Point(18, -4), palette(s), 2);
    cv::putText(img, series[s].name + "  AUC " + detail::fixed(series[s].auc, 4), legend + cv::Point(24, 0), font, 0.42,
                black, 1, cv::LINE_AA);
  }
  if (!png.parent_path().empty()) fs::create_directories(png.parent_path());
  if (!cv::imwrite(png.string(), img)) throw ReportError("cannot write " + png.string());
}

std::vector<fs::path> render_report(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  if (run_dirs.empty()) throw ReportError("no run directory given");
  std::vector<json> reports;
  for (const auto& dir : run_dirs) reports.push_back(load_run_report(dir));

  std::vector<fs::path> written;
  fs::create_directories(out_dir);
  const auto tables = out_dir / "tables.txt";
  detail::write_text_file(tables, render_result_tables(reports));
  written.push_back(tables);

  for (std::size_t r = 0; r < reports.size(); ++r) {
    const auto& report = reports[r];
    const auto arm = std::string(report.at("augment").get<bool>() ? "aug" : "noaug");
    const auto scheme = report.at("scheme").get<std::string>();
    auto dir = run_dirs[r].lexically_normal();
    if (dir.filename().empty()) dir = dir.parent_path();
    const auto run_name = dir.filename().string();
    for (const auto& cls : report.at("class_names")) {
      const auto name = cls.get<std::string>();
      std::vector<RocSeries> series;
      for (const auto& b : report.at("backbones")) {
        if (b.value("status", "") != "ok" || !b.contains("roc_files") || !b.at("roc_files").contains(name)) continue;
        series.push_back({b.at("name").get<std::string>(),
                          read_roc_tsv(run_dirs[r] / b.at("roc_files").at(name).get<std::string>()),
                          b.at("auc").at(name).get<double>()});
      }
      if (series.empty()) continue;
      const auto png = out_dir / ("roc_" + slug(run_name) + "_" + slug(name) + ".png");
      plot_roc(series, scheme + " " + arm + ": " + name + " vs rest", png);
      written.push_back(png);
    }
  }
  spdlog::info("report written to {}", out_dir.string());
  return written;
}

}  // namespace cxr
