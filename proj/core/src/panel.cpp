#include "cxr/panel.hpp"

#include "cxr/model_input.hpp"
#include "io_util.hpp"

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace cxr {
namespace {

cv::Mat original_cell(const ImageRecord& record, const std::filesystem::path& root, int side) {
  const auto img = load_resized(root / record.path, side);
  cv::Mat grey(side, side, CV_8UC1);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      float v = 0.0f;
      for (int c = 0; c < img.channels; ++c) v += img.at(x, y, c);
      grey.at<std::uint8_t>(y, x) = cv::saturate_cast<std::uint8_t>(v / static_cast<float>(img.channels));
    }
  }
  cv::Mat bgr;
  cv::cvtColor(grey, bgr, cv::COLOR_GRAY2BGR);
  return bgr;
}

cv::Mat activation_cell(const ActivationMap& normalized, std::int64_t channel, int side) {
  const auto plane = normalized.channel(channel);
  cv::Mat map(static_cast<int>(normalized.height), static_cast<int>(normalized.width), CV_32FC1);
  std::copy(plane.begin(), plane.end(), map.ptr<float>());
  cv::Mat up;
  cv::resize(map, up, cv::Size(side, side), 0, 0, cv::INTER_LINEAR);
  cv::Mat bytes;
  up.convertTo(bytes, CV_8UC1, 255.0);
  cv::Mat colour;
  cv::applyColorMap(bytes, colour, cv::COLORMAP_JET);
  return colour;
}

cv::Mat placeholder_cell(int side) {
  cv::Mat cell(side, side, CV_8UC3, cv::Scalar(64, 64, 64));
  const cv::Scalar red(0, 0, 220);
  cv::line(cell, {0, 0}, {side - 1, side - 1}, red, 3);
  cv::line(cell, {0, side - 1}, {side - 1, 0}, red, 3);
  return cell;
}

}  // namespace

std::vector<PanelCell> render_panel(const Classifier& model, const std::vector<PanelRow>& rows,
                                    const std::filesystem::path& root, const std::vector<std::string>& layers,
                                    const std::filesystem::path& png, PanelLayout layout) {
  if (layers.empty()) throw LayerError("panel needs at least one layer");
  if (rows.empty()) throw LayerError("panel needs at least one row");
  const int side = layout.cell_side, gap = layout.gutter;
  const int columns = static_cast<int>(layers.size()) + 1;
  const int width = columns * side + (columns + 1) * gap;
  const int height = static_cast<int>(rows.size()) * side + (static_cast<int>(rows.size()) + 1) * gap;
  cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));

  const auto inventory = layer_inventory(model);
  std::vector<PanelCell> cells;
  for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
    const auto& record = rows[static_cast<std::size_t>(r)].record;
    for (int c = 0; c < columns; ++c) {
      PanelCell cell{r, c, record.record_id, {}, -1, {}};
      cv::Mat image;
      try {
        if (c == 0) {
          image = original_cell(record, root, side);
        } else {
          const auto& info = resolve_layer(inventory, layers[static_cast<std::size_t>(c - 1)]);
          cell.layer = info.path;
          const auto map = normalize_map(capture_activations(model, record, root, info.path));
          cell.channel = strongest_channel(map);
          image = activation_cell(map, cell.channel, side);
        }
      } catch (const std::exception& e) {
        cell.error = e.what();
        image = placeholder_cell(side);
      }
      image.copyTo(canvas(cv::Rect(gap + c * (side + gap), gap + r * (side + gap), side, side)));
      cells.push_back(std::move(cell));
    }
  }

  std::filesystem::create_directories(png.parent_path().empty() ? "." : png.parent_path());
  if (!cv::imwrite(png.string(), canvas)) throw std::runtime_error("cannot write " + png.string());

  nlohmann::json sidecar = nlohmann::json::array();
  for (const auto& cell : cells) {
    sidecar.push_back({{"row", cell.row},
                       {"column", cell.column},
                       {"class", rows[static_cast<std::size_t>(cell.row)].class_name},
                       {"record_id", cell.record_id},
                       {"layer", cell.layer},
                       {"channel", cell.channel},
                       {"error", cell.error}});
  }
  detail::write_text_file(png.string() + ".json", sidecar.dump(2) + "\n");
  return cells;
}

}  // namespace cxr
