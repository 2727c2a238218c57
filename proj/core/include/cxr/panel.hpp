#pragma once

#include "cxr/activations.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace cxr {

struct PanelRow {
  std::string class_name;
  ImageRecord record;
};

struct PanelCell {
  int row = 0;
  int column = 0;  ///< 0 is the original image
  std::string record_id;
  std::string layer;  ///< resolved dotted path, empty for the original
  std::int64_t channel = -1;
  std::string error;  ///< non-empty when the cell is a placeholder
};

struct PanelLayout {
  int cell_side = 160;
  int gutter = 4;
};

/// Rows are classes, columns the original image followed by one column per
/// layer showing that layer's strongest channel, min-max normalised,
/// bilinearly up-sampled and colour-mapped. A cell whose capture fails is
/// drawn as a crossed-out placeholder. Writes `png` and `<png>.json`
/// (the cell list); the same inputs always give byte-identical files.
std::vector<PanelCell> render_panel(const Classifier& model, const std::vector<PanelRow>& rows,
                                    const std::filesystem::path& root, const std::vector<std::string>& layers,
                                    const std::filesystem::path& png, PanelLayout layout = {});

}  // namespace cxr
