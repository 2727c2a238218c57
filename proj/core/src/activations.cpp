#include "cxr/activations.hpp"

#include "cxr/model_input.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace cxr {
namespace {

torch::Device device_of(NetworkImpl& net) {
  const auto params = net.parameters();
  return params.empty() ? torch::Device(torch::kCPU) : params.front().device();
}

// Runs one inference pass with the tap in `mode`, leaving the network's
// train/eval state as it found it.
template <typename Setup>
void tapped_forward(const Classifier& model, const torch::Tensor& batch, ActivationTap::Mode mode, Setup setup) {
  auto& net = *model.net;
  auto& tap = *net.tap();
  const bool was_training = net.is_training();
  net.eval();
  tap.mode = mode;
  setup(tap);
  try {
    torch::NoGradGuard guard;
    net.forward(batch.to(device_of(net)));
  } catch (...) {
    tap.mode = ActivationTap::Mode::Off;
    net.train(was_training);
    throw;
  }
  tap.mode = ActivationTap::Mode::Off;
  net.train(was_training);
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const auto up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

}  // namespace

std::vector<LayerInfo> layer_inventory(const Classifier& model) {
  const auto side = model.spec->input_side;
  auto& tap = *model.net->tap();
  tapped_forward(model, torch::zeros({1, 3, side, side}), ActivationTap::Mode::Inventory,
                 [](ActivationTap& t) { t.inventory.clear(); });
  std::vector<LayerInfo> out;
  for (const auto& e : tap.inventory) {
    out.push_back({static_cast<int>(out.size()) + 1, e.path, e.shape[1], e.shape[2], e.shape[3]});
  }
  tap.inventory.clear();
  return out;
}

const LayerInfo& resolve_layer(const std::vector<LayerInfo>& inventory, const std::string& identifier) {
  constexpr std::string_view kOrdinal = "conv#";
  if (identifier.starts_with(kOrdinal)) {
    int ordinal = 0;
    const auto* first = identifier.data() + kOrdinal.size();
    const auto* last = identifier.data() + identifier.size();
    const auto [ptr, ec] = std::from_chars(first, last, ordinal);
    if (ec == std::errc() && ptr == last && ordinal >= 1 && ordinal <= static_cast<int>(inventory.size()))
      return inventory[static_cast<std::size_t>(ordinal - 1)];
    throw LayerError("layer " + identifier + " is out of range; the model has " + std::to_string(inventory.size()) +
                     " convolutions (conv#1 .. conv#" + std::to_string(inventory.size()) + ")");
  }
  for (const auto& layer : inventory)
    if (layer.path == identifier) return layer;

  std::vector<std::pair<std::size_t, std::string>> ranked;
  for (const auto& layer : inventory) ranked.emplace_back(edit_distance(identifier, layer.path), layer.path);
  std::stable_sort(ranked.begin(), ranked.end(), [](auto& a, auto& b) { return a.first < b.first; });
  std::string nearest;
  for (std::size_t i = 0; i < std::min<std::size_t>(3, ranked.size()); ++i)
    nearest += (i ? ", " : "") + ranked[i].second;
  throw LayerError("unknown layer " + identifier + "; nearest: " + nearest);
}

ActivationMap capture_activations(const Classifier& model, const torch::Tensor& input, const std::string& layer,
                                  const std::string& record_id) {
  const auto side = model.spec->input_side;
  if (input.dim() != 3 || input.size(0) != 3 || input.size(1) != side || input.size(2) != side) {
    throw NetworkError(std::string(model.spec->name) + " expects 3x" + std::to_string(side) + "x" +
                       std::to_string(side) + " input");
  }
  const auto inventory = layer_inventory(model);
  const auto& info = resolve_layer(inventory, layer);
  auto& tap = *model.net->tap();
  tapped_forward(model, input.unsqueeze(0), ActivationTap::Mode::Capture, [&](ActivationTap& t) {
    t.target = info.path;
    t.captured = torch::Tensor();
  });
  if (!tap.captured.defined()) throw LayerError("layer " + info.path + " did not run during the forward pass");
  const auto captured = tap.captured.squeeze(0).to(torch::kFloat32).contiguous();
  tap.captured = torch::Tensor();

  ActivationMap map;
  map.layer = info.path;
  map.record_id = record_id;
  map.channels = captured.size(0);
  map.height = captured.size(1);
  map.width = captured.size(2);
  map.values.assign(captured.data_ptr<float>(), captured.data_ptr<float>() + captured.numel());
  map.constant_channels.assign(static_cast<std::size_t>(map.channels), false);
  return map;
}

ActivationMap capture_activations(const Classifier& model, const ImageRecord& record,
                                  const std::filesystem::path& root, const std::string& layer) {
  auto t = load_model_input(record, input_spec(model.spec->backbone), root);
  const auto input = torch::from_blob(t.values.data(), {t.channels, t.height, t.width}, torch::kFloat32).clone();
  return capture_activations(model, input, layer, record.record_id);
}

ActivationMap normalize_map(ActivationMap map) {
  map.constant_channels.assign(static_cast<std::size_t>(map.channels), false);
  const auto plane = static_cast<std::size_t>(map.height * map.width);
  for (std::int64_t c = 0; c < map.channels; ++c) {
    auto* first = map.values.data() + static_cast<std::size_t>(c) * plane;
    const auto [lo, hi] = std::minmax_element(first, first + plane);
    const float min = *lo, range = *hi - *lo;
    if (!(range > 0.0f)) {
      std::fill(first, first + plane, 0.0f);
      map.constant_channels[static_cast<std::size_t>(c)] = true;
      continue;
    }
    for (auto* v = first; v != first + plane; ++v) *v = (*v - min) / range;
  }
  return map;
}

std::int64_t strongest_channel(const ActivationMap& map) {
  std::int64_t best = 0;
  double best_mean = -1.0;
  for (std::int64_t c = 0; c < map.channels; ++c) {
    double sum = 0.0;
    for (const float v : map.channel(c)) sum += std::abs(static_cast<double>(v));
    const double mean = sum / static_cast<double>(map.height * map.width);
    if (mean > best_mean) {
      best_mean = mean;
      best = c;
    }
  }
  return best;
}

}  // namespace cxr
