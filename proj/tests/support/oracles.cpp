#include "oracles.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unistd.h>

namespace cxr::oracle {

std::vector<NaiveMetric> per_sample_metrics(const std::vector<std::pair<int, int>>& samples, int k) {
  std::vector<NaiveMetric> out;
  for (int cls = 0; cls < k; ++cls) {
    std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (const auto& [truth, pred] : samples) {
      const bool is = truth == cls;
      const bool said = pred == cls;
      if (is && said) ++tp;
      else if (is) ++fn;
      else if (said) ++fp;
      else ++tn;
    }
    auto div = [](std::int64_t a, std::int64_t b) {
      return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
    };
    NaiveMetric m{};
    m.accuracy = div(tp + tn, tp + tn + fp + fn);
    m.precision = div(tp, tp + fp);
    m.sensitivity = div(tp, tp + fn);
    m.specificity = div(tn, tn + fp);
    m.f1 = (m.precision + m.sensitivity) > 0.0
               ? 2.0 * m.precision * m.sensitivity / (m.precision + m.sensitivity)
               : 0.0;
    out.push_back(m);
  }
  return out;
}

double concordance_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  std::int64_t twice_wins = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) (positive[i] ? pos : neg) += 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) continue;
      if (scores[i] > scores[j]) twice_wins += 2;
      else if (scores[i] == scores[j]) twice_wins += 1;
    }
  }
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

Mat3 invert(const Mat3& m) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  Mat3 r{};
  r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return r;
}

}  // namespace

Raster inverse_mapping_rotate(const Raster& image, double degrees_ccw, float fill) {
  const double t = degrees_ccw * std::numbers::pi / 180.0;
  const double cx = (image.width - 1) * 0.5;
  const double cy = (image.height - 1) * 0.5;
  // pixel (x, y-down) -> centred y-up coordinates
  const Mat3 to_centered{{{1, 0, -cx}, {0, -1, cy}, {0, 0, 1}}};
  const Mat3 rot{{{std::cos(t), -std::sin(t), 0}, {std::sin(t), std::cos(t), 0}, {0, 0, 1}}};
  const Mat3 forward = mul(invert(to_centered), mul(rot, to_centered));
  const Mat3 back = invert(forward);

  Raster out(image.width, image.height, image.channels);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double sx = back[0][0] * x + back[0][1] * y + back[0][2];
      const double sy = back[1][0] * x + back[1][1] * y + back[1][2];
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double ax = sx - x0;
      const double ay = sy - y0;
      for (int c = 0; c < image.channels; ++c) {
        double acc = 0.0;
        const int xs[2] = {x0, x0 + 1};
        const int ys[2] = {y0, y0 + 1};
        const double wx[2] = {1.0 - ax, ax};
        const double wy[2] = {1.0 - ay, ay};
        for (int j = 0; j < 2; ++j) {
          for (int i = 0; i < 2; ++i) {
            const bool inside = xs[i] >= 0 && ys[j] >= 0 && xs[i] < image.width && ys[j] < image.height;
            acc += wx[i] * wy[j] * (inside ? image.at(xs[i], ys[j], c) : fill);
          }
        }
        out.at(x, y, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Raster gradient_pattern(int side, int variant) {
  Raster img(side, side, 1);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const double u = static_cast<double>(x) / (side - 1);
      const double v = static_cast<double>(y) / (side - 1);
      double value = 0.0;
      switch (variant % 3) {
        case 0: value = 255.0 * (0.6 * u + 0.4 * v); break;
        case 1: value = 127.5 + 120.0 * std::sin(3.0 * u + 2.0 * v) * std::cos(2.5 * v); break;
        default: value = 255.0 * std::exp(-((u - 0.4) * (u - 0.4) + (v - 0.6) * (v - 0.6)) * 6.0); break;
      }
      img.at(x, y) = static_cast<float>(value);
    }
  }
  return img;
}

std::filesystem::path scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("cxr-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace cxr::oracle
