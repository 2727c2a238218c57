#include "cxr/raster.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace cxr {

namespace {

cv::Mat as_mat(const Raster& image) {
  // OpenCV only reads through this header; the const_cast never writes.
  return cv::Mat(image.height, image.width, CV_32FC(image.channels),
                 const_cast<float*>(image.pixels.data()));
}

Raster from_mat(const cv::Mat& mat) {
  cv::Mat f;
  mat.convertTo(f, CV_32F);
  Raster out(f.cols, f.rows, f.channels());
  cv::Mat dst(out.height, out.width, CV_32FC(out.channels), out.pixels.data());
  f.copyTo(dst);
  return out;
}

}  // namespace

Raster decode_raster(std::span<const std::byte> encoded) {
  if (encoded.empty()) throw DecodeError("empty image buffer");
  const cv::Mat buffer(1, static_cast<int>(encoded.size()), CV_8U,
                       const_cast<std::byte*>(encoded.data()));
  cv::Mat mat;
  try {
    mat = cv::imdecode(buffer, cv::IMREAD_UNCHANGED | cv::IMREAD_ANYDEPTH);
  } catch (const cv::Exception& e) {
    throw DecodeError(e.what());
  }
  if (mat.empty() || mat.cols < 1 || mat.rows < 1) throw DecodeError("not a decodable raster image");

  double scale = 1.0;
  switch (mat.depth()) {
    case CV_8U: break;
    case CV_16U: scale = 255.0 / 65535.0; break;
    case CV_32F: scale = 255.0; break;
    default: throw DecodeError("unsupported pixel depth");
  }
  cv::Mat converted;
  mat.convertTo(converted, CV_32F, scale);

  cv::Mat ordered;
  switch (converted.channels()) {
    case 1: ordered = converted; break;
    case 3: cv::cvtColor(converted, ordered, cv::COLOR_BGR2RGB); break;
    case 4: cv::cvtColor(converted, ordered, cv::COLOR_BGRA2RGB); break;
    default: throw DecodeError("unsupported channel count");
  }
  return from_mat(ordered);
}

Raster read_raster(const std::filesystem::path& file) {
  std::vector<std::byte> bytes;
  try {
    bytes = read_file_bytes(file);
  } catch (const std::exception& e) {
    throw DecodeError(e.what());
  }
  return decode_raster(bytes);
}

Raster resize_bilinear(const Raster& image, int width, int height) {
  if (image.width == width && image.height == height) return image;
  cv::Mat out;
  cv::resize(as_mat(image), out, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
  return from_mat(out);
}

Raster to_three_channels(const Raster& image) {
  if (image.channels == 3) return image;
  if (image.channels != 1) throw std::invalid_argument("to_three_channels: expected 1 or 3 channels");
  Raster out(image.width, image.height, 3);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    out.pixels[3 * i] = out.pixels[3 * i + 1] = out.pixels[3 * i + 2] = image.pixels[i];
  }
  return out;
}

std::vector<unsigned char> encode_png(const Raster& image) {
  cv::Mat bytes;
  as_mat(image).convertTo(bytes, CV_8U);  // saturating round-to-nearest
  cv::Mat ordered = bytes;
  if (image.channels == 3) cv::cvtColor(bytes, ordered, cv::COLOR_RGB2BGR);
  std::vector<unsigned char> out;
  if (!cv::imencode(".png", ordered, out)) throw std::runtime_error("PNG encoding failed");
  return out;
}

void write_png(const Raster& image, const std::filesystem::path& file) {
  const auto bytes = encode_png(image);
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + file.string());
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<std::byte> bytes(size);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw std::runtime_error("read error on " + file.string());
  return bytes;
}

}  // namespace cxr
