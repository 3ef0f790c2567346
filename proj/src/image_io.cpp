#include "retigrade/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>

#include "retigrade/error.hpp"

namespace retigrade {

RawImage read_image(const std::filesystem::path& path) {
  const cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw InvalidInput("cannot decode image: " + path.string());
  if (mat.depth() != CV_8U) {
    throw InvalidInput("only 8-bit images are supported: " + path.string());
  }
  const int channels = mat.channels();
  if (channels != 1 && channels != 3 && channels != 4) {
    throw InvalidInput("unsupported channel count " + std::to_string(channels) + ": " + path.string());
  }

  const auto h = static_cast<std::size_t>(mat.rows);
  const auto w = static_cast<std::size_t>(mat.cols);
  std::vector<float> pixels(h * w * 3);
  for (std::size_t y = 0; y < h; ++y) {
    const auto* row = mat.ptr<std::uint8_t>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x) {
      float* dst = &pixels[(y * w + x) * 3];
      if (channels == 1) {
        dst[0] = dst[1] = dst[2] = row[x];
      } else {
        // OpenCV decodes to BGR(A).
        const std::uint8_t* src = row + x * static_cast<std::size_t>(channels);
        dst[0] = src[2];
        dst[1] = src[1];
        dst[2] = src[0];
      }
    }
  }
  return RawImage(h, w, std::move(pixels));
}

void write_png(const std::filesystem::path& path, const RawImage& img) {
  cv::Mat mat(static_cast<int>(img.height()), static_cast<int>(img.width()), CV_8UC3);
  for (std::size_t y = 0; y < img.height(); ++y) {
    auto* row = mat.ptr<std::uint8_t>(static_cast<int>(y));
    for (std::size_t x = 0; x < img.width(); ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = std::clamp(std::round(img.at(y, x, c)), 0.0F, 255.0F);
        row[x * 3 + (2 - c)] = static_cast<std::uint8_t>(v);
      }
    }
  }
  if (!cv::imwrite(path.string(), mat)) throw Error("cannot write image: " + path.string());
}

}  // namespace retigrade
