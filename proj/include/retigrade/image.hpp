#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace retigrade {

/// Decoded RGB photograph. Interleaved row-major storage, values in [0, 255].
/// Values are kept as floats so resampling does not requantize.
class RawImage {
 public:
  static constexpr std::size_t kChannels = 3;

  RawImage() = default;
  RawImage(std::size_t height, std::size_t width, float fill = 0.0F);
  /// Takes ownership of `pixels` (size must be height * width * 3, values in [0, 255]).
  RawImage(std::size_t height, std::size_t width, std::vector<float> pixels);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  bool empty() const noexcept { return pixels_.empty(); }

  float& at(std::size_t y, std::size_t x, std::size_t c) {
    return pixels_[(y * width_ + x) * kChannels + c];
  }
  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels_[(y * width_ + x) * kChannels + c];
  }

  std::span<const float> pixels() const noexcept { return pixels_; }
  std::span<float> pixels() noexcept { return pixels_; }

  friend bool operator==(const RawImage&, const RawImage&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<float> pixels_;
};

enum class TensorStage { kMinMax, kStandardized };

/// Channel-major (3 x H x W) float image produced by normalization.
class TensorImage {
 public:
  static constexpr std::size_t kChannels = 3;

  TensorImage() = default;
  TensorImage(std::size_t height, std::size_t width, TensorStage stage);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  TensorStage stage() const noexcept { return stage_; }

  float& at(std::size_t c, std::size_t y, std::size_t x) {
    return values_[(c * height_ + y) * width_ + x];
  }
  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return values_[(c * height_ + y) * width_ + x];
  }

  std::span<const float> values() const noexcept { return values_; }
  std::span<float> values() noexcept { return values_; }
  std::span<const float> channel(std::size_t c) const noexcept {
    return std::span<const float>(values_).subspan(c * height_ * width_, height_ * width_);
  }

  friend bool operator==(const TensorImage&, const TensorImage&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  TensorStage stage_ = TensorStage::kMinMax;
  std::vector<float> values_;
};

/// Per-channel mean/std used for standardization. Defaults are the usual
/// natural-image pretraining statistics.
struct ChannelStats {
  std::array<float, 3> mean{0.485F, 0.456F, 0.406F};
  std::array<float, 3> std{0.229F, 0.224F, 0.225F};

  /// Throws ConfigError unless every std component is finite and > 0.
  void validate() const;

  friend bool operator==(const ChannelStats&, const ChannelStats&) = default;
};

enum class CropPosition { kTopLeft, kTopRight, kBottomLeft, kBottomRight, kCenter };

struct CropTag {
  CropPosition position = CropPosition::kCenter;
  bool flipped = false;

  friend bool operator==(const CropTag&, const CropTag&) = default;
};

std::string_view to_string(CropPosition position) noexcept;

/// Crop window in source-image coordinates.
struct CropWindow {
  std::size_t top = 0;
  std::size_t left = 0;
  std::size_t height = 0;
  std::size_t width = 0;
};

/// Ten-crop output in a fixed order: TL, TR, BL, BR, center of the source,
/// then the same five positions of its horizontal mirror.
struct CropSet {
  static constexpr std::size_t kSize = 10;

  std::array<RawImage, kSize> crops;
  std::array<CropTag, kSize> tags;
};

}  // namespace retigrade
