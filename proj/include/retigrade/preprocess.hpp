#pragma once

#include <array>
#include <cstddef>
#include <list>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "retigrade/image.hpp"

namespace retigrade {

inline constexpr std::size_t kInferenceResize = 256;
inline constexpr std::size_t kCropSize = 224;

/// Bilinear resampling with half-pixel centers: output pixel (y, x) samples
/// the source at ((y + 0.5) * H_in / H_out - 0.5, (x + 0.5) * W_in / W_out - 0.5),
/// clamped to the valid range. Same-size resize is the identity.
RawImage resize_bilinear(const RawImage& img, std::size_t out_h, std::size_t out_w);

/// Global min-max scaling to [0, 1] over all channels. A constant image maps
/// to all zeros.
TensorImage minmax_normalize(const RawImage& img);

/// (v - mean[c]) / std[c] per channel. Input must be at the min-max stage.
TensorImage standardize(const TensorImage& img, const ChannelStats& stats);

RawImage flip_horizontal(const RawImage& img);
RawImage crop(const RawImage& img, const CropWindow& window);

/// The five crop windows (TL, TR, BL, BR, center) for a crop of `size`.
std::array<CropWindow, 5> five_crop_windows(std::size_t height, std::size_t width,
                                            std::size_t size = kCropSize);

/// Four corners and the center of the image, then the same five of its
/// horizontal mirror. Throws InvalidInput when the image is smaller than `size`.
CropSet ten_crop(const RawImage& img, std::size_t size = kCropSize);

enum class CropMode { kTenCrop, kCenterOnly };

/// Inference-ready crops for one image: resized to 256, cropped, min-max
/// scaled per crop. Standardized variants are computed on demand per
/// ChannelStats and cached, so every model sees the same crop bytes.
class PreparedCrops {
 public:
  PreparedCrops(std::string key, std::vector<TensorImage> minmax, std::vector<CropTag> tags);

  PreparedCrops(const PreparedCrops&) = delete;
  PreparedCrops& operator=(const PreparedCrops&) = delete;

  /// Identifier of the source image (file name), used by table backends.
  const std::string& key() const noexcept { return key_; }
  std::size_t size() const noexcept { return minmax_.size(); }
  const std::vector<TensorImage>& minmax() const noexcept { return minmax_; }
  const std::vector<CropTag>& tags() const noexcept { return tags_; }

  const std::vector<TensorImage>& standardized(const ChannelStats& stats) const;

 private:
  std::string key_;
  std::vector<TensorImage> minmax_;
  std::vector<CropTag> tags_;
  mutable std::mutex cache_mutex_;
  mutable std::list<std::pair<ChannelStats, std::vector<TensorImage>>> cache_;
};

PreparedCrops prepare_crops(const RawImage& img, std::string key,
                            CropMode mode = CropMode::kTenCrop);

}  // namespace retigrade
