#include "retigrade/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "retigrade/error.hpp"

namespace retigrade {

RawImage::RawImage(std::size_t height, std::size_t width, float fill)
    : height_(height), width_(width), pixels_(height * width * kChannels, fill) {}

RawImage::RawImage(std::size_t height, std::size_t width, std::vector<float> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (pixels_.size() != height * width * kChannels) {
    throw InvalidInput("pixel buffer size does not match " + std::to_string(height) + "x" +
                       std::to_string(width) + "x3");
  }
  for (float v : pixels_) {
    if (!(v >= 0.0F && v <= 255.0F)) throw InvalidInput("pixel value outside [0, 255]");
  }
}

TensorImage::TensorImage(std::size_t height, std::size_t width, TensorStage stage)
    : height_(height), width_(width), stage_(stage), values_(kChannels * height * width, 0.0F) {}

void ChannelStats::validate() const {
  for (std::size_t c = 0; c < 3; ++c) {
    if (!std::isfinite(mean[c]) || !std::isfinite(std[c]) || !(std[c] > 0.0F)) {
      throw ConfigError("channel stats: std must be finite and strictly positive (channel " +
                        std::to_string(c) + ")");
    }
  }
}

std::string_view to_string(CropPosition position) noexcept {
  switch (position) {
    case CropPosition::kTopLeft: return "TL";
    case CropPosition::kTopRight: return "TR";
    case CropPosition::kBottomLeft: return "BL";
    case CropPosition::kBottomRight: return "BR";
    case CropPosition::kCenter: return "C";
  }
  return "?";
}

namespace {

struct AxisSample {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

// a + t (b - a), kept inside [min(a, b), max(a, b)] despite rounding.
double lerp_bounded(double a, double b, double t) {
  return std::clamp(a + t * (b - a), std::min(a, b), std::max(a, b));
}

std::vector<AxisSample> axis_samples(std::size_t in, std::size_t out) {
  std::vector<AxisSample> samples(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::size_t>(std::floor(src));
    const std::size_t hi = std::min(lo + 1, in - 1);
    samples[i] = {lo, hi, src - static_cast<double>(lo)};
  }
  return samples;
}

}  // namespace

RawImage resize_bilinear(const RawImage& img, std::size_t out_h, std::size_t out_w) {
  if (img.empty()) throw InvalidInput("resize: empty input image");
  if (out_h == 0 || out_w == 0) throw InvalidInput("resize: output dimensions must be >= 1");

  const auto rows = axis_samples(img.height(), out_h);
  const auto cols = axis_samples(img.width(), out_w);
  RawImage out(out_h, out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const auto& r = rows[y];
    for (std::size_t x = 0; x < out_w; ++x) {
      const auto& s = cols[x];
      for (std::size_t c = 0; c < RawImage::kChannels; ++c) {
        const double top = lerp_bounded(img.at(r.lo, s.lo, c), img.at(r.lo, s.hi, c), s.frac);
        const double bottom = lerp_bounded(img.at(r.hi, s.lo, c), img.at(r.hi, s.hi, c), s.frac);
        out.at(y, x, c) = static_cast<float>(lerp_bounded(top, bottom, r.frac));
      }
    }
  }
  return out;
}

TensorImage minmax_normalize(const RawImage& img) {
  if (img.empty()) throw InvalidInput("minmax_normalize: empty input image");
  const auto [lo_it, hi_it] = std::minmax_element(img.pixels().begin(), img.pixels().end());
  const double lo = *lo_it;
  const double range = double(*hi_it) - lo;

  TensorImage out(img.height(), img.width(), TensorStage::kMinMax);
  if (range <= 0.0) return out;
  for (std::size_t c = 0; c < RawImage::kChannels; ++c) {
    for (std::size_t y = 0; y < img.height(); ++y) {
      for (std::size_t x = 0; x < img.width(); ++x) {
        out.at(c, y, x) = static_cast<float>(std::clamp((img.at(y, x, c) - lo) / range, 0.0, 1.0));
      }
    }
  }
  return out;
}

TensorImage standardize(const TensorImage& img, const ChannelStats& stats) {
  stats.validate();
  if (img.stage() != TensorStage::kMinMax) {
    throw InvalidInput("standardize: input must be min-max normalized");
  }
  TensorImage out(img.height(), img.width(), TensorStage::kStandardized);
  const std::size_t plane = img.height() * img.width();
  auto src = img.values();
  auto dst = out.values();
  for (std::size_t c = 0; c < TensorImage::kChannels; ++c) {
    const double mean = stats.mean[c];
    const double sd = stats.std[c];
    for (std::size_t i = c * plane; i < (c + 1) * plane; ++i) {
      dst[i] = static_cast<float>((src[i] - mean) / sd);
    }
  }
  return out;
}

RawImage flip_horizontal(const RawImage& img) {
  RawImage out(img.height(), img.width());
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      for (std::size_t c = 0; c < RawImage::kChannels; ++c) {
        out.at(y, img.width() - 1 - x, c) = img.at(y, x, c);
      }
    }
  }
  return out;
}

RawImage crop(const RawImage& img, const CropWindow& window) {
  if (window.top + window.height > img.height() || window.left + window.width > img.width()) {
    throw InvalidInput("crop window exceeds image bounds");
  }
  RawImage out(window.height, window.width);
  for (std::size_t y = 0; y < window.height; ++y) {
    for (std::size_t x = 0; x < window.width; ++x) {
      for (std::size_t c = 0; c < RawImage::kChannels; ++c) {
        out.at(y, x, c) = img.at(window.top + y, window.left + x, c);
      }
    }
  }
  return out;
}

std::array<CropWindow, 5> five_crop_windows(std::size_t height, std::size_t width, std::size_t size) {
  if (size == 0 || height < size || width < size) {
    throw InvalidInput("image " + std::to_string(height) + "x" + std::to_string(width) +
                       " is smaller than crop size " + std::to_string(size));
  }
  const std::size_t bottom = height - size;
  const std::size_t right = width - size;
  return {{
      {0, 0, size, size},
      {0, right, size, size},
      {bottom, 0, size, size},
      {bottom, right, size, size},
      {bottom / 2, right / 2, size, size},
  }};
}

CropSet ten_crop(const RawImage& img, std::size_t size) {
  if (img.empty()) throw InvalidInput("ten_crop: empty input image");
  const auto windows = five_crop_windows(img.height(), img.width(), size);
  constexpr std::array positions{CropPosition::kTopLeft, CropPosition::kTopRight,
                                 CropPosition::kBottomLeft, CropPosition::kBottomRight,
                                 CropPosition::kCenter};
  const RawImage mirrored = flip_horizontal(img);

  CropSet set;
  for (std::size_t i = 0; i < 5; ++i) {
    set.crops[i] = crop(img, windows[i]);
    set.tags[i] = {positions[i], false};
    set.crops[i + 5] = crop(mirrored, windows[i]);
    set.tags[i + 5] = {positions[i], true};
  }
  return set;
}

PreparedCrops::PreparedCrops(std::string key, std::vector<TensorImage> minmax, std::vector<CropTag> tags)
    : key_(std::move(key)), minmax_(std::move(minmax)), tags_(std::move(tags)) {
  if (minmax_.empty() || minmax_.size() != tags_.size()) {
    throw InvalidInput("prepared crops: need one tag per crop and at least one crop");
  }
}

const std::vector<TensorImage>& PreparedCrops::standardized(const ChannelStats& stats) const {
  std::lock_guard lock(cache_mutex_);
  for (const auto& [cached_stats, crops] : cache_) {
    if (cached_stats == stats) return crops;
  }
  std::vector<TensorImage> crops;
  crops.reserve(minmax_.size());
  for (const auto& t : minmax_) crops.push_back(standardize(t, stats));
  return cache_.emplace_back(stats, std::move(crops)).second;
}

PreparedCrops prepare_crops(const RawImage& img, std::string key, CropMode mode) {
  const RawImage resized = resize_bilinear(img, kInferenceResize, kInferenceResize);
  std::vector<TensorImage> tensors;
  std::vector<CropTag> tags;
  if (mode == CropMode::kTenCrop) {
    const CropSet set = ten_crop(resized);
    for (std::size_t i = 0; i < CropSet::kSize; ++i) {
      tensors.push_back(minmax_normalize(set.crops[i]));
      tags.push_back(set.tags[i]);
    }
  } else {
    const auto center = five_crop_windows(resized.height(), resized.width())[4];
    tensors.push_back(minmax_normalize(crop(resized, center)));
    tags.push_back({CropPosition::kCenter, false});
  }
  return PreparedCrops(std::move(key), std::move(tensors), std::move(tags));
}

}  // namespace retigrade
