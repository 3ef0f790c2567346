#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "retigrade/error.hpp"
#include "retigrade/image_io.hpp"
#include "retigrade/preprocess.hpp"
#include "test_support.hpp"

using namespace retigrade;
using retigrade::testing::random_image;
using retigrade::testing::TempDir;

namespace {

// Independent bilinear reference: explicit four-neighbour weights in double
// precision, half-pixel centres, edge clamping.
double oracle_resize_at(const RawImage& img, std::size_t out_h, std::size_t out_w, std::size_t y,
                        std::size_t x, std::size_t c) {
  auto source = [](std::size_t i, std::size_t in, std::size_t out) {
    double s = (i + 0.5) * double(in) / double(out) - 0.5;
    return std::min(std::max(s, 0.0), double(in - 1));
  };
  const double sy = source(y, img.height(), out_h);
  const double sx = source(x, img.width(), out_w);
  const auto y0 = std::size_t(sy), x0 = std::size_t(sx);
  const auto y1 = std::min(y0 + 1, img.height() - 1), x1 = std::min(x0 + 1, img.width() - 1);
  const double fy = sy - double(y0), fx = sx - double(x0);
  return (1 - fy) * (1 - fx) * img.at(y0, x0, c) + (1 - fy) * fx * img.at(y0, x1, c) +
         fy * (1 - fx) * img.at(y1, x0, c) + fy * fx * img.at(y1, x1, c);
}

double oracle_minmax_at(const RawImage& img, std::size_t y, std::size_t x, std::size_t c) {
  double lo = 1e9, hi = -1e9;
  for (float v : img.pixels()) {
    lo = std::min(lo, double(v));
    hi = std::max(hi, double(v));
  }
  return hi == lo ? 0.0 : (img.at(y, x, c) - lo) / (hi - lo);
}

}  // namespace

TEST(ResizeBilinear, ConstantImageStaysConstant) {
  const RawImage img(2, 2, 7.0F);
  const RawImage out = resize_bilinear(img, 4, 4);
  ASSERT_EQ(out.height(), 4u);
  ASSERT_EQ(out.width(), 4u);
  for (float v : out.pixels()) EXPECT_EQ(v, 7.0F);
}

TEST(ResizeBilinear, SameSizeIsIdentity) {
  std::mt19937_64 rng(1);
  const RawImage img = random_image(13, 9, rng, false);
  EXPECT_EQ(resize_bilinear(img, 13, 9), img);
}

TEST(ResizeBilinear, RowUpsamplingMatchesFrozenOracleValues) {
  // Reference values from the half-pixel oracle: source x = (i + 0.5) / 2 - 0.5
  // clamped, giving 0, 25, 75, 100.
  const RawImage img(1, 2, std::vector<float>{0, 0, 0, 100, 100, 100});
  const RawImage out = resize_bilinear(img, 1, 4);
  const float expected[] = {0.0F, 25.0F, 75.0F, 100.0F};
  for (std::size_t x = 0; x < 4; ++x) {
    EXPECT_FLOAT_EQ(out.at(0, x, 0), expected[x]);
    EXPECT_FLOAT_EQ(out.at(0, x, 0), float(oracle_resize_at(img, 1, 4, 0, x, 0)));
    if (x > 0) EXPECT_GE(out.at(0, x, 0), out.at(0, x - 1, 0));
  }
}

TEST(ResizeBilinear, MatchesScalarOracleAndStaysInRange) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t h = 1 + rng() % 20, w = 1 + rng() % 20;
    const std::size_t oh = 1 + rng() % 30, ow = 1 + rng() % 30;
    const RawImage img = random_image(h, w, rng, false);
    const RawImage out = resize_bilinear(img, oh, ow);
    const auto [lo, hi] = std::minmax_element(img.pixels().begin(), img.pixels().end());
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        for (std::size_t c = 0; c < 3; ++c) {
          EXPECT_NEAR(out.at(y, x, c), oracle_resize_at(img, oh, ow, y, x, c), 1e-3);
          EXPECT_GE(out.at(y, x, c), *lo);
          EXPECT_LE(out.at(y, x, c), *hi);
        }
      }
    }
  }
}

TEST(ResizeBilinear, RejectsEmptyInputAndZeroSize) {
  EXPECT_THROW(resize_bilinear(RawImage{}, 4, 4), InvalidInput);
  EXPECT_THROW(resize_bilinear(RawImage(2, 2), 0, 4), InvalidInput);
}

TEST(MinMaxNormalize, ThreeLevels) {
  const RawImage img(1, 1, std::vector<float>{10, 110, 210});
  const TensorImage t = minmax_normalize(img);
  EXPECT_EQ(t.stage(), TensorStage::kMinMax);
  EXPECT_FLOAT_EQ(t.at(0, 0, 0), 0.0F);
  EXPECT_FLOAT_EQ(t.at(1, 0, 0), 0.5F);
  EXPECT_FLOAT_EQ(t.at(2, 0, 0), 1.0F);
}

TEST(MinMaxNormalize, ConstantImageGivesZeros) {
  const TensorImage t = minmax_normalize(RawImage(5, 3, 42.0F));
  for (float v : t.values()) EXPECT_EQ(v, 0.0F);
}

TEST(MinMaxNormalize, RandomImageMatchesPerPixelOracle) {
  std::mt19937_64 rng(3);
  const RawImage img = random_image(8, 8, rng);
  const TensorImage t = minmax_normalize(img);
  EXPECT_EQ(*std::min_element(t.values().begin(), t.values().end()), 0.0F);
  EXPECT_EQ(*std::max_element(t.values().begin(), t.values().end()), 1.0F);
  for (std::size_t y = 0; y < 8; ++y) {
    for (std::size_t x = 0; x < 8; ++x) {
      for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(t.at(c, y, x), oracle_minmax_at(img, y, x, c), 1e-6);
    }
  }
  // Ordering of pixel values is preserved.
  for (std::size_t i = 0; i + 1 < 64; ++i) {
    const auto a = img.at(i / 8, i % 8, 0), b = img.at((i + 1) / 8, (i + 1) % 8, 0);
    const auto ta = t.at(0, i / 8, i % 8), tb = t.at(0, (i + 1) / 8, (i + 1) % 8);
    if (a < b) EXPECT_LE(ta, tb);
    if (a > b) EXPECT_GE(ta, tb);
  }
}

TEST(MinMaxNormalize, IdempotentOnNonConstantInputs) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const TensorImage once = minmax_normalize(random_image(6, 7, rng, false));
    // Re-read the [0, 1] tensor as a raw image (scaled into range) and normalize again.
    RawImage again(6, 7);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < 6; ++y)
        for (std::size_t x = 0; x < 7; ++x) again.at(y, x, c) = once.at(c, y, x);
    const TensorImage twice = minmax_normalize(again);
    for (std::size_t i = 0; i < once.values().size(); ++i) EXPECT_NEAR(once.values()[i], twice.values()[i], 1e-6);
  }
}

TEST(Standardize, IdentityStats) {
  std::mt19937_64 rng(5);
  const TensorImage t = minmax_normalize(random_image(4, 4, rng));
  const ChannelStats identity{{0, 0, 0}, {1, 1, 1}};
  const TensorImage s = standardize(t, identity);
  EXPECT_EQ(s.stage(), TensorStage::kStandardized);
  for (std::size_t i = 0; i < t.values().size(); ++i) EXPECT_EQ(s.values()[i], t.values()[i]);
}

TEST(Standardize, SinglePixel) {
  TensorImage t(1, 1, TensorStage::kMinMax);
  t.at(0, 0, 0) = 0.5F;
  const TensorImage s = standardize(t, ChannelStats{{0.5F, 0, 0}, {0.25F, 1, 1}});
  EXPECT_FLOAT_EQ(s.at(0, 0, 0), 0.0F);
}

TEST(Standardize, DefaultStatsMatchScalarLoop) {
  std::mt19937_64 rng(6);
  const RawImage img = random_image(4, 4, rng);
  const TensorImage s = standardize(minmax_normalize(img), ChannelStats{});
  const double mean[] = {0.485, 0.456, 0.406};
  const double sd[] = {0.229, 0.224, 0.225};
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 4; ++x)
        EXPECT_NEAR(s.at(c, y, x), (oracle_minmax_at(img, y, x, c) - mean[c]) / sd[c], 1e-5);
}

TEST(Standardize, RejectsBadStatsAndWrongStage) {
  const TensorImage t(2, 2, TensorStage::kMinMax);
  EXPECT_THROW(standardize(t, ChannelStats{{0, 0, 0}, {1, 0, 1}}), ConfigError);
  EXPECT_THROW(standardize(t, ChannelStats{{0, 0, 0}, {1, -2, 1}}), ConfigError);
  const TensorImage already = standardize(t, ChannelStats{});
  EXPECT_THROW(standardize(already, ChannelStats{}), InvalidInput);
}

TEST(Standardize, PreservesPerChannelArgmaxAndArgmin) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const TensorImage mm = minmax_normalize(random_image(5, 5, rng, false));
    const TensorImage s = standardize(mm, ChannelStats{});
    for (std::size_t c = 0; c < 3; ++c) {
      const auto a = mm.channel(c), b = s.channel(c);
      EXPECT_EQ(std::max_element(a.begin(), a.end()) - a.begin(), std::max_element(b.begin(), b.end()) - b.begin());
      EXPECT_EQ(std::min_element(a.begin(), a.end()) - a.begin(), std::min_element(b.begin(), b.end()) - b.begin());
    }
  }
}

TEST(TenCrop, ProducesTenCropsOfCropSizeInFixedOrder) {
  std::mt19937_64 rng(8);
  const CropSet set = ten_crop(random_image(256, 256, rng));
  const CropPosition order[] = {CropPosition::kTopLeft, CropPosition::kTopRight, CropPosition::kBottomLeft,
                                CropPosition::kBottomRight, CropPosition::kCenter};
  for (std::size_t i = 0; i < CropSet::kSize; ++i) {
    EXPECT_EQ(set.crops[i].height(), 224u);
    EXPECT_EQ(set.crops[i].width(), 224u);
    EXPECT_EQ(set.tags[i].position, order[i % 5]);
    EXPECT_EQ(set.tags[i].flipped, i >= 5);
  }
}

TEST(TenCrop, SymmetricInputGivesMirrorPairs) {
  std::mt19937_64 rng(9);
  RawImage img = random_image(256, 256, rng);
  for (std::size_t y = 0; y < 256; ++y)
    for (std::size_t x = 0; x < 128; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.at(y, 255 - x, c) = img.at(y, x, c);
  const CropSet set = ten_crop(img);
  for (std::size_t k = 0; k < 5; ++k) {
    // Mirroring a symmetric source changes nothing, so the pair coincides.
    EXPECT_EQ(set.crops[k + 5], set.crops[k]) << "crop " << k;
    auto a = std::vector<float>(set.crops[k].pixels().begin(), set.crops[k].pixels().end());
    auto b = std::vector<float>(set.crops[k + 5].pixels().begin(), set.crops[k + 5].pixels().end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
}

TEST(TenCrop, FlippedCropsMirrorTheOppositeWindow) {
  std::mt19937_64 rng(14);
  const RawImage img = random_image(256, 240, rng);
  const CropSet set = ten_crop(img);
  const std::size_t mirrored[] = {1, 0, 3, 2, 4};  // TL<->TR, BL<->BR, C
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(set.crops[k + 5], flip_horizontal(set.crops[mirrored[k]])) << "crop " << k;
  }
}

TEST(TenCrop, CornerPixelMembershipMatchesBruteForce) {
  RawImage img(256, 256, 0.0F);
  img.at(0, 0, 0) = 255.0F;
  const CropSet set = ten_crop(img);
  std::set<std::pair<CropPosition, bool>> holders;
  for (std::size_t i = 0; i < CropSet::kSize; ++i) {
    const auto& px = set.crops[i].pixels();
    if (std::find(px.begin(), px.end(), 255.0F) != px.end()) holders.insert({set.tags[i].position, set.tags[i].flipped});
  }
  const std::set<std::pair<CropPosition, bool>> expected{{CropPosition::kTopLeft, false},
                                                          {CropPosition::kTopRight, true}};
  EXPECT_EQ(holders, expected);
}

TEST(TenCrop, WindowsLieInsideTheImage) {
  for (std::size_t h : {224u, 225u, 256u, 300u}) {
    for (std::size_t w : {224u, 231u, 256u}) {
      for (const auto& win : five_crop_windows(h, w)) {
        EXPECT_LE(win.top + win.height, h);
        EXPECT_LE(win.left + win.width, w);
      }
    }
  }
  EXPECT_EQ(five_crop_windows(256, 256)[4].top, 16u);
  EXPECT_EQ(five_crop_windows(256, 256)[4].left, 16u);
}

TEST(TenCrop, RejectsImagesSmallerThanCrop) {
  EXPECT_THROW(ten_crop(RawImage(223, 256)), InvalidInput);
  EXPECT_THROW(ten_crop(RawImage(256, 100)), InvalidInput);
}

TEST(TenCrop, Deterministic) {
  std::mt19937_64 rng(10);
  const RawImage img = random_image(256, 256, rng);
  const CropSet a = ten_crop(img), b = ten_crop(img);
  for (std::size_t i = 0; i < CropSet::kSize; ++i) {
    ASSERT_EQ(a.crops[i].pixels().size_bytes(), b.crops[i].pixels().size_bytes());
    EXPECT_EQ(std::memcmp(a.crops[i].pixels().data(), b.crops[i].pixels().data(), a.crops[i].pixels().size_bytes()), 0);
  }
}

TEST(Preprocess, CompositionMatchesScalarOracle) {
  std::mt19937_64 rng(11);
  const ChannelStats stats{};
  for (int trial = 0; trial < 10; ++trial) {
    const RawImage img = random_image(16, 16, rng);
    const RawImage resized = resize_bilinear(img, 24, 20);
    const TensorImage out = standardize(minmax_normalize(resized), stats);

    // Oracle: resample every pixel, then evaluate both normalizations by hand.
    std::vector<double> ref(3 * 24 * 20);
    double lo = 1e9, hi = -1e9;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < 24; ++y)
        for (std::size_t x = 0; x < 20; ++x) {
          const double v = oracle_resize_at(img, 24, 20, y, x, c);
          ref[(c * 24 + y) * 20 + x] = v;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < 24 * 20; ++i) {
        const double expected = ((ref[c * 480 + i] - lo) / (hi - lo) - stats.mean[c]) / stats.std[c];
        EXPECT_NEAR(out.values()[c * 480 + i], expected, 1e-4);
      }
  }
}

TEST(PrepareCrops, TenCropAndCenterOnly) {
  std::mt19937_64 rng(12);
  const RawImage img = random_image(40, 50, rng);
  const PreparedCrops ten = prepare_crops(img, "a.png");
  EXPECT_EQ(ten.size(), 10u);
  EXPECT_EQ(ten.key(), "a.png");
  for (const auto& t : ten.minmax()) {
    EXPECT_EQ(t.height(), 224u);
    EXPECT_EQ(t.stage(), TensorStage::kMinMax);
  }
  const PreparedCrops center = prepare_crops(img, "a.png", CropMode::kCenterOnly);
  ASSERT_EQ(center.size(), 1u);
  EXPECT_EQ(center.tags()[0].position, CropPosition::kCenter);
  EXPECT_EQ(center.minmax()[0], ten.minmax()[4]);
}

TEST(PrepareCrops, StandardizedCacheReturnsSameBytesPerStats) {
  std::mt19937_64 rng(13);
  const PreparedCrops crops = prepare_crops(random_image(30, 30, rng), "x");
  const auto& a = crops.standardized(ChannelStats{});
  const auto& b = crops.standardized(ChannelStats{});
  EXPECT_EQ(&a, &b);
  const ChannelStats other{{0.5F, 0.5F, 0.5F}, {0.5F, 0.5F, 0.5F}};
  const auto& c = crops.standardized(other);
  EXPECT_NE(&a, &c);
  EXPECT_EQ(c[0], standardize(crops.minmax()[0], other));
}

TEST(ImageIo, PngRoundTripAndChannelOrder) {
  TempDir dir("io");
  RawImage img(3, 2, 0.0F);
  img.at(0, 0, 0) = 255.0F;  // red
  img.at(1, 1, 2) = 200.0F;  // blue
  write_png(dir / "a.png", img);
  EXPECT_EQ(read_image(dir / "a.png"), img);
  // OpenCV stores BGR: the red pixel must land in the third channel on disk.
  const cv::Mat raw = cv::imread((dir / "a.png").string(), cv::IMREAD_UNCHANGED);
  EXPECT_EQ(raw.at<cv::Vec3b>(0, 0)[2], 255);
}

TEST(ImageIo, GrayscaleIsReplicatedAndSixteenBitRejected) {
  TempDir dir("io16");
  cv::Mat gray(2, 2, CV_8UC1, cv::Scalar(77));
  cv::imwrite((dir / "g.png").string(), gray);
  const RawImage g = read_image(dir / "g.png");
  for (float v : g.pixels()) EXPECT_EQ(v, 77.0F);

  cv::Mat deep(2, 2, CV_16UC3, cv::Scalar(1000, 2000, 3000));
  cv::imwrite((dir / "d.png").string(), deep);
  EXPECT_THROW(read_image(dir / "d.png"), InvalidInput);
  EXPECT_THROW(read_image(dir / "missing.png"), InvalidInput);
  retigrade::testing::write_file(dir / "junk.jpg", "not an image");
  EXPECT_THROW(read_image(dir / "junk.jpg"), InvalidInput);
}
