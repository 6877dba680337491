#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "phdeval/errors.hpp"
#include "phdeval/mask.hpp"
#include "png_fixture.hpp"
#include "test_support.hpp"

namespace phdeval {
namespace {

using testing::TempDir;
using testing::write_png;

TEST(MaskIo, SaturatedImagesBinarizeUniformly) {
  TempDir tmp;
  const BinarizationPolicy light{128, Polarity::LightIsForeground};

  write_png(tmp.file("white.png"), 5, 4, std::vector<std::uint8_t>(20, 255));
  const BinaryMask white = load_mask(tmp.file("white.png"), light);
  EXPECT_EQ(white.shape(), (Shape{5, 4}));
  EXPECT_EQ(white.count(), 20u);

  write_png(tmp.file("black.png"), 5, 4, std::vector<std::uint8_t>(20, 0));
  EXPECT_EQ(load_mask(tmp.file("black.png"), light).count(), 0u);
}

TEST(MaskIo, DarkPolarityThreshold) {
  TempDir tmp;
  write_png(tmp.file("two.png"), 2, 1, {10, 200});
  const BinaryMask m = load_mask(tmp.file("two.png"), {128, Polarity::DarkIsForeground});
  EXPECT_TRUE(m.at(0, 0));
  EXPECT_FALSE(m.at(1, 0));
}

TEST(MaskIo, ThresholdBoundaryIsInclusiveForLight) {
  const std::vector<std::uint8_t> gray = {127, 128, 129};
  const BinaryMask light = binarize({3, 1}, gray, {128, Polarity::LightIsForeground});
  const BinaryMask dark = binarize({3, 1}, gray, {128, Polarity::DarkIsForeground});
  EXPECT_EQ(light, BinaryMask({3, 1}, {0, 1, 1}));
  EXPECT_EQ(dark, BinaryMask({3, 1}, {1, 0, 0}));
}

TEST(MaskIo, BinarizationIsTotal) {
  std::vector<std::uint8_t> gray(256);
  for (int i = 0; i < 256; ++i) gray[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  for (int t : {0, 1, 128, 255}) {
    const BinaryMask light = binarize({256, 1}, gray, {t, Polarity::LightIsForeground});
    const BinaryMask dark = binarize({256, 1}, gray, {t, Polarity::DarkIsForeground});
    for (int x = 0; x < 256; ++x) EXPECT_NE(light.at(x, 0), dark.at(x, 0)) << "t=" << t << " gray=" << x;
  }
}

TEST(MaskIo, RgbUsesIntegerLuma) {
  EXPECT_EQ(luma(255, 255, 255), 255);
  EXPECT_EQ(luma(0, 0, 0), 0);
  // (299*255 + 500) / 1000 = 76.745 -> 76
  EXPECT_EQ(luma(255, 0, 0), 76);
  // (587*255 + 500) / 1000 = 150.185 -> 150
  EXPECT_EQ(luma(0, 255, 0), 150);
  // (114*255 + 500) / 1000 = 29.57 -> 29
  EXPECT_EQ(luma(0, 0, 255), 29);
  // (299*10 + 587*20 + 114*30 + 500)/1000 = (2990 + 11740 + 3420 + 500)/1000 = 18.65 -> 18
  EXPECT_EQ(luma(10, 20, 30), 18);

  TempDir tmp;
  // Pure green (luma 150) and pure blue (luma 29) against threshold 128.
  write_png(tmp.file("rgb.png"), 2, 1, {0, 255, 0, 0, 0, 255}, true);
  const BinaryMask m = load_mask(tmp.file("rgb.png"), {128, Polarity::LightIsForeground});
  EXPECT_TRUE(m.at(0, 0));
  EXPECT_FALSE(m.at(1, 0));
}

TEST(MaskIo, WriteProducesCanonicalGray) {
  TempDir tmp;
  BinaryMask one({1, 1});
  one.set(0, 0, true);
  write_mask(one, tmp.file("one.png"));
  int w = 0, h = 0;
  const auto pixels = testing::read_png_gray(tmp.file("one.png"), w, h);
  ASSERT_EQ(w, 1);
  ASSERT_EQ(h, 1);
  EXPECT_EQ(pixels[0], 255);
}

TEST(MaskIo, CheckerboardRoundTrip) {
  TempDir tmp;
  BinaryMask board({3, 3});
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) board.set(x, y, (x + y) % 2 == 0);
  write_mask(board, tmp.file("board.png"));
  const BinaryMask back = load_mask(tmp.file("board.png"), BinarizationPolicy::canonical());
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) EXPECT_EQ(back.at(x, y), board.at(x, y)) << x << "," << y;
}

TEST(MaskIo, RoundTripProperty) {
  TempDir tmp;
  std::mt19937_64 rng(7);
  for (int i = 0; i < 40; ++i) {
    const Shape shape = testing::random_shape(rng, 1, 70);
    const BinaryMask m = testing::random_mask(rng, shape, std::uniform_real_distribution<double>(0, 1)(rng));
    write_mask(m, tmp.file("m.png"));
    ASSERT_EQ(load_mask(tmp.file("m.png"), BinarizationPolicy::canonical()), m) << "case " << i;
  }
}

TEST(MaskIo, Errors) {
  TempDir tmp;
  EXPECT_THROW(load_mask(tmp.file("missing.png"), {}), FileNotFound);

  {
    std::ofstream os(tmp.file("garbage.png"), std::ios::binary);
    os << "this is not a png";
  }
  EXPECT_THROW(load_mask(tmp.file("garbage.png"), {}), DecodeError);

  EXPECT_THROW(BinaryMask({0, 5}), ZeroDimension);
  EXPECT_THROW(BinaryMask({5, 0}), ZeroDimension);
  EXPECT_THROW(binarize({2, 2}, std::vector<std::uint8_t>(4), {300, Polarity::LightIsForeground}),
               std::invalid_argument);
  EXPECT_THROW(write_mask(BinaryMask({2, 2}), tmp.file("no/such/dir/x.png")), IoError);
}

TEST(MaskIo, AssertSameShape) {
  EXPECT_NO_THROW(assert_same_shape(BinaryMask({10, 10}), BinaryMask({10, 10})));
  try {
    assert_same_shape(BinaryMask({10, 10}), BinaryMask({10, 11}));
    FAIL() << "expected ShapeMismatch";
  } catch (const ShapeMismatch& e) {
    EXPECT_NE(std::string(e.what()).find("10x10"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("10x11"), std::string::npos);
  }
  EXPECT_NO_THROW(assert_same_shape(BinaryMask({10000, 10000}), BinaryMask({10000, 10000})));
}

}  // namespace
}  // namespace phdeval
