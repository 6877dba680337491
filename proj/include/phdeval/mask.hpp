#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace phdeval {

struct Shape {
  int width = 0;
  int height = 0;

  std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(Shape s);

/// Row-major binary raster; 1 marks a foreground (membrane) pixel.
class BinaryMask {
 public:
  /// All-background mask. Throws ZeroDimension unless both sides are >= 1.
  explicit BinaryMask(Shape shape);
  /// Takes ownership of bits; values other than 0 are normalised to 1.
  BinaryMask(Shape shape, std::vector<std::uint8_t> bits);

  Shape shape() const { return shape_; }
  int width() const { return shape_.width; }
  int height() const { return shape_.height; }
  std::size_t size() const { return bits_.size(); }

  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v) { bits_[index(x, y)] = v ? 1 : 0; }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(shape_.width) + static_cast<std::size_t>(x);
  }

  std::span<const std::uint8_t> bits() const { return bits_; }
  std::size_t count() const;
  bool empty_foreground() const { return count() == 0; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  Shape shape_;
  std::vector<std::uint8_t> bits_;
};

enum class Polarity { LightIsForeground, DarkIsForeground };

struct BinarizationPolicy {
  int threshold = 128;
  Polarity polarity = Polarity::DarkIsForeground;

  /// Policy that reads back what write_mask produces.
  static BinarizationPolicy canonical() { return {128, Polarity::LightIsForeground}; }
  bool is_foreground(std::uint8_t gray) const {
    return polarity == Polarity::LightIsForeground ? gray >= threshold : gray < threshold;
  }
};

/// Integer luma: round((299 R + 587 G + 114 B) / 1000).
constexpr std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

/// Binarizes a single-channel 8-bit raster. Throws ZeroDimension, or
/// std::invalid_argument when the threshold is outside [0,255] or the buffer
/// size disagrees with the shape.
BinaryMask binarize(Shape shape, std::span<const std::uint8_t> gray, const BinarizationPolicy& policy);

void assert_same_shape(const BinaryMask& a, const BinaryMask& b);

BinaryMask load_mask(const std::string& path, const BinarizationPolicy& policy);
void write_mask(const BinaryMask& mask, const std::string& path);

/// Decoded 8-bit grayscale raster (RGB already reduced through luma()).
struct GrayImage {
  Shape shape;
  std::vector<std::uint8_t> pixels;
};

GrayImage read_gray_png(const std::string& path);
std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask);

}  // namespace phdeval
