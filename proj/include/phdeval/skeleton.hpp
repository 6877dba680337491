#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "phdeval/mask.hpp"

namespace phdeval {

struct Point {
  int x = 0;  // column
  int y = 0;  // row

  friend bool operator==(const Point&, const Point&) = default;
  /// Row-major order.
  friend auto operator<=>(const Point& a, const Point& b) {
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }
};

/// Set of pixel coordinates inside a raster of the given shape. Points are
/// kept sorted in row-major order and free of duplicates.
class Skeleton {
 public:
  explicit Skeleton(Shape shape) : shape_(shape) {}
  /// Sorts and deduplicates; throws OutOfBounds for points outside the shape.
  Skeleton(Shape shape, std::vector<Point> points);

  Shape shape() const { return shape_; }
  std::span<const Point> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  friend bool operator==(const Skeleton&, const Skeleton&) = default;

 private:
  friend Skeleton skeleton_from_mask(const BinaryMask& mask);
  struct Trusted {};
  Skeleton(Shape shape, std::vector<Point> points, Trusted) : shape_(shape), points_(std::move(points)) {}

  Shape shape_;
  std::vector<Point> points_;
};

/// Foreground pixels of a mask as a point set (no thinning).
Skeleton skeleton_from_mask(const BinaryMask& mask);
BinaryMask skeleton_to_mask(const Skeleton& s);

/// Zhang-Suen thinning run to its fixed point. Two sub-iterations per pass,
/// each deleting all flagged pixels simultaneously; pixels outside the image
/// count as background. Parallel over candidate pixels, output independent of
/// the thread count.
Skeleton thin(const BinaryMask& mask);

namespace reference {
/// Direct per-pixel simulation of the Zhang-Suen rule set over the whole
/// raster, single-threaded. Kept as the oracle for thin().
Skeleton thin(const BinaryMask& mask);
}  // namespace reference

/// Number of 8-connected foreground components.
std::size_t count_components8(const BinaryMask& mask);

}  // namespace phdeval
