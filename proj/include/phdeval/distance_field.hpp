#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "phdeval/mask.hpp"
#include "phdeval/skeleton.hpp"

namespace phdeval {

/// Squared Euclidean distance from every pixel to the nearest foreground
/// pixel of a source mask, stored as exact integers in row-major order.
class DistanceField {
 public:
  DistanceField(Shape shape, std::vector<std::uint32_t> dist2) : shape_(shape), dist2_(std::move(dist2)) {}

  Shape shape() const { return shape_; }
  std::uint32_t at(int x, int y) const {
    return dist2_[static_cast<std::size_t>(y) * static_cast<std::size_t>(shape_.width) + static_cast<std::size_t>(x)];
  }
  std::span<const std::uint32_t> dist2() const { return dist2_; }

  friend bool operator==(const DistanceField&, const DistanceField&) = default;

 private:
  Shape shape_;
  std::vector<std::uint32_t> dist2_;
};

/// Separable lower-envelope transform in integer arithmetic: a vertical scan
/// per column, then a lower envelope of parabolas per row. O(width*height),
/// parallel over columns and rows. Throws EmptyMask.
DistanceField exact_edt(const BinaryMask& mask);

/// O(pixels * foreground) enumeration. Throws EmptyMask.
DistanceField brute_force_edt(const BinaryMask& mask);

/// sqrt(dist2) at each point, in the skeleton's iteration order.
/// Throws OutOfBounds when a point lies outside the field or shapes differ.
std::vector<double> sample_min_distances(const DistanceField& field, const Skeleton& points);

}  // namespace phdeval
