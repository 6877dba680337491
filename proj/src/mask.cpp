#include "phdeval/mask.hpp"

#include <algorithm>
#include <stdexcept>

#include "phdeval/errors.hpp"

namespace phdeval {

std::string to_string(Shape s) { return std::to_string(s.width) + "x" + std::to_string(s.height); }

namespace {
void check_dimensions(Shape shape) {
  if (shape.width < 1 || shape.height < 1) {
    throw ZeroDimension("mask dimensions must be positive, got " + to_string(shape));
  }
}
}  // namespace

BinaryMask::BinaryMask(Shape shape) : shape_(shape) {
  check_dimensions(shape);
  bits_.assign(shape.size(), 0);
}

BinaryMask::BinaryMask(Shape shape, std::vector<std::uint8_t> bits) : shape_(shape), bits_(std::move(bits)) {
  check_dimensions(shape);
  if (bits_.size() != shape.size()) {
    throw std::invalid_argument("mask buffer holds " + std::to_string(bits_.size()) + " pixels, shape " +
                                to_string(shape) + " needs " + std::to_string(shape.size()));
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BinaryMask binarize(Shape shape, std::span<const std::uint8_t> gray, const BinarizationPolicy& policy) {
  if (policy.threshold < 0 || policy.threshold > 255) {
    throw std::invalid_argument("threshold must lie in [0,255], got " + std::to_string(policy.threshold));
  }
  check_dimensions(shape);
  if (gray.size() != shape.size()) {
    throw std::invalid_argument("gray buffer size does not match shape " + to_string(shape));
  }
  std::vector<std::uint8_t> bits(gray.size());
  std::transform(gray.begin(), gray.end(), bits.begin(),
                 [&](std::uint8_t g) { return static_cast<std::uint8_t>(policy.is_foreground(g)); });
  return BinaryMask(shape, std::move(bits));
}

void assert_same_shape(const BinaryMask& a, const BinaryMask& b) {
  if (a.shape() != b.shape()) {
    throw ShapeMismatch("shape mismatch: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

}  // namespace phdeval
