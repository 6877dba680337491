#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phdeval/mask.hpp"
#include "phdeval/skeleton.hpp"

namespace phdeval {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  /// Both masks empty: the pixel scores fall back to 1.0.
  bool degenerate() const { return tp + fp + fn == 0; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Throws ShapeMismatch.
ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

double f1(const ConfusionCounts& c);
double iou(const ConfusionCounts& c);
double dice(const ConfusionCounts& c);

/// Pixel radius within which offsets are ignored by PHD. Non-negative, finite.
class ToleranceDistance {
 public:
  explicit ToleranceDistance(double t);
  double value() const { return t_; }
  friend bool operator==(const ToleranceDistance&, const ToleranceDistance&) = default;

 private:
  double t_;
};

/// Nearest-neighbour distances between two point sets in both directions,
/// computed from distance fields and sorted ascending. Answers PHD at any
/// tolerance in O(log n), so a tolerance sweep costs one field per direction.
class PhdProfile {
 public:
  /// Throws EmptySkeleton when exactly one side is empty and ShapeMismatch
  /// when the rasters differ. Two empty sides give a profile whose PHD is 0.
  PhdProfile(const Skeleton& x, const Skeleton& y);

  bool both_empty() const { return x_to_y_.empty() && y_to_x_.empty(); }
  double phd(ToleranceDistance tol) const;
  /// Throws EmptySkeleton when both sides are empty.
  double hausdorff() const;

  const std::vector<double>& x_to_y() const { return x_to_y_; }
  const std::vector<double>& y_to_x() const { return y_to_x_; }

 private:
  struct Directed {
    std::vector<double> sorted;
    std::vector<double> tail_sum;  // tail_sum[i] = sum of sorted[i..]
  };
  static Directed make_directed(std::vector<double> d);
  static double mean_above(const Directed& d, double t);

  std::vector<double> x_to_y_;
  std::vector<double> y_to_x_;
  Directed xy_, yx_;
};

/// Classical Hausdorff distance. Throws EmptySkeleton naming the empty side.
double hausdorff(const Skeleton& x, const Skeleton& y);

/// Perceptual Hausdorff distance: sum of the two directed mean nearest
/// distances, each distance zeroed when it is <= t. Throws EmptySkeleton when
/// one side is empty; both empty yields 0.
double phd(const Skeleton& x, const Skeleton& y, ToleranceDistance tol);

namespace reference {
/// O(|X||Y|) pairwise loops, single-threaded, for checking the field route.
double hausdorff(const Skeleton& x, const Skeleton& y);
/// Thresholds every pair distance before taking the minimum.
double phd(const Skeleton& x, const Skeleton& y, ToleranceDistance tol);
}  // namespace reference

enum class Orientation { HigherIsBetter, LowerIsBetter };
enum class Preprocess { None, SkeletonizeBoth };
enum class MetricKind { F1, IoU, Dice, Hausdorff, Phd };

struct MetricDescriptor {
  std::string name;
  MetricKind kind = MetricKind::F1;
  Orientation orientation = Orientation::HigherIsBetter;
  Preprocess preprocess = Preprocess::None;
  std::optional<ToleranceDistance> tolerance;

  friend bool operator==(const MetricDescriptor&, const MetricDescriptor&) = default;
};

MetricDescriptor make_f1(bool skeletonized = false);
MetricDescriptor make_iou(bool skeletonized = false);
MetricDescriptor make_dice(bool skeletonized = false);
MetricDescriptor make_hausdorff();
MetricDescriptor make_phd(double t);

/// Parses one token: f1, iou, dice, f1-sk, iou-sk, dice-sk, hd, phd:<t>.
/// Throws std::invalid_argument.
MetricDescriptor parse_metric(std::string_view token);
/// Comma-separated list; with add_sk every pixel metric also gets its -SK
/// variant (after the plain ones).
std::vector<MetricDescriptor> parse_metric_list(std::string_view list, bool add_sk = false);

std::string format_tolerance(double t);

struct MetricEntry {
  MetricDescriptor descriptor;
  std::optional<double> value;  // empty when the metric failed
  std::string error;
  std::string warning;

  bool ok() const { return value.has_value(); }
};

struct MetricReport {
  std::vector<MetricEntry> entries;

  bool all_ok() const;
  const MetricEntry* find(std::string_view name) const;
};

/// Scores one prediction against its ground truth. Each mask is thinned at
/// most once, and all PHD tolerances share one pair of distance fields.
/// Per-metric failures are recorded in the report; ShapeMismatch is thrown.
MetricReport evaluate_pair(const BinaryMask& pred, const BinaryMask& gt, const std::vector<MetricDescriptor>& metrics);

}  // namespace phdeval
