#include "phdeval/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "phdeval/distance_field.hpp"
#include "phdeval/errors.hpp"

namespace phdeval {

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  assert_same_shape(pred, gt);
  auto p = pred.bits();
  auto g = gt.bits();
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(p.size());
  std::uint64_t tp = 0, fp = 0, fn = 0;
#pragma omp parallel for schedule(static) reduction(+ : tp, fp, fn)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const unsigned a = p[static_cast<std::size_t>(i)], b = g[static_cast<std::size_t>(i)];
    tp += a & b;
    fp += a & (b ^ 1u);
    fn += (a ^ 1u) & b;
  }
  return {tp, fp, fn, static_cast<std::uint64_t>(n) - tp - fp - fn};
}

double f1(const ConfusionCounts& c) {
  if (c.degenerate()) return 1.0;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
}

double iou(const ConfusionCounts& c) {
  if (c.degenerate()) return 1.0;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp + c.fn);
}

double dice(const ConfusionCounts& c) {
  if (c.degenerate()) return 1.0;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
}

ToleranceDistance::ToleranceDistance(double t) : t_(t) {
  if (!std::isfinite(t) || t < 0.0) {
    throw std::invalid_argument("tolerance must be a finite non-negative distance");
  }
}

namespace {

void require_nonempty(const Skeleton& x, const Skeleton& y) {
  if (x.empty()) throw EmptySkeleton(EmptySkeleton::Side::X, "first point set (prediction) is empty");
  if (y.empty()) throw EmptySkeleton(EmptySkeleton::Side::Y, "second point set (ground truth) is empty");
}

std::vector<double> directed(const Skeleton& from, const Skeleton& to) {
  return sample_min_distances(exact_edt(skeleton_to_mask(to)), from);
}

}  // namespace

PhdProfile::PhdProfile(const Skeleton& x, const Skeleton& y) {
  if (x.shape() != y.shape()) {
    throw ShapeMismatch("shape mismatch: " + to_string(x.shape()) + " vs " + to_string(y.shape()));
  }
  if (x.empty() && y.empty()) return;
  require_nonempty(x, y);
  x_to_y_ = directed(x, y);
  y_to_x_ = directed(y, x);
  xy_ = make_directed(x_to_y_);
  yx_ = make_directed(y_to_x_);
}

PhdProfile::Directed PhdProfile::make_directed(std::vector<double> d) {
  Directed out;
  std::sort(d.begin(), d.end());
  out.tail_sum.assign(d.size() + 1, 0.0);
  for (std::size_t i = d.size(); i-- > 0;) out.tail_sum[i] = out.tail_sum[i + 1] + d[i];
  out.sorted = std::move(d);
  return out;
}

double PhdProfile::mean_above(const Directed& d, double t) {
  const auto first = std::upper_bound(d.sorted.begin(), d.sorted.end(), t);
  const auto idx = static_cast<std::size_t>(first - d.sorted.begin());
  return d.tail_sum[idx] / static_cast<double>(d.sorted.size());
}

double PhdProfile::phd(ToleranceDistance tol) const {
  if (both_empty()) return 0.0;
  return mean_above(xy_, tol.value()) + mean_above(yx_, tol.value());
}

double PhdProfile::hausdorff() const {
  if (both_empty()) throw EmptySkeleton(EmptySkeleton::Side::X, "Hausdorff distance of two empty point sets");
  return std::max(xy_.sorted.back(), yx_.sorted.back());
}

double hausdorff(const Skeleton& x, const Skeleton& y) {
  require_nonempty(x, y);
  return PhdProfile(x, y).hausdorff();
}

double phd(const Skeleton& x, const Skeleton& y, ToleranceDistance tol) { return PhdProfile(x, y).phd(tol); }

namespace reference {

namespace {
double dist(Point a, Point b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

double directed_max(const Skeleton& from, const Skeleton& to) {
  double worst = 0.0;
  for (const Point& p : from.points()) {
    double best = std::numeric_limits<double>::infinity();
    for (const Point& q : to.points()) best = std::min(best, dist(p, q));
    worst = std::max(worst, best);
  }
  return worst;
}

double directed_mean(const Skeleton& from, const Skeleton& to, double t) {
  double sum = 0.0;
  for (const Point& p : from.points()) {
    double best = std::numeric_limits<double>::infinity();
    for (const Point& q : to.points()) {
      const double d = dist(p, q);
      best = std::min(best, d > t ? d : 0.0);
    }
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}
}  // namespace

double hausdorff(const Skeleton& x, const Skeleton& y) {
  require_nonempty(x, y);
  return std::max(directed_max(x, y), directed_max(y, x));
}

double phd(const Skeleton& x, const Skeleton& y, ToleranceDistance tol) {
  if (x.empty() && y.empty()) return 0.0;
  require_nonempty(x, y);
  return directed_mean(x, y, tol.value()) + directed_mean(y, x, tol.value());
}

}  // namespace reference

std::string format_tolerance(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

namespace {
MetricDescriptor pixel_metric(std::string name, MetricKind kind, bool sk) {
  MetricDescriptor d;
  d.name = sk ? name + "-SK" : name;
  d.kind = kind;
  d.orientation = Orientation::HigherIsBetter;
  d.preprocess = sk ? Preprocess::SkeletonizeBoth : Preprocess::None;
  return d;
}
}  // namespace

MetricDescriptor make_f1(bool sk) { return pixel_metric("F1", MetricKind::F1, sk); }
MetricDescriptor make_iou(bool sk) { return pixel_metric("IoU", MetricKind::IoU, sk); }
MetricDescriptor make_dice(bool sk) { return pixel_metric("Dice", MetricKind::Dice, sk); }

MetricDescriptor make_hausdorff() {
  MetricDescriptor d;
  d.name = "HD";
  d.kind = MetricKind::Hausdorff;
  d.orientation = Orientation::LowerIsBetter;
  d.preprocess = Preprocess::SkeletonizeBoth;
  return d;
}

MetricDescriptor make_phd(double t) {
  MetricDescriptor d;
  d.tolerance = ToleranceDistance(t);
  d.name = "PHD-" + format_tolerance(t);
  d.kind = MetricKind::Phd;
  d.orientation = Orientation::LowerIsBetter;
  d.preprocess = Preprocess::SkeletonizeBoth;
  return d;
}

MetricDescriptor parse_metric(std::string_view token) {
  std::string t(token);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "f1") return make_f1();
  if (t == "iou") return make_iou();
  if (t == "dice") return make_dice();
  if (t == "f1-sk") return make_f1(true);
  if (t == "iou-sk") return make_iou(true);
  if (t == "dice-sk") return make_dice(true);
  if (t == "hd" || t == "hausdorff") return make_hausdorff();
  if (t.starts_with("phd:") || t.starts_with("phd-")) {
    const std::string num = t.substr(4);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
    if (num.empty() || ec != std::errc() || ptr != num.data() + num.size()) {
      throw std::invalid_argument("bad PHD tolerance in metric '" + std::string(token) + "'");
    }
    return make_phd(v);
  }
  throw std::invalid_argument("unknown metric '" + std::string(token) + "'");
}

std::vector<MetricDescriptor> parse_metric_list(std::string_view list, bool add_sk) {
  std::vector<MetricDescriptor> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = std::min(list.find(',', pos), list.size());
    const std::string_view tok = list.substr(pos, comma - pos);
    if (!tok.empty()) out.push_back(parse_metric(tok));
    pos = comma + 1;
  }
  if (add_sk) {
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (out[i].preprocess != Preprocess::None) continue;
      MetricDescriptor sk = pixel_metric(out[i].name, out[i].kind, true);
      if (std::find(out.begin(), out.end(), sk) == out.end()) out.push_back(sk);
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (out[i].name == out[j].name) throw std::invalid_argument("metric listed twice: " + out[i].name);
    }
  }
  if (out.empty()) throw std::invalid_argument("empty metric list");
  return out;
}

bool MetricReport::all_ok() const {
  return std::all_of(entries.begin(), entries.end(), [](const MetricEntry& e) { return e.ok(); });
}

const MetricEntry* MetricReport::find(std::string_view name) const {
  for (const auto& e : entries)
    if (e.descriptor.name == name) return &e;
  return nullptr;
}

MetricReport evaluate_pair(const BinaryMask& pred, const BinaryMask& gt, const std::vector<MetricDescriptor>& metrics) {
  assert_same_shape(pred, gt);

  std::optional<ConfusionCounts> plain;
  std::optional<ConfusionCounts> thinned;
  std::optional<Skeleton> pred_sk, gt_sk;
  std::optional<PhdProfile> profile;
  std::string profile_error;
  bool profile_tried = false;

  auto skeletons = [&] {
    if (!pred_sk) {
      pred_sk = thin(pred);
      gt_sk = thin(gt);
    }
  };
  auto get_profile = [&]() -> const PhdProfile* {
    if (!profile_tried) {
      profile_tried = true;
      skeletons();
      try {
        profile.emplace(*pred_sk, *gt_sk);
      } catch (const EmptySkeleton& e) {
        profile_error = e.what();
      }
    }
    return profile ? &*profile : nullptr;
  };

  MetricReport report;
  for (const MetricDescriptor& d : metrics) {
    MetricEntry entry{d, std::nullopt, {}, {}};
    switch (d.kind) {
      case MetricKind::F1:
      case MetricKind::IoU:
      case MetricKind::Dice: {
        const ConfusionCounts* c = nullptr;
        if (d.preprocess == Preprocess::SkeletonizeBoth) {
          if (!thinned) {
            skeletons();
            thinned = confusion(skeleton_to_mask(*pred_sk), skeleton_to_mask(*gt_sk));
          }
          c = &*thinned;
        } else {
          if (!plain) plain = confusion(pred, gt);
          c = &*plain;
        }
        entry.value = d.kind == MetricKind::F1 ? f1(*c) : d.kind == MetricKind::IoU ? iou(*c) : dice(*c);
        if (c->degenerate()) entry.warning = "both masks empty; score defined as 1";
        break;
      }
      case MetricKind::Hausdorff:
      case MetricKind::Phd: {
        const PhdProfile* p = get_profile();
        if (!p) {
          entry.error = profile_error;
        } else if (p->both_empty()) {
          if (d.kind == MetricKind::Phd) {
            entry.value = 0.0;
            entry.warning = "both skeletons empty; PHD defined as 0";
          } else {
            entry.error = "both skeletons empty; Hausdorff distance undefined";
          }
        } else {
          entry.value = d.kind == MetricKind::Phd ? p->phd(*d.tolerance) : p->hausdorff();
        }
        break;
      }
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace phdeval
