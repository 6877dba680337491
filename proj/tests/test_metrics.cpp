#include <gtest/gtest.h>

#include <limits>

#include <cmath>
#include <random>

#include "phdeval/errors.hpp"
#include "phdeval/metrics.hpp"
#include "test_support.hpp"

namespace phdeval {
namespace {

// gt: top row of a 4x4 raster; pred: two of those pixels plus one stray pixel.
std::pair<BinaryMask, BinaryMask> four_by_four() {
  BinaryMask gt({4, 4}), pred({4, 4});
  for (int x = 0; x < 4; ++x) gt.set(x, 0, true);
  pred.set(0, 0, true);
  pred.set(1, 0, true);
  pred.set(0, 3, true);
  return {pred, gt};
}

TEST(Confusion, Basics) {
  const auto [pred, gt] = four_by_four();
  EXPECT_EQ(confusion(pred, gt), (ConfusionCounts{2, 1, 2, 11}));
  EXPECT_EQ(confusion(gt, gt), (ConfusionCounts{4, 0, 0, 12}));
  EXPECT_EQ(confusion(BinaryMask({4, 4}), gt), (ConfusionCounts{0, 0, 4, 12}));
  EXPECT_THROW(confusion(BinaryMask({4, 4}), BinaryMask({4, 5})), ShapeMismatch);
}

TEST(PixelScores, EnumeratedCase) {
  const ConfusionCounts c{2, 1, 2, 11};
  EXPECT_DOUBLE_EQ(f1(c), 4.0 / 7.0);
  EXPECT_DOUBLE_EQ(iou(c), 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(dice(c), 4.0 / 7.0);
}

TEST(PixelScores, PerfectAndDisjoint) {
  const ConfusionCounts perfect{10, 0, 0, 6};
  EXPECT_EQ(f1(perfect), 1.0);
  EXPECT_EQ(iou(perfect), 1.0);
  const ConfusionCounts disjoint{0, 3, 4, 9};
  EXPECT_EQ(f1(disjoint), 0.0);
  EXPECT_EQ(iou(disjoint), 0.0);
  EXPECT_EQ(dice(disjoint), 0.0);
}

TEST(PixelScores, BothEmptyIsOne) {
  const ConfusionCounts c{0, 0, 0, 16};
  EXPECT_TRUE(c.degenerate());
  EXPECT_EQ(f1(c), 1.0);
  EXPECT_EQ(iou(c), 1.0);
  EXPECT_EQ(dice(c), 1.0);
}

TEST(PixelScores, Identities) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::uint64_t> d(0, 1000);
  for (int i = 0; i < 2000; ++i) {
    const ConfusionCounts c{d(rng), d(rng), d(rng), d(rng)};
    if (c.degenerate()) continue;
    EXPECT_EQ(f1(c), dice(c));
    EXPECT_LE(iou(c), dice(c));
    const double j = iou(c);
    EXPECT_NEAR(dice(c), 2 * j / (1 + j), 1e-12);
    EXPECT_NEAR(iou(c), dice(c) / (2 - dice(c)), 1e-12);
  }
}

TEST(Tolerance, RejectsNegativeAndNonFinite) {
  EXPECT_THROW(ToleranceDistance(-0.1), std::invalid_argument);
  EXPECT_THROW(ToleranceDistance(std::nan("")), std::invalid_argument);
  EXPECT_THROW(ToleranceDistance(std::numeric_limits<double>::infinity()), std::invalid_argument);
  EXPECT_EQ(ToleranceDistance(2.5).value(), 2.5);
}

TEST(Hausdorff, Fixtures) {
  const Skeleton x({8, 8}, {{0, 0}});
  const Skeleton y({8, 8}, {{3, 4}});
  EXPECT_DOUBLE_EQ(hausdorff(x, y), 5.0);
  EXPECT_DOUBLE_EQ(reference::hausdorff(x, y), 5.0);
  EXPECT_EQ(hausdorff(x, x), 0.0);
}

TEST(Hausdorff, EmptySideIsNamed) {
  const Skeleton some({4, 4}, {{1, 1}});
  const Skeleton none({4, 4});
  try {
    hausdorff(none, some);
    FAIL();
  } catch (const EmptySkeleton& e) {
    EXPECT_EQ(e.side(), EmptySkeleton::Side::X);
  }
  try {
    hausdorff(some, none);
    FAIL();
  } catch (const EmptySkeleton& e) {
    EXPECT_EQ(e.side(), EmptySkeleton::Side::Y);
  }
}

TEST(Phd, SingletonFixture) {
  const Skeleton x({4, 1}, {{0, 0}});
  const Skeleton y({4, 1}, {{3, 0}});
  EXPECT_EQ(phd(x, y, ToleranceDistance(0)), 6.0);
  EXPECT_EQ(phd(x, y, ToleranceDistance(2)), 6.0);
  EXPECT_EQ(phd(x, y, ToleranceDistance(3)), 0.0);
}

TEST(Phd, TwoPointFixture) {
  const Skeleton x({11, 1}, {{0, 0}, {10, 0}});
  const Skeleton y({11, 1}, {{0, 0}});
  EXPECT_EQ(phd(x, y, ToleranceDistance(0)), 5.0);
  EXPECT_EQ(phd(x, y, ToleranceDistance(10)), 0.0);
  EXPECT_EQ(reference::phd(x, y, ToleranceDistance(0)), 5.0);
}

TEST(Phd, EmptySides) {
  const Skeleton some({4, 4}, {{1, 1}});
  const Skeleton none({4, 4});
  EXPECT_THROW(phd(some, none, ToleranceDistance(0)), EmptySkeleton);
  EXPECT_THROW(phd(none, some, ToleranceDistance(0)), EmptySkeleton);
  EXPECT_EQ(phd(none, none, ToleranceDistance(0)), 0.0);
  EXPECT_THROW(phd(some, Skeleton({5, 4}, {{1, 1}}), ToleranceDistance(0)), ShapeMismatch);
}

TEST(Phd, ToyCaseDropsToZeroAtHausdorff) {
  // Two parallel strokes, one shifted by up to two pixels.
  Skeleton a({30, 10}, {}), b({30, 10}, {});
  std::vector<Point> pa, pb;
  for (int x = 2; x < 21; ++x) pa.push_back({x, 4});
  for (int x = 3; x < 21; ++x) pb.push_back({x, x % 3 == 0 ? 6 : 5});
  a = Skeleton({30, 10}, pa);
  b = Skeleton({30, 10}, pb);
  const double hd = hausdorff(a, b);
  EXPECT_GT(phd(a, b, ToleranceDistance(0)), phd(a, b, ToleranceDistance(1)));
  EXPECT_GT(phd(a, b, ToleranceDistance(std::nextafter(hd, 0.0))), 0.0);
  EXPECT_EQ(phd(a, b, ToleranceDistance(hd)), 0.0);
}

TEST(Phd, LawsOnRandomPointSets) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 300; ++i) {
    const Shape shape = testing::random_shape(rng, 4, 40);
    const std::size_t nx = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
    const std::size_t ny = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
    const Skeleton x = testing::random_points(rng, shape, nx);
    const Skeleton y = testing::random_points(rng, shape, ny);
    const PhdProfile pxy(x, y), pyx(y, x);
    const double hd = pxy.hausdorff();
    EXPECT_EQ(hd, reference::hausdorff(x, y));
    EXPECT_EQ(PhdProfile(x, x).phd(ToleranceDistance(0)), 0.0);
    EXPECT_LE(pxy.phd(ToleranceDistance(0)), 2 * hd + 1e-12);
    double prev = INFINITY;
    for (double t : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0, 13.0, 60.0}) {
      const double v = pxy.phd(ToleranceDistance(t));
      EXPECT_EQ(v, pyx.phd(ToleranceDistance(t)));
      EXPECT_LE(v, prev);
      EXPECT_EQ(v == 0.0, t >= hd) << "t=" << t << " hd=" << hd;
      EXPECT_NEAR(v, reference::phd(x, y, ToleranceDistance(t)), 1e-9);
      prev = v;
    }
  }
}

TEST(Hausdorff, TriangleInequality) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 300; ++i) {
    const Shape shape = testing::random_shape(rng, 4, 30);
    const Skeleton a = testing::random_points(rng, shape, 1 + rng() % 20);
    const Skeleton b = testing::random_points(rng, shape, 1 + rng() % 20);
    const Skeleton c = testing::random_points(rng, shape, 1 + rng() % 20);
    EXPECT_LE(hausdorff(a, c), hausdorff(a, b) + hausdorff(b, c) + 1e-12);
  }
}

TEST(MetricParsing, Tokens) {
  EXPECT_EQ(parse_metric("f1").name, "F1");
  EXPECT_EQ(parse_metric("IoU").name, "IoU");
  EXPECT_EQ(parse_metric("dice-sk").name, "Dice-SK");
  EXPECT_EQ(parse_metric("dice-sk").preprocess, Preprocess::SkeletonizeBoth);
  const MetricDescriptor p = parse_metric("phd:2.5");
  EXPECT_EQ(p.name, "PHD-2.5");
  EXPECT_EQ(p.orientation, Orientation::LowerIsBetter);
  ASSERT_TRUE(p.tolerance.has_value());
  EXPECT_EQ(p.tolerance->value(), 2.5);
  EXPECT_FALSE(parse_metric("f1").tolerance.has_value());
  EXPECT_THROW(parse_metric("phd:"), std::invalid_argument);
  EXPECT_THROW(parse_metric("phd:-1"), std::invalid_argument);
  EXPECT_THROW(parse_metric("rand"), std::invalid_argument);

  const auto list = parse_metric_list("f1,iou,phd:3", true);
  ASSERT_EQ(list.size(), 5u);
  EXPECT_EQ(list[3].name, "F1-SK");
  EXPECT_EQ(list[4].name, "IoU-SK");
  EXPECT_THROW(parse_metric_list("f1,f1"), std::invalid_argument);
}

TEST(EvaluatePair, IdenticalMasks) {
  BinaryMask m({40, 40});
  testing::draw_ring(m, 20, 20, 8, 11);
  const auto metrics = parse_metric_list("f1,iou,dice,phd:0,phd:1,phd:3,phd:5,hd", true);
  const MetricReport r = evaluate_pair(m, m, metrics);
  ASSERT_TRUE(r.all_ok());
  for (const auto& e : r.entries) {
    const double want = e.descriptor.orientation == Orientation::HigherIsBetter ? 1.0 : 0.0;
    EXPECT_EQ(*e.value, want) << e.descriptor.name;
  }
}

TEST(EvaluatePair, EnumeratedCase) {
  const auto [pred, gt] = four_by_four();
  const MetricReport r = evaluate_pair(pred, gt, {make_f1(), make_iou()});
  EXPECT_DOUBLE_EQ(*r.find("F1")->value, 4.0 / 7.0);
  EXPECT_DOUBLE_EQ(*r.find("IoU")->value, 2.0 / 5.0);
}

TEST(EvaluatePair, PhdNonIncreasingInTolerance) {
  std::mt19937_64 rng(51);
  const auto metrics = parse_metric_list("phd:0,phd:1,phd:3,phd:5");
  for (int i = 0; i < 30; ++i) {
    const Shape shape = testing::random_shape(rng, 8, 48);
    const BinaryMask a = testing::random_nonempty_mask(rng, shape, 0.2);
    const BinaryMask b = testing::random_nonempty_mask(rng, shape, 0.2);
    const MetricReport r = evaluate_pair(a, b, metrics);
    if (!r.all_ok()) continue;  // a mask may thin away entirely
    for (std::size_t k = 1; k < r.entries.size(); ++k) EXPECT_LE(*r.entries[k].value, *r.entries[k - 1].value);
  }
}

TEST(EvaluatePair, SkeletonizedVariantsUseThinnedMasks) {
  BinaryMask gt({30, 12}), pred({30, 12});
  testing::fill_rect(gt, 3, 3, 24, 5);
  testing::fill_rect(pred, 3, 4, 24, 3);
  const MetricReport r = evaluate_pair(pred, gt, {make_f1(), make_f1(true)});
  const ConfusionCounts thinned = confusion(skeleton_to_mask(thin(pred)), skeleton_to_mask(thin(gt)));
  EXPECT_DOUBLE_EQ(*r.find("F1-SK")->value, f1(thinned));
  EXPECT_DOUBLE_EQ(*r.find("F1")->value, f1(confusion(pred, gt)));
}

TEST(EvaluatePair, FailuresArePerMetric) {
  BinaryMask gt({20, 20});
  testing::fill_rect(gt, 2, 9, 16, 3);
  const BinaryMask empty({20, 20});
  const MetricReport r = evaluate_pair(empty, gt, parse_metric_list("f1,phd:0,hd"));
  EXPECT_TRUE(r.find("F1")->ok());
  EXPECT_EQ(*r.find("F1")->value, 0.0);
  EXPECT_FALSE(r.find("PHD-0")->ok());
  EXPECT_NE(r.find("PHD-0")->error.find("empty"), std::string::npos);
  EXPECT_FALSE(r.find("HD")->ok());

  const MetricReport both = evaluate_pair(empty, empty, parse_metric_list("f1,phd:0"));
  EXPECT_EQ(*both.find("F1")->value, 1.0);
  EXPECT_FALSE(both.find("F1")->warning.empty());
  EXPECT_EQ(*both.find("PHD-0")->value, 0.0);
  EXPECT_FALSE(both.find("PHD-0")->warning.empty());

  EXPECT_THROW(evaluate_pair(BinaryMask({3, 3}), BinaryMask({3, 4}), {make_f1()}), ShapeMismatch);
}

}  // namespace
}  // namespace phdeval
