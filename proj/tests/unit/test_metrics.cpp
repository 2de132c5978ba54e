#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mdeval/fixtures.hpp"
#include "mdeval/metrics.hpp"
#include "mdeval/perturb.hpp"

namespace mdeval {
namespace {

// Two identical rows, so means match the single-row hand computation.
DepthMap row(std::vector<double> v) {
  const int w = static_cast<int>(v.size()) < 2 ? 2 : static_cast<int>(v.size());
  v.resize(w, v.back());
  std::vector<double> both(v);
  both.insert(both.end(), v.begin(), v.end());
  return DepthMap::from_values(2, w, both);
}

TEST(Metrics, HandComputedValues) {
  const auto pred = row({1.0, 2.0});
  const auto gt = row({2.0, 2.0});
  EXPECT_DOUBLE_EQ(absrel(pred, gt).value, 0.25);
  EXPECT_DOUBLE_EQ(delta(pred, gt, 1.0).value, 0.5);
  EXPECT_DOUBLE_EQ(rmse(pred, gt).value, std::sqrt(0.5));
  EXPECT_DOUBLE_EQ(rmse_log(pred, gt).value, std::sqrt(std::log(2.0) * std::log(2.0) / 2));
  const double d = std::log(2.0) / 2;
  EXPECT_NEAR(rmse_log_si(pred, gt).value, d, 1e-15);
  EXPECT_EQ(absrel(pred, gt).count, 4u);
}

TEST(Metrics, DeltaThresholdIsStrict) {
  EXPECT_DOUBLE_EQ(delta(row({1.25}), row({1.0}), 1.0).value, 1.0);
  EXPECT_DOUBLE_EQ(delta(row({1.24}), row({1.0}), 1.0).value, 0.0);
  EXPECT_DOUBLE_EQ(delta(row({1.03}), row({1.0}), 0.125).value, 1.0);
  EXPECT_DOUBLE_EQ(delta(row({1.02}), row({1.0}), 0.125).value, 0.0);
}

TEST(Metrics, ScaleInvariantLog) {
  const auto gt = generate_scene(SceneKind::kSphereCap, 16, 16).depth;
  const auto pred = perturb_curvature(gt, 0.3, 1.0, 4);
  auto scaled = pred;
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 16; ++c) scaled.set(r, c, pred(r, c) * 3.0);
  }
  EXPECT_NEAR(rmse_log_si(pred, gt).value, rmse_log_si(scaled, gt).value, 1e-12);
}

TEST(Metrics, NoSharedPixelThrows) {
  EXPECT_THROW(absrel(DepthMap(2, 2), row({1, 1})), InvalidInput);
  EXPECT_THROW(absrel(row({1, 1, 1}), row({1, 1})), InvalidInput);
}

TEST(Wkdr, ZeroOnScaledCopyAndNearExhaustive) {
  const auto gt = generate_scene(SceneKind::kRamp, 12, 12).depth;
  auto scaled = gt;
  for (int r = 0; r < 12; ++r) {
    for (int c = 0; c < 12; ++c) scaled.set(r, c, gt(r, c) * 5.0);
  }
  EXPECT_EQ(wkdr(scaled, gt, 10000, 1.02).value, 0.0);

  // Reversed ramp: compare with the exhaustive disagreement rate over ordered pairs.
  DepthMap pred(12, 12);
  for (int r = 0; r < 12; ++r) {
    for (int c = 0; c < 12; ++c) pred.set(r, c, gt(r, 11 - c));
  }
  auto label = [](double a, double b) { return a / b > 1.02 ? 1 : (a / b < 1 / 1.02 ? -1 : 0); };
  double wrong = 0, total = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = 0; j < gt.size(); ++j) {
      if (i == j) continue;
      ++total;
      wrong += label(pred.at(i), pred.at(j)) != label(gt.at(i), gt.at(j));
    }
  }
  EXPECT_NEAR(wkdr(pred, gt, 100000, 1.02).value, wrong / total, 5e-3);
}

TEST(BoundaryF1, StepCases) {
  const auto gt = generate_scene(SceneKind::kStep, 8, 16).depth;
  const std::vector<double> th{1.05, 1.1, 1.15, 1.2, 1.25};
  EXPECT_EQ(boundary_f1(gt, gt, th)->value, 0.0);
  const auto flat = generate_scene(SceneKind::kFrontoPlane, 8, 16).depth;
  EXPECT_EQ(boundary_f1(flat, gt, th)->value, 1.0);
  EXPECT_FALSE(boundary_f1(gt, flat, th).has_value());
  auto shifted = [&](int by) {
    DepthMap d(8, 16);
    for (int r = 0; r < 8; ++r) {
      for (int c = 0; c < 16; ++c) d.set(r, c, c < 8 + by ? 2.0 : 4.0);
    }
    return d;
  };
  EXPECT_EQ(boundary_f1(shifted(1), gt, th)->value, 0.0);
  EXPECT_EQ(boundary_f1(shifted(3), gt, th)->value, 1.0);
}

TEST(MetricSpec, CatalogRoundTripsAndLabels) {
  const auto cat = metric_catalog();
  EXPECT_EQ(cat.size(), 32u);
  for (const auto& s : cat) {
    const auto text = s.to_string();
    EXPECT_EQ(MetricSpec::parse(text), s) << text;
    EXPECT_FALSE(s.row_label().empty());
  }
  EXPECT_EQ(MetricSpec::parse("absrel@affine_disparity").row_label(), "AbsRel - Disparity Af");
  EXPECT_EQ(MetricSpec::parse("delta@none[t=0.125]").to_string(), "delta@none[t=0.125]");
  const auto f1 = MetricSpec::parse("boundary_f1@none[thresholds=1.05;1.15]");
  EXPECT_EQ(f1.params.f1_thresholds, (std::vector<double>{1.05, 1.15}));
  EXPECT_EQ(MetricSpec::parse("relnormal@none[radius=8,samples=1000,scales=1;2]").to_string(),
            "relnormal@none[radius=8,scales=1;2,samples=1000]");
}

TEST(MetricSpec, RejectsMalformed) {
  EXPECT_EQ(MetricSpec::parse("absrel"), MetricSpec::parse("absrel@none"));
  EXPECT_THROW(MetricSpec::parse("absrel@"), FormatError);
  EXPECT_THROW(MetricSpec::parse("nosuch@none"), FormatError);
  EXPECT_THROW(MetricSpec::parse("absrel@none[t=abc]"), FormatError);
  EXPECT_THROW(MetricSpec::parse("absrel@none[t=1"), FormatError);
  EXPECT_THROW(MetricSpec::parse("delta@none[t=-1]").validate(), InvalidInput);
}

class CatalogOnScene : public ::testing::TestWithParam<SceneKind> {};

TEST_P(CatalogOnScene, PixelErrorsSumToScore) {
  const auto s = generate_scene(GetParam(), 24, 24);
  const auto pred = perturb_curvature(s.depth, 0.2, 1.0, 3);
  for (auto spec : metric_catalog()) {
    spec.params.relnormal.radius = 4;
    spec.params.relnormal.samples = 5000;
    spec.params.wkdr_pairs = 2000;
    const auto ev = evaluate_detailed(spec, pred, s.depth, s.intrinsics);
    if (!ev.score) continue;
    const double sum = std::accumulate(ev.pixel_errors.begin(), ev.pixel_errors.end(), 0.0);
    EXPECT_NEAR(sum, ev.score->value, 1e-9 * std::max(1.0, ev.score->value)) << spec.to_string();
    for (double v : ev.pixel_errors) ASSERT_GE(v, 0.0);
  }
}

INSTANTIATE_TEST_SUITE_P(Scenes, CatalogOnScene, ::testing::ValuesIn(all_scene_kinds()));

TEST(Evaluate, AlignmentModesRemoveTheirAmbiguity) {
  const auto s = generate_scene(SceneKind::kSphereCap, 16, 16);
  const auto scaled = perturb_affine_depth(s.depth, 1.0);
  EXPECT_EQ(evaluate(MetricSpec::parse("absrel@none"), scaled, s.depth, s.intrinsics)->value, 0.0);
  const auto disp = perturb_affine_disparity(s.depth, 2.0);
  EXPECT_GT(evaluate(MetricSpec::parse("absrel@none"), disp, s.depth, s.intrinsics)->value, 1e-3);
  EXPECT_LT(evaluate(MetricSpec::parse("absrel@affine_disparity"), disp, s.depth, s.intrinsics)->value, 1e-9);
}

TEST(Evaluate, PointMetricUsesPredictedIntrinsics) {
  const auto s = generate_scene(SceneKind::kSlantedPlane, 16, 16);
  const auto spec = MetricSpec::parse("absrel_p@none");
  EXPECT_EQ(evaluate(spec, s.depth, s.depth, s.intrinsics)->value, 0.0);
  auto wrong = s.intrinsics;
  wrong.fx *= 1.5;
  wrong.fy *= 1.5;
  EXPECT_GT(evaluate(spec, s.depth, s.depth, s.intrinsics, wrong)->value, 1e-3);
}

}  // namespace
}  // namespace mdeval
