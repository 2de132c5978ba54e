#include "mdeval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mdeval/depthcore.hpp"
#include "mdeval/parallel.hpp"

namespace mdeval {

namespace {

void require_same_shape(const DepthMap& a, const DepthMap& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw InvalidInput("prediction and ground truth differ in size");
  }
}

std::vector<std::size_t> shared_indices(const DepthMap& pred, const DepthMap& gt) {
  require_same_shape(pred, gt);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (pred.valid_at(i) && gt.valid_at(i)) idx.push_back(i);
  }
  if (idx.empty()) throw InvalidInput("no shared valid pixel");
  return idx;
}

// Per-pixel terms; the metric is a function of their mean.
using Terms = std::vector<std::pair<std::size_t, double>>;

Terms absrel_terms(const DepthMap& pred, const DepthMap& gt) {
  Terms t;
  for (std::size_t i : shared_indices(pred, gt)) {
    t.emplace_back(i, std::abs(pred.at(i) - gt.at(i)) / gt.at(i));
  }
  return t;
}

Terms absrel_p_terms(const PointMap& pred, const PointMap& gt) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw InvalidInput("point maps differ in size");
  }
  Terms t;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!pred.valid[i] || !gt.valid[i]) continue;
    t.emplace_back(i, (pred.points[i] - gt.points[i]).norm() / gt.points[i].norm());
  }
  if (t.empty()) throw InvalidInput("no shared valid point");
  return t;
}

Terms delta_terms(const DepthMap& pred, const DepthMap& gt, double exponent) {
  const double thr = std::pow(1.25, exponent);
  Terms t;
  for (std::size_t i : shared_indices(pred, gt)) {
    const double r = std::max(pred.at(i) / gt.at(i), gt.at(i) / pred.at(i));
    t.emplace_back(i, r < thr ? 0.0 : 1.0);
  }
  return t;
}

Terms sq_terms(const DepthMap& pred, const DepthMap& gt, bool log_space) {
  Terms t;
  for (std::size_t i : shared_indices(pred, gt)) {
    const double d = log_space ? std::log(pred.at(i)) - std::log(gt.at(i)) : pred.at(i) - gt.at(i);
    t.emplace_back(i, d * d);
  }
  return t;
}

Terms log_diff_terms(const DepthMap& pred, const DepthMap& gt) {
  Terms t;
  for (std::size_t i : shared_indices(pred, gt)) {
    t.emplace_back(i, std::log(pred.at(i)) - std::log(gt.at(i)));
  }
  return t;
}

double mean_of(const Terms& t) {
  KahanSum s;
  for (const auto& [i, v] : t) s.add(v);
  return s.sum / static_cast<double>(t.size());
}

// Mean metric: attribution v_i / n.
MetricScore mean_metric(const Terms& t, std::vector<double>* pixels) {
  const double n = static_cast<double>(t.size());
  if (pixels) {
    for (const auto& [i, v] : t) (*pixels)[i] = v / n;
  }
  return {mean_of(t), t.size()};
}

// Root-mean metric: attribution v_i / (n * score), which sums to score.
MetricScore root_metric(const Terms& t, std::vector<double>* pixels) {
  const double m = mean_of(t);
  const double score = std::sqrt(std::max(0.0, m));
  if (pixels && score > 0.0) {
    const double denom = static_cast<double>(t.size()) * score;
    for (const auto& [i, v] : t) (*pixels)[i] = v / denom;
  }
  return {score, t.size()};
}

MetricScore rmse_log_si_impl(const DepthMap& pred, const DepthMap& gt, std::vector<double>* pixels) {
  Terms d = log_diff_terms(pred, gt);
  const double mu = mean_of(d);
  for (auto& [i, v] : d) v = (v - mu) * (v - mu);
  return root_metric(d, pixels);
}

int ordinal(double a, double b, double tau) {
  const double r = a / b;
  if (r > tau) return 1;
  if (r < 1.0 / tau) return -1;
  return 0;
}

MetricScore wkdr_impl(const DepthMap& pred, const DepthMap& gt, std::uint64_t pairs, double tau,
                      std::vector<double>* pixels) {
  require_same_shape(pred, gt);
  if (pairs < 1) throw InvalidInput("WKDR pair budget must be >= 1");
  const int h = gt.height();
  const int w = gt.width();
  std::vector<std::pair<std::size_t, std::size_t>> wrong;
  std::size_t count = 0;
  SobolSequence seq;
  for (std::uint64_t k = 0; k < pairs; ++k) {
    const auto p = map_global_pair(seq.next(), h, w);
    if (!p) continue;
    const std::size_t i = gt.index(p->i_row, p->i_col);
    const std::size_t j = gt.index(p->j_row, p->j_col);
    if (!gt.valid_at(i) || !gt.valid_at(j) || !pred.valid_at(i) || !pred.valid_at(j)) continue;
    ++count;
    if (ordinal(pred.at(i), pred.at(j), tau) != ordinal(gt.at(i), gt.at(j), tau)) {
      wrong.emplace_back(i, j);
    }
  }
  if (count == 0) throw InvalidInput("WKDR found no valid pixel pair");
  const double n = static_cast<double>(count);
  if (pixels) {
    for (const auto& [i, j] : wrong) {
      (*pixels)[i] += 0.5 / n;
      (*pixels)[j] += 0.5 / n;
    }
  }
  return {static_cast<double>(wrong.size()) / n, count};
}

std::vector<std::uint8_t> dilate(const std::vector<std::uint8_t>& m, int h, int w, int r) {
  if (r <= 0) return m;
  std::vector<std::uint8_t> rows(m.size(), 0), out(m.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m[static_cast<std::size_t>(y) * w + x]) continue;
      for (int dx = std::max(0, x - r); dx <= std::min(w - 1, x + r); ++dx) {
        rows[static_cast<std::size_t>(y) * w + dx] = 1;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!rows[static_cast<std::size_t>(y) * w + x]) continue;
      for (int dy = std::max(0, y - r); dy <= std::min(h - 1, y + r); ++dy) {
        out[static_cast<std::size_t>(dy) * w + x] = 1;
      }
    }
  }
  return out;
}

std::optional<MetricScore> boundary_f1_impl(const DepthMap& pred, const DepthMap& gt,
                                            std::span<const double> thresholds, int tolerance,
                                            std::vector<double>* pixels) {
  require_same_shape(pred, gt);
  if (thresholds.empty()) throw InvalidInput("BoundaryF1 needs thresholds");
  if (tolerance < 0) throw InvalidInput("BoundaryF1 tolerance must be >= 0");
  const auto mask = shared_mask(pred, gt);
  const std::size_t shared = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
  if (shared == 0) throw InvalidInput("no shared valid pixel");
  const int h = gt.height();
  const int w = gt.width();

  struct PerThreshold {
    double f1;
    std::vector<std::size_t> unmatched;
  };
  std::vector<PerThreshold> used;
  for (double t : thresholds) {
    const auto eg = ratio_edges(gt, mask, t);
    const std::size_t ng = static_cast<std::size_t>(std::count(eg.begin(), eg.end(), 1));
    if (ng == 0) continue;
    const auto ep = ratio_edges(pred, mask, t);
    const auto dg = dilate(eg, h, w, tolerance);
    const auto dp = dilate(ep, h, w, tolerance);
    std::size_t np = 0, tp_pred = 0, tp_gt = 0;
    PerThreshold r;
    for (std::size_t i = 0; i < eg.size(); ++i) {
      if (ep[i]) {
        ++np;
        if (dg[i]) {
          ++tp_pred;
        } else {
          r.unmatched.push_back(i);
        }
      }
      if (eg[i]) {
        if (dp[i]) {
          ++tp_gt;
        } else {
          r.unmatched.push_back(i);
        }
      }
    }
    const double precision = np ? static_cast<double>(tp_pred) / np : 0.0;
    const double recall = static_cast<double>(tp_gt) / ng;
    r.f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    used.push_back(std::move(r));
  }
  if (used.empty()) return std::nullopt;
  const double n = static_cast<double>(used.size());
  double sum = 0.0;
  for (const auto& r : used) sum += r.f1;
  if (pixels) {
    for (const auto& r : used) {
      if (r.unmatched.empty()) continue;
      const double share = (1.0 - r.f1) / n / static_cast<double>(r.unmatched.size());
      for (std::size_t i : r.unmatched) (*pixels)[i] += share;
    }
  }
  return MetricScore{1.0 - sum / n, shared};
}

DepthMap z_channel(const PointMap& pts, double floor) {
  DepthMap out(pts.height, pts.width);
  for (int r = 0; r < pts.height; ++r) {
    for (int c = 0; c < pts.width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * pts.width + c;
      if (pts.valid[i]) out.set(r, c, std::max(pts.points[i].z(), floor));
    }
  }
  return out;
}

struct Aligned {
  DepthMap depth;
  PointMap points;  // filled only when needed
};

Aligned align(const MetricSpec& spec, const DepthMap& pred, const DepthMap& gt,
              const CameraIntrinsics& gt_intr, const CameraIntrinsics& pred_intr, bool need_points) {
  require_same_shape(pred, gt);
  const auto& o = spec.params.alignment;
  Aligned out;
  switch (spec.alignment) {
    case AlignmentMode::kNone:
      out.depth = pred;
      break;
    case AlignmentMode::kScaleDepth:
      out.depth = apply_depth_affine(pred, align_scale_depth(pred, gt, o), o.depth_floor);
      break;
    case AlignmentMode::kAffineDepthL1:
      out.depth = apply_depth_affine(pred, align_affine_depth_l1(pred, gt), o.depth_floor);
      break;
    case AlignmentMode::kAffineDepthLstsq:
      out.depth = apply_depth_affine(pred, align_affine_depth_lstsq(pred, gt), o.depth_floor);
      break;
    case AlignmentMode::kAffineDisparity:
      out.depth = apply_disparity_affine(pred, align_affine_disparity(pred, gt), o.disparity_floor);
      break;
    case AlignmentMode::kPointmapScale:
    case AlignmentMode::kPointmapAffine: {
      const PointMap pp = unproject(pred, pred_intr);
      const PointMap gp = unproject(gt, gt_intr);
      const auto mode = spec.alignment == AlignmentMode::kPointmapScale ? PointAlignMode::kScale
                                                                        : PointAlignMode::kAffine;
      out.points = apply_point_transform(pp, align_pointmap(pp, gp, mode, o));
      out.depth = z_channel(out.points, o.depth_floor);
      return out;
    }
  }
  if (need_points) out.points = unproject(out.depth, pred_intr);
  return out;
}

}  // namespace

MetricScore absrel(const DepthMap& pred, const DepthMap& gt) {
  return mean_metric(absrel_terms(pred, gt), nullptr);
}

MetricScore absrel_p(const PointMap& pred, const PointMap& gt) {
  return mean_metric(absrel_p_terms(pred, gt), nullptr);
}

MetricScore delta(const DepthMap& pred, const DepthMap& gt, double exponent) {
  return mean_metric(delta_terms(pred, gt, exponent), nullptr);
}

MetricScore rmse(const DepthMap& pred, const DepthMap& gt) {
  return root_metric(sq_terms(pred, gt, false), nullptr);
}

MetricScore rmse_log(const DepthMap& pred, const DepthMap& gt) {
  return root_metric(sq_terms(pred, gt, true), nullptr);
}

MetricScore rmse_log_si(const DepthMap& pred, const DepthMap& gt) {
  return rmse_log_si_impl(pred, gt, nullptr);
}

MetricScore wkdr(const DepthMap& pred, const DepthMap& gt, std::uint64_t pairs, double tau) {
  return wkdr_impl(pred, gt, pairs, tau, nullptr);
}

std::vector<std::uint8_t> ratio_edges(const DepthMap& depth, std::span<const std::uint8_t> mask,
                                      double threshold) {
  const int h = depth.height();
  const int w = depth.width();
  std::vector<std::uint8_t> out(depth.size(), 0);
  auto ok = [&](std::size_t i) { return depth.valid_at(i) && mask[i]; };
  auto check = [&](std::size_t a, std::size_t b) {
    if (!ok(a) || !ok(b)) return;
    const double r = std::max(depth.at(a) / depth.at(b), depth.at(b) / depth.at(a));
    if (r > threshold) out[a] = out[b] = 1;
  };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = depth.index(r, c);
      if (c + 1 < w) check(i, i + 1);
      if (r + 1 < h) check(i, i + static_cast<std::size_t>(w));
    }
  }
  return out;
}

std::optional<MetricScore> boundary_f1(const DepthMap& pred, const DepthMap& gt,
                                       std::span<const double> thresholds, int tolerance) {
  return boundary_f1_impl(pred, gt, thresholds, tolerance, nullptr);
}

DepthMap aligned_prediction(const MetricSpec& spec, const DepthMap& pred, const DepthMap& gt,
                            const CameraIntrinsics& gt_intr, const CameraIntrinsics& pred_intr) {
  return align(spec, pred, gt, gt_intr, pred_intr, false).depth;
}

Evaluation evaluate_detailed(const MetricSpec& spec, const DepthMap& pred, const DepthMap& gt,
                             const CameraIntrinsics& gt_intr,
                             const std::optional<CameraIntrinsics>& pred_intr, bool with_pixels) {
  spec.validate();
  const CameraIntrinsics pi = pred_intr.value_or(gt_intr);
  const Aligned a = align(spec, pred, gt, gt_intr, pi, spec.uses_points());
  Evaluation ev;
  std::vector<double>* px = nullptr;
  if (with_pixels) {
    ev.pixel_errors.assign(gt.size(), 0.0);
    px = &ev.pixel_errors;
  }
  const DepthMap& p = a.depth;
  const auto& prm = spec.params;
  switch (spec.base) {
    case MetricBase::kAbsRel:
      ev.score = mean_metric(absrel_terms(p, gt), px);
      break;
    case MetricBase::kAbsRelP:
      ev.score = mean_metric(absrel_p_terms(a.points, unproject(gt, gt_intr)), px);
      break;
    case MetricBase::kDelta:
      ev.score = mean_metric(delta_terms(p, gt, prm.delta_exponent), px);
      break;
    case MetricBase::kRmse:
      ev.score = root_metric(sq_terms(p, gt, false), px);
      break;
    case MetricBase::kRmseLog:
      ev.score = root_metric(sq_terms(p, gt, true), px);
      break;
    case MetricBase::kRmseLogSI:
      ev.score = rmse_log_si_impl(p, gt, px);
      break;
    case MetricBase::kWkdr:
      ev.score = wkdr_impl(p, gt, prm.wkdr_pairs, prm.wkdr_tau, px);
      break;
    case MetricBase::kBoundaryF1:
      ev.score = boundary_f1_impl(p, gt, prm.f1_thresholds, prm.f1_tolerance, px);
      break;
    case MetricBase::kRelNormal:
      ev.score = relnormal(p, pi, gt, gt_intr, prm.relnormal);
      if (px && ev.score) ev.pixel_errors = relnormal_pixel_errors(p, pi, gt, gt_intr, prm.relnormal);
      break;
  }
  return ev;
}

std::optional<MetricScore> evaluate(const MetricSpec& spec, const DepthMap& pred,
                                    const DepthMap& gt, const CameraIntrinsics& gt_intr,
                                    const std::optional<CameraIntrinsics>& pred_intr) {
  return evaluate_detailed(spec, pred, gt, gt_intr, pred_intr, false).score;
}

}  // namespace mdeval
