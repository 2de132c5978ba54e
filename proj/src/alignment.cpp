#include "mdeval/alignment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "mdeval/depthcore.hpp"

namespace mdeval {

namespace {

constexpr std::array<std::pair<AlignmentMode, std::string_view>, 7> kModeNames{{
    {AlignmentMode::kNone, "none"},
    {AlignmentMode::kScaleDepth, "scale_depth"},
    {AlignmentMode::kAffineDepthL1, "affine_depth_l1"},
    {AlignmentMode::kAffineDepthLstsq, "affine_depth_lstsq"},
    {AlignmentMode::kAffineDisparity, "affine_disparity"},
    {AlignmentMode::kPointmapScale, "pointmap_scale"},
    {AlignmentMode::kPointmapAffine, "pointmap_affine"},
}};

struct Samples {
  std::vector<double> pred;
  std::vector<double> gt;
};

Samples shared_samples(const DepthMap& pred, const DepthMap& gt, bool inverse) {
  const auto mask = shared_mask(pred, gt);
  Samples s;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    s.pred.push_back(inverse ? 1.0 / pred.at(i) : pred.at(i));
    s.gt.push_back(inverse ? 1.0 / gt.at(i) : gt.at(i));
  }
  if (s.pred.size() < 2) throw AlignmentError("alignment needs at least 2 shared valid pixels");
  return s;
}

AffineParams least_squares(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  AffineParams p;
  if (sxx <= 0.0) {
    p.scale = 0.0;
    p.shift = my;
    return p;
  }
  p.scale = sxy / sxx;
  p.shift = my - p.scale * mx;
  return p;
}

double spread(std::vector<double> v) {
  const double q1 = [&] {
    std::nth_element(v.begin(), v.begin() + v.size() / 4, v.end());
    return v[v.size() / 4];
  }();
  const double q3 = [&] {
    std::nth_element(v.begin(), v.begin() + (3 * v.size()) / 4, v.end());
    return v[(3 * v.size()) / 4];
  }();
  return q3 - q1;
}

// Convex 1-D minimization over [0, inf): bracket by doubling then golden section.
template <typename F>
double minimize_nonnegative(F&& f, double initial, bool* clamped) {
  double hi = std::max(initial, 1e-12);
  for (int k = 0; k < 200 && f(2.0 * hi) < f(hi); ++k) hi *= 2.0;
  hi *= 2.0;
  double best = golden_section_minimize(f, 0.0, hi, 1e-13 * hi, 400);
  if (f(0.0) <= f(best)) best = 0.0;
  if (clamped) {
    const double step = 1e-6 * hi;
    *clamped = best <= step && f(-step) < f(0.0);
  }
  return best;
}

}  // namespace

std::string_view to_string(AlignmentMode mode) {
  for (const auto& [m, name] : kModeNames) {
    if (m == mode) return name;
  }
  return "unknown";
}

AlignmentMode parse_alignment_mode(std::string_view name) {
  for (const auto& [m, n] : kModeNames) {
    if (n == name) return m;
  }
  throw FormatError("unknown alignment mode '" + std::string(name) + "'");
}

double truncated_l1_scale(std::span<const double> x, std::span<const double> y,
                          std::span<const double> w, double truncation, bool* clamped) {
  // Each term w|a x - y| = (w|x|) |a - c| with c = y/x, truncated at T: kinks at
  // c - h, c, c + h with h = T / (w|x|). The objective is piecewise linear, so
  // its minimum over a >= 0 sits at a = 0 or at a kink.
  struct Event {
    double pos;
    double dslope;
  };
  std::vector<Event> events;
  events.reserve(3 * x.size());
  double f0 = 0.0;      // objective at a = 0
  double slope0 = 0.0;  // right derivative at a = 0
  const bool truncate = std::isfinite(truncation);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0 || !(w[i] > 0.0)) continue;
    const double ax = std::abs(x[i]);
    const double c = (x[i] > 0.0 ? y[i] : -y[i]) / ax;
    const double k = w[i] * ax;
    const double h = truncate ? truncation / k : std::numeric_limits<double>::infinity();
    const double dist0 = std::abs(c);
    f0 += truncate ? std::min(truncation, k * dist0) : k * dist0;
    // Slope at -inf, then every kink at or left of 0 folds into the right
    // derivative at 0; kinks right of 0 become sweep events.
    if (!truncate) slope0 -= k;
    auto push = [&](double pos, double ds) {
      if (pos > 0.0) {
        events.push_back({pos, ds});
      } else {
        slope0 += ds;
      }
    };
    if (truncate) {
      push(c - h, -k);
      push(c, 2.0 * k);
      push(c + h, -k);
    } else {
      push(c, 2.0 * k);
    }
  }
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.pos < b.pos; });
  double best_a = 0.0;
  double best_f = f0;
  double cur_a = 0.0, cur_f = f0, slope = slope0;
  for (std::size_t i = 0; i < events.size();) {
    const double pos = events[i].pos;
    cur_f += slope * (pos - cur_a);
    cur_a = pos;
    if (cur_f < best_f) {
      best_f = cur_f;
      best_a = pos;
    }
    while (i < events.size() && events[i].pos == pos) slope += events[i++].dslope;
  }
  if (clamped) *clamped = best_a == 0.0 && slope0 > 0.0;
  return best_a;
}

double weighted_median(std::span<const double> values, std::span<const double> weights) {
  if (values.empty()) throw InvalidInput("weighted median of empty set");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b] || (values[a] == values[b] && a < b);
  });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double acc = 0.0;
  for (std::size_t idx : order) {
    acc += weights[idx];
    if (acc >= 0.5 * total) return values[idx];
  }
  return values[order.back()];
}

AffineParams align_scale_depth(const DepthMap& pred, const DepthMap& gt,
                               const AlignmentOptions& opts) {
  const Samples s = shared_samples(pred, gt, false);
  std::vector<double> w(s.gt.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 / s.gt[i];
  AffineParams p;
  p.scale = truncated_l1_scale(s.pred, s.gt, w, opts.truncation, &p.clamped);
  p.shift = 0.0;
  return p;
}

AffineParams align_affine_depth_l1(const DepthMap& pred, const DepthMap& gt) {
  const Samples s = shared_samples(pred, gt, false);
  const std::size_t n = s.pred.size();
  std::vector<double> resid(n);
  auto shift_for = [&](double a) {
    for (std::size_t i = 0; i < n; ++i) resid[i] = s.gt[i] - a * s.pred[i];
    return median(resid);
  };
  auto objective = [&](double a) {
    const double b = shift_for(a);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += std::abs(a * s.pred[i] + b - s.gt[i]);
    return sum;
  };
  const double sp = spread(s.pred);
  const double initial = sp > 0.0 ? spread(s.gt) / sp : 1.0;
  AffineParams p;
  p.scale = minimize_nonnegative(objective, std::max(initial, std::abs(least_squares(s.pred, s.gt).scale)),
                                 &p.clamped);
  p.shift = shift_for(p.scale);
  return p;
}

AffineParams align_affine_depth_lstsq(const DepthMap& pred, const DepthMap& gt) {
  const Samples s = shared_samples(pred, gt, false);
  return least_squares(s.pred, s.gt);
}

AffineParams align_affine_disparity(const DepthMap& pred, const DepthMap& gt) {
  const Samples s = shared_samples(pred, gt, true);
  return least_squares(s.pred, s.gt);
}

PointTransform align_pointmap(const PointMap& pred, const PointMap& gt, PointAlignMode mode,
                              const AlignmentOptions& opts) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw AlignmentError("point maps differ in size");
  }
  std::vector<Vec3> p, q;
  std::vector<double> w;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!pred.valid[i] || !gt.valid[i]) continue;
    const double norm = gt.points[i].norm();
    if (!(norm > 0.0)) continue;
    p.push_back(pred.points[i]);
    q.push_back(gt.points[i]);
    w.push_back(1.0 / norm);
  }
  if (p.size() < 2) throw AlignmentError("alignment needs at least 2 shared valid points");

  PointTransform t;
  if (mode == PointAlignMode::kScale) {
    std::vector<double> xs, ys, ws;
    xs.reserve(3 * p.size());
    ys.reserve(3 * p.size());
    ws.reserve(3 * p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (int k = 0; k < 3; ++k) {
        xs.push_back(p[i][k]);
        ys.push_back(q[i][k]);
        ws.push_back(w[i]);
      }
    }
    t.scale = truncated_l1_scale(xs, ys, ws, opts.truncation, &t.clamped);
    return t;
  }

  const std::size_t n = p.size();
  std::vector<double> zres(n);
  auto shift_for = [&](double s) {
    for (std::size_t i = 0; i < n; ++i) zres[i] = q[i].z() - s * p[i].z();
    return weighted_median(zres, w);
  };
  auto objective = [&](double s) {
    const double tz = shift_for(s);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += w[i] * (std::abs(s * p[i].x() - q[i].x()) + std::abs(s * p[i].y() - q[i].y()) +
                     std::abs(s * p[i].z() + tz - q[i].z()));
    }
    return sum;
  };
  double pz = 0.0, qz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pz += p[i].norm();
    qz += q[i].norm();
  }
  t.scale = minimize_nonnegative(objective, pz > 0.0 ? qz / pz : 1.0, &t.clamped);
  t.z_shift = shift_for(t.scale);
  return t;
}

DepthMap apply_depth_affine(const DepthMap& pred, const AffineParams& p, double depth_floor) {
  std::vector<double> v(pred.size(), 0.0);
  std::vector<std::uint8_t> m(pred.mask().begin(), pred.mask().end());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (m[i]) v[i] = std::max(p.scale * pred.at(i) + p.shift, depth_floor);
  }
  return DepthMap(pred.height(), pred.width(), std::move(v), std::move(m));
}

DepthMap apply_disparity_affine(const DepthMap& pred, const AffineParams& p,
                                double disparity_floor) {
  std::vector<double> v(pred.size(), 0.0);
  std::vector<std::uint8_t> m(pred.mask().begin(), pred.mask().end());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (m[i]) v[i] = 1.0 / std::max(p.scale / pred.at(i) + p.shift, disparity_floor);
  }
  return DepthMap(pred.height(), pred.width(), std::move(v), std::move(m));
}

PointMap apply_point_transform(const PointMap& pts, const PointTransform& t) {
  PointMap out = pts;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out.valid[i]) continue;
    out.points[i] = t.scale * pts.points[i];
    out.points[i].z() += t.z_shift;
  }
  return out;
}

}  // namespace mdeval
