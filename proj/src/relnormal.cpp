#include "mdeval/relnormal.hpp"

#include <cmath>
#include <numbers>

#include "mdeval/depthcore.hpp"
#include "mdeval/parallel.hpp"

namespace mdeval {

namespace {

constexpr std::uint64_t kBlock = 1u << 16;

struct BlockSum {
  KahanSum sum;
  std::uint64_t count = 0;
};

}  // namespace

void RelNormalConfig::validate() const {
  if (radius < 1) throw InvalidInput("RelNormal radius must be >= 1");
  if (samples < 1) throw InvalidInput("RelNormal sample count must be >= 1");
  if (scales.empty()) throw InvalidInput("RelNormal needs at least one scale");
  for (int s : scales) {
    if (s < 1) throw InvalidInput("RelNormal scales must be >= 1");
  }
}

double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

std::optional<ScaleNormals> prepare_scale(const DepthMap& pred, const CameraIntrinsics& pred_intr,
                                          const DepthMap& gt, const CameraIntrinsics& gt_intr,
                                          const RelNormalConfig& config, int scale) {
  if (pred.height() / scale < 3 || pred.width() / scale < 3) return std::nullopt;
  const auto mask = shared_mask(pred, gt);
  const DepthMap p = downsample(pred.masked(mask), scale);
  const DepthMap g = downsample(gt.masked(mask), scale);
  const PointMap pp = unproject(p, pred_intr.downsampled(scale));
  const PointMap gp = unproject(g, gt_intr.downsampled(scale));
  ScaleNormals out;
  out.scale = scale;
  if (config.normal_mode == NormalMode::kPlaneFit) {
    out.pred = compute_normals_plane_fit(pp, config.plane_window);
    out.gt = compute_normals_plane_fit(gp, config.plane_window);
  } else {
    out.pred = compute_normals(pp);
    out.gt = compute_normals(gp);
  }
  return out;
}

std::optional<double> pair_error(const ScaleNormals& n, const PairSample& p) {
  const std::size_t w = static_cast<std::size_t>(n.gt.width);
  const std::size_t i = p.i_row * w + p.i_col;
  const std::size_t j = p.j_row * w + p.j_col;
  if (!n.gt.valid[i] || !n.gt.valid[j] || !n.pred.valid[i] || !n.pred.valid[j]) {
    return std::nullopt;
  }
  const double a_pred = angle_between(n.pred.normals[i], n.pred.normals[j]);
  const double a_gt = angle_between(n.gt.normals[i], n.gt.normals[j]);
  return std::abs(a_pred - a_gt) / std::numbers::pi;
}

std::optional<MetricScore> relnormal_at_scale(const DepthMap& pred, const CameraIntrinsics& pred_intr,
                                              const DepthMap& gt, const CameraIntrinsics& gt_intr,
                                              const RelNormalConfig& config, int scale) {
  config.validate();
  const auto normals = prepare_scale(pred, pred_intr, gt, gt_intr, config, scale);
  if (!normals) return std::nullopt;
  const int h = normals->gt.height;
  const int w = normals->gt.width;

  const std::uint64_t blocks = (config.samples + kBlock - 1) / kBlock;
  std::vector<BlockSum> partial(blocks);
  parallel_for(blocks, config.threads, [&](std::size_t b) {
    const std::uint64_t begin = b * kBlock;
    const std::uint64_t end = std::min<std::uint64_t>(config.samples, begin + kBlock);
    SobolSequence seq(begin);
    BlockSum acc;
    for (std::uint64_t k = begin; k < end; ++k) {
      const auto pair = map_neighborhood_pair(seq.next(), h, w, config.radius);
      if (!pair) continue;
      if (const auto e = pair_error(*normals, *pair)) {
        acc.sum.add(*e);
        ++acc.count;
      }
    }
    partial[b] = acc;
  });

  KahanSum total;
  std::uint64_t count = 0;
  for (const BlockSum& p : partial) {
    total.add(p.sum.sum);
    total.add(-p.sum.carry);
    count += p.count;
  }
  if (count == 0) return std::nullopt;
  return MetricScore{total.sum / static_cast<double>(count), static_cast<std::size_t>(count)};
}

std::optional<MetricScore> relnormal(const DepthMap& pred, const CameraIntrinsics& pred_intr,
                                     const DepthMap& gt, const CameraIntrinsics& gt_intr,
                                     const RelNormalConfig& config) {
  config.validate();
  double sum = 0.0;
  std::size_t present = 0, pairs = 0;
  for (int s : config.scales) {
    const auto v = relnormal_at_scale(pred, pred_intr, gt, gt_intr, config, s);
    if (!v) continue;
    sum += v->value;
    pairs += v->count;
    ++present;
  }
  if (present == 0) return std::nullopt;
  return MetricScore{sum / static_cast<double>(present), pairs};
}

std::optional<MetricScore> relnormal(const DepthMap& pred, const DepthMap& gt,
                                     const CameraIntrinsics& intr, const RelNormalConfig& config) {
  return relnormal(pred, intr, gt, intr, config);
}

std::vector<double> relnormal_pixel_errors(const DepthMap& pred, const CameraIntrinsics& pred_intr,
                                           const DepthMap& gt, const CameraIntrinsics& gt_intr,
                                           const RelNormalConfig& config) {
  config.validate();
  std::vector<double> out(gt.size(), 0.0);
  const auto mask = shared_mask(pred, gt);

  struct ScaleMap {
    int scale;
    std::vector<double> coarse;  // per downsampled pixel, already divided by pair count
    int w;
  };
  std::vector<ScaleMap> maps;
  for (int s : config.scales) {
    const auto normals = prepare_scale(pred, pred_intr, gt, gt_intr, config, s);
    if (!normals) continue;
    const int h = normals->gt.height;
    const int w = normals->gt.width;
    std::vector<double> coarse(static_cast<std::size_t>(h) * w, 0.0);
    std::uint64_t count = 0;
    SobolSequence seq;
    for (std::uint64_t k = 0; k < config.samples; ++k) {
      const auto pair = map_neighborhood_pair(seq.next(), h, w, config.radius);
      if (!pair) continue;
      const auto e = pair_error(*normals, *pair);
      if (!e) continue;
      ++count;
      coarse[static_cast<std::size_t>(pair->i_row) * w + pair->i_col] += 0.5 * *e;
      coarse[static_cast<std::size_t>(pair->j_row) * w + pair->j_col] += 0.5 * *e;
    }
    if (count == 0) continue;
    for (double& v : coarse) v /= static_cast<double>(count);
    maps.push_back({s, std::move(coarse), w});
  }
  if (maps.empty()) return out;
  const double per_scale = 1.0 / static_cast<double>(maps.size());
  for (const ScaleMap& m : maps) {
    const int k = m.scale;
    const int h = static_cast<int>(m.coarse.size()) / m.w;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < m.w; ++c) {
        const double v = m.coarse[static_cast<std::size_t>(r) * m.w + c];
        if (v == 0.0) continue;
        int n = 0;
        for (int dr = 0; dr < k; ++dr) {
          for (int dc = 0; dc < k; ++dc) n += mask[gt.index(r * k + dr, c * k + dc)];
        }
        for (int dr = 0; dr < k; ++dr) {
          for (int dc = 0; dc < k; ++dc) {
            const std::size_t i = gt.index(r * k + dr, c * k + dc);
            if (mask[i]) out[i] += per_scale * v / n;
          }
        }
      }
    }
  }
  return out;
}

}  // namespace mdeval
