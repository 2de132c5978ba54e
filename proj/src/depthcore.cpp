#include "mdeval/depthcore.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include <Eigen/Eigenvalues>

namespace mdeval {

PointMap unproject(const DepthMap& depth, const CameraIntrinsics& intr) {
  intr.validate();
  PointMap out;
  out.height = depth.height();
  out.width = depth.width();
  out.points.assign(depth.size(), Vec3::Zero());
  out.valid.assign(depth.mask().begin(), depth.mask().end());
  for (int r = 0; r < depth.height(); ++r) {
    for (int c = 0; c < depth.width(); ++c) {
      const std::size_t i = depth.index(r, c);
      if (!depth.valid_at(i)) continue;
      const double z = depth.at(i);
      out.points[i] = Vec3((c - intr.cx) / intr.fx * z, (r - intr.cy) / intr.fy * z, z);
    }
  }
  return out;
}

NormalMap compute_normals(const PointMap& points) {
  const int h = points.height;
  const int w = points.width;
  NormalMap out;
  out.height = h;
  out.width = w;
  out.normals.assign(points.size(), Vec3::Zero());
  out.valid.assign(points.size(), 0);
  for (int r = 1; r + 1 < h; ++r) {
    for (int c = 1; c + 1 < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      const std::size_t left = i - 1, right = i + 1, up = i - w, down = i + w;
      if (!points.valid[i] || !points.valid[left] || !points.valid[right] ||
          !points.valid[up] || !points.valid[down]) {
        continue;
      }
      const Vec3 a = points.points[right] - points.points[left];
      const Vec3 b = points.points[down] - points.points[up];
      Vec3 n = a.cross(b);
      const double norm = n.norm();
      if (!(norm > 1e-14 * a.norm() * b.norm()) || !std::isfinite(norm)) continue;
      n /= norm;
      if (n.dot(points.points[i]) > 0.0) n = -n;
      out.normals[i] = n;
      out.valid[i] = 1;
    }
  }
  return out;
}

NormalMap compute_normals_plane_fit(const PointMap& points, int window) {
  if (window < 3 || window % 2 == 0) throw InvalidInput("plane-fit window must be odd and >= 3");
  const int h = points.height;
  const int w = points.width;
  const int half = window / 2;
  NormalMap out;
  out.height = h;
  out.width = w;
  out.normals.assign(points.size(), Vec3::Zero());
  out.valid.assign(points.size(), 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      if (!points.valid[i]) continue;
      Vec3 mean = Vec3::Zero();
      int n = 0;
      for (int dr = -half; dr <= half; ++dr) {
        for (int dc = -half; dc <= half; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
          const std::size_t j = static_cast<std::size_t>(rr) * w + cc;
          if (!points.valid[j]) continue;
          mean += points.points[j];
          ++n;
        }
      }
      if (n < 3) continue;
      mean /= n;
      Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
      for (int dr = -half; dr <= half; ++dr) {
        for (int dc = -half; dc <= half; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
          const std::size_t j = static_cast<std::size_t>(rr) * w + cc;
          if (!points.valid[j]) continue;
          const Vec3 d = points.points[j] - mean;
          cov += d * d.transpose();
        }
      }
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
      const auto& ev = eig.eigenvalues();
      // Collinear or coincident support.
      if (!(ev(1) > 1e-12 * ev(2))) continue;
      Vec3 normal = eig.eigenvectors().col(0).normalized();
      if (normal.dot(points.points[i]) > 0.0) normal = -normal;
      out.normals[i] = normal;
      out.valid[i] = 1;
    }
  }
  return out;
}

EdgeMask detect_occlusion_boundaries(const DepthMap& depth, double threshold,
                                     BoundaryRule rule) {
  const int h = depth.height();
  const int w = depth.width();
  EdgeMask e = EdgeMask::empty(h, w);
  auto crosses = [&](double a, double b) {
    if (rule == BoundaryRule::kRatio) return std::max(a / b, b / a) > threshold;
    return std::abs(a - b) > threshold;
  };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = depth.index(r, c);
      if (!depth.valid_at(i)) continue;
      if (c + 1 < w && depth.valid_at(i + 1) && crosses(depth.at(i), depth.at(i + 1))) {
        e.horizontal[i] = 1;
      }
      if (r + 1 < h && depth.valid_at(i + w) && crosses(depth.at(i), depth.at(i + w))) {
        e.vertical[i] = 1;
      }
    }
  }
  return e;
}

GradientField log_depth_gradient(const DepthMap& depth, const EdgeMask& boundary) {
  const int h = depth.height();
  const int w = depth.width();
  if (boundary.height != h || boundary.width != w) {
    throw InvalidInput("boundary mask size mismatch");
  }
  GradientField g;
  g.height = h;
  g.width = w;
  g.du.assign(depth.size(), 0.0);
  g.dv.assign(depth.size(), 0.0);
  g.du_mask.assign(depth.size(), 0);
  g.dv_mask.assign(depth.size(), 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = depth.index(r, c);
      if (!depth.valid_at(i)) continue;
      if (c + 1 < w && depth.valid_at(i + 1) && !boundary.horizontal[i]) {
        g.du[i] = std::log(depth.at(i + 1)) - std::log(depth.at(i));
        g.du_mask[i] = 1;
      }
      if (r + 1 < h && depth.valid_at(i + w) && !boundary.vertical[i]) {
        g.dv[i] = std::log(depth.at(i + w)) - std::log(depth.at(i));
        g.dv_mask[i] = 1;
      }
    }
  }
  return g;
}

TriangleMesh build_mesh(const DepthMap& depth, const CameraIntrinsics& intr,
                        const EdgeMask& boundary) {
  const int h = depth.height();
  const int w = depth.width();
  PointMap pts = unproject(depth, intr);
  TriangleMesh mesh;
  mesh.height = h;
  mesh.width = w;
  mesh.vertices = std::move(pts.points);
  for (int r = 0; r + 1 < h; ++r) {
    for (int c = 0; c + 1 < w; ++c) {
      const int tl = r * w + c, tr = tl + 1, bl = tl + w, br = bl + 1;
      const bool vtl = depth.valid_at(tl), vtr = depth.valid_at(tr);
      const bool vbl = depth.valid_at(bl), vbr = depth.valid_at(br);
      // (TL, TR, BR): edges TL-TR (horizontal at TL) and TR-BR (vertical at TR).
      if (vtl && vtr && vbr && !boundary.horizontal[tl] && !boundary.vertical[tr]) {
        mesh.triangles.push_back({tl, tr, br});
      }
      // (TL, BR, BL): edges TL-BL (vertical at TL) and BL-BR (horizontal at BL).
      if (vtl && vbr && vbl && !boundary.vertical[tl] && !boundary.horizontal[bl]) {
        mesh.triangles.push_back({tl, br, bl});
      }
    }
  }
  return mesh;
}

DepthMap downsample(const DepthMap& depth, int factor) {
  if (factor < 1) throw InvalidInput("downsample factor must be >= 1");
  if (factor == 1) return depth;
  const int h = depth.height() / factor;
  const int w = depth.width() / factor;
  DepthMap out(h, w);
  const int need = (factor * factor + 1) / 2;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double inv_sum = 0.0;
      int n = 0;
      for (int dr = 0; dr < factor; ++dr) {
        for (int dc = 0; dc < factor; ++dc) {
          const std::size_t i = depth.index(r * factor + dr, c * factor + dc);
          if (!depth.valid_at(i)) continue;
          inv_sum += 1.0 / depth.at(i);
          ++n;
        }
      }
      if (n >= need) out.set(r, c, n / inv_sum);
    }
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("median of empty set");
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

double median_depth(const DepthMap& depth) {
  std::vector<double> v;
  v.reserve(depth.size());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (depth.valid_at(i)) v.push_back(depth.at(i));
  }
  return median(std::move(v));
}

int connected_components(const DepthMap& depth, const EdgeMask& cut, std::vector<int>& labels) {
  const int h = depth.height();
  const int w = depth.width();
  labels.assign(depth.size(), -1);
  int next = 0;
  std::queue<int> q;
  for (int start = 0; start < static_cast<int>(depth.size()); ++start) {
    if (!depth.valid_at(start) || labels[start] >= 0) continue;
    labels[start] = next;
    q.push(start);
    while (!q.empty()) {
      const int i = q.front();
      q.pop();
      const int r = i / w, c = i % w;
      auto visit = [&](int j, bool blocked) {
        if (blocked || !depth.valid_at(j) || labels[j] >= 0) return;
        labels[j] = next;
        q.push(j);
      };
      if (c + 1 < w) visit(i + 1, cut.horizontal[i] != 0);
      if (c > 0) visit(i - 1, cut.horizontal[i - 1] != 0);
      if (r + 1 < h) visit(i + w, cut.vertical[i] != 0);
      if (r > 0) visit(i - w, cut.vertical[i - w] != 0);
    }
    ++next;
  }
  return next;
}

}  // namespace mdeval
