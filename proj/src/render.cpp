#include "mdeval/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "mdeval/depthcore.hpp"
#include "mdeval/parallel.hpp"

namespace mdeval {

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
}

double axis_value(const Vec3& p, ContourAxis axis) {
  switch (axis) {
    case ContourAxis::kX: return p.x();
    case ContourAxis::kY: return p.y();
    case ContourAxis::kZ: return p.z();
  }
  return p.z();
}

}  // namespace

void LightRig::validate() const {
  if (directions.size() < 2) throw InvalidInput("a light rig needs at least two directions");
  for (const Vec3& d : directions) {
    if (std::abs(d.norm() - 1.0) > 1e-9) throw InvalidInput("light directions must be unit vectors");
  }
  if (!(ambient >= 0.0)) throw InvalidInput("ambient must be >= 0");
}

LightRig LightRig::standard(double elevation_deg, double ambient) {
  LightRig rig;
  rig.ambient = ambient;
  const double e = elevation_deg * std::numbers::pi / 180.0;
  for (int k = 0; k < 4; ++k) {
    const double a = k * std::numbers::pi / 2.0;
    rig.directions.emplace_back(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), -std::sin(e));
  }
  return rig;
}

double lambert(const Vec3& normal, const Vec3& light, double ambient) {
  return std::min(1.0, ambient + std::max(0.0, normal.dot(light)));
}

Raster rasterize(const TriangleMesh& mesh, const CameraIntrinsics& intr, const CameraPose& pose,
                 int height, int width) {
  intr.validate();
  Raster out;
  out.height = height;
  out.width = width;
  const std::size_t n = static_cast<std::size_t>(height) * width;
  out.triangle.assign(n, -1);
  out.bary.assign(n, {0.0, 0.0, 0.0});
  out.depth.assign(n, std::numeric_limits<double>::infinity());

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    std::array<Vec3, 3> cam;
    std::array<double, 3> sx{}, sy{};
    bool behind = false;
    for (int k = 0; k < 3; ++k) {
      cam[k] = pose.rotation * mesh.vertices[mesh.triangles[t][k]] + pose.translation;
      if (!(cam[k].z() > 1e-9)) behind = true;
      sx[k] = intr.fx * cam[k].x() / cam[k].z() + intr.cx;
      sy[k] = intr.fy * cam[k].y() / cam[k].z() + intr.cy;
    }
    if (behind) continue;
    const double area = (sx[1] - sx[0]) * (sy[2] - sy[0]) - (sx[2] - sx[0]) * (sy[1] - sy[0]);
    if (area == 0.0) continue;
    // Vertices that project to pixel centers land there only up to rounding.
    constexpr double kSnap = 1e-9;
    const int c0 = std::max(0, static_cast<int>(std::ceil(std::min({sx[0], sx[1], sx[2]}) - kSnap)));
    const int c1 = std::min(width - 1, static_cast<int>(std::floor(std::max({sx[0], sx[1], sx[2]}) + kSnap)));
    const int r0 = std::max(0, static_cast<int>(std::ceil(std::min({sy[0], sy[1], sy[2]}) - kSnap)));
    const int r1 = std::min(height - 1, static_cast<int>(std::floor(std::max({sy[0], sy[1], sy[2]}) + kSnap)));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        std::array<double, 3> w{};
        for (int k = 0; k < 3; ++k) {
          const int a = (k + 1) % 3, b = (k + 2) % 3;
          w[k] = ((sx[b] - sx[a]) * (r - sy[a]) - (sy[b] - sy[a]) * (c - sx[a])) / area;
        }
        if (w[0] < -kSnap || w[1] < -kSnap || w[2] < -kSnap) continue;
        for (double& x : w) x = std::max(x, 0.0);
        // Perspective-correct weights.
        double inv_z = 0.0;
        std::array<double, 3> pw{};
        for (int k = 0; k < 3; ++k) {
          pw[k] = w[k] / cam[k].z();
          inv_z += pw[k];
        }
        const double z = 1.0 / inv_z;
        const std::size_t i = static_cast<std::size_t>(r) * width + c;
        if (z < out.depth[i]) {
          out.depth[i] = z;
          out.triangle[i] = static_cast<int>(t);
          for (int k = 0; k < 3; ++k) out.bary[i][k] = pw[k] * z;
        }
      }
    }
  }
  return out;
}

Vec3 face_normal(const TriangleMesh& mesh, int triangle) {
  const auto& tri = mesh.triangles[triangle];
  const Vec3& a = mesh.vertices[tri[0]];
  const Vec3& b = mesh.vertices[tri[1]];
  const Vec3& c = mesh.vertices[tri[2]];
  Vec3 n = (b - a).cross(c - a);
  const double len = n.norm();
  if (!(len > 0.0)) return Vec3::Zero();
  n /= len;
  if (n.dot(a + b + c) > 0.0) n = -n;
  return n;
}

TriangleMesh depth_mesh(const DepthMap& depth, const CameraIntrinsics& intr) {
  TriangleMesh mesh = build_mesh(depth, intr, detect_occlusion_boundaries(depth));
  if (mesh.triangles.empty()) throw InvalidInput("depth map yields an empty mesh");
  return mesh;
}

std::vector<Image> textureless_relight(const DepthMap& depth, const CameraIntrinsics& intr,
                                       const LightRig& rig, int threads) {
  rig.validate();
  const TriangleMesh mesh = depth_mesh(depth, intr);
  const Raster raster = rasterize(mesh, intr, CameraPose{}, depth.height(), depth.width());
  std::vector<Vec3> normals(mesh.triangles.size());
  for (std::size_t t = 0; t < normals.size(); ++t) normals[t] = face_normal(mesh, static_cast<int>(t));
  std::vector<Image> out(rig.directions.size());
  parallel_for(out.size(), threads, [&](std::size_t l) {
    Image img(depth.width(), depth.height(), 1, 0);
    for (std::size_t i = 0; i < raster.triangle.size(); ++i) {
      const int t = raster.triangle[i];
      if (t < 0) continue;
      img.pixels[i] = to_byte(lambert(normals[t], rig.directions[l], rig.ambient));
    }
    out[l] = std::move(img);
  });
  return out;
}

double default_contour_spacing(const DepthMap& depth, const CameraIntrinsics& intr, ContourAxis axis) {
  const PointMap pts = unproject(depth, intr);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!pts.valid[i]) continue;
    const double v = axis_value(pts.points[i], axis);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) return 1.0;
  return (hi - lo) / 20.0;
}

Image projected_contours(const DepthMap& depth, const CameraIntrinsics& intr, const ContourSpec& spec) {
  if (!(spec.width > 0.0)) throw InvalidInput("contour width must be > 0");
  const double spacing = spec.spacing > 0.0 ? spec.spacing : default_contour_spacing(depth, intr, spec.axis);
  const PointMap pts = unproject(depth, intr);
  const int h = depth.height();
  const int w = depth.width();
  std::vector<double> c(pts.size(), 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts.valid[i]) c[i] = axis_value(pts.points[i], spec.axis);
  }
  auto ok = [&](int r, int col) { return r >= 0 && col >= 0 && r < h && col < w && pts.valid[depth.index(r, col)]; };
  // Central difference where both neighbors exist, one-sided otherwise.
  auto derivative = [&](int r, int col, int dr, int dc) -> double {
    const bool fwd = ok(r + dr, col + dc);
    const bool bwd = ok(r - dr, col - dc);
    const double here = c[depth.index(r, col)];
    if (fwd && bwd) return 0.5 * (c[depth.index(r + dr, col + dc)] - c[depth.index(r - dr, col - dc)]);
    if (fwd) return c[depth.index(r + dr, col + dc)] - here;
    if (bwd) return here - c[depth.index(r - dr, col - dc)];
    return 0.0;
  };

  Image img(w, h, 1, 255);
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      if (!ok(r, col)) continue;
      const std::size_t i = depth.index(r, col);
      const double g = std::hypot(derivative(r, col, 0, 1), derivative(r, col, 1, 0));
      const double offset = std::abs(c[i] - std::round(c[i] / spacing) * spacing);
      const bool ink = g > 0.0 ? offset / g < 0.5 * spec.width : offset == 0.0;
      img.pixels[i] = ink ? kContourInk : kContourBase;
    }
  }
  return img;
}

std::vector<std::vector<std::array<int, 2>>> pixel_components(const Image& image, std::uint8_t value) {
  if (image.channels != 1) throw InvalidInput("component extraction needs a grayscale image");
  std::vector<int> seen(image.pixels.size(), 0);
  std::vector<std::vector<std::array<int, 2>>> out;
  std::vector<std::array<int, 2>> stack;
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * image.width + c;
      if (seen[i] || image.pixels[i] != value) continue;
      std::vector<std::array<int, 2>> comp;
      seen[i] = 1;
      stack.push_back({r, c});
      while (!stack.empty()) {
        const auto p = stack.back();
        stack.pop_back();
        comp.push_back(p);
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = p[0] + dr, cc = p[1] + dc;
            if (rr < 0 || cc < 0 || rr >= image.height || cc >= image.width) continue;
            const std::size_t j = static_cast<std::size_t>(rr) * image.width + cc;
            if (seen[j] || image.pixels[j] != value) continue;
            seen[j] = 1;
            stack.push_back({rr, cc});
          }
        }
      }
      std::sort(comp.begin(), comp.end());
      out.push_back(std::move(comp));
    }
  }
  return out;
}

double max_line_deviation(const std::vector<std::array<int, 2>>& points) {
  if (points.size() < 2) return 0.0;
  double mr = 0.0, mc = 0.0;
  for (const auto& p : points) {
    mr += p[0];
    mc += p[1];
  }
  mr /= points.size();
  mc /= points.size();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector2d d(p[0] - mr, p[1] - mc);
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  const Eigen::Vector2d normal = es.eigenvectors().col(0);
  double dev = 0.0;
  for (const auto& p : points) {
    dev = std::max(dev, std::abs(normal.dot(Eigen::Vector2d(p[0] - mr, p[1] - mc))));
  }
  return dev;
}

std::vector<Image> textured_views(const DepthMap& depth, const CameraIntrinsics& intr, const Image& image,
                                  const std::vector<CameraPose>& poses) {
  if (image.width != depth.width() || image.height != depth.height()) {
    throw InvalidInput("texture image and depth map differ in size");
  }
  const TriangleMesh mesh = depth_mesh(depth, intr);
  std::vector<Image> out;
  for (const CameraPose& pose : poses) {
    const Raster raster = rasterize(mesh, intr, pose, depth.height(), depth.width());
    Image img(depth.width(), depth.height(), image.channels, 0);
    for (std::size_t i = 0; i < raster.triangle.size(); ++i) {
      const int t = raster.triangle[i];
      if (t < 0) continue;
      for (int ch = 0; ch < image.channels; ++ch) {
        double v = 0.0;
        for (int k = 0; k < 3; ++k) {
          const int vtx = mesh.triangles[t][k];
          v += raster.bary[i][k] * image.pixels[static_cast<std::size_t>(vtx) * image.channels + ch];
        }
        img.pixels[i * image.channels + ch] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
    out.push_back(std::move(img));
  }
  return out;
}

Image heatmap_image(const std::vector<double>& values, int height, int width,
                    std::span<const std::uint8_t> mask, double vmax) {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  if (values.size() != n || mask.size() != n) throw InvalidInput("heatmap size mismatch");
  if (!(vmax > 0.0)) {
    vmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) vmax = std::max(vmax, values[i]);
    }
  }
  Image img(width, height, 3, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double t = vmax > 0.0 ? std::clamp(values[i] / vmax, 0.0, 1.0) : 0.0;
    img.pixels[3 * i] = 255;
    img.pixels[3 * i + 1] = to_byte(1.0 - t);
    img.pixels[3 * i + 2] = to_byte(1.0 - t);
  }
  return img;
}

}  // namespace mdeval
