#include "mdeval/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <string>

#include <Eigen/Geometry>

#include "mdeval/depthcore.hpp"

namespace mdeval {

namespace {

constexpr std::array<std::pair<PerturbationKind, std::string_view>, 7> kKindNames{{
    {PerturbationKind::kSurfaceOrientation, "surface_orientation"},
    {PerturbationKind::kCameraIntrinsics, "camera_intrinsics"},
    {PerturbationKind::kRelativeScale, "relative_scale"},
    {PerturbationKind::kCurvature, "curvature"},
    {PerturbationKind::kAffineDepth, "affine_depth"},
    {PerturbationKind::kAffineDisparity, "affine_disparity"},
    {PerturbationKind::kBoundary, "boundary"},
}};

struct ColumnInfo {
  PerturbationColumn column;
  std::string_view name;
  std::string_view label;
  double start;
  double step;
};

constexpr std::array<ColumnInfo, 8> kColumns{{
    {PerturbationColumn::kSurfaceOrientation, "surface_orientation", "Surf. Ori.", 0.0, 3.0},
    {PerturbationColumn::kCameraIntrinsics, "camera_intrinsics", "Cam. Intr.", 1.0, 0.2},
    {PerturbationColumn::kRelativeScale, "relative_scale", "Rel. Scale", 1.0, 0.1},
    {PerturbationColumn::kCurvatureHigh, "curvature_high", "Curv. (high)", 0.0, 0.02},
    {PerturbationColumn::kCurvatureLow, "curvature_low", "Curv. (low)", 0.0, 0.2},
    {PerturbationColumn::kAffineDepth, "affine_depth", "Af. Depth", 1.0, 0.2},
    {PerturbationColumn::kAffineDisparity, "affine_disparity", "Af. Disp.", 1.0, 0.2},
    {PerturbationColumn::kBoundary, "boundary", "Boundary", 0.0, 1.0},
}};

const ColumnInfo& info(PerturbationColumn c) {
  for (const auto& i : kColumns) {
    if (i.column == c) return i;
  }
  throw InvalidInput("unknown perturbation column");
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Half-sample symmetric reflection: -1 -> 0, n -> n-1.
int reflect(int i, int n) {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// Copies normals from the nearest pixel (BFS over valid depth, never across
// a boundary edge) into valid depth pixels whose own normal is undefined,
// e.g. the image border. Normals whose stencil straddles a boundary are
// discarded first.
std::vector<Vec3> filled_normals(const DepthMap& depth, const NormalMap& nm, const EdgeMask& boundary) {
  const int h = depth.height();
  const int w = depth.width();
  auto cut = [&](int r, int c, int rr, int cc) {
    if (rr == r) return boundary.horizontal[depth.index(r, std::min(c, cc))] != 0;
    return boundary.vertical[depth.index(std::min(r, rr), c)] != 0;
  };
  std::vector<Vec3> out(nm.normals);
  std::vector<std::uint8_t> have(nm.valid);
  for (int r = 1; r + 1 < h; ++r) {
    for (int c = 1; c + 1 < w; ++c) {
      const std::size_t i = depth.index(r, c);
      if (have[i] && (cut(r, c, r, c - 1) || cut(r, c, r, c + 1) || cut(r, c, r - 1, c) || cut(r, c, r + 1, c))) {
        have[i] = 0;
      }
    }
  }
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < have.size(); ++i) {
    if (have[i]) queue.push_back(i);
  }
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    const int r = static_cast<int>(i / w);
    const int c = static_cast<int>(i % w);
    const int dr[4] = {-1, 1, 0, 0};
    const int dc[4] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
      const int rr = r + dr[k];
      const int cc = c + dc[k];
      if (rr < 0 || cc < 0 || rr >= h || cc >= w || cut(r, c, rr, cc)) continue;
      const std::size_t j = depth.index(rr, cc);
      if (have[j] || !depth.valid_at(j)) continue;
      have[j] = 1;
      out[j] = out[i];
      queue.push_back(j);
    }
  }
  for (std::size_t i = 0; i < have.size(); ++i) {
    if (!have[i]) out[i] = Vec3::Zero();
  }
  return out;
}

double median_of_logs(const std::vector<double>& x, const std::vector<std::size_t>& idx) {
  std::vector<double> v;
  v.reserve(idx.size());
  for (std::size_t i : idx) v.push_back(x[i]);
  return median(std::move(v));
}

// Solves for log depth whose neighbor differences follow the gt differences
// plus the change in plane step between (normal, intr) and (normal', intr').
template <typename NormalMapFn>
DepthMap solve_log_depth(const DepthMap& gt, const CameraIntrinsics& intr,
                         const CameraIntrinsics& target_intr, NormalMapFn&& target_normal,
                         const GradientSolveOptions& options, SolveReport* report) {
  intr.validate();
  target_intr.validate();
  const int h = gt.height();
  const int w = gt.width();
  const EdgeMask boundary = detect_occlusion_boundaries(gt, options.boundary_ratio);
  const std::vector<Vec3> normals = filled_normals(gt, compute_normals(unproject(gt, intr)), boundary);

  std::vector<double> log_gt(gt.size(), 0.0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.valid_at(i)) log_gt[i] = std::log(gt.at(i));
  }

  std::vector<GradientConstraint> constraints;
  auto add = [&](int ri, int ci, int rj, int cj) {
    const std::size_t i = gt.index(ri, ci);
    const std::size_t j = gt.index(rj, cj);
    if (!gt.valid_at(i) || !gt.valid_at(j)) return;
    const Vec3 sum = normals[i] + normals[j];
    const double norm = sum.norm();
    if (!(norm > 0.0)) return;
    const Vec3 n = sum / norm;
    const auto h0 = plane_log_step(intr.ray(ci, ri), intr.ray(cj, rj), n);
    const auto h1 = plane_log_step(target_intr.ray(ci, ri), target_intr.ray(cj, rj), target_normal(n));
    if (!h0 || !h1) return;
    constraints.push_back({i, j, (log_gt[j] - log_gt[i]) + (*h1 - *h0)});
  };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = gt.index(r, c);
      if (c + 1 < w && !boundary.horizontal[i]) add(r, c, r, c + 1);
      if (r + 1 < h && !boundary.vertical[i]) add(r, c, r + 1, c);
    }
  }

  const LinearSystem system(gt.size(), constraints);
  std::vector<double> x = log_gt;
  const SolveReport rep = solve_cg(system, x, options.solver);
  if (report) *report = rep;

  // Gauge: each connected component keeps the median log depth of gt.
  int count = 0;
  const std::vector<int> label = system.components(&count);
  std::vector<std::vector<std::size_t>> members(count);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.valid_at(i)) members[label[i]].push_back(i);
  }
  for (const auto& m : members) {
    if (m.size() < 2) continue;
    const double shift = median_of_logs(log_gt, m) - median_of_logs(x, m);
    for (std::size_t i : m) x[i] += shift;
  }

  DepthMap out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = gt.index(r, c);
      if (gt.valid_at(i)) out.set(r, c, std::exp(x[i]));
    }
  }
  return out;
}

std::vector<double> valid_values(const DepthMap& d) {
  std::vector<double> v;
  v.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.valid_at(i)) v.push_back(d.at(i));
  }
  if (v.empty()) throw InvalidInput("depth map has no valid pixel");
  return v;
}

DepthMap map_valid(const DepthMap& gt, auto&& fn) {
  DepthMap out(gt.height(), gt.width());
  for (int r = 0; r < gt.height(); ++r) {
    for (int c = 0; c < gt.width(); ++c) {
      if (gt.valid(r, c)) out.set(r, c, fn(gt(r, c), gt.index(r, c)));
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(PerturbationKind kind) {
  for (const auto& [k, n] : kKindNames) {
    if (k == kind) return n;
  }
  return "unknown";
}

PerturbationKind parse_perturbation_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw FormatError("unknown perturbation kind '" + std::string(name) + "'");
}

std::string_view to_string(PerturbationColumn column) { return info(column).name; }

PerturbationColumn parse_perturbation_column(std::string_view name) {
  for (const auto& i : kColumns) {
    if (i.name == name) return i.column;
  }
  throw FormatError("unknown perturbation column '" + std::string(name) + "'");
}

std::string_view column_label(PerturbationColumn column) { return info(column).label; }

void PerturbationSpec::validate() const {
  if (!std::isfinite(intensity)) throw InvalidInput("perturbation intensity must be finite");
  switch (kind) {
    case PerturbationKind::kSurfaceOrientation:
      if (intensity < 0.0) throw InvalidInput("rotation angle must be >= 0 degrees");
      if (std::abs(axis.norm() - 1.0) > 1e-6) throw InvalidInput("rotation axis must be unit length");
      break;
    case PerturbationKind::kCameraIntrinsics:
    case PerturbationKind::kRelativeScale:
    case PerturbationKind::kAffineDepth:
    case PerturbationKind::kAffineDisparity:
      if (intensity < 1.0) throw InvalidInput("scale factor must be >= 1");
      break;
    case PerturbationKind::kCurvature:
      if (intensity < 0.0) throw InvalidInput("curvature amplitude must be >= 0");
      if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidInput("curvature sigma must be >= 0");
      break;
    case PerturbationKind::kBoundary:
      if (intensity < 0.0 || intensity != std::floor(intensity)) {
        throw InvalidInput("boundary intensity must be a non-negative integer");
      }
      break;
  }
}

double PerturbationSpec::identity_intensity() const {
  switch (kind) {
    case PerturbationKind::kSurfaceOrientation:
    case PerturbationKind::kCurvature:
    case PerturbationKind::kBoundary:
      return 0.0;
    default:
      return 1.0;
  }
}

PerturbationSpec column_spec(PerturbationColumn column, double intensity, std::uint64_t seed,
                             const Vec3& axis) {
  PerturbationSpec s;
  s.intensity = intensity;
  s.seed = seed;
  s.axis = axis;
  switch (column) {
    case PerturbationColumn::kSurfaceOrientation: s.kind = PerturbationKind::kSurfaceOrientation; break;
    case PerturbationColumn::kCameraIntrinsics: s.kind = PerturbationKind::kCameraIntrinsics; break;
    case PerturbationColumn::kRelativeScale: s.kind = PerturbationKind::kRelativeScale; break;
    case PerturbationColumn::kCurvatureHigh:
      s.kind = PerturbationKind::kCurvature;
      s.sigma = 1.0;
      break;
    case PerturbationColumn::kCurvatureLow:
      s.kind = PerturbationKind::kCurvature;
      s.sigma = 10.0;
      break;
    case PerturbationColumn::kAffineDepth: s.kind = PerturbationKind::kAffineDepth; break;
    case PerturbationColumn::kAffineDisparity: s.kind = PerturbationKind::kAffineDisparity; break;
    case PerturbationColumn::kBoundary: s.kind = PerturbationKind::kBoundary; break;
  }
  return s;
}

std::vector<double> default_intensities(PerturbationColumn column) {
  const ColumnInfo& i = info(column);
  std::vector<double> out;
  for (int k = 0; k < 6; ++k) out.push_back(i.start + k * i.step);
  return out;
}

double intensity_offset(PerturbationColumn column, double raw_intensity) {
  return raw_intensity - info(column).start;
}

std::optional<double> plane_log_step(const Vec3& ray_i, const Vec3& ray_j, const Vec3& normal) {
  const double a = ray_i.dot(normal);
  const double b = ray_j.dot(normal);
  if (!(a * b > 0.0)) return std::nullopt;
  return std::log(a / b);
}

DepthMap perturb_surface_orientation(const DepthMap& gt, const CameraIntrinsics& intr,
                                     double angle_deg, const Vec3& axis,
                                     const GradientSolveOptions& options, SolveReport* report) {
  if (!std::isfinite(angle_deg)) throw InvalidInput("rotation angle must be finite");
  if (!(axis.norm() > 0.0)) throw InvalidInput("rotation axis must be non-zero");
  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(angle_deg * std::numbers::pi / 180.0, axis.normalized()).toRotationMatrix();
  return solve_log_depth(gt, intr, intr, [&](const Vec3& n) { return Vec3(rot * n); }, options, report);
}

PerturbedDepth perturb_camera_intrinsics(const DepthMap& gt, const CameraIntrinsics& intr, double s,
                                         const GradientSolveOptions& options) {
  if (!(s >= 1.0)) throw InvalidInput("focal scale must be >= 1");
  CameraIntrinsics target = intr;
  target.fx *= s;
  target.fy *= s;
  PerturbedDepth out;
  out.intrinsics = target;
  out.depth = solve_log_depth(gt, intr, target, [](const Vec3& n) { return n; }, options, &out.solve);
  return out;
}

ScalePartition relative_scale_partition(const DepthMap& gt, double boundary_ratio) {
  ScalePartition p;
  p.region.assign(gt.size(), 255);
  std::vector<int> labels;
  const int count = connected_components(gt, detect_occlusion_boundaries(gt, boundary_ratio), labels);
  if (count == 2) {
    std::array<std::vector<double>, 2> depths;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (labels[i] >= 0) depths[labels[i]].push_back(gt.at(i));
    }
    const int near = median(depths[0]) <= median(depths[1]) ? 0 : 1;
    p.from_boundaries = true;
    p.d_l = *std::max_element(depths[near].begin(), depths[near].end());
    p.d_r = *std::min_element(depths[1 - near].begin(), depths[1 - near].end());
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (labels[i] >= 0) p.region[i] = labels[i] == near ? 0 : 2;
    }
    return p;
  }

  std::vector<double> v = valid_values(gt);
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const double min_tail = 0.3 * static_cast<double>(n);
  bool found = false;
  double best = 0.0;
  for (std::size_t i = 60; i + 10 <= 140; ++i) {
    const double dl = v[i * (n - 1) / 200];
    const double dr = v[(i + 10) * (n - 1) / 200];
    if (!(dl < dr)) continue;
    const auto below = static_cast<double>(std::lower_bound(v.begin(), v.end(), dl) - v.begin());
    const auto above = static_cast<double>(v.end() - std::upper_bound(v.begin(), v.end(), dr));
    if (below < min_tail || above < min_tail) continue;
    const double ratio = dr / dl;
    if (!found || ratio < best) {
      found = true;
      best = ratio;
      p.d_l = dl;
      p.d_r = dr;
    }
  }
  if (!found) throw InfeasibleError("no depth split satisfies the relative-scale constraints");
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt.valid_at(i)) continue;
    const double d = gt.at(i);
    p.region[i] = d <= p.d_l ? 0 : (d >= p.d_r ? 2 : 1);
  }
  return p;
}

DepthMap perturb_relative_scale(const DepthMap& gt, double s) {
  if (!(s >= 1.0)) throw InvalidInput("relative scale must be >= 1");
  if (s == 1.0) return gt;
  const ScalePartition p = relative_scale_partition(gt);
  return map_valid(gt, [&](double d, std::size_t i) {
    switch (p.region[i]) {
      case 0: return d;
      case 2: return d * s;
      default: return d * (1.0 + (s - 1.0) * (d - p.d_l) / (p.d_r - p.d_l));
    }
  });
}

double counter_uniform(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t z = splitmix64(splitmix64(seed) ^ index);
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

std::vector<double> gaussian_smooth(const std::vector<double>& field, int height, int width,
                                    double sigma) {
  if (field.size() != static_cast<std::size_t>(height) * width) {
    throw InvalidInput("field size does not match dimensions");
  }
  if (sigma <= 0.0) return field;
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
    total += kernel[k + radius];
  }
  for (double& k : kernel) k /= total;

  std::vector<double> tmp(field.size()), out(field.size());
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double s = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        s += kernel[k + radius] * field[static_cast<std::size_t>(r) * width + reflect(c + k, width)];
      }
      tmp[static_cast<std::size_t>(r) * width + c] = s;
    }
  }
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double s = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        s += kernel[k + radius] * tmp[static_cast<std::size_t>(reflect(r + k, height)) * width + c];
      }
      out[static_cast<std::size_t>(r) * width + c] = s;
    }
  }
  return out;
}

std::vector<double> curvature_multiplier(int height, int width, double s, double sigma,
                                         std::uint64_t seed) {
  if (!(s >= 0.0)) throw InvalidInput("curvature amplitude must be >= 0");
  std::vector<double> k(static_cast<std::size_t>(height) * width);
  for (std::size_t i = 0; i < k.size(); ++i) {
    k[i] = s == 0.0 ? 1.0 : 1.0 - s + 2.0 * s * counter_uniform(seed, i);
  }
  if (s == 0.0) return k;
  std::vector<double> out = gaussian_smooth(k, height, width, sigma);
  for (double& v : out) v = std::max(v, 0.1);
  return out;
}

DepthMap perturb_curvature(const DepthMap& gt, double s, double sigma, std::uint64_t seed) {
  const auto m = curvature_multiplier(gt.height(), gt.width(), s, sigma, seed);
  return map_valid(gt, [&](double d, std::size_t i) { return d * m[i]; });
}

DepthMap perturb_affine_depth(const DepthMap& gt, double s) {
  if (!(s >= 1.0)) throw InvalidInput("affine scale must be >= 1");
  std::vector<double> v = valid_values(gt);
  const double med = median(v);
  for (double& x : v) x /= s;
  const double shift = med - median(std::move(v));
  return map_valid(gt, [&](double d, std::size_t) { return d / s + shift; });
}

DepthMap perturb_affine_disparity(const DepthMap& gt, double s) {
  if (!(s >= 1.0)) throw InvalidInput("affine scale must be >= 1");
  std::vector<double> v = valid_values(gt);
  for (double& x : v) x = 1.0 / x;
  const double med = median(v);
  for (double& x : v) x /= s;
  const double shift = med - median(std::move(v));
  return map_valid(gt, [&](double d, std::size_t) {
    return 1.0 / std::max((1.0 / d) / s + shift, 1e-6);
  });
}

DepthMap perturb_boundary(const DepthMap& gt, int s) {
  if (s < 0) throw InvalidInput("boundary half-width must be >= 0");
  if (s == 0) return gt;
  const int h = gt.height();
  const int w = gt.width();
  // Integral images of masked values and counts.
  const std::size_t stride = static_cast<std::size_t>(w) + 1;
  std::vector<double> sum((h + 1) * stride, 0.0);
  std::vector<double> cnt((h + 1) * stride, 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const bool ok = gt.valid(r, c);
      const std::size_t k = (r + 1) * stride + (c + 1);
      sum[k] = (ok ? gt(r, c) : 0.0) + sum[k - 1] + sum[k - stride] - sum[k - stride - 1];
      cnt[k] = (ok ? 1.0 : 0.0) + cnt[k - 1] + cnt[k - stride] - cnt[k - stride - 1];
    }
  }
  auto box = [&](const std::vector<double>& t, int r0, int c0, int r1, int c1) {
    return t[r1 * stride + c1] - t[r0 * stride + c1] - t[r1 * stride + c0] + t[r0 * stride + c0];
  };
  return map_valid(gt, [&](double d, std::size_t i) {
    const int r = static_cast<int>(i / w);
    const int c = static_cast<int>(i % w);
    const int r0 = std::max(0, r - s), r1 = std::min(h, r + s + 1);
    const int c0 = std::max(0, c - s), c1 = std::min(w, c + s + 1);
    const double mean = box(sum, r0, c0, r1, c1) / box(cnt, r0, c0, r1, c1);
    return std::clamp(mean, 0.7 * d, 1.3 * d);
  });
}

PerturbedDepth apply_perturbation(const DepthMap& gt, const CameraIntrinsics& intr,
                                  const PerturbationSpec& spec, const GradientSolveOptions& options) {
  spec.validate();
  switch (spec.kind) {
    case PerturbationKind::kSurfaceOrientation:
    {
      PerturbedDepth out;
      out.intrinsics = intr;
      out.depth = perturb_surface_orientation(gt, intr, spec.intensity, spec.axis, options, &out.solve);
      return out;
    }
    case PerturbationKind::kCameraIntrinsics:
      return perturb_camera_intrinsics(gt, intr, spec.intensity, options);
    case PerturbationKind::kRelativeScale:
      return {perturb_relative_scale(gt, spec.intensity), intr, {}};
    case PerturbationKind::kCurvature:
      return {perturb_curvature(gt, spec.intensity, spec.sigma, spec.seed), intr, {}};
    case PerturbationKind::kAffineDepth:
      return {perturb_affine_depth(gt, spec.intensity), intr, {}};
    case PerturbationKind::kAffineDisparity:
      return {perturb_affine_disparity(gt, spec.intensity), intr, {}};
    case PerturbationKind::kBoundary:
      return {perturb_boundary(gt, static_cast<int>(spec.intensity)), intr, {}};
  }
  throw InvalidInput("unknown perturbation kind");
}

std::vector<std::pair<double, PerturbedDepth>> sweep(const DepthMap& gt, const CameraIntrinsics& intr,
                                                     const PerturbationSpec& base,
                                                     const std::vector<double>& intensities,
                                                     const GradientSolveOptions& options) {
  std::vector<std::pair<double, PerturbedDepth>> out;
  out.reserve(intensities.size());
  for (double x : intensities) {
    PerturbationSpec s = base;
    s.intensity = x;
    out.emplace_back(x, apply_perturbation(gt, intr, s, options));
  }
  return out;
}

}  // namespace mdeval
