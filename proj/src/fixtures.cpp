#include "mdeval/fixtures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <json.hpp>

#include "mdeval/csv.hpp"

namespace mdeval {

namespace {

constexpr std::array<std::pair<SceneKind, std::string_view>, 5> kSceneNames{{
    {SceneKind::kFrontoPlane, "fronto_plane"},
    {SceneKind::kSlantedPlane, "slanted_plane"},
    {SceneKind::kSphereCap, "sphere_cap"},
    {SceneKind::kStep, "step"},
    {SceneKind::kRamp, "ramp"},
}};

constexpr double kSlantDeg = 30.0;
constexpr double kSphereCenter = 6.0;
constexpr double kSphereRadius = 4.0;

Vec3 facing(Vec3 n, const Vec3& p) {
  n.normalize();
  return n.dot(p) > 0.0 ? Vec3(-n) : n;
}

nlohmann::json load_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

// Nearest positive hit of a ray (origin 0) with the inside of an axis-aligned box.
double hit_room(const Vec3& d, const Vec3& lo, const Vec3& hi, int* face) {
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) continue;
    const double t = (d[a] > 0.0 ? hi[a] : lo[a]) / d[a];
    if (t > 0.0 && t < best) {
      best = t;
      *face = 2 * a + (d[a] > 0.0 ? 1 : 0);
    }
  }
  return best;
}

double hit_sphere(const Vec3& d, const Vec3& c, double r) {
  const double a = d.dot(d);
  const double b = -2.0 * d.dot(c);
  const double k = c.dot(c) - r * r;
  const double disc = b * b - 4.0 * a * k;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  const double t = (-b - std::sqrt(disc)) / (2.0 * a);
  return t > 0.0 ? t : std::numeric_limits<double>::infinity();
}

double hit_box(const Vec3& d, const Vec3& lo, const Vec3& hi) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (0.0 < lo[a] || 0.0 > hi[a]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double ta = lo[a] / d[a], tb = hi[a] / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return (t0 > 0.0 && t0 <= t1) ? t0 : std::numeric_limits<double>::infinity();
}

}  // namespace

std::string_view to_string(SceneKind kind) {
  for (const auto& [k, n] : kSceneNames) {
    if (k == kind) return n;
  }
  return "unknown";
}

SceneKind parse_scene_kind(std::string_view name) {
  for (const auto& [k, n] : kSceneNames) {
    if (n == name) return k;
  }
  throw FormatError("unknown scene kind '" + std::string(name) + "'");
}

std::vector<SceneKind> all_scene_kinds() {
  std::vector<SceneKind> out;
  for (const auto& [k, n] : kSceneNames) out.push_back(k);
  return out;
}

CameraIntrinsics default_intrinsics(int height, int width) {
  return {static_cast<double>(width), static_cast<double>(width), 0.5 * (width - 1), 0.5 * (height - 1)};
}

AnalyticScene generate_scene(SceneKind kind, int height, int width) {
  return generate_scene(kind, height, width, default_intrinsics(height, width));
}

AnalyticScene generate_scene(SceneKind kind, int height, int width, const CameraIntrinsics& intr) {
  intr.validate();
  AnalyticScene s;
  s.kind = kind;
  s.intrinsics = intr;
  s.depth = DepthMap(height, width);
  s.normals.height = height;
  s.normals.width = width;
  s.normals.normals.assign(static_cast<std::size_t>(height) * width, Vec3::Zero());
  s.normals.valid.assign(s.normals.normals.size(), 1);

  const double th = kSlantDeg * std::numbers::pi / 180.0;
  const Vec3 slant_n(0.0, -std::sin(th), -std::cos(th));
  const double slant_k = 3.0 * std::cos(th);
  const Vec3 center(0.0, 0.0, kSphereCenter);

  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const Vec3 ray = intr.ray(c, r);
      double z = 0.0;
      Vec3 n(0.0, 0.0, -1.0);
      switch (kind) {
        case SceneKind::kFrontoPlane:
          z = 2.0;
          break;
        case SceneKind::kSlantedPlane:
          z = -slant_k / slant_n.dot(ray);
          n = slant_n;
          break;
        case SceneKind::kSphereCap: {
          const double t = hit_sphere(ray, center, kSphereRadius);
          if (!std::isfinite(t)) throw InvalidInput("sphere cap does not cover the view");
          z = t;
          n = (ray * t - center) / kSphereRadius;
          break;
        }
        case SceneKind::kStep:
          z = c < width / 2 ? 2.0 : 4.0;
          break;
        case SceneKind::kRamp: {
          const double k = 2.0 / (width - 1);
          z = 2.0 + k * c;
          // p(u, v) = ray(u, v) z(u): tangents along u and v.
          const Vec3 pu = Vec3(1.0 / intr.fx, 0.0, 0.0) * z + ray * k;
          const Vec3 pv = Vec3(0.0, 1.0 / intr.fy, 0.0) * z;
          n = pu.cross(pv);
          break;
        }
      }
      s.depth.set(r, c, z);
      s.normals.normals[s.depth.index(r, c)] = facing(n, ray * z);
    }
  }
  return s;
}

SyntheticScene generate_room_scene(std::uint64_t seed, int height, int width) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * U(rng); };

  SyntheticScene s;
  s.id = "room_" + std::to_string(seed);
  s.intrinsics = default_intrinsics(height, width);
  const Vec3 lo(-uni(1.5, 3.0), -uni(1.0, 1.6), -0.5);
  const Vec3 hi(uni(1.5, 3.0), uni(1.0, 1.6), uni(4.0, 8.0));

  struct Sphere {
    Vec3 c;
    double r;
  };
  struct Box {
    Vec3 lo, hi;
  };
  std::vector<Sphere> spheres;
  std::vector<Box> boxes;
  const int ns = 1 + static_cast<int>(U(rng) * 2.0);
  const int nb = 1 + static_cast<int>(U(rng) * 2.0);
  for (int k = 0; k < ns; ++k) {
    const double r = uni(0.25, 0.6);
    spheres.push_back({Vec3(uni(lo.x() + r, hi.x() - r) * 0.5, uni(lo.y() + r, hi.y() - r) * 0.5,
                            uni(1.8, hi.z() - r - 0.5)),
                       r});
  }
  for (int k = 0; k < nb; ++k) {
    const Vec3 size(uni(0.3, 0.9), uni(0.3, 0.9), uni(0.3, 0.9));
    const Vec3 base(uni(lo.x(), hi.x() - size.x()) * 0.6, hi.y() - size.y(),
                    uni(2.0, hi.z() - size.z() - 0.3));
    boxes.push_back({base, base + size});
  }
  std::array<std::array<double, 3>, 10> palette{};
  for (auto& col : palette) col = {uni(0.2, 0.9), uni(0.2, 0.9), uni(0.2, 0.9)};

  s.depth = DepthMap(height, width);
  s.rgb = Image(width, height, 3, 0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const Vec3 ray = s.intrinsics.ray(c, r);
      int face = 0;
      double t = hit_room(ray, lo, hi, &face);
      int id = face;
      for (std::size_t k = 0; k < spheres.size(); ++k) {
        const double ts = hit_sphere(ray, spheres[k].c, spheres[k].r);
        if (ts < t) {
          t = ts;
          id = 6 + static_cast<int>(k % 2);
        }
      }
      for (std::size_t k = 0; k < boxes.size(); ++k) {
        const double tb = hit_box(ray, boxes[k].lo, boxes[k].hi);
        if (tb < t) {
          t = tb;
          id = 8 + static_cast<int>(k % 2);
        }
      }
      if (!std::isfinite(t)) continue;
      s.depth.set(r, c, t);
      const Vec3 p = ray * t;
      const bool check = (static_cast<int>(std::floor(p.x() * 2.0)) + static_cast<int>(std::floor(p.y() * 2.0)) +
                          static_cast<int>(std::floor(p.z() * 2.0))) % 2 == 0;
      for (int ch = 0; ch < 3; ++ch) {
        const double v = palette[id][ch] * (check ? 1.0 : 0.8);
        s.rgb.at(r, c, ch) = static_cast<std::uint8_t>(std::lround(255.0 * v));
      }
    }
  }
  return s;
}

std::string fixture_dir() { return MDEVAL_FIXTURE_DIR; }

std::map<std::string, FixtureValue> load_published_values(const std::string& dir) {
  const nlohmann::json j = load_json(dir + "/published_values.json");
  if (!j.is_object() || !j.contains("values") || !j["values"].is_object()) {
    throw FormatError("published_values.json needs a 'values' object");
  }
  std::map<std::string, FixtureValue> out;
  for (const auto& [name, entry] : j["values"].items()) {
    if (!entry.contains("value") || !entry["value"].is_number()) {
      throw FormatError("fixture '" + name + "' has no numeric value");
    }
    if (!entry.contains("citation") || !entry["citation"].is_string() ||
        entry["citation"].get<std::string>().empty()) {
      throw FormatError("fixture '" + name + "' has no citation");
    }
    out[name] = {entry["value"].get<double>(), entry["citation"].get<std::string>()};
  }
  return out;
}

FixtureValue published_value(const std::string& name, const std::string& dir) {
  const auto all = load_published_values(dir);
  const auto it = all.find(name);
  if (it == all.end()) throw InvalidInput("unknown fixture '" + name + "'");
  return it->second;
}

SensitivityFixture sensitivity_rows_fixture(const std::string& dir) {
  const nlohmann::json j = load_json(dir + "/published_values.json");
  if (!j.contains("sensitivity_rows")) throw FormatError("published_values.json lacks 'sensitivity_rows'");
  const auto& e = j["sensitivity_rows"];
  SensitivityFixture f;
  f.status = e.value("status", "");
  f.citation = e.value("citation", "");
  if (f.citation.empty()) throw FormatError("sensitivity rows fixture has no citation");
  f.rows = parse_sensitivity_csv(read_text_file(dir + "/" + e.value("file", "")));
  return f;
}

}  // namespace mdeval
