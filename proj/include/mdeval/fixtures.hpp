#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mdeval/image.hpp"
#include "mdeval/sensitivity.hpp"
#include "mdeval/types.hpp"

namespace mdeval {

enum class SceneKind { kFrontoPlane, kSlantedPlane, kSphereCap, kStep, kRamp };

std::string_view to_string(SceneKind kind);
SceneKind parse_scene_kind(std::string_view name);
std::vector<SceneKind> all_scene_kinds();

struct AnalyticScene {
  SceneKind kind = SceneKind::kFrontoPlane;
  DepthMap depth;
  CameraIntrinsics intrinsics;
  /// Closed-form camera-facing unit normals at every pixel.
  NormalMap normals;
};

/// fx = fy = width, principal point at the image center.
CameraIntrinsics default_intrinsics(int height, int width);

/// Closed-form scenes:
///   fronto plane   z = 2;
///   slanted plane  tilted 30 degrees about the x axis, z = 3 on the center row;
///   sphere cap     front surface of a sphere (center z = 6, radius 4);
///   step           z = 2 on the left half, 4 on the right half;
///   ramp           z = 2 + 2 col / (W - 1).
AnalyticScene generate_scene(SceneKind kind, int height, int width);
AnalyticScene generate_scene(SceneKind kind, int height, int width, const CameraIntrinsics& intr);

/// Procedural room: a box with floor, walls and ceiling plus random spheres
/// and boxes, ray cast from a camera inside it. Deterministic in `seed`.
struct SyntheticScene {
  std::string id;
  DepthMap depth;
  CameraIntrinsics intrinsics;
  Image rgb;
};

SyntheticScene generate_room_scene(std::uint64_t seed, int height, int width);

struct FixtureValue {
  double value = 0.0;
  std::string citation;
};

/// Default fixture directory (compiled in).
std::string fixture_dir();

/// Named scalar from published_values.json. Every entry must carry a non-empty
/// citation; loading fails otherwise.
FixtureValue published_value(const std::string& name, const std::string& dir = fixture_dir());
std::map<std::string, FixtureValue> load_published_values(const std::string& dir = fixture_dir());

/// Digitized sensitivity rows (label + 8 normalized rates) and their status
/// ("verified" or "unverified").
struct SensitivityFixture {
  std::vector<SensitivityRow> rows;
  std::string status;
  std::string citation;
};
SensitivityFixture sensitivity_rows_fixture(const std::string& dir = fixture_dir());

}  // namespace mdeval
