#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>

#include "mdeval/fixtures.hpp"
#include "mdeval/perturb.hpp"
#include "mdeval/render.hpp"

namespace mdeval {
namespace {

TEST(LightRig, StandardRig) {
  const auto rig = LightRig::standard();
  ASSERT_EQ(rig.directions.size(), 4u);
  for (const auto& l : rig.directions) {
    EXPECT_NEAR(l.norm(), 1.0, 1e-15);
    EXPECT_NEAR(l.z(), -std::sin(std::numbers::pi / 4), 1e-15);
  }
  LightRig bad;
  bad.directions = {Vec3(0, 0, -1)};
  EXPECT_THROW(bad.validate(), InvalidInput);
}

TEST(Lambert, ClampsBothEnds) {
  EXPECT_DOUBLE_EQ(lambert(Vec3(0, 0, -1), Vec3(0, 0, 1), 0.15), 0.15);
  EXPECT_DOUBLE_EQ(lambert(Vec3(0, 0, -1), Vec3(0, 0, -1), 0.15), 1.0);
  EXPECT_NEAR(lambert(Vec3(0, 0, -1), Vec3(0, 0.6, -0.8), 0.1), 0.9, 1e-15);
}

TEST(Rasterize, SingleTriangleCoverage) {
  TriangleMesh mesh;
  mesh.vertices = {Vec3(0, 0, 1), Vec3(4, 0, 1), Vec3(0, 4, 1)};
  mesh.triangles = {{0, 1, 2}};
  const CameraIntrinsics k{1, 1, 0, 0};
  const auto r = rasterize(mesh, k, {}, 6, 6);
  int covered = 0;
  for (int row = 0; row < 6; ++row) {
    for (int col = 0; col < 6; ++col) {
      const bool inside = row + col <= 4;
      EXPECT_EQ(r.triangle[row * 6 + col] == 0, inside) << row << "," << col;
      covered += inside;
    }
  }
  EXPECT_EQ(covered, 15);
  const auto& b = r.bary[1 * 6 + 2];
  EXPECT_NEAR(b[1], 0.5, 1e-12);
  EXPECT_NEAR(b[2], 0.25, 1e-12);
}

TEST(Rasterize, NearestWins) {
  TriangleMesh mesh;
  mesh.vertices = {Vec3(-5, -5, 3), Vec3(5, -5, 3), Vec3(0, 5, 3), Vec3(-5, -5, 2), Vec3(5, -5, 2), Vec3(0, 5, 2)};
  mesh.triangles = {{0, 1, 2}, {3, 4, 5}};
  const auto r = rasterize(mesh, {1, 1, 0, 0}, {}, 1, 1);
  EXPECT_EQ(r.triangle[0], 1);
  EXPECT_NEAR(r.depth[0], 2.0, 1e-12);
}

TEST(Relight, PlanesMatchAnalyticShading) {
  for (SceneKind kind : {SceneKind::kFrontoPlane, SceneKind::kSlantedPlane}) {
    const auto s = generate_scene(kind, 32, 32);
    const auto rig = LightRig::standard();
    const auto imgs = textureless_relight(s.depth, s.intrinsics, rig);
    ASSERT_EQ(imgs.size(), 4u);
    for (std::size_t l = 0; l < 4; ++l) {
      const double expect = 255.0 * lambert(s.normals.normals[0], rig.directions[l], rig.ambient);
      for (int r = 1; r < 31; ++r) {
        for (int c = 1; c < 31; ++c) ASSERT_LE(std::abs(imgs[l].at(r, c) - expect), 1.0) << r << "," << c;
      }
    }
  }
}

TEST(Contours, StraightOnPlanes) {
  const auto s = generate_scene(SceneKind::kSlantedPlane, 64, 64);
  const auto img = projected_contours(s.depth, s.intrinsics, {});
  const auto comps = pixel_components(img, kContourInk);
  ASSERT_GE(comps.size(), 3u);
  for (const auto& comp : comps) EXPECT_LT(max_line_deviation(comp), 1.0);
}

TEST(Contours, SpacingDefaultsToRangeOverTwenty) {
  const auto s = generate_scene(SceneKind::kRamp, 8, 40);
  EXPECT_NEAR(default_contour_spacing(s.depth, s.intrinsics, ContourAxis::kZ), 2.0 / 20, 1e-12);
}

TEST(Components, EightConnected) {
  Image img(4, 4, 1, 9);
  img.at(0, 0) = 0;
  img.at(1, 1) = 0;
  img.at(3, 3) = 0;
  const auto comps = pixel_components(img, 0);
  ASSERT_EQ(comps.size(), 2u);
  EXPECT_EQ(comps[0].size(), 2u);
  EXPECT_NEAR(max_line_deviation({{0, 0}, {1, 1}, {2, 2}}), 0.0, 1e-12);
}

TEST(Relight, CurvedWallHasMoreVariance) {
  const auto s = generate_scene(SceneKind::kFrontoPlane, 64, 64);
  const auto bumpy = perturb_curvature(s.depth, 0.02, 1.0, 3);
  auto variance = [](const Image& im) {
    double m = 0, v = 0;
    const double n = static_cast<double>(im.pixels.size());
    for (auto p : im.pixels) m += p;
    m /= n;
    for (auto p : im.pixels) v += (p - m) * (p - m);
    return v / n;
  };
  const auto flat = textureless_relight(s.depth, s.intrinsics);
  const auto curved = textureless_relight(bumpy, s.intrinsics);
  for (std::size_t l = 0; l < flat.size(); ++l) EXPECT_GT(variance(curved[l]), variance(flat[l]));
}

TEST(Textured, IdentityPoseReproducesImage) {
  const auto room = generate_room_scene(4, 24, 32);
  const auto views = textured_views(room.depth, room.intrinsics, room.rgb, {CameraPose{}});
  ASSERT_EQ(views.size(), 1u);
  int same = 0, total = 0;
  for (int r = 0; r < 24; ++r) {
    for (int c = 0; c < 32; ++c) {
      ++total;
      same += views[0].at(r, c, 0) == room.rgb.at(r, c, 0) && views[0].at(r, c, 2) == room.rgb.at(r, c, 2);
    }
  }
  EXPECT_GT(same, total * 9 / 10);
}

// Golden images. Set MDEVAL_UPDATE_GOLDEN=1 to rewrite them.
struct Golden {
  std::string name;
  Image image;
};

std::vector<Golden> golden_images() {
  const auto sphere = generate_scene(SceneKind::kSphereCap, 48, 48);
  const auto room = generate_room_scene(2, 48, 64);
  std::vector<Golden> out;
  const auto relit = textureless_relight(sphere.depth, sphere.intrinsics);
  out.push_back({"sphere_relight_0.png", relit[0]});
  out.push_back({"room_relight_2.png", textureless_relight(room.depth, room.intrinsics)[2]});
  out.push_back({"sphere_contours_z.png", projected_contours(sphere.depth, sphere.intrinsics, {})});
  out.push_back({"room_contours_x.png", projected_contours(room.depth, room.intrinsics, {ContourAxis::kX, 0.0, 1.0})});
  return out;
}

TEST(Golden, ImagesAreByteStable) {
  const std::filesystem::path dir(MDEVAL_GOLDEN_DIR);
  const bool update = std::getenv("MDEVAL_UPDATE_GOLDEN") != nullptr;
  for (const auto& g : golden_images()) {
    const auto path = (dir / g.name).string();
    if (update) write_png(path, g.image);
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    const Image ref = read_png(path);
    EXPECT_EQ(image_hash(ref), image_hash(g.image)) << g.name;
    EXPECT_TRUE(ref == g.image) << g.name;
  }
}

}  // namespace
}  // namespace mdeval
