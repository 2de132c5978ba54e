#include <gtest/gtest.h>

#include <filesystem>

#include <json.hpp>
#include <unistd.h>

#include "mdeval/csv.hpp"
#include "mdeval/depth_io.hpp"
#include "mdeval/fixtures.hpp"
#include "mdeval/pipeline.hpp"

namespace mdeval {
namespace {

namespace fs = std::filesystem;

DepthMap scaled(const DepthMap& d, double f) {
  std::vector<double> v(d.values().begin(), d.values().end());
  for (double& x : v) x *= f;
  return DepthMap::from_values(d.height(), d.width(), v);
}

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("mdeval_pipe_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Adds a scene whose "m" prediction is gt * (1 + err); absrel is err.
  void add(const std::string& id, const std::string& dataset, SceneKind kind, double err, bool accurate) {
    const auto s = generate_scene(kind, 16, 16);
    write_pfm(path(id + "_gt.pfm"), s.depth);
    write_intrinsics(path(id + "_k.json"), s.intrinsics);
    write_pfm(path(id + "_m.pfm"), scaled(s.depth, 1.0 + err));
    SceneEntry e;
    e.id = id;
    e.dataset = dataset;
    e.gt = id + "_gt.pfm";
    e.intrinsics = id + "_k.json";
    e.predictions["m"] = id + "_m.pfm";
    e.boundary_accurate = accurate;
    manifest_.scenes.push_back(e);
  }
  SceneManifest load() {
    write_text_file(path("manifest.json"), manifest_.to_json());
    return SceneManifest::load(path("manifest.json"));
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
  SceneManifest manifest_;
};

TEST_F(PipelineTest, ManifestResolvesRelativePathsAndValidates) {
  add("a", "d", SceneKind::kFrontoPlane, 0.0, false);
  const auto m = load();
  EXPECT_EQ(m.scenes[0].gt, path("a_gt.pfm"));
  EXPECT_NO_THROW(m.validate(true));
  auto dup = m;
  dup.scenes.push_back(dup.scenes[0]);
  EXPECT_THROW(dup.validate(false), InvalidInput);
  auto missing = m;
  missing.scenes[0].gt = path("nope.pfm");
  EXPECT_THROW(missing.validate(true), Error);
  EXPECT_THROW(SceneManifest::parse("{\"scenes\": 3}", ""), FormatError);
}

TEST_F(PipelineTest, GroundTruthCopiesScoreZero) {
  add("a", "d", SceneKind::kSphereCap, 0.0, false);
  add("b", "d", SceneKind::kStep, 0.0, false);
  std::vector<MetricSpec> specs;
  for (auto s : metric_catalog()) {
    s.params.relnormal.samples = 20000;
    s.params.relnormal.radius = 4;
    specs.push_back(s);
  }
  const auto rep = run_eval(load(), specs, EvalRegime::kAlignGtIntrinsics, 2);
  for (const auto& c : rep.cells) {
    if (c.mean) EXPECT_LT(*c.mean, 1e-6) << c.metric;
  }
}

TEST_F(PipelineTest, BoundaryAccurateAverageByHand) {
  add("s1", "A", SceneKind::kSphereCap, 0.1, true);
  add("s2", "A", SceneKind::kSphereCap, 0.3, false);
  add("s3", "B", SceneKind::kSphereCap, 0.05, true);
  const auto rep = run_eval(load(), {MetricSpec::parse("absrel@none")}, EvalRegime::kAlignGtIntrinsics, 1);
  const auto* a = rep.find("m", "A", "absrel@none");
  const auto* all = rep.find("m", "overall", "absrel@none");
  const auto* acc = rep.find("m", "boundary_accurate", "absrel@none");
  ASSERT_TRUE(a && all && acc);
  EXPECT_NEAR(*a->mean, 0.2, 1e-6);
  EXPECT_NEAR(*all->mean, (0.2 + 0.05) / 2, 1e-6);
  EXPECT_NEAR(*acc->mean, (0.1 + 0.05) / 2, 1e-6);
  EXPECT_EQ(acc->scenes, 2u);
  // Removing the unflagged scene turns the overall average into the flagged one.
  EXPECT_NEAR(*all->mean - *acc->mean, ((0.1 + 0.3) / 2 - 0.1) / 2, 1e-6);
}

TEST_F(PipelineTest, DropsScenesWithoutGtEdges) {
  add("flat", "d", SceneKind::kFrontoPlane, 0.0, false);
  add("step", "d", SceneKind::kStep, 0.0, false);
  const auto rep = run_eval(load(), {MetricSpec::parse("boundary_f1@none")}, EvalRegime::kAlignGtIntrinsics, 1);
  const auto* c = rep.find("m", "overall", "boundary_f1@none");
  ASSERT_TRUE(c);
  EXPECT_EQ(c->scenes, 1u);
  EXPECT_EQ(c->dropped, (std::vector<std::string>{"flat"}));
}

TEST_F(PipelineTest, RegimesAreSeparate) {
  add("a", "d", SceneKind::kSphereCap, 0.2, false);
  const auto m = load();
  const std::vector<MetricSpec> specs{MetricSpec::parse("absrel@scale_depth")};
  const auto aligned = run_eval(m, specs, EvalRegime::kAlignGtIntrinsics, 1);
  const auto raw = run_eval(m, specs, EvalRegime::kNoAlignGtIntrinsics, 1);
  EXPECT_LT(*aligned.find("m", "d", "absrel@scale_depth")->mean, 1e-6);
  EXPECT_NEAR(*raw.find("m", "d", "absrel@none")->mean, 0.2, 1e-6);
  EXPECT_EQ(raw.find("m", "d", "absrel@scale_depth"), nullptr);
  EXPECT_THROW(run_eval(m, specs, EvalRegime::kNoAlignPredIntrinsics, 1), InvalidInput);
  const auto back = EvaluationReport::from_json(raw.to_json());
  EXPECT_EQ(back.regime, EvalRegime::kNoAlignGtIntrinsics);
  EXPECT_EQ(back.to_csv(), raw.to_csv());
}

TEST_F(PipelineTest, PredIntrinsicsRegime) {
  add("a", "d", SceneKind::kSlantedPlane, 0.0, false);
  auto wrong = manifest_.scenes[0];
  auto k = default_intrinsics(16, 16);
  k.fx *= 2;
  k.fy *= 2;
  write_intrinsics(path("a_pk.json"), k);
  manifest_.scenes[0].pred_intrinsics["m"] = "a_pk.json";
  const auto rep = run_eval(load(), {MetricSpec::parse("absrel_p@none")}, EvalRegime::kNoAlignPredIntrinsics, 1);
  EXPECT_GT(*rep.find("m", "d", "absrel_p@none")->mean, 1e-3);
}

StudyConfig small_study() {
  StudyConfig c;
  c.metrics = {MetricSpec::parse("absrel@none"), MetricSpec::parse("absrel@affine_disparity")};
  c.reference = "absrel@none";
  c.seed = 3;
  c.threads = 2;
  for (PerturbationColumn col : kAllColumns) {
    auto g = default_intensities(col);
    g.resize(3);
    c.grids[col] = g;
  }
  return c;
}

std::vector<LoadedScene> rooms(int n) {
  std::vector<LoadedScene> out;
  for (int i = 0; i < n; ++i) {
    auto r = generate_room_scene(100 + i, 32, 40);
    out.push_back({r.id, r.depth, r.intrinsics});
  }
  return out;
}

TEST(SensitivityStudy, ReferenceRowIsOnesAndDeterministic) {
  const auto scenes = rooms(2);
  const auto a = run_sensitivity_study(scenes, small_study());
  const auto b = run_sensitivity_study(scenes, small_study());
  ASSERT_EQ(a.rows.size(), 2u);
  for (double v : a.rows[0].values) EXPECT_NEAR(v, 1.0, 1e-12);
  EXPECT_EQ(sensitivity_csv(a.rows), sensitivity_csv(b.rows));
  StudyConfig bad = small_study();
  bad.reference = "rmse@none";
  EXPECT_THROW(run_sensitivity_study(scenes, bad), InvalidInput);
  bad.reference = "human";
  EXPECT_THROW(run_sensitivity_study(scenes, bad), InvalidInput);
}

TEST(SensitivityStudy, ConfigFromJson) {
  const auto c = StudyConfig::from_json(
      R"({"metrics": ["absrel@none", "relnormal@none[samples=1000]"], "seed": 9,
          "grids": {"boundary": [0, 2, 4]}, "axis": [0, 2, 0]})");
  EXPECT_EQ(c.metrics.size(), 2u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.grid(PerturbationColumn::kBoundary), (std::vector<double>{0, 2, 4}));
  EXPECT_EQ(c.grid(PerturbationColumn::kAffineDepth), default_intensities(PerturbationColumn::kAffineDepth));
  EXPECT_EQ(c.axis, Vec3(0, 1, 0));
  EXPECT_THROW(StudyConfig::from_json("{\"grids\": {\"nope\": [1]}}"), FormatError);
}

TEST_F(PipelineTest, SensitivityDatasetArchive) {
  const auto scenes = rooms(2);
  const auto cfg = small_study();
  const auto out = path("archive");
  const std::size_t n = make_sensitivity_dataset(scenes, cfg, out);
  const auto index = nlohmann::json::parse(read_text_file(out + "/index.json"));
  std::size_t grid_total = 0;
  for (PerturbationColumn c : kAllColumns) grid_total += cfg.grid(c).size();
  EXPECT_EQ(n + index["skipped"].size(), scenes.size() * grid_total);
  EXPECT_EQ(index["files"].size(), n);
  for (const auto& f : index["files"]) {
    const auto d = read_pfm(out + "/" + f.get<std::string>());
    EXPECT_EQ(d.height(), 32);
  }
  // Identity-intensity files equal gt at float precision.
  const auto id0 = read_pfm(out + "/" + scenes[0].id + "/affine_depth_0.pfm");
  for (std::size_t i = 0; i < id0.size(); ++i) {
    EXPECT_EQ(id0.at(i), static_cast<double>(static_cast<float>(scenes[0].gt.at(i))));
  }
  const auto side = nlohmann::json::parse(read_text_file(out + "/" + scenes[0].id + "/curvature_high_1.json"));
  EXPECT_EQ(side["kind"], "curvature");
  EXPECT_EQ(side["sigma"], 1.0);
  EXPECT_TRUE(side.contains("solver_residual"));
}

}  // namespace
}  // namespace mdeval
