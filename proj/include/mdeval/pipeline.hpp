#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mdeval/metrics.hpp"
#include "mdeval/perturb.hpp"
#include "mdeval/sensitivity.hpp"

namespace mdeval {

struct SceneEntry {
  std::string id;
  std::string dataset = "default";
  std::string rgb;
  std::string gt;
  std::string intrinsics;
  /// method -> depth prediction path.
  std::map<std::string, std::string> predictions;
  /// method -> predicted intrinsics path (for the pred-intrinsics regime).
  std::map<std::string, std::string> pred_intrinsics;
  bool boundary_accurate = false;
};

/// JSON manifest: {"scenes": [{"id", "dataset", "rgb", "gt", "intrinsics",
/// "predictions": {method: path}, "pred_intrinsics": {method: path},
/// "boundary_accurate": bool}]}. Relative paths resolve against the
/// manifest's directory.
struct SceneManifest {
  std::vector<SceneEntry> scenes;

  static SceneManifest load(const std::string& path);
  static SceneManifest parse(const std::string& json_text, const std::string& base_dir);
  std::string to_json() const;
  /// Unique ids; with `check_files`, every referenced file exists and parses.
  void validate(bool check_files = true) const;
  std::vector<std::string> methods() const;
};

enum class EvalRegime {
  /// Spec alignment applied, ground-truth intrinsics.
  kAlignGtIntrinsics,
  /// No alignment, ground-truth intrinsics.
  kNoAlignGtIntrinsics,
  /// No alignment, predicted intrinsics.
  kNoAlignPredIntrinsics,
};

std::string_view to_string(EvalRegime regime);
EvalRegime parse_eval_regime(std::string_view name);

struct ReportCell {
  std::string method;
  std::string dataset;  // dataset name, "overall" or "boundary_accurate"
  std::string metric;
  std::optional<double> mean;
  std::size_t scenes = 0;
  /// Scenes where the metric was absent (e.g. no ground-truth edges).
  std::vector<std::string> dropped;
};

/// One regime only; reports from different regimes are never combined.
struct EvaluationReport {
  EvalRegime regime = EvalRegime::kAlignGtIntrinsics;
  std::vector<ReportCell> cells;

  std::string to_csv() const;
  std::string to_json() const;
  static EvaluationReport from_json(const std::string& text);
  const ReportCell* find(const std::string& method, const std::string& dataset,
                         const std::string& metric) const;
};

/// Per-dataset means over scenes where the metric is defined, the "overall"
/// mean of dataset means, and the same over boundary-accurate scenes only.
/// Throws InvalidInput when a scene lacks a prediction (or predicted
/// intrinsics in the pred-intrinsics regime).
EvaluationReport run_eval(const SceneManifest& manifest, const std::vector<MetricSpec>& specs,
                          EvalRegime regime, int threads = 0);

struct LoadedScene {
  std::string id;
  DepthMap gt;
  CameraIntrinsics intrinsics;
};

std::vector<LoadedScene> load_scenes(const SceneManifest& manifest);

struct StudyConfig {
  std::vector<MetricSpec> metrics;
  /// Reference metric label (must be one of `metrics`), or "human".
  std::string reference = "absrel@none";
  std::map<PerturbationColumn, std::vector<double>> grids;
  std::uint64_t seed = 0;
  Vec3 axis{1.0, 0.0, 0.0};
  GradientSolveOptions solver;
  int threads = 0;

  /// Grid for a column (the default grid unless overridden).
  std::vector<double> grid(PerturbationColumn column) const;
  /// JSON: {"metrics": [..], "reference": .., "grids": {column: [..]},
  /// "seed": .., "axis": [x, y, z], "threads": ..}.
  static StudyConfig from_json(const std::string& text);
};

/// Seed for the curvature noise of one scene.
std::uint64_t scene_seed(std::uint64_t seed, std::size_t scene_index);

struct StudySkip {
  std::string scene;
  PerturbationColumn column;
  std::string reason;
};

struct SensitivityStudy {
  /// metric label -> column -> response curve (mean over scenes).
  std::map<std::string, ColumnResponses> responses;
  std::vector<SensitivityVector> vectors;  // raw, one per metric
  std::vector<SensitivityRow> rows;        // normalized
  std::vector<StudySkip> skipped;
  std::vector<std::string> warnings;
};

/// Sweeps every scene through every column grid, evaluates all metrics,
/// averages per intensity over scenes, fits and forms normalized sensitivity
/// vectors against the reference. Scenes whose perturbation fails (solver
/// error, infeasible partition) are skipped for that column and logged.
/// `human` supplies the reference curves when config.reference == "human".
SensitivityStudy run_sensitivity_study(const std::vector<LoadedScene>& scenes, const StudyConfig& config,
                                       const ColumnResponses* human = nullptr);

/// Writes <out>/<scene>/<column>_<index>.pfm (+ .json provenance) for every
/// grid point and an index.json; returns the number of depth files.
std::size_t make_sensitivity_dataset(const std::vector<LoadedScene>& scenes, const StudyConfig& config,
                                     const std::string& out_dir);

}  // namespace mdeval
