#include "mdeval/pipeline.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include <json.hpp>

#include "mdeval/csv.hpp"
#include "mdeval/depth_io.hpp"
#include "mdeval/parallel.hpp"

namespace mdeval {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute() || base.empty()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

std::string fmt(double v) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  KahanSum s;
  for (double x : v) s.add(x);
  return s.sum / static_cast<double>(v.size());
}

ordered_json json_of(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}};
}

}  // namespace

SceneManifest SceneManifest::load(const std::string& path) {
  return parse(read_text_file(path), fs::path(path).parent_path().string());
}

SceneManifest SceneManifest::parse(const std::string& json_text, const std::string& base_dir) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  if (!j.contains("scenes") || !j["scenes"].is_array()) throw FormatError("manifest needs a 'scenes' array");
  SceneManifest m;
  for (const auto& s : j["scenes"]) {
    SceneEntry e;
    try {
      e.id = s.at("id").get<std::string>();
      e.dataset = s.value("dataset", std::string("default"));
      e.rgb = resolve(base_dir, s.value("rgb", std::string()));
      e.gt = resolve(base_dir, s.at("gt").get<std::string>());
      e.intrinsics = resolve(base_dir, s.at("intrinsics").get<std::string>());
      if (s.contains("predictions")) {
        for (const auto& [k, v] : s["predictions"].items()) e.predictions[k] = resolve(base_dir, v.get<std::string>());
      }
      if (s.contains("pred_intrinsics")) {
        for (const auto& [k, v] : s["pred_intrinsics"].items()) {
          e.pred_intrinsics[k] = resolve(base_dir, v.get<std::string>());
        }
      }
      e.boundary_accurate = s.value("boundary_accurate", false);
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(std::string("manifest scene entry: ") + ex.what());
    }
    m.scenes.push_back(std::move(e));
  }
  return m;
}

std::string SceneManifest::to_json() const {
  ordered_json j;
  j["scenes"] = ordered_json::array();
  for (const auto& s : scenes) {
    ordered_json e;
    e["id"] = s.id;
    e["dataset"] = s.dataset;
    if (!s.rgb.empty()) e["rgb"] = s.rgb;
    e["gt"] = s.gt;
    e["intrinsics"] = s.intrinsics;
    if (!s.predictions.empty()) e["predictions"] = s.predictions;
    if (!s.pred_intrinsics.empty()) e["pred_intrinsics"] = s.pred_intrinsics;
    e["boundary_accurate"] = s.boundary_accurate;
    j["scenes"].push_back(e);
  }
  return j.dump(2) + "\n";
}

void SceneManifest::validate(bool check_files) const {
  std::set<std::string> ids;
  for (const auto& s : scenes) {
    if (s.id.empty()) throw InvalidInput("scene with empty id");
    if (!ids.insert(s.id).second) throw InvalidInput("duplicate scene id '" + s.id + "'");
    if (!check_files) continue;
    read_depth(s.gt);
    read_intrinsics(s.intrinsics).validate();
    for (const auto& [m, p] : s.predictions) read_depth(p);
    for (const auto& [m, p] : s.pred_intrinsics) read_intrinsics(p).validate();
    if (!s.rgb.empty() && !fs::exists(s.rgb)) throw InvalidInput("missing rgb file " + s.rgb);
  }
}

std::vector<std::string> SceneManifest::methods() const {
  std::set<std::string> out;
  for (const auto& s : scenes) {
    for (const auto& [m, p] : s.predictions) out.insert(m);
  }
  return {out.begin(), out.end()};
}

std::string_view to_string(EvalRegime regime) {
  switch (regime) {
    case EvalRegime::kAlignGtIntrinsics: return "align_gt_intrinsics";
    case EvalRegime::kNoAlignGtIntrinsics: return "no_align_gt_intrinsics";
    case EvalRegime::kNoAlignPredIntrinsics: return "no_align_pred_intrinsics";
  }
  return "unknown";
}

EvalRegime parse_eval_regime(std::string_view name) {
  for (EvalRegime r : {EvalRegime::kAlignGtIntrinsics, EvalRegime::kNoAlignGtIntrinsics,
                       EvalRegime::kNoAlignPredIntrinsics}) {
    if (to_string(r) == name) return r;
  }
  throw FormatError("unknown evaluation regime '" + std::string(name) + "'");
}

std::string EvaluationReport::to_csv() const {
  std::string out = "regime,method,dataset,metric,mean,scenes,dropped\n";
  for (const auto& c : cells) {
    out += std::string(to_string(regime)) + "," + csv_field(c.method) + "," + csv_field(c.dataset) + "," +
           csv_field(c.metric) + "," + (c.mean ? fmt(*c.mean) : std::string()) + "," +
           std::to_string(c.scenes) + "," + std::to_string(c.dropped.size()) + "\n";
  }
  return out;
}

std::string EvaluationReport::to_json() const {
  ordered_json j;
  j["regime"] = to_string(regime);
  j["cells"] = ordered_json::array();
  for (const auto& c : cells) {
    ordered_json e;
    e["method"] = c.method;
    e["dataset"] = c.dataset;
    e["metric"] = c.metric;
    e["mean"] = c.mean ? ordered_json(*c.mean) : ordered_json(nullptr);
    e["scenes"] = c.scenes;
    e["dropped"] = c.dropped;
    j["cells"].push_back(e);
  }
  return j.dump(2) + "\n";
}

EvaluationReport EvaluationReport::from_json(const std::string& text) {
  EvaluationReport r;
  try {
    const auto j = ordered_json::parse(text);
    r.regime = parse_eval_regime(j.at("regime").get<std::string>());
    for (const auto& e : j.at("cells")) {
      ReportCell c;
      c.method = e.at("method").get<std::string>();
      c.dataset = e.at("dataset").get<std::string>();
      c.metric = e.at("metric").get<std::string>();
      if (!e.at("mean").is_null()) c.mean = e["mean"].get<double>();
      c.scenes = e.at("scenes").get<std::size_t>();
      c.dropped = e.at("dropped").get<std::vector<std::string>>();
      r.cells.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("report: ") + ex.what());
  }
  return r;
}

const ReportCell* EvaluationReport::find(const std::string& method, const std::string& dataset,
                                         const std::string& metric) const {
  for (const auto& c : cells) {
    if (c.method == method && c.dataset == dataset && c.metric == metric) return &c;
  }
  return nullptr;
}

EvaluationReport run_eval(const SceneManifest& manifest, const std::vector<MetricSpec>& specs,
                          EvalRegime regime, int threads) {
  manifest.validate(false);
  if (specs.empty()) throw InvalidInput("no metrics requested");
  // Effective specs for the regime, deduplicated in order.
  std::vector<MetricSpec> eff;
  for (MetricSpec s : specs) {
    if (regime != EvalRegime::kAlignGtIntrinsics) s.alignment = AlignmentMode::kNone;
    if (std::find(eff.begin(), eff.end(), s) == eff.end()) eff.push_back(s);
  }
  const auto methods = manifest.methods();
  if (methods.empty()) throw InvalidInput("manifest has no predictions");
  for (const auto& s : manifest.scenes) {
    for (const auto& m : methods) {
      if (!s.predictions.count(m)) throw InvalidInput("scene '" + s.id + "' lacks a prediction for " + m);
      if (regime == EvalRegime::kNoAlignPredIntrinsics && !s.pred_intrinsics.count(m)) {
        throw InvalidInput("scene '" + s.id + "' lacks predicted intrinsics for " + m);
      }
    }
  }

  const std::size_t ns = manifest.scenes.size();
  const std::size_t nm = methods.size();
  // values[scene * nm + method][spec]; NaN = absent.
  std::vector<std::vector<double>> values(ns * nm);
  parallel_for(ns * nm, threads, [&](std::size_t task) {
    const SceneEntry& s = manifest.scenes[task / nm];
    const std::string& m = methods[task % nm];
    const DepthMap gt = read_depth(s.gt);
    const CameraIntrinsics gi = read_intrinsics(s.intrinsics);
    const DepthMap pred = read_depth(s.predictions.at(m));
    std::optional<CameraIntrinsics> pi;
    if (regime == EvalRegime::kNoAlignPredIntrinsics) pi = read_intrinsics(s.pred_intrinsics.at(m));
    auto& row = values[task];
    row.assign(eff.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < eff.size(); ++k) {
      try {
        if (const auto v = evaluate(eff[k], pred, gt, gi, pi)) row[k] = v->value;
      } catch (const AlignmentError&) {
        // Recorded as absent for this scene.
      }
    }
  });

  std::set<std::string> datasets;
  for (const auto& s : manifest.scenes) datasets.insert(s.dataset);

  EvaluationReport report;
  report.regime = regime;
  for (std::size_t mi = 0; mi < nm; ++mi) {
    for (std::size_t k = 0; k < eff.size(); ++k) {
      const std::string label = eff[k].to_string();
      std::vector<double> dataset_means, accurate_means;
      std::vector<std::string> all_dropped, accurate_dropped;
      std::size_t all_scenes = 0, accurate_scenes = 0;
      for (const auto& d : datasets) {
        ReportCell cell{methods[mi], d, label, std::nullopt, 0, {}};
        std::vector<double> vals, acc;
        for (std::size_t si = 0; si < ns; ++si) {
          const SceneEntry& s = manifest.scenes[si];
          if (s.dataset != d) continue;
          const double v = values[si * nm + mi][k];
          if (std::isnan(v)) {
            cell.dropped.push_back(s.id);
            if (s.boundary_accurate) accurate_dropped.push_back(s.id);
            continue;
          }
          vals.push_back(v);
          if (s.boundary_accurate) acc.push_back(v);
        }
        cell.mean = mean_of(vals);
        cell.scenes = vals.size();
        all_scenes += vals.size();
        accurate_scenes += acc.size();
        if (cell.mean) dataset_means.push_back(*cell.mean);
        if (const auto am = mean_of(acc)) accurate_means.push_back(*am);
        all_dropped.insert(all_dropped.end(), cell.dropped.begin(), cell.dropped.end());
        report.cells.push_back(std::move(cell));
      }
      report.cells.push_back({methods[mi], "overall", label, mean_of(dataset_means), all_scenes, all_dropped});
      if (accurate_scenes > 0 || !accurate_dropped.empty()) {
        report.cells.push_back(
            {methods[mi], "boundary_accurate", label, mean_of(accurate_means), accurate_scenes, accurate_dropped});
      }
    }
  }
  return report;
}

std::vector<LoadedScene> load_scenes(const SceneManifest& manifest) {
  manifest.validate(false);
  std::vector<LoadedScene> out;
  for (const auto& s : manifest.scenes) {
    out.push_back({s.id, read_depth(s.gt), read_intrinsics(s.intrinsics)});
  }
  return out;
}

std::vector<double> StudyConfig::grid(PerturbationColumn column) const {
  const auto it = grids.find(column);
  return it == grids.end() ? default_intensities(column) : it->second;
}

StudyConfig StudyConfig::from_json(const std::string& text) {
  StudyConfig c;
  try {
    const auto j = ordered_json::parse(text);
    if (j.contains("metrics")) {
      for (const auto& m : j["metrics"]) c.metrics.push_back(MetricSpec::parse(m.get<std::string>()));
    } else {
      c.metrics = metric_catalog();
    }
    c.reference = j.value("reference", c.reference);
    if (j.contains("grids")) {
      for (const auto& [k, v] : j["grids"].items()) c.grids[parse_perturbation_column(k)] = v.get<std::vector<double>>();
    }
    c.seed = j.value("seed", c.seed);
    if (j.contains("axis")) {
      const auto a = j["axis"].get<std::vector<double>>();
      if (a.size() != 3) throw FormatError("axis needs three components");
      c.axis = Vec3(a[0], a[1], a[2]).normalized();
    }
    c.threads = j.value("threads", c.threads);
    if (j.contains("solver")) {
      c.solver.solver.max_iterations = j["solver"].value("max_iterations", c.solver.solver.max_iterations);
      c.solver.solver.tolerance = j["solver"].value("tolerance", c.solver.solver.tolerance);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("study config: ") + ex.what());
  }
  return c;
}

std::uint64_t scene_seed(std::uint64_t seed, std::size_t scene_index) {
  return seed * 0x100000001B3ull + scene_index;
}

SensitivityStudy run_sensitivity_study(const std::vector<LoadedScene>& scenes, const StudyConfig& config,
                                       const ColumnResponses* human) {
  if (scenes.empty()) throw InvalidInput("sensitivity study needs scenes");
  if (config.metrics.empty()) throw InvalidInput("sensitivity study needs metrics");
  std::vector<std::string> labels;
  for (const auto& m : config.metrics) labels.push_back(m.to_string());
  std::string ref_label = config.reference;
  if (ref_label == "human") {
    if (!human) throw InvalidInput("human reference requested without human responses");
  } else {
    ref_label = MetricSpec::parse(config.reference).to_string();
    if (std::find(labels.begin(), labels.end(), ref_label) == labels.end()) {
      throw InvalidInput("reference metric " + ref_label + " is not in the metric list");
    }
  }

  const std::size_t nc = kAllColumns.size();
  const std::size_t nmet = config.metrics.size();
  struct Task {
    bool ok = true;
    std::string reason;
    std::vector<std::vector<double>> values;  // [intensity][metric], NaN absent
  };
  std::vector<Task> tasks(scenes.size() * nc);
  parallel_for(tasks.size(), config.threads, [&](std::size_t t) {
    const std::size_t si = t / nc;
    const PerturbationColumn col = kAllColumns[t % nc];
    const LoadedScene& scene = scenes[si];
    Task& out = tasks[t];
    try {
      for (double raw : config.grid(col)) {
        const PerturbationSpec spec = column_spec(col, raw, scene_seed(config.seed, si), config.axis);
        const PerturbedDepth p = apply_perturbation(scene.gt, scene.intrinsics, spec, config.solver);
        std::vector<double> row(nmet, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t k = 0; k < nmet; ++k) {
          try {
            if (const auto v = evaluate(config.metrics[k], p.depth, scene.gt, scene.intrinsics, p.intrinsics)) {
              row[k] = v->value;
            }
          } catch (const AlignmentError&) {
          }
        }
        out.values.push_back(std::move(row));
      }
    } catch (const SolverError& e) {
      out = Task{false, e.what(), {}};
    } catch (const InfeasibleError& e) {
      out = Task{false, e.what(), {}};
    }
  });

  SensitivityStudy study;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (!tasks[t].ok) study.skipped.push_back({scenes[t / nc].id, kAllColumns[t % nc], tasks[t].reason});
  }
  for (std::size_t k = 0; k < nmet; ++k) {
    ColumnResponses cr;
    for (std::size_t c = 0; c < nc; ++c) {
      const PerturbationColumn col = kAllColumns[c];
      const auto grid = config.grid(col);
      ResponseSamples rs;
      rs.metric = labels[k];
      rs.column = col;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        std::vector<double> vals;
        for (std::size_t si = 0; si < scenes.size(); ++si) {
          const Task& task = tasks[si * nc + c];
          if (!task.ok) continue;
          const double v = task.values[g][k];
          if (!std::isnan(v)) vals.push_back(v);
        }
        if (const auto m = mean_of(vals)) rs.points.push_back({intensity_offset(col, grid[g]), *m, vals.size()});
      }
      cr[col] = std::move(rs);
    }
    study.responses[labels[k]] = std::move(cr);
  }

  const ColumnResponses& reference = ref_label == "human" ? *human : study.responses.at(ref_label);
  for (std::size_t k = 0; k < nmet; ++k) {
    try {
      SensitivityVector v = sensitivity_vector(study.responses.at(labels[k]), reference);
      v.reference = ref_label;
      study.warnings.insert(study.warnings.end(), v.warnings.begin(), v.warnings.end());
      const SensitivityVector n = v.normalized_copy();
      study.rows.push_back({labels[k], n.rates});
      study.vectors.push_back(std::move(v));
    } catch (const Error& e) {
      study.warnings.push_back(labels[k] + ": " + e.what());
    }
  }
  return study;
}

std::size_t make_sensitivity_dataset(const std::vector<LoadedScene>& scenes, const StudyConfig& config,
                                     const std::string& out_dir) {
  fs::create_directories(out_dir);
  ordered_json index;
  index["files"] = ordered_json::array();
  index["skipped"] = ordered_json::array();
  std::size_t written = 0;
  for (std::size_t si = 0; si < scenes.size(); ++si) {
    const LoadedScene& scene = scenes[si];
    const fs::path dir = fs::path(out_dir) / scene.id;
    fs::create_directories(dir);
    for (PerturbationColumn col : kAllColumns) {
      const auto grid = config.grid(col);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const PerturbationSpec spec = column_spec(col, grid[g], scene_seed(config.seed, si), config.axis);
        const std::string stem = std::string(to_string(col)) + "_" + std::to_string(g);
        try {
          const PerturbedDepth p = apply_perturbation(scene.gt, scene.intrinsics, spec, config.solver);
          const fs::path depth_path = dir / (stem + ".pfm");
          write_pfm(depth_path.string(), p.depth);
          ordered_json side;
          side["scene"] = scene.id;
          side["column"] = to_string(col);
          side["kind"] = to_string(spec.kind);
          side["intensity"] = spec.intensity;
          side["sigma"] = spec.sigma;
          side["axis"] = {spec.axis.x(), spec.axis.y(), spec.axis.z()};
          side["seed"] = spec.seed;
          side["solver_residual"] = p.solve.relative_residual;
          side["solver_iterations"] = p.solve.iterations;
          side["intrinsics"] = json_of(p.intrinsics);
          write_text_file((dir / (stem + ".json")).string(), side.dump(2) + "\n");
          index["files"].push_back((fs::path(scene.id) / (stem + ".pfm")).string());
          ++written;
        } catch (const SolverError& e) {
          index["skipped"].push_back({{"scene", scene.id}, {"file", stem}, {"reason", e.what()}});
        } catch (const InfeasibleError& e) {
          index["skipped"].push_back({{"scene", scene.id}, {"file", stem}, {"reason", e.what()}});
        }
      }
    }
  }
  write_text_file((fs::path(out_dir) / "index.json").string(), index.dump(2) + "\n");
  return written;
}

}  // namespace mdeval
