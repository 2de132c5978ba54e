// Command-line front end: eval, perturb, sweep, sensitivity, sawa, render, report.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mdeval/csv.hpp"
#include "mdeval/depth_io.hpp"
#include "mdeval/depthcore.hpp"
#include "mdeval/image.hpp"
#include "mdeval/metrics.hpp"
#include "mdeval/perturb.hpp"
#include "mdeval/pipeline.hpp"
#include "mdeval/render.hpp"
#include "mdeval/sawa.hpp"
#include "mdeval/sensitivity.hpp"

namespace fs = std::filesystem;
using namespace mdeval;

namespace {

struct RelNormalFlags {
  std::optional<int> radius;
  std::vector<int> scales;
  std::optional<std::uint64_t> samples;

  void add(CLI::App* app) {
    app->add_option("--rn-radius", radius, "RelNormal neighborhood radius");
    app->add_option("--rn-scales", scales, "RelNormal scales")->delimiter(',');
    app->add_option("--rn-samples", samples, "RelNormal Sobol sample count");
  }
  void apply(MetricSpec& spec, int threads) const {
    if (radius) spec.params.relnormal.radius = *radius;
    if (!scales.empty()) spec.params.relnormal.scales = scales;
    if (samples) spec.params.relnormal.samples = *samples;
    spec.params.relnormal.threads = threads;
  }
};

Vec3 parse_axis(const std::vector<double>& a) {
  if (a.size() != 3) throw InvalidInput("--axis needs three comma-separated values");
  const Vec3 v(a[0], a[1], a[2]);
  if (v.norm() == 0.0) throw InvalidInput("--axis must be nonzero");
  return v.normalized();
}

std::vector<MetricSpec> parse_specs(const std::vector<std::string>& names, const RelNormalFlags& rn,
                                    int threads) {
  std::vector<MetricSpec> out;
  if (names.empty()) {
    out = metric_catalog();
  } else {
    for (const auto& n : names) out.push_back(MetricSpec::parse(n));
  }
  for (auto& s : out) rn.apply(s, threads);
  return out;
}

void write_json_intrinsics_if(const std::string& path, const CameraIntrinsics& k) {
  if (!path.empty()) write_intrinsics(path, k);
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monocular depth evaluation toolkit"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate predictions listed in a manifest");
  std::string manifest_path, regime_name = "align_gt_intrinsics", eval_out;
  std::vector<std::string> metric_names;
  RelNormalFlags eval_rn;
  eval->add_option("--manifest", manifest_path)->required();
  eval->add_option("--metrics", metric_names, "metric specs (default: catalog)");
  eval->add_option("--regime", regime_name,
                   "align_gt_intrinsics | no_align_gt_intrinsics | no_align_pred_intrinsics");
  eval->add_option("--out", eval_out, "report JSON path (a .csv twin is written alongside)");
  eval_rn.add(eval);

  // perturb
  auto* perturb = app.add_subcommand("perturb", "apply one perturbation to a depth map");
  std::string kind_name, in_path, intr_path, out_path, out_intr;
  double intensity = 1.0, sigma = 1.0;
  std::uint64_t seed = 0;
  std::vector<double> axis{1.0, 0.0, 0.0};
  perturb->add_option("--kind", kind_name)->required();
  perturb->add_option("--intensity", intensity)->required();
  perturb->add_option("--sigma", sigma);
  perturb->add_option("--seed", seed);
  perturb->add_option("--axis", axis)->delimiter(',');
  perturb->add_option("--in", in_path)->required();
  perturb->add_option("--intr", intr_path, "intrinsics JSON (gradient-domain kinds)");
  perturb->add_option("--out", out_path)->required();
  perturb->add_option("--out-intr", out_intr, "write the perturbed intrinsics here");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "perturb one scene over a JSON sweep manifest");
  std::string sweep_config, sweep_out;
  sweep_cmd->add_option("--config", sweep_config,
                        "JSON list of {kind, intensities, seeds, sigma, axis}")->required();
  sweep_cmd->add_option("--in", in_path)->required();
  sweep_cmd->add_option("--intr", intr_path)->required();
  sweep_cmd->add_option("--out", sweep_out)->required();

  // sensitivity
  auto* sens = app.add_subcommand("sensitivity", "run a sensitivity study over a manifest");
  std::string study_config, human_csv, table_out, table_png, dataset_out, reference;
  std::optional<std::uint64_t> study_seed;
  RelNormalFlags sens_rn;
  sens->add_option("--manifest", manifest_path)->required();
  sens->add_option("--config", study_config, "study JSON (metrics, reference, grids, axis)");
  sens->add_option("--seed", study_seed);
  sens->add_option("--reference", reference, "reference metric spec or 'human'");
  sens->add_option("--human", human_csv, "human response CSV");
  sens->add_option("--out", table_out, "normalized table CSV")->required();
  sens->add_option("--image", table_png, "heat-table PNG");
  sens->add_option("--dataset-out", dataset_out, "also write the perturbed-depth archive here");
  sens_rn.add(sens);

  // sawa
  auto* sawa = app.add_subcommand("sawa", "sensitivity-aligned weighted averages");
  sawa->require_subcommand(1);
  auto* sawa_solve = sawa->add_subcommand("solve", "fit weights from a sensitivity table");
  std::string table_in, target = "ones", weights_out;
  std::vector<std::string> include;
  sawa_solve->add_option("--sensitivity", table_in)->required();
  sawa_solve->add_option("--target", target, "'ones' or comma-separated values");
  sawa_solve->add_option("--include", include, "restrict to these rows");
  sawa_solve->add_option("--out", weights_out)->required();
  auto* sawa_eval = sawa->add_subcommand("eval", "score one prediction with a weights file");
  std::string weights_in, pred_path, gt_path, pred_intr_path, heatmap_out;
  sawa_eval->add_option("--weights", weights_in)->required();
  sawa_eval->add_option("--pred", pred_path)->required();
  sawa_eval->add_option("--gt", gt_path)->required();
  sawa_eval->add_option("--intr", intr_path)->required();
  sawa_eval->add_option("--pred-intr", pred_intr_path);
  sawa_eval->add_option("--heatmap", heatmap_out, "per-pixel error PNG");

  // render
  auto* render = app.add_subcommand("render", "visualize a depth map");
  std::string mode, image_path, render_out, contour_axis = "z";
  double spacing = 0.0;
  render->add_option("mode", mode, "relight | contours | textured")->required()
      ->check(CLI::IsMember({"relight", "contours", "textured"}));
  render->add_option("--in", in_path)->required();
  render->add_option("--intr", intr_path)->required();
  render->add_option("--image", image_path);
  render->add_option("--out", render_out)->required();
  render->add_option("--axis", contour_axis)->check(CLI::IsMember({"x", "y", "z"}));
  render->add_option("--spacing", spacing);

  // report
  auto* report = app.add_subcommand("report", "print or convert an evaluation report");
  std::string report_in, report_csv;
  report->add_option("--in", report_in)->required();
  report->add_option("--csv", report_csv);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*eval) {
      const auto manifest = SceneManifest::load(manifest_path);
      manifest.validate(true);
      const auto specs = parse_specs(metric_names, eval_rn, threads);
      const auto rep = run_eval(manifest, specs, parse_eval_regime(regime_name), threads);
      if (eval_out.empty()) {
        std::cout << rep.to_csv();
      } else {
        write_text_file(eval_out, rep.to_json());
        write_text_file(with_suffix(eval_out, ".csv"), rep.to_csv());
      }
    } else if (*perturb) {
      PerturbationSpec spec;
      spec.kind = parse_perturbation_kind(kind_name);
      spec.intensity = intensity;
      spec.sigma = sigma;
      spec.seed = seed;
      spec.axis = parse_axis(axis);
      const DepthMap gt = read_depth(in_path);
      CameraIntrinsics k;
      if (!intr_path.empty()) {
        k = read_intrinsics(intr_path);
      } else if (spec.kind == PerturbationKind::kSurfaceOrientation ||
                 spec.kind == PerturbationKind::kCameraIntrinsics) {
        throw InvalidInput("--intr is required for " + kind_name);
      }
      const PerturbedDepth p = apply_perturbation(gt, k, spec);
      write_depth(out_path, p.depth);
      write_json_intrinsics_if(out_intr, p.intrinsics);
    } else if (*sweep_cmd) {
      const DepthMap gt = read_depth(in_path);
      const CameraIntrinsics k = read_intrinsics(intr_path);
      const auto cfg = nlohmann::json::parse(read_text_file(sweep_config));
      fs::create_directories(sweep_out);
      nlohmann::ordered_json index = nlohmann::ordered_json::array();
      for (const auto& entry : cfg) {
        PerturbationSpec spec;
        spec.kind = parse_perturbation_kind(entry.at("kind").get<std::string>());
        spec.sigma = entry.value("sigma", 1.0);
        if (entry.contains("axis")) spec.axis = parse_axis(entry["axis"].get<std::vector<double>>());
        const auto grid = entry.at("intensities").get<std::vector<double>>();
        const auto seeds = entry.value("seeds", std::vector<std::uint64_t>{0});
        for (std::uint64_t s : seeds) {
          spec.seed = s;
          const auto results = mdeval::sweep(gt, k, spec, grid);
          for (std::size_t g = 0; g < results.size(); ++g) {
            const std::string stem = std::string(to_string(spec.kind)) + "_s" + std::to_string(s) + "_" +
                                     std::to_string(g);
            write_pfm((fs::path(sweep_out) / (stem + ".pfm")).string(), results[g].second.depth);
            write_intrinsics((fs::path(sweep_out) / (stem + ".intr.json")).string(),
                             results[g].second.intrinsics);
            index.push_back({{"file", stem + ".pfm"},
                             {"kind", to_string(spec.kind)},
                             {"intensity", results[g].first},
                             {"sigma", spec.sigma},
                             {"seed", s},
                             {"solver_residual", results[g].second.solve.relative_residual}});
          }
        }
      }
      write_text_file((fs::path(sweep_out) / "index.json").string(), index.dump(2) + "\n");
    } else if (*sens) {
      const auto manifest = SceneManifest::load(manifest_path);
      StudyConfig config = study_config.empty() ? StudyConfig{} : StudyConfig::from_json(read_text_file(study_config));
      if (study_config.empty()) config.metrics = metric_catalog();
      if (study_seed) config.seed = *study_seed;
      if (!reference.empty()) config.reference = reference;
      config.threads = threads;
      for (auto& s : config.metrics) sens_rn.apply(s, 1);
      const auto scenes = load_scenes(manifest);
      std::optional<HumanResponses> human;
      if (!human_csv.empty()) human = ingest_human_csv(human_csv);
      const auto study = run_sensitivity_study(scenes, config, human ? &human->samples : nullptr);
      write_sensitivity_csv(table_out, study.rows);
      if (!table_png.empty()) write_png(table_png, render_heat_table(study.rows));
      for (const auto& s : study.skipped) {
        std::cerr << "skipped " << s.scene << " / " << to_string(s.column) << ": " << s.reason << "\n";
      }
      for (const auto& w : study.warnings) std::cerr << "warning: " << w << "\n";
      if (!dataset_out.empty()) {
        const auto n = make_sensitivity_dataset(scenes, config, dataset_out);
        std::cerr << "wrote " << n << " perturbed depth maps to " << dataset_out << "\n";
      }
    } else if (*sawa_solve) {
      const auto rows = read_sensitivity_csv(table_in);
      SawaProblem problem;
      for (const auto& r : rows) {
        if (!include.empty() && std::find(include.begin(), include.end(), r.label) == include.end()) continue;
        problem.names.push_back(r.label);
        problem.bases.emplace_back(r.values.begin(), r.values.end());
      }
      if (target != "ones") {
        std::stringstream ss(target);
        std::string item;
        while (std::getline(ss, item, ',')) problem.target.push_back(std::stod(item));
      }
      const auto sol = solve_sawa(problem);
      write_text_file(weights_out, weights_json(sol));
      std::cout << "similarity " << sol.similarity << "\n";
    } else if (*sawa_eval) {
      const auto weights = read_weights(weights_in);
      const DepthMap pred = read_depth(pred_path);
      const DepthMap gt = read_depth(gt_path);
      const CameraIntrinsics k = read_intrinsics(intr_path);
      std::optional<CameraIntrinsics> pk;
      if (!pred_intr_path.empty()) pk = read_intrinsics(pred_intr_path);
      const auto score = compose_evaluate(weights, pred, gt, k, pk, threads);
      for (std::size_t i = 0; i < weights.size(); ++i) {
        std::cout << weights[i].spec.to_string() << " " << score.components[i] << "\n";
      }
      if (score.value) {
        std::cout << "composite " << *score.value << "\n";
      } else {
        std::cout << "composite absent\n";
      }
      if (!heatmap_out.empty()) {
        const auto heat = error_heatmap(weights, pred, gt, k, pk, threads);
        write_png(heatmap_out, heatmap_image(heat, gt.height(), gt.width(), shared_mask(pred, gt)));
      }
    } else if (*render) {
      const DepthMap depth = read_depth(in_path);
      const CameraIntrinsics k = read_intrinsics(intr_path);
      fs::create_directories(render_out);
      if (mode == "relight") {
        const auto images = textureless_relight(depth, k, LightRig::standard(), threads);
        for (std::size_t i = 0; i < images.size(); ++i) {
          write_png((fs::path(render_out) / ("relight_" + std::to_string(i) + ".png")).string(), images[i]);
        }
      } else if (mode == "contours") {
        ContourSpec spec;
        spec.axis = contour_axis == "x" ? ContourAxis::kX : contour_axis == "y" ? ContourAxis::kY : ContourAxis::kZ;
        spec.spacing = spacing;
        write_png((fs::path(render_out) / ("contours_" + contour_axis + ".png")).string(),
                  projected_contours(depth, k, spec));
      } else {
        if (image_path.empty()) throw InvalidInput("textured rendering needs --image");
        const Image rgb = read_png(image_path);
        std::vector<CameraPose> poses(3);
        const double angle = 10.0 * 3.14159265358979323846 / 180.0;
        const double center = median_depth(depth);
        for (int i = 0; i < 3; ++i) {
          const double a = (i - 1) * angle;
          poses[i].rotation = Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix();
          // Orbit around the median-depth point on the optical axis.
          const Vec3 pivot(0.0, 0.0, center);
          poses[i].translation = pivot - poses[i].rotation * pivot;
        }
        const auto views = textured_views(depth, k, rgb, poses);
        for (std::size_t i = 0; i < views.size(); ++i) {
          write_png((fs::path(render_out) / ("textured_" + std::to_string(i) + ".png")).string(), views[i]);
        }
      }
    } else if (*report) {
      const auto rep = EvaluationReport::from_json(read_text_file(report_in));
      if (!report_csv.empty()) {
        write_text_file(report_csv, rep.to_csv());
      } else {
        std::printf("regime: %s\n", std::string(to_string(rep.regime)).c_str());
        for (const auto& c : rep.cells) {
          std::printf("%-20s %-18s %-40s %s (%zu scenes, %zu dropped)\n", c.method.c_str(), c.dataset.c_str(),
                      c.metric.c_str(), c.mean ? std::to_string(*c.mean).c_str() : "absent", c.scenes,
                      c.dropped.size());
        }
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
