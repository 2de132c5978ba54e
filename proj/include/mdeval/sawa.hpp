#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdeval/metrics.hpp"
#include "mdeval/sensitivity.hpp"

namespace mdeval {

struct SawaProblem {
  std::vector<std::string> names;
  /// Sensitivity vectors of the base metrics against a common reference.
  std::vector<std::vector<double>> bases;
  /// Empty means all ones.
  std::vector<double> target;

  std::size_t dimension() const { return bases.empty() ? 0 : bases.front().size(); }
  std::vector<double> resolved_target() const;
  void validate() const;
};

struct SawaSolution {
  std::vector<std::string> names;
  /// Weights for metrics rescaled so that each sensitivity vector has L2
  /// norm sqrt(M). Sums to 1.
  std::vector<double> weights_rescaled;
  /// The same composite expressed on the original metric units. Sums to 1.
  std::vector<double> weights_original;
  double similarity = 0.0;
  double kkt_residual = 0.0;
};

/// Non-negative weights maximizing cos(sum_i w_i R_i, T). The optimal
/// direction is the projection of T onto the cone spanned by the rescaled
/// bases, found by Lawson-Hanson NNLS; optimality is checked through the KKT
/// conditions (residual < 1e-8, else SolverError). Throws InfeasibleError
/// when no base has a positive inner product with T.
SawaSolution solve_sawa(const SawaProblem& problem);

/// min ||A x - b|| subject to x >= 0 (A is m x n, column-major by base).
std::vector<double> nnls(const std::vector<std::vector<double>>& columns, std::span<const double> b,
                         int max_iterations = 1000);

struct LinearityReport {
  std::vector<double> predicted;
  std::vector<double> measured;
  double max_relative_deviation = 0.0;
};

/// Compares sum_i w_i R_i (original units) with an independently measured
/// sensitivity vector of the composite metric. Deviation is relative to the
/// largest predicted magnitude.
LinearityReport linearity_check(const SawaProblem& problem, std::span<const double> weights,
                                std::span<const double> measured);

struct WeightedMetric {
  MetricSpec spec;
  double weight = 0.0;
};

struct CompositeScore {
  std::optional<double> value;
  std::vector<double> components;  // NaN where absent
  std::vector<std::string> absent;
  /// "renormalize": absent components are dropped and the remaining weights
  /// are rescaled to the full weight total.
  std::string absent_policy = "renormalize";
};

CompositeScore compose_evaluate(const std::vector<WeightedMetric>& metrics, const DepthMap& pred,
                                const DepthMap& gt, const CameraIntrinsics& gt_intr,
                                const std::optional<CameraIntrinsics>& pred_intr = std::nullopt,
                                int threads = 0);

/// Per-pixel composite error; sums to compose_evaluate(...).value. Alignment
/// is fitted globally and the residual of each pixel is attributed to it.
std::vector<double> error_heatmap(const std::vector<WeightedMetric>& metrics, const DepthMap& pred,
                                  const DepthMap& gt, const CameraIntrinsics& gt_intr,
                                  const std::optional<CameraIntrinsics>& pred_intr = std::nullopt,
                                  int threads = 0);

/// JSON {"rescaled": {spec: w}, "original": {spec: w}, "similarity": s}.
std::string weights_json(const SawaSolution& solution);
/// Reads the "original" weights of a weights file.
std::vector<WeightedMetric> read_weights(const std::string& path);
std::vector<WeightedMetric> parse_weights(const std::string& json_text);

}  // namespace mdeval
