#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mdeval/image.hpp"
#include "mdeval/perturb.hpp"

namespace mdeval {

/// Raised when the reference metric has no measurable slope at zero.
class UndefinedRateError : public Error {
 public:
  using Error::Error;
};

struct ResponsePoint {
  /// Intensity offset from the identity (>= 0).
  double x = 0.0;
  /// Mean standardized score over scenes.
  double y = 0.0;
  std::size_t scenes = 0;
};

/// Response curve of one metric (or "human") under one perturbation column.
struct ResponseSamples {
  std::string metric;
  PerturbationColumn column = PerturbationColumn::kAffineDepth;
  std::vector<ResponsePoint> points;

  /// Throws InvalidInput on negative or repeated x.
  void validate() const;
};

/// y ~ a x^2 + b x; `b` is the derivative at zero.
struct QuadraticFit {
  double a = 0.0;
  double b = 0.0;
  double rms = 0.0;
};

/// Ordinary least squares on the design [x^2, x]. Needs two distinct non-zero
/// intensities; a point at x = 0 contributes nothing to the estimate.
QuadraticFit fit_quadratic(std::span<const ResponsePoint> points);
QuadraticFit fit_quadratic(const ResponseSamples& samples);

/// b_A / b_B. Throws UndefinedRateError when |b_B| < 1e-12.
double exchange_rate(const QuadraticFit& a, const QuadraticFit& b);
double exchange_rate(const ResponseSamples& a, const ResponseSamples& b);

inline constexpr std::size_t kColumnCount = kAllColumns.size();

struct SensitivityVector {
  std::string metric;
  std::string reference;
  std::array<double, kColumnCount> rates{};
  bool normalized = false;
  /// Non-fatal notes, e.g. negative fitted slopes (kept as-is).
  std::vector<std::string> warnings;

  /// Copy rescaled to L2 norm sqrt(8).
  SensitivityVector normalized_copy() const;
};

using ColumnResponses = std::map<PerturbationColumn, ResponseSamples>;

/// Exchange rates of `metric` against `reference`, one per column.
SensitivityVector sensitivity_vector(const ColumnResponses& metric, const ColumnResponses& reference);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Human judgment ingestion.

enum class AnchorMode {
  /// Subtract the pooled false-alarm rate measured on gold rows from every
  /// point, so the fitted curve is anchored at the observed baseline.
  kInclude,
  /// Use gold rows only for annotator rejection.
  kExclude,
};

struct HumanIngestOptions {
  double min_gold_accuracy = 0.7;
  AnchorMode anchor = AnchorMode::kInclude;
};

struct HumanResponses {
  ColumnResponses samples;
  std::vector<std::string> rejected_annotators;
  std::size_t rows_used = 0;
  /// Mean response on gold rows of accepted annotators.
  double false_alarm_rate = 0.0;
};

/// CSV columns scene,perturbation,intensity,annotator,response (header
/// required). `perturbation` is a column name; `intensity` is the raw
/// generator intensity. Rows at the column's identity intensity, or with
/// perturbation "none", are gold rows whose correct answer is 0.
HumanResponses parse_human_csv(const std::string& text, const HumanIngestOptions& options = {});
HumanResponses ingest_human_csv(const std::string& path, const HumanIngestOptions& options = {});

// Tables.

struct SensitivityRow {
  std::string label;
  std::array<double, kColumnCount> values{};
};

void write_sensitivity_csv(const std::string& path, const std::vector<SensitivityRow>& rows);
std::vector<SensitivityRow> read_sensitivity_csv(const std::string& path);
std::string sensitivity_csv(const std::vector<SensitivityRow>& rows);
std::vector<SensitivityRow> parse_sensitivity_csv(const std::string& text);

/// Heat table: one cell per (row, column), white at 0 to red at the table
/// maximum, `cell` pixels square, 1-pixel grid lines.
Image render_heat_table(const std::vector<SensitivityRow>& rows, int cell = 16);

}  // namespace mdeval
