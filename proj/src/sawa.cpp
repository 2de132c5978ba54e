#include "mdeval/sawa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <json.hpp>

#include "mdeval/csv.hpp"
#include "mdeval/parallel.hpp"

namespace mdeval {

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> sum_to_one(std::vector<double> w) {
  double s = 0.0;
  for (double x : w) s += x;
  if (s > 0.0) {
    for (double& x : w) x /= s;
  }
  return w;
}

// Renormalized weights over present components (zero for absent ones).
std::vector<double> effective_weights(const std::vector<WeightedMetric>& metrics,
                                      const std::vector<double>& comps) {
  double total = 0.0, present = 0.0;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    total += metrics[i].weight;
    if (!std::isnan(comps[i])) present += metrics[i].weight;
  }
  std::vector<double> w(metrics.size(), 0.0);
  if (!(present > 0.0)) return w;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (!std::isnan(comps[i])) w[i] = metrics[i].weight * total / present;
  }
  return w;
}

void check_weights(const std::vector<WeightedMetric>& metrics) {
  if (metrics.empty()) throw InvalidInput("composite metric has no components");
  for (const auto& m : metrics) {
    if (!(m.weight >= 0.0) || !std::isfinite(m.weight)) throw InvalidInput("composite weights must be >= 0");
  }
}

}  // namespace

std::vector<double> SawaProblem::resolved_target() const {
  if (!target.empty()) return target;
  return std::vector<double>(dimension(), 1.0);
}

void SawaProblem::validate() const {
  if (bases.empty()) throw InvalidInput("SAWA needs at least one base metric");
  if (!names.empty() && names.size() != bases.size()) throw InvalidInput("SAWA names and bases differ in count");
  const std::size_t m = dimension();
  if (m < 1) throw InvalidInput("sensitivity vectors must be non-empty");
  for (const auto& b : bases) {
    if (b.size() != m) throw InvalidInput("sensitivity vectors differ in length");
    for (double x : b) {
      if (!std::isfinite(x)) throw InvalidInput("sensitivity vectors must be finite");
    }
  }
  if (!target.empty() && target.size() != m) throw InvalidInput("target length differs from bases");
}

std::vector<double> nnls(const std::vector<std::vector<double>>& columns, std::span<const double> b,
                         int max_iterations) {
  const int n = static_cast<int>(columns.size());
  const int m = static_cast<int>(b.size());
  Eigen::MatrixXd A(m, n);
  for (int j = 0; j < n; ++j) {
    if (static_cast<int>(columns[j].size()) != m) throw InvalidInput("NNLS column length mismatch");
    for (int i = 0; i < m; ++i) A(i, j) = columns[j][i];
  }
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(b.data(), m);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(n, false);
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() * A.norm() * std::max(1.0, y.norm()) *
                     std::max(m, n);

  auto solve_passive = [&]() {
    std::vector<int> idx;
    for (int j = 0; j < n; ++j) {
      if (passive[j]) idx.push_back(j);
    }
    if (idx.empty()) return Eigen::VectorXd(Eigen::VectorXd::Zero(n));
    Eigen::MatrixXd Ap(m, idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(k) = A.col(idx[k]);
    const Eigen::VectorXd zp = Ap.colPivHouseholderQr().solve(y);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) z[idx[k]] = zp[k];
    return z;
  };

  for (int outer = 0; outer < max_iterations; ++outer) {
    const Eigen::VectorXd g = A.transpose() * (y - A * x);
    int best = -1;
    double gmax = tol;
    for (int j = 0; j < n; ++j) {
      if (!passive[j] && g[j] > gmax) {
        gmax = g[j];
        best = j;
      }
    }
    if (best < 0) return std::vector<double>(x.data(), x.data() + n);
    passive[best] = true;
    for (int inner = 0; inner < max_iterations; ++inner) {
      Eigen::VectorXd z = solve_passive();
      bool feasible = true;
      for (int j = 0; j < n; ++j) {
        if (passive[j] && z[j] <= 0.0) feasible = false;
      }
      if (feasible) {
        x = z;
        break;
      }
      double alpha = 1.0;
      for (int j = 0; j < n; ++j) {
        if (passive[j] && z[j] <= 0.0) alpha = std::min(alpha, x[j] / (x[j] - z[j]));
      }
      x += alpha * (z - x);
      for (int j = 0; j < n; ++j) {
        if (passive[j] && x[j] <= tol) {
          passive[j] = false;
          x[j] = 0.0;
        }
      }
    }
  }
  throw SolverError("NNLS did not terminate", std::numeric_limits<double>::quiet_NaN(), max_iterations);
}

SawaSolution solve_sawa(const SawaProblem& problem) {
  problem.validate();
  const std::size_t m = problem.dimension();
  const std::size_t n = problem.bases.size();
  const std::vector<double> t = problem.resolved_target();
  if (!(norm(t) > 0.0)) throw InvalidInput("SAWA target must be non-zero");

  std::vector<double> scale(n, 0.0);
  std::vector<std::vector<double>> cols(n, std::vector<double>(m, 0.0));
  bool feasible = false;
  std::string certificate;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = norm(problem.bases[i]);
    if (c > 0.0) {
      scale[i] = std::sqrt(static_cast<double>(m)) / c;
      for (std::size_t k = 0; k < m; ++k) cols[i][k] = problem.bases[i][k] * scale[i];
    }
    const double align = dot(cols[i], t);
    if (align > 0.0) feasible = true;
    certificate += (i ? ", " : "") + (problem.names.empty() ? std::to_string(i) : problem.names[i]) +
                   "=" + std::to_string(align);
  }
  if (!feasible) {
    throw InfeasibleError("no base metric has positive alignment with the target (inner products: " +
                          certificate + ")");
  }

  const std::vector<double> w = nnls(cols, t);

  // KKT: gradient g = A^T (A w - t) must be >= 0, and zero on the support.
  std::vector<double> v(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < m; ++k) v[k] += w[i] * cols[i][k];
  }
  std::vector<double> r(m);
  for (std::size_t k = 0; k < m; ++k) r[k] = v[k] - t[k];
  double kkt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = dot(cols[i], r);
    kkt = std::max(kkt, w[i] > 0.0 ? std::abs(g) : std::max(0.0, -g));
  }
  kkt /= static_cast<double>(m) * std::max(1.0, norm(t));
  if (!(kkt < 1e-8)) throw SolverError("SAWA KKT check failed", kkt, 0);

  SawaSolution s;
  s.names = problem.names;
  s.weights_rescaled = sum_to_one(w);
  std::vector<double> orig(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) orig[i] = w[i] * scale[i];
  s.weights_original = sum_to_one(orig);
  s.similarity = norm(v) > 0.0 ? cosine_similarity(v, t) : 0.0;
  s.kkt_residual = kkt;
  return s;
}

LinearityReport linearity_check(const SawaProblem& problem, std::span<const double> weights,
                                std::span<const double> measured) {
  problem.validate();
  const std::size_t m = problem.dimension();
  if (weights.size() != problem.bases.size()) throw InvalidInput("one weight per base metric required");
  if (measured.size() != m) throw InvalidInput("measured vector has the wrong length");
  LinearityReport rep;
  rep.predicted.assign(m, 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    for (std::size_t k = 0; k < m; ++k) rep.predicted[k] += weights[i] * problem.bases[i][k];
  }
  rep.measured.assign(measured.begin(), measured.end());
  double scale = 0.0;
  for (double p : rep.predicted) scale = std::max(scale, std::abs(p));
  if (!(scale > 0.0)) throw InvalidInput("predicted composite vector is zero");
  for (std::size_t k = 0; k < m; ++k) {
    rep.max_relative_deviation =
        std::max(rep.max_relative_deviation, std::abs(rep.measured[k] - rep.predicted[k]) / scale);
  }
  return rep;
}

CompositeScore compose_evaluate(const std::vector<WeightedMetric>& metrics, const DepthMap& pred,
                                const DepthMap& gt, const CameraIntrinsics& gt_intr,
                                const std::optional<CameraIntrinsics>& pred_intr, int threads) {
  check_weights(metrics);
  CompositeScore out;
  out.components.assign(metrics.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(metrics.size(), threads, [&](std::size_t i) {
    if (const auto s = evaluate(metrics[i].spec, pred, gt, gt_intr, pred_intr)) out.components[i] = s->value;
  });
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (std::isnan(out.components[i])) out.absent.push_back(metrics[i].spec.to_string());
  }
  const auto w = effective_weights(metrics, out.components);
  double value = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (std::isnan(out.components[i])) continue;
    value += w[i] * out.components[i];
    any = true;
  }
  if (any) out.value = value;
  return out;
}

std::vector<double> error_heatmap(const std::vector<WeightedMetric>& metrics, const DepthMap& pred,
                                  const DepthMap& gt, const CameraIntrinsics& gt_intr,
                                  const std::optional<CameraIntrinsics>& pred_intr, int threads) {
  check_weights(metrics);
  std::vector<Evaluation> evals(metrics.size());
  parallel_for(metrics.size(), threads, [&](std::size_t i) {
    evals[i] = evaluate_detailed(metrics[i].spec, pred, gt, gt_intr, pred_intr, true);
  });
  std::vector<double> comps(metrics.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (evals[i].score) comps[i] = evals[i].score->value;
  }
  const auto w = effective_weights(metrics, comps);
  std::vector<double> out(gt.size(), 0.0);
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (w[i] == 0.0) continue;
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += w[i] * evals[i].pixel_errors[p];
  }
  return out;
}

std::string weights_json(const SawaSolution& s) {
  nlohmann::ordered_json j;
  j["rescaled"] = nlohmann::ordered_json::object();
  j["original"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < s.weights_rescaled.size(); ++i) {
    const std::string name = s.names.empty() ? std::to_string(i) : s.names[i];
    j["rescaled"][name] = s.weights_rescaled[i];
    j["original"][name] = s.weights_original[i];
  }
  j["similarity"] = s.similarity;
  return j.dump(2) + "\n";
}

std::vector<WeightedMetric> parse_weights(const std::string& json_text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weights file: ") + e.what());
  }
  const auto& src = j.contains("original") ? j["original"] : j;
  if (!src.is_object()) throw FormatError("weights file must map metric specs to weights");
  std::vector<WeightedMetric> out;
  for (const auto& [key, value] : src.items()) {
    if (!value.is_number()) throw FormatError("weight for '" + key + "' is not a number");
    out.push_back({MetricSpec::parse(key), value.get<double>()});
  }
  check_weights(out);
  return out;
}

std::vector<WeightedMetric> read_weights(const std::string& path) {
  return parse_weights(read_text_file(path));
}

}  // namespace mdeval
