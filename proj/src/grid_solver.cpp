#include "mdeval/grid_solver.hpp"

#include <algorithm>
#include <cmath>

#include "mdeval/types.hpp"

namespace mdeval {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

LinearSystem::LinearSystem(std::size_t unknowns, const std::vector<GradientConstraint>& constraints)
    : offsets_(unknowns + 1, 0), degree_(unknowns, 0.0), rhs_(unknowns, 0.0) {
  for (const auto& c : constraints) {
    if (c.i >= unknowns || c.j >= unknowns || c.i == c.j) {
      throw InvalidInput("constraint refers to an invalid unknown");
    }
    ++offsets_[c.i + 1];
    ++offsets_[c.j + 1];
    degree_[c.i] += 1.0;
    degree_[c.j] += 1.0;
    rhs_[c.j] += c.target;
    rhs_[c.i] -= c.target;
  }
  for (std::size_t k = 0; k < unknowns; ++k) offsets_[k + 1] += offsets_[k];
  neighbors_.resize(offsets_.back());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& c : constraints) {
    neighbors_[fill[c.i]++] = c.j;
    neighbors_[fill[c.j]++] = c.i;
  }
}

void LinearSystem::apply(const std::vector<double>& x, std::vector<double>& y) const {
  y.resize(size());
  for (std::size_t k = 0; k < size(); ++k) {
    double s = degree_[k] * x[k];
    for (std::size_t e = offsets_[k]; e < offsets_[k + 1]; ++e) s -= x[neighbors_[e]];
    y[k] = s;
  }
}

std::vector<int> LinearSystem::components(int* count) const {
  std::vector<int> label(size(), -1);
  std::vector<std::size_t> stack;
  int next = 0;
  for (std::size_t s = 0; s < size(); ++s) {
    if (label[s] >= 0) continue;
    label[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t k = stack.back();
      stack.pop_back();
      for (std::size_t e = offsets_[k]; e < offsets_[k + 1]; ++e) {
        const std::size_t n = neighbors_[e];
        if (label[n] < 0) {
          label[n] = next;
          stack.push_back(n);
        }
      }
    }
    ++next;
  }
  if (count) *count = next;
  return label;
}

constexpr double kRoundoffScale = 1e-6;

SolveReport solve_cg(const LinearSystem& system, std::vector<double>& x, const SolverOptions& options) {
  const std::size_t n = system.size();
  if (x.size() != n) throw InvalidInput("initial guess has the wrong size");
  const auto& b = system.rhs();
  const auto& diag = system.degree();
  std::vector<double> r(n), z(n), p(n), q(n);
  system.apply(x, q);
  for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - q[k];
  // When the targets cancel, ||b|| is round-off and says nothing about the
  // problem scale; ||L x0|| does. The last term keeps an exact starting
  // point from being judged against round-off alone (||L|| is bounded by
  // twice the largest degree).
  const double l_norm = 2.0 * (diag.empty() ? 0.0 : *std::max_element(diag.begin(), diag.end()));
  const double b_norm = std::max({std::sqrt(dot(b, b)), std::sqrt(dot(q, q)),
                                  kRoundoffScale * l_norm * std::sqrt(dot(x, x))});
  auto precondition = [&] {
    for (std::size_t k = 0; k < n; ++k) z[k] = diag[k] > 0.0 ? r[k] / diag[k] : 0.0;
  };
  auto relative = [&] {
    const double rn = std::sqrt(dot(r, r));
    return b_norm > 0.0 ? rn / b_norm : rn;
  };

  SolveReport report;
  report.relative_residual = relative();
  if (report.relative_residual <= options.tolerance) return report;
  precondition();
  p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= options.max_iterations; ++it) {
    system.apply(p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) break;
    const double alpha = rz / pq;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * q[k];
    }
    report.iterations = it;
    report.relative_residual = relative();
    if (report.relative_residual <= options.tolerance) return report;
    precondition();
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }
  // Recompute the true residual before giving up; the recurrence can drift.
  system.apply(x, q);
  for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - q[k];
  report.relative_residual = relative();
  if (report.relative_residual <= options.tolerance) return report;
  throw SolverError("conjugate gradient did not converge", report.relative_residual,
                    report.iterations);
}

}  // namespace mdeval
