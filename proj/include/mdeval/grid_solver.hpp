#pragma once

#include <cstddef>
#include <vector>

namespace mdeval {

/// Soft constraint u[j] - u[i] = target.
struct GradientConstraint {
  std::size_t i = 0;
  std::size_t j = 0;
  double target = 0.0;
};

/// Normal equations L u = b of sum_e (u_j - u_i - target_e)^2, where L is the
/// graph Laplacian of the constraint set (CSR adjacency).
class LinearSystem {
 public:
  LinearSystem(std::size_t unknowns, const std::vector<GradientConstraint>& constraints);

  std::size_t size() const { return degree_.size(); }
  const std::vector<double>& rhs() const { return rhs_; }
  const std::vector<double>& degree() const { return degree_; }
  /// y = L x.
  void apply(const std::vector<double>& x, std::vector<double>& y) const;
  /// Connected components of the constraint graph; unknowns without any
  /// constraint get their own singleton label.
  std::vector<int> components(int* count = nullptr) const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> neighbors_;
  std::vector<double> degree_;
  std::vector<double> rhs_;
};

struct SolverOptions {
  int max_iterations = 10'000;
  /// Stop when ||b - L x|| <= tolerance * max(||b||, ||L x0||, 1e-6 ||L|| ||x0||),
  /// x0 being the starting point.
  double tolerance = 1e-8;
};

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradient starting from `x`. Throws
/// SolverError when the tolerance is not met within the iteration cap.
SolveReport solve_cg(const LinearSystem& system, std::vector<double>& x,
                     const SolverOptions& options = {});

}  // namespace mdeval
