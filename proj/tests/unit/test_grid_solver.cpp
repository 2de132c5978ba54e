#include <gtest/gtest.h>

#include <random>

#include <Eigen/Dense>

#include "mdeval/grid_solver.hpp"
#include "mdeval/types.hpp"

namespace mdeval {
namespace {

TEST(LinearSystem, LaplacianAndRhs) {
  const LinearSystem sys(3, {{0, 1, 2.0}, {1, 2, -1.0}});
  EXPECT_EQ(sys.degree(), (std::vector<double>{1, 2, 1}));
  EXPECT_EQ(sys.rhs(), (std::vector<double>{-2, 3, -1}));
  std::vector<double> y;
  sys.apply({1, 0, 0}, y);
  EXPECT_EQ(y, (std::vector<double>{1, -1, 0}));
  int count = 0;
  sys.components(&count);
  EXPECT_EQ(count, 1);
  const LinearSystem split(4, {{0, 1, 1.0}});
  split.components(&count);
  EXPECT_EQ(count, 3);
}

TEST(SolveCg, MatchesDenseLeastSquares) {
  // Random connected grid graph; compare with the pseudo-inverse solution
  // after removing the constant null space.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  const int h = 7, w = 9, n = h * w;
  std::vector<GradientConstraint> cons;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = r * w + c;
      if (c + 1 < w) cons.push_back({i, i + 1, g(rng)});
      if (r + 1 < h) cons.push_back({i, i + w, g(rng)});
    }
  }
  const LinearSystem sys(n, cons);
  std::vector<double> x(n, 0.0);
  const auto rep = solve_cg(sys, x);
  EXPECT_LE(rep.relative_residual, 1e-8);

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(cons.size(), n);
  Eigen::VectorXd b(cons.size());
  for (std::size_t e = 0; e < cons.size(); ++e) {
    a(e, cons[e].i) = -1;
    a(e, cons[e].j) = 1;
    b(e) = cons[e].target;
  }
  Eigen::VectorXd ref = a.completeOrthogonalDecomposition().solve(b);
  Eigen::VectorXd got = Eigen::Map<Eigen::VectorXd>(x.data(), n);
  ref.array() -= ref.mean();
  got.array() -= got.mean();
  EXPECT_LT((ref - got).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SolveCg, ThrowsWhenCapped) {
  std::vector<GradientConstraint> cons;
  for (std::size_t i = 0; i + 1 < 200; ++i) cons.push_back({i, i + 1, (i % 7) * 0.1});
  const LinearSystem sys(200, cons);
  std::vector<double> x(200, 0.0);
  try {
    solve_cg(sys, x, {2, 1e-12});
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.iterations(), 2);
    EXPECT_GT(e.residual(), 1e-12);
  }
}

TEST(SolveCg, ConsistentSystemSolvedExactly) {
  std::vector<double> truth{0.0, 1.5, -2.0, 0.25, 3.0};
  std::vector<GradientConstraint> cons;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = i + 1; j < 5; ++j) cons.push_back({i, j, truth[j] - truth[i]});
  }
  std::vector<double> x(5, 0.0);
  solve_cg(LinearSystem(5, cons), x);
  for (std::size_t i = 1; i < 5; ++i) EXPECT_NEAR(x[i] - x[0], truth[i], 1e-9);
}

}  // namespace
}  // namespace mdeval
