#include <gtest/gtest.h>

#include <functional>

#include "logitcond/lp.hpp"
#include "logitcond/random.hpp"

using namespace logitcond;

namespace {

// best basic feasible solution by enumerating every column subset of size m
double enumerate_vertices(const Mat& A, const Vec& b, const Vec& c, bool& feasible) {
  const Eigen::Index m = A.rows(), nv = A.cols();
  double best = INFINITY;
  feasible = false;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(m));
  std::function<void(Eigen::Index, Eigen::Index)> rec = [&](Eigen::Index start, Eigen::Index depth) {
    if (depth == m) {
      Mat B(m, m);
      for (Eigen::Index k = 0; k < m; ++k) B.col(k) = A.col(idx[static_cast<std::size_t>(k)]);
      Eigen::FullPivLU<Mat> lu(B);
      if (lu.rank() < m) return;
      const Vec xb = lu.solve(b);
      if ((xb.array() < -1e-10).any()) return;
      feasible = true;
      double obj = 0;
      for (Eigen::Index k = 0; k < m; ++k) obj += c(idx[static_cast<std::size_t>(k)]) * xb(k);
      best = std::min(best, obj);
      return;
    }
    for (Eigen::Index j = start; j < nv; ++j) {
      idx[static_cast<std::size_t>(depth)] = j;
      rec(j + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST(Simplex, SmallKnownProblem) {
  // min -x1 - x2  s.t.  x1 + 2 x2 + s1 = 4,  3 x1 + x2 + s2 = 6
  Mat A(2, 4);
  A << 1, 2, 1, 0, 3, 1, 0, 1;
  Vec b(2), c(4);
  b << 4, 6;
  c << -1, -1, 0, 0;
  const LpResult r = solve_lp(A, b, c);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.objective, -2.8, 1e-12);
  EXPECT_NEAR(r.x(0), 1.6, 1e-12);
  EXPECT_NEAR(r.x(1), 1.2, 1e-12);
}

TEST(Simplex, NegativeRightHandSide) {
  // x1 - x2 = -1 forces x2 = x1 + 1
  Mat A(1, 2);
  A << 1, -1;
  Vec b(1), c(2);
  b << -1;
  c << 1, 1;
  const LpResult r = solve_lp(A, b, c);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.objective, 1.0, 1e-12);
}

TEST(Simplex, Infeasible) {
  Mat A(2, 2);
  A << 1, 1, 1, 1;
  Vec b(2), c(2);
  b << 1, 2;
  c << 1, 1;
  EXPECT_EQ(solve_lp(A, b, c).status, LpStatus::Infeasible);
}

TEST(Simplex, Unbounded) {
  Mat A(1, 2);
  A << 1, -1;
  Vec b(1), c(2);
  b << 0;
  c << -1, 0;
  EXPECT_EQ(solve_lp(A, b, c).status, LpStatus::Unbounded);
}

TEST(Simplex, BealeCyclingExample) {
  // classic degenerate instance on which naive Dantzig pricing cycles
  Mat A(3, 7);
  A << 0.25, -8, -1, 9, 1, 0, 0,
       0.5, -12, -0.5, 3, 0, 1, 0,
       0, 0, 1, 0, 0, 0, 1;
  Vec b(3), c(7);
  b << 0, 0, 1;
  c << -0.75, 20, -0.5, 6, 0, 0, 0;
  const LpResult r = solve_lp(A, b, c);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.objective, -1.25, 1e-12);
}

TEST(Simplex, RejectsMismatchedDimensions) {
  EXPECT_THROW(solve_lp(Mat::Ones(2, 3), Vec::Ones(3), Vec::Ones(3)), Error);
}

TEST(Simplex, MatchesVertexEnumeration) {
  Rng rng(31);
  int solved = 0;
  for (int t = 0; t < 300; ++t) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.below(2));
    const Eigen::Index nv = m + 2 + static_cast<Eigen::Index>(rng.below(3));
    Mat A(m, nv);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < nv; ++j) A(i, j) = rng.normal();
    Vec b(m), c(nv);
    for (Eigen::Index i = 0; i < m; ++i) b(i) = rng.normal();
    // nonnegative costs keep every feasible problem bounded
    for (Eigen::Index j = 0; j < nv; ++j) c(j) = std::abs(rng.normal());
    bool feasible = false;
    const double ref = enumerate_vertices(A, b, c, feasible);
    const LpResult r = solve_lp(A, b, c);
    if (!feasible) {
      EXPECT_EQ(r.status, LpStatus::Infeasible);
      continue;
    }
    ASSERT_EQ(r.status, LpStatus::Optimal);
    EXPECT_NEAR(r.objective, ref, 1e-8 * (1.0 + std::abs(ref)));
    EXPECT_LE((A * r.x - b).norm(), 1e-9);
    EXPECT_GE(r.x.minCoeff(), -1e-12);
    ++solved;
  }
  EXPECT_GT(solved, 50);
}
