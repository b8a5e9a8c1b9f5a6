#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <vector>

#include "voroperc/lp.hpp"
#include "voroperc/rng.hpp"

using namespace voroperc;

namespace {

// Vertex enumeration: every 3-subset of rows, solved by Cramer's rule.
double brute_max_3d(const std::vector<std::array<double, 3>>& A, const std::vector<double>& b,
                    const std::array<double, 3>& c) {
  double best = -INFINITY;
  const std::size_t m = A.size();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      for (std::size_t k = j + 1; k < m; ++k) {
        const auto &a = A[i], &p = A[j], &q = A[k];
        const double det = a[0] * (p[1] * q[2] - p[2] * q[1]) - a[1] * (p[0] * q[2] - p[2] * q[0]) +
                           a[2] * (p[0] * q[1] - p[1] * q[0]);
        if (std::fabs(det) < 1e-10) continue;
        std::array<double, 3> x{};
        for (int col = 0; col < 3; ++col) {
          auto r0 = a, r1 = p, r2 = q;
          r0[col] = b[i];
          r1[col] = b[j];
          r2[col] = b[k];
          x[col] = (r0[0] * (r1[1] * r2[2] - r1[2] * r2[1]) - r0[1] * (r1[0] * r2[2] - r1[2] * r2[0]) +
                    r0[2] * (r1[0] * r2[1] - r1[1] * r2[0])) /
                   det;
        }
        bool ok = true;
        for (std::size_t r = 0; r < m && ok; ++r)
          ok = A[r][0] * x[0] + A[r][1] * x[1] + A[r][2] * x[2] <= b[r] + 1e-9;
        if (ok) best = std::max(best, c[0] * x[0] + c[1] * x[1] + c[2] * x[2]);
      }
  return best;
}

}  // namespace

TEST(Lp, MatchesVertexEnumeration) {
  Stream s(2024);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::array<double, 3>> A;
    std::vector<double> b;
    // Bounding cube keeps the problem bounded, random cuts keep 0 feasible.
    for (int ax = 0; ax < 3; ++ax) {
      std::array<double, 3> e{};
      e[ax] = 1.0;
      A.push_back(e);
      b.push_back(5.0);
      e[ax] = -1.0;
      A.push_back(e);
      b.push_back(5.0);
    }
    const int cuts = 3 + static_cast<int>(s.uniform() * 15);
    for (int k = 0; k < cuts; ++k) {
      A.push_back({s.uniform(-1, 1), s.uniform(-1, 1), s.uniform(-1, 1)});
      b.push_back(s.uniform(0.1, 3.0));
    }
    lp::Problem prob(3);
    for (std::size_t r = 0; r < A.size(); ++r) prob.add_row(A[r], b[r]);
    const std::array<double, 3> c{s.uniform(-1, 1), s.uniform(-1, 1), s.uniform(-1, 1)};
    const std::array<double, 3> start{0, 0, 0};
    const auto sol = lp::maximize(prob, c, start);
    ASSERT_EQ(sol.status, lp::Status::optimal);
    EXPECT_NEAR(sol.objective, brute_max_3d(A, b, c), 1e-8) << trial;
    for (std::size_t r = 0; r < A.size(); ++r)
      EXPECT_LE(A[r][0] * sol.x[0] + A[r][1] * sol.x[1] + A[r][2] * sol.x[2], b[r] + 1e-8);
  }
}

TEST(Lp, DetectsUnboundedWithImprovingRay) {
  lp::Problem prob(2);
  prob.add_row(std::array<double, 2>{-1.0, 0.0}, 1.0);
  prob.add_row(std::array<double, 2>{0.0, 1.0}, 1.0);
  const std::array<double, 2> c{1.0, 0.5}, start{0.0, 0.0};
  const auto sol = lp::maximize(prob, c, start);
  ASSERT_EQ(sol.status, lp::Status::unbounded);
  EXPECT_GT(c[0] * sol.ray[0] + c[1] * sol.ray[1], 0.0);
  EXPECT_LE(-sol.ray[0], 1e-12);
  EXPECT_LE(sol.ray[1], 1e-12);
}

TEST(Lp, RejectsInfeasibleStart) {
  lp::Problem prob(1);
  prob.add_row(std::array<double, 1>{1.0}, 0.0);
  const std::array<double, 1> c{1.0}, start{1.0};
  EXPECT_THROW(lp::maximize(prob, c, start), std::invalid_argument);
  EXPECT_THROW(prob.add_row(std::array<double, 2>{1.0, 1.0}, 0.0), std::invalid_argument);
}

TEST(Lp, ChebyshevCenterOfBoxAndTriangle) {
  lp::Problem box(2);
  box.add_row(std::array<double, 2>{1, 0}, 3);
  box.add_row(std::array<double, 2>{-1, 0}, 1);
  box.add_row(std::array<double, 2>{0, 1}, 2);
  box.add_row(std::array<double, 2>{0, -1}, 2);
  const auto cb = lp::chebyshev_center(box);
  EXPECT_TRUE(cb.bounded);
  EXPECT_NEAR(cb.radius, 2.0, 1e-12);
  EXPECT_NEAR(cb.center[1], 0.0, 1e-12);

  // Right triangle with legs 3 and 4: inradius (3 + 4 - 5) / 2 = 1 at (1, 1).
  lp::Problem tri(2);
  tri.add_row(std::array<double, 2>{-1, 0}, 0);
  tri.add_row(std::array<double, 2>{0, -1}, 0);
  tri.add_row(std::array<double, 2>{4, 3}, 12);
  const auto ct = lp::chebyshev_center(tri);
  EXPECT_NEAR(ct.radius, 1.0, 1e-12);
  EXPECT_NEAR(ct.center[0], 1.0, 1e-12);
  EXPECT_NEAR(ct.center[1], 1.0, 1e-12);
}

TEST(Lp, ChebyshevInfeasibleAndUnbounded) {
  lp::Problem bad(2);
  bad.add_row(std::array<double, 2>{1, 0}, -1);
  bad.add_row(std::array<double, 2>{-1, 0}, -1);
  EXPECT_LT(lp::chebyshev_center(bad).radius, 0.0);

  lp::Problem half(3);
  half.add_row(std::array<double, 3>{1, 1, 0}, 1);
  const auto h = lp::chebyshev_center(half);
  EXPECT_FALSE(h.bounded);
  EXPECT_TRUE(std::isinf(h.radius));

  lp::Problem line(1);
  line.add_row(std::array<double, 1>{2}, 4);
  line.add_row(std::array<double, 1>{-1}, 0);
  const auto l = lp::chebyshev_center(line);
  EXPECT_NEAR(l.radius, 1.0, 1e-12);
  EXPECT_NEAR(l.center[0], 1.0, 1e-12);
}
