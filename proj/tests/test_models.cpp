#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "voroperc/models.hpp"
#include "voroperc/ppp.hpp"

using namespace voroperc;

namespace {

// Definition-level evaluation by full scans. Returns -1 when the decision is
// within 1e-8 of a tie.
template <std::size_t D>
int brute_continuum(const PointConfig<D>& c, double p, const Point<D>& y) {
  double dopen = kInf, dclosed = kInf;
  for (std::size_t i = 0; i < c.size(); ++i) {
    double& d = c.mark(i) <= p ? dopen : dclosed;
    d = std::min(d, dist(y, c.position(i)));
  }
  if (std::fabs(dopen - dclosed) < 1e-8) return -1;
  return dopen <= dclosed ? 1 : 0;
}

template <std::size_t D>
int brute_truncated(const PointConfig<D>& c, double p, double N, const Point<D>& y) {
  std::map<std::array<std::int64_t, D>, int> closed;
  auto key = [&](const Point<D>& x) {
    std::array<std::int64_t, D> k{};
    for (std::size_t i = 0; i < D; ++i) k[i] = static_cast<std::int64_t>(std::floor(x[i] / N));
    return k;
  };
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c.mark(i) > p) ++closed[key(c.position(i))];
  const double cap = 2.0 * std::pow(N, static_cast<double>(D));
  double dopen = kInf, dclosed = kInf;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double d = dist(y, c.position(i));
    if (c.mark(i) <= p) dopen = std::min(dopen, d);
    else if (closed[key(c.position(i))] <= cap) dclosed = std::min(dclosed, d);
  }
  for (const auto& [k, n] : closed) {
    if (n <= cap) continue;
    Box<D> b;
    for (std::size_t i = 0; i < D; ++i) {
      b.lo[i] = N * static_cast<double>(k[i]);
      b.hi[i] = b.lo[i] + N;
    }
    dclosed = std::min(dclosed, b.distance(y));
  }
  const double rhs = std::min(dclosed, N);
  if (std::fabs(dopen - rhs) < 1e-8) return -1;
  return dopen <= rhs ? 1 : 0;
}

}  // namespace

TEST(Models, ContinuumMatchesDefinition) {
  const auto c = sample_ppp(Window<2>::around(Box<2>::centered(6.0), 6.0), 1.0, 3);
  Stream s(1);
  for (double p : {0.2, 0.5, 0.8}) {
    const Coloring<2> col(c, ColoringModel<2>::continuum(p));
    for (int q = 0; q < 2000; ++q) {
      const Point<2> y{s.uniform(-6, 6), s.uniform(-6, 6)};
      const int want = brute_continuum(c, p, y);
      if (want >= 0) {
        EXPECT_EQ(col.contains(y), want == 1);
      }
    }
  }
}

TEST(Models, TruncatedMatchesDefinitionWithSaturation) {
  // Intensity 3 with N = 1 in d = 2 saturates a fair share of boxes.
  for (std::uint64_t seed : {5u, 6u, 7u}) {
    const auto c = sample_ppp(Window<2>::around(Box<2>::centered(6.0), 4.0), 3.0, seed);
    Stream s(seed);
    for (double p : {0.3, 0.6}) {
      const Coloring<2> col(c, ColoringModel<2>::truncated(1.0, p));
      EXPECT_GT(col.obstacles()->saturated_boxes().size(), 0u);
      for (int q = 0; q < 1500; ++q) {
        const Point<2> y{s.uniform(-6, 6), s.uniform(-6, 6)};
        const int want = brute_truncated(c, p, 1.0, y);
        if (want >= 0) {
          EXPECT_EQ(col.contains(y), want == 1) << y[0] << "," << y[1];
        }
      }
    }
  }
}

TEST(Models, Truncated3DMatchesDefinition) {
  const auto c = sample_ppp(Window<3>::around(Box<3>::centered(2.0), 4.0), 2.0, 9);
  Stream s(2);
  const Coloring<3> col(c, ColoringModel<3>::truncated(1.0, 0.4));
  for (int q = 0; q < 1500; ++q) {
    const Point<3> y{s.uniform(-2, 2), s.uniform(-2, 2), s.uniform(-2, 2)};
    const int want = brute_truncated(c, 0.4, 1.0, y);
    if (want >= 0) {
      EXPECT_EQ(col.contains(y), want == 1);
    }
  }
}

TEST(Models, TruncatedIncludedInContinuum) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto c = sample_ppp(Window<2>::around(Box<2>::centered(8.0), 8.0), 1.0, 40 + seed);
    Stream s(seed);
    for (double p : {0.3, 0.5, 0.7}) {
      const Coloring<2> full(c, ColoringModel<2>::continuum(p));
      for (double N : {1.0, 2.0, 4.0}) {
        const Coloring<2> tr(c, ColoringModel<2>::truncated(N, p));
        for (int q = 0; q < 300; ++q) {
          const Point<2> y{s.uniform(-8, 8), s.uniform(-8, 8)};
          if (tr.contains(y)) {
            EXPECT_TRUE(full.contains(y));
          }
        }
      }
    }
  }
}

TEST(Models, MonotoneInP) {
  const auto c = sample_ppp(Window<2>::around(Box<2>::centered(5.0), 7.0), 1.0, 17);
  Stream s(3);
  for (int q = 0; q < 400; ++q) {
    const Point<2> y{s.uniform(-5, 5), s.uniform(-5, 5)};
    bool prev_c = false, prev_t = false;
    for (int k = 1; k <= 9; ++k) {
      const double p = 0.1 * k;
      const bool in_c = membership(y, ColoringModel<2>::continuum(p), c);
      const bool in_t = membership(y, ColoringModel<2>::truncated(2.0, p), c);
      EXPECT_TRUE(in_c || !prev_c);
      EXPECT_TRUE(in_t || !prev_t);
      prev_c = in_c;
      prev_t = in_t;
    }
  }
}

TEST(Models, TruncatedFiniteRange) {
  // Membership on D depends only on points within D + Lambda_{2N}.
  const double N = 2.0;
  const auto c = sample_ppp(Window<2>::around(Box<2>::centered(8.0), 8.0), 1.0, 23);
  const Box<2> D{{-2, -2}, {2, 2}};
  const Box<2> keep = D.expanded(2 * N);
  std::vector<Point<2>> pos;
  std::vector<double> marks;
  Stream s(8);
  for (std::size_t i = 0; i < c.size(); ++i) {
    pos.push_back(c.position(i));
    // Re-randomize marks of everything outside the dependency region.
    marks.push_back(keep.contains(c.position(i)) ? c.mark(i) : s.uniform());
  }
  const auto c2 = PointConfig<2>::from_positions(c.window(), pos, marks);
  for (double p : {0.3, 0.5, 0.7}) {
    const Coloring<2> a(c, ColoringModel<2>::truncated(N, p)), b(c2, ColoringModel<2>::truncated(N, p));
    for (int q = 0; q < 1000; ++q) {
      const Point<2> y{s.uniform(-2, 2), s.uniform(-2, 2)};
      EXPECT_EQ(a.contains(y), b.contains(y));
    }
  }
}

TEST(Models, QueriesOutsideAnalysisDomainRejected) {
  const auto c = sample_ppp(Window<2>::around(Box<2>::centered(2.0), 4.0), 1.0, 1);
  const Coloring<2> col(c, ColoringModel<2>::continuum(0.5));
  EXPECT_THROW(col.contains(Point<2>{3.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(Coloring<2>(c, ColoringModel<2>::continuum(1.5)), std::invalid_argument);
  EXPECT_THROW(Coloring<2>(c, ColoringModel<2>::truncated(0.0, 0.5)), std::invalid_argument);
  // Window not paved by 5-boxes.
  EXPECT_THROW(Coloring<2>(c, ColoringModel<2>::truncated(5.0, 0.5)), std::invalid_argument);
}

TEST(BoxField, DensityAndClosedBoxes) {
  const auto f = bernoulli_box_field<2>(2.0, 0.3, 77);
  int hits = 0;
  const int side = 100;
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) {
      const std::array<std::int64_t, 2> k{i, j};
      const bool occ = f.occupied(k);
      hits += occ;
      // Interior point follows its own box.
      EXPECT_EQ(f.contains(Point<2>{2.0 * i + 1.0, 2.0 * j + 1.0}), occ);
    }
  const double n = side * side;
  EXPECT_NEAR(hits / n, 0.3, 5 * std::sqrt(0.21 / n));
  // A shared corner belongs to all four closed boxes around it.
  for (int i = 1; i < 20; ++i) {
    bool any = false;
    for (int a = -1; a <= 0; ++a)
      for (int b = -1; b <= 0; ++b) any = any || f.occupied({i + a, 5 + b});
    EXPECT_EQ(f.contains(Point<2>{2.0 * i, 10.0}), any);
  }
  EXPECT_THROW(bernoulli_box_field<2>(1.0, 1.5, 0), std::invalid_argument);
}

TEST(BoxField, OccupiedSitesMatchScan) {
  const auto f = bernoulli_box_field<3>(1.5, 0.2, 5);
  const Box<3> region{{-3.2, 0.1, -1.0}, {2.0, 4.4, 1.0}};
  const auto sites = f.occupied_sites(region);
  std::size_t want = 0;
  for (int i = -10; i < 10; ++i)
    for (int j = -10; j < 10; ++j)
      for (int k = -10; k < 10; ++k)
        if (f.occupied({i, j, k}) && f.box_of({i, j, k}).intersects(region)) ++want;
  EXPECT_EQ(sites.size(), want);
}

TEST(Models, ComposeUnionAndDifference) {
  const auto c = sample_ppp(Window<2>::around(Box<2>::centered(6.0), 6.0), 1.0, 2);
  const auto f = bernoulli_box_field<2>(1.0, 0.25, 3);
  const auto base = ColoringModel<2>::continuum(0.4);
  const Coloring<2> plain(c, base), uni(c, compose(base, f, FieldMode::unite)),
      diff(c, compose(base, f, FieldMode::subtract));
  Stream s(4);
  for (int q = 0; q < 2000; ++q) {
    const Point<2> y{s.uniform(-6, 6), s.uniform(-6, 6)};
    EXPECT_EQ(uni.contains(y), plain.contains(y) || f.contains(y));
    EXPECT_EQ(diff.contains(y), plain.contains(y) && !f.contains(y));
  }
}

TEST(Models, JsonRoundTripAndUnknownKeys) {
  auto m = compose(ColoringModel<3>::truncated(4.0, 0.6), bernoulli_box_field<3>(4.0, 0.05, 11), FieldMode::subtract);
  const auto j = to_json(m);
  const auto back = model_from_json<3>(j);
  EXPECT_EQ(to_json(back), j);
  auto bad = j;
  bad["colour"] = "red";
  EXPECT_THROW(model_from_json<3>(bad), std::invalid_argument);
  auto bad_field = j;
  bad_field["fields"][0]["sigma"] = 1;
  EXPECT_THROW(model_from_json<3>(bad_field), std::invalid_argument);
  EXPECT_THROW(model_from_json<3>(nlohmann::json{{"kind", "bernoulli"}, {"p", 0.5}}), std::invalid_argument);
}
