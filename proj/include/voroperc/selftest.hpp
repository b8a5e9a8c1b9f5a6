#pragma once

// Small-scale oracle checks, runnable from the CLI. Each check compares the
// engine against a brute-force computation that shares no code with it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cellgraph.hpp"
#include "estimators.hpp"
#include "events.hpp"
#include "format.hpp"
#include "models.hpp"
#include "ppp.hpp"
#include "rng.hpp"

namespace voroperc {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace oracle {

/// Delaunay edges by the empty-circumcircle criterion, O(n^4). Pairs whose
/// status depends on a near-cocircular quadruple are reported in `unsure`.
inline void delaunay_2d(const std::vector<Point<2>>& p, std::set<std::pair<int, int>>& edges,
                        std::set<std::pair<int, int>>& unsure) {
  const int n = static_cast<int>(p.size());
  auto add = [](std::set<std::pair<int, int>>& s, int a, int b) { s.insert({std::min(a, b), std::max(a, b)}); };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        const double ax = p[i][0], ay = p[i][1], bx = p[j][0], by = p[j][1], cx = p[k][0], cy = p[k][1];
        const double d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
        if (std::fabs(d) < 1e-12) continue;
        const double a2 = ax * ax + ay * ay, b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
        const double ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d;
        const double uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d;
        const double r = std::hypot(ax - ux, ay - uy);
        bool empty = true, close = false;
        for (int m = 0; m < n && empty; ++m) {
          if (m == i || m == j || m == k) continue;
          const double dm = std::hypot(p[m][0] - ux, p[m][1] - uy);
          if (dm < r - 1e-7 * std::max(1.0, r)) empty = false;
          else if (dm < r + 1e-7 * std::max(1.0, r)) close = true;
        }
        if (!empty) continue;
        auto& dst = close ? unsure : edges;
        add(dst, i, j);
        add(dst, j, k);
        add(dst, i, k);
      }
  for (const auto& e : unsure) edges.erase(e);
}

}  // namespace oracle

/// Cell-graph edges against the empty-circle oracle on configurations of at
/// most `max_points` points in d = 2.
inline CheckResult check_delaunay_2d(std::size_t configs, std::size_t max_points, std::uint64_t seed) {
  CheckResult res{"cellgraph-vs-delaunay-2d", true, ""};
  std::size_t mismatches = 0, compared = 0;
  for (std::size_t c = 0; c < configs; ++c) {
    Stream s = Stream(seed).child("delaunay").child(c);
    const std::size_t n = 3 + static_cast<std::size_t>(s.uniform() * static_cast<double>(max_points - 2));
    std::vector<Point<2>> pos(n);
    std::vector<double> marks(n);
    for (std::size_t i = 0; i < n; ++i) {
      pos[i] = {s.uniform(0.0, 10.0), s.uniform(0.0, 10.0)};
      marks[i] = s.uniform();
    }
    const auto config =
        PointConfig<2>::from_positions(Window<2>{Box<2>{{0.0, 0.0}, {10.0, 10.0}}, 0.0}, pos, marks);
    const auto g = build_cell_graph(config);
    std::set<std::pair<int, int>> truth, unsure;
    oracle::delaunay_2d(pos, truth, unsure);
    std::set<std::pair<int, int>> got;
    for (const auto& e : g.pairs()) {
      if (e.degenerate) {
        unsure.insert({e.a, e.b});
        continue;
      }
      got.insert({e.a, e.b});
    }
    for (const auto& e : got)
      if (!unsure.count(e) && !truth.count(e)) ++mismatches;
    for (const auto& e : truth)
      if (!unsure.count(e) && !got.count(e)) ++mismatches;
    compared += truth.size();
  }
  res.pass = mismatches == 0;
  res.detail = std::to_string(configs) + " configs, " + std::to_string(compared) + " edges, " +
               std::to_string(mismatches) + " mismatches";
  return res;
}

/// Nearest-point location against a linear scan.
inline CheckResult check_locate(std::size_t queries, std::uint64_t seed) {
  CheckResult res{"locate-vs-scan", true, ""};
  const auto config = sample_ppp(Window<3>::around(Box<3>::centered(4.0), 2.0), 1.0, seed);
  Stream s = Stream(seed).child("locate");
  std::size_t bad = 0;
  for (std::size_t q = 0; q < queries; ++q) {
    Point<3> y{s.uniform(-6, 6), s.uniform(-6, 6), s.uniform(-6, 6)};
    double best = kInf;
    std::int32_t arg = -1;
    for (std::size_t i = 0; i < config.size(); ++i) {
      const double d = dist(y, config.position(i));
      if (d < best) {
        best = d;
        arg = static_cast<std::int32_t>(i);
      }
    }
    const auto got = locate(config, y);
    if (got.id != arg && std::fabs(dist(y, config.position(static_cast<std::size_t>(got.id))) - best) > kGeomTol) ++bad;
  }
  res.pass = bad == 0;
  res.detail = std::to_string(queries) + " queries, " + std::to_string(bad) + " wrong";
  return res;
}

/// Pathwise inclusion of the truncated model in the continuum model.
inline CheckResult check_inclusion(std::size_t configs, std::size_t samples, std::uint64_t seed) {
  CheckResult res{"truncated-inclusion", true, ""};
  std::size_t violations = 0;
  for (std::size_t c = 0; c < configs; ++c) {
    const auto config = sample_ppp(Window<2>::around(Box<2>::centered(8.0), 16.0), 1.0, Stream(seed).child(c).key());
    Stream s = Stream(seed).child("inclusion").child(c);
    for (double p : {0.3, 0.5, 0.7}) {
      const Coloring<2> full(config, ColoringModel<2>::continuum(p));
      const Coloring<2> trunc(config, ColoringModel<2>::truncated(4.0, p));
      for (std::size_t k = 0; k < samples; ++k) {
        const Point<2> y{s.uniform(-8, 8), s.uniform(-8, 8)};
        if (trunc.contains(y) && !full.contains(y)) ++violations;
      }
    }
  }
  res.pass = violations == 0;
  res.detail = std::to_string(violations) + " violations";
  return res;
}

/// Empirical coverage of the 95% Wilson interval for Bernoulli(q) samples.
inline double wilson_coverage(double q, std::size_t n, std::size_t meta, std::uint64_t seed) {
  std::size_t hit = 0;
  for (std::size_t m = 0; m < meta; ++m) {
    Stream s = Stream(seed).child("wilson").child(m);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) k += s.uniform() < q ? 1 : 0;
    const auto ci = wilson(k, n);
    hit += (ci.lo <= q && q <= ci.hi) ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(meta);
}

inline CheckResult check_wilson(std::uint64_t seed) {
  const double cov = wilson_coverage(0.3, 200, 1000, seed);
  return {"wilson-coverage", cov >= 0.93 && cov <= 0.97, "coverage " + fmt17(cov)};
}

/// Poisson counts: sample mean and variance against the intensity.
inline CheckResult check_poisson(std::uint64_t seed) {
  CheckResult res{"poisson-moments", true, ""};
  std::string detail;
  for (double mean : {3.0, 50.0}) {
    Stream s = Stream(seed).child("poisson");
    const std::size_t m = 20000;
    double sum = 0, sq = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double k = static_cast<double>(sample_poisson(mean, s));
      sum += k;
      sq += k * k;
    }
    const double mu = sum / m, var = sq / m - mu * mu;
    const double se = std::sqrt(mean / m);
    if (std::fabs(mu - mean) > 5 * se || std::fabs(var / mean - 1.0) > 0.06) res.pass = false;
    detail += "mean " + fmt17(mean) + ": " + fmt17(mu) + "/" + fmt17(var) + "; ";
  }
  res.detail = detail;
  return res;
}

/// Replica outcomes do not depend on the worker count.
inline CheckResult check_thread_invariance(std::uint64_t seed) {
  EventSpec<2> ev;
  ev.kind = EventKind::crossing;
  ev.L = 6.0;
  ev.model = ColoringModel<2>::continuum(0.5);
  std::vector<std::string> digests;
  for (unsigned t : {1u, 2u, 8u}) {
    auto spec = experiment(ev, 40, seed);
    spec.threads = t;
    const auto rep = mc_estimate(spec);
    std::string s;
    for (const auto& r : rep.records) s += std::to_string(r.outcome.value) + fmt17(r.outcome.aux) + ";";
    digests.push_back(hex64(fnv1a64(s)));
  }
  const bool same = digests[0] == digests[1] && digests[1] == digests[2];
  return {"thread-invariance", same, digests[0] + " " + digests[1] + " " + digests[2]};
}

/// Open-cell components in d = 3 against a fine lattice coloring.
inline CheckResult check_lattice_3d(std::size_t configs, std::uint64_t seed) {
  CheckResult res{"cellgraph-vs-lattice-3d", true, ""};
  std::size_t bad = 0;
  for (std::size_t c = 0; c < configs; ++c) {
    Stream s = Stream(seed).child("lattice3").child(c);
    const std::size_t n = 4 + static_cast<std::size_t>(s.uniform() * 16.0);
    std::vector<Point<3>> pos(n);
    std::vector<double> marks(n);
    for (std::size_t i = 0; i < n; ++i) {
      pos[i] = {s.uniform(0, 4), s.uniform(0, 4), s.uniform(0, 4)};
      marks[i] = s.uniform();
    }
    const Box<3> dom{{0, 0, 0}, {4, 4, 4}};
    const auto config = PointConfig<3>::from_positions(Window<3>{dom, 0.0}, pos, marks);
    auto g = std::make_shared<const CellGraph<3>>(build_cell_graph(config, std::optional<Box<3>>(dom)));
    const auto lab = label_cells<3>(g, 0.5);
    const auto field = grid_coloring(config, dom, 4.0 / 80.0);
    UnionFind uf(n);
    field.grid.for_each_edge([&](std::size_t a, std::size_t b) {
      const auto u = field.owner[a], v = field.owner[b];
      if (u != v && config.is_open(u, 0.5) && config.is_open(v, 0.5)) uf.unite(u, v);
    });
    // Compare partitions restricted to open cells.
    std::vector<std::int32_t> open;
    for (std::size_t i = 0; i < n; ++i)
      if (config.is_open(i, 0.5)) open.push_back(static_cast<std::int32_t>(i));
    auto label_of = [&](std::int32_t x) {
      for (std::size_t k = 0; k < lab.nodes.size(); ++k)
        if (lab.nodes[k] == x) return lab.label[k];
      return -1;
    };
    for (std::size_t a = 0; a < open.size(); ++a)
      for (std::size_t b = a + 1; b < open.size(); ++b) {
        const bool same_graph = label_of(open[a]) == label_of(open[b]);
        const bool same_lattice = uf.find(open[a]) == uf.find(open[b]);
        if (same_graph != same_lattice) ++bad;
      }
  }
  res.pass = bad == 0;
  res.detail = std::to_string(configs) + " configs, " + std::to_string(bad) + " pair mismatches";
  return res;
}

inline std::vector<CheckResult> run_selftest(std::uint64_t seed = 20240917, bool quick = true) {
  std::vector<CheckResult> out;
  out.push_back(check_delaunay_2d(quick ? 30 : 100, 50, seed));
  out.push_back(check_locate(quick ? 500 : 5000, seed));
  out.push_back(check_inclusion(quick ? 5 : 50, quick ? 200 : 1000, seed));
  out.push_back(check_poisson(seed));
  out.push_back(check_wilson(seed));
  out.push_back(check_thread_invariance(seed));
  out.push_back(check_lattice_3d(quick ? 5 : 30, seed));
  return out;
}

}  // namespace voroperc
