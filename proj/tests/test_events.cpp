#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include "voroperc/events.hpp"

using namespace voroperc;

namespace {

using Poly = std::vector<Point<2>>;

// Voronoi geometry by brute force: every cell is clipped against every
// bisector, with no spatial index and no shared code with the engine.
struct Oracle2D {
  const PointConfig<2>& c;
  std::size_t n;
  explicit Oracle2D(const PointConfig<2>& cfg) : c(cfg), n(cfg.size()) {}

  static Poly box_poly(const Box<2>& b) {
    return {{b.lo[0], b.lo[1]}, {b.hi[0], b.lo[1]}, {b.hi[0], b.hi[1]}, {b.lo[0], b.hi[1]}};
  }

  // Keep {y : a.y <= rhs}.
  static Poly clip(const Poly& P, const Point<2>& a, double rhs) {
    Poly out;
    const std::size_t m = P.size();
    for (std::size_t k = 0; k < m; ++k) {
      const auto& p = P[k];
      const auto& q = P[(k + 1) % m];
      const double fp = dot(a, p) - rhs, fq = dot(a, q) - rhs;
      if (fp <= 1e-12) out.push_back(p);
      if ((fp < -1e-12 && fq > 1e-12) || (fp > 1e-12 && fq < -1e-12)) {
        const double t = fp / (fp - fq);
        out.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
      }
    }
    return out;
  }

  Poly cell(std::size_t i, const Box<2>& b) const {
    Poly P = box_poly(b);
    const auto& pi = c.position(i);
    for (std::size_t k = 0; k < n && !P.empty(); ++k) {
      if (k == i) continue;
      const auto& pk = c.position(k);
      P = clip(P, Point<2>{2 * (pk[0] - pi[0]), 2 * (pk[1] - pi[1])}, norm2(pk) - norm2(pi));
    }
    return P;
  }
  bool cell_meets(std::size_t i, const Box<2>& b) const { return !cell(i, b).empty(); }

  // Length of the shared face of cells i and j inside b.
  double face_length(std::size_t i, std::size_t j, const Box<2>& b) const {
    const auto& pi = c.position(i);
    const auto& pj = c.position(j);
    const Point<2> m{0.5 * (pi[0] + pj[0]), 0.5 * (pi[1] + pj[1])};
    Point<2> u{-(pj[1] - pi[1]), pj[0] - pi[0]};
    const double len = norm(u);
    u = (1.0 / len) * u;
    double lo = -1e300, hi = 1e300;
    auto add = [&](double a, double rhs) {  // a t <= rhs
      if (std::fabs(a) < 1e-15) {
        if (rhs < 0) lo = 1, hi = 0;
        return;
      }
      (a > 0 ? hi : lo) = a > 0 ? std::min(hi, rhs / a) : std::max(lo, rhs / a);
    };
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i || k == j) continue;
      const auto& pk = c.position(k);
      const Point<2> a{2 * (pk[0] - pi[0]), 2 * (pk[1] - pi[1])};
      add(dot(a, u), norm2(pk) - norm2(pi) - dot(a, m));
    }
    for (int ax = 0; ax < 2; ++ax) {
      add(u[ax], b.hi[ax] - m[ax]);
      add(-u[ax], m[ax] - b.lo[ax]);
    }
    return hi - lo;
  }

  // Open cells meeting `dom`, adjacency through faces meeting `dom`.
  struct Graph {
    std::vector<int> nodes;
    std::vector<std::vector<int>> adj;  // indexed by point id
    std::vector<int> comp;              // by point id, -1 if not a node
    int ncomp = 0;
  };
  Graph graph(const Box<2>& dom, double p, bool open_only = true) const {
    Graph g;
    g.adj.assign(n, {});
    g.comp.assign(n, -1);
    std::vector<char> node(n, 0);
    for (std::size_t i = 0; i < n; ++i)
      if ((!open_only || c.is_open(i, p)) && cell_meets(i, dom)) {
        node[i] = 1;
        g.nodes.push_back(static_cast<int>(i));
      }
    for (std::size_t a = 0; a < g.nodes.size(); ++a)
      for (std::size_t b = a + 1; b < g.nodes.size(); ++b) {
        const int i = g.nodes[a], j = g.nodes[b];
        if (face_length(i, j, dom) > 1e-7) {
          g.adj[i].push_back(j);
          g.adj[j].push_back(i);
        }
      }
    for (int s : g.nodes) {
      if (g.comp[s] >= 0) continue;
      std::vector<int> st{s};
      g.comp[s] = g.ncomp;
      while (!st.empty()) {
        const int u = st.back();
        st.pop_back();
        for (int v : g.adj[u])
          if (g.comp[v] < 0) {
            g.comp[v] = g.ncomp;
            st.push_back(v);
          }
      }
      ++g.ncomp;
    }
    return g;
  }

  std::set<int> comps_meeting(const Graph& g, const std::vector<Box<2>>& parts) const {
    std::set<int> out;
    for (int i : g.nodes)
      for (const auto& b : parts)
        if (cell_meets(i, b)) out.insert(g.comp[i]);
    return out;
  }
};

PointConfig<2> sample(double domain_half, double margin, std::uint64_t seed, double intensity = 1.0) {
  return sample_ppp(Window<2>::around(Box<2>::centered(domain_half), margin), intensity, seed);
}

}  // namespace

TEST(Events, CrossingMatchesOracle) {
  int yes = 0;
  for (std::uint64_t t = 0; t < 24; ++t) {
    const auto c = sample(4.0, 3.0, 300 + t);
    const Oracle2D o(c);
    const Box<2> dom = Box<2>::centered(4.0);
    for (double p : {0.4, 0.5, 0.6}) {
      const auto lab = open_clusters(c, ColoringModel<2>::continuum(p), dom);
      const auto [l, r] = opposite_faces(dom);
      const auto g = o.graph(dom, p);
      const auto a = o.comps_meeting(g, l.parts), b = o.comps_meeting(g, r.parts);
      bool want = false;
      for (int k : a) want = want || b.count(k);
      EXPECT_EQ(crossing(lab, l, r), want) << t << " " << p;
      EXPECT_EQ(lab.clusters, g.ncomp);
      yes += want;
    }
  }
  EXPECT_GT(yes, 5);
  EXPECT_LT(yes, 67);
}

TEST(Events, AnnulusCrossersMatchOracle) {
  for (std::uint64_t t = 0; t < 12; ++t) {
    const auto c = sample(4.0, 3.0, 700 + t);
    const Oracle2D o(c);
    const double L = 2.0;
    const auto lab = open_clusters(c, ColoringModel<2>::continuum(0.6), Box<2>::centered(2 * L));
    const auto g = o.graph(Box<2>::centered(2 * L), 0.6);
    const auto inner = o.comps_meeting(g, {Box<2>::centered(L / 2)});
    const auto outer = o.comps_meeting(g, Region<2>::annulus(Box<2>::centered(2 * L), Box<2>::centered(L)).parts);
    int want = 0;
    for (int k : inner) want += outer.count(k) ? 1 : 0;
    EXPECT_EQ(annulus_crossers(lab, L), want) << t;
    const auto u = local_uniqueness(c, ColoringModel<2>::continuum(0.6), L);
    EXPECT_EQ(u.count, want);
    EXPECT_EQ(u.value, want == 1);
    EXPECT_EQ(local_uniqueness(c, ColoringModel<2>::continuum(0.6), L, true).value, want <= 1);
  }
}

TEST(Events, DenseClusterMatchesOracle) {
  int yes = 0;
  for (std::uint64_t t = 0; t < 12; ++t) {
    const auto c = sample(4.0, 3.0, 1100 + t);
    const Oracle2D o(c);
    const double L = 2.0, ell = 1.0;
    const auto g = o.graph(Box<2>::centered(2 * L), 0.65);
    std::map<int, int> hits;
    int probes = 0;
    for (int i = -2; i <= 2; ++i)
      for (int j = -2; j <= 2; ++j) {
        ++probes;
        for (int k : o.comps_meeting(g, {Box<2>::cube(Point<2>{i * ell, j * ell}, ell)})) ++hits[k];
      }
    bool want = false;
    for (const auto& [k, h] : hits) want = want || h == probes;
    EXPECT_EQ(dense_cluster(c, ColoringModel<2>::continuum(0.65), L, ell), want) << t;
    yes += want;
  }
  EXPECT_GT(yes, 0);
}

TEST(Events, ChemicalDistanceMatchesFloydWarshall) {
  for (std::uint64_t t = 0; t < 8; ++t) {
    const double R = 2.0;
    const auto c = sample(2 * R, 3.0, 1500 + t);
    const Oracle2D o(c);
    const Box<2> outer = Box<2>::centered(2 * R), inner = Box<2>::centered(R);
    const auto g = o.graph(outer, 1.0, false);
    const int n = static_cast<int>(c.size());
    const int inf = std::numeric_limits<int>::max() / 4;
    std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
    for (int i : g.nodes) {
      d[i][i] = 0;
      for (int j : g.adj[i]) d[i][j] = 1;
    }
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    std::vector<int> src;
    for (int i : g.nodes)
      if (o.cell_meets(i, inner)) src.push_back(i);
    int want = 0;
    for (int a : src)
      for (int b : src) want = std::max(want, d[a][b]);
    const auto got = chemical_distance(c, R);
    EXPECT_EQ(got.sources, src.size());
    EXPECT_EQ(got.diameter, want >= inf ? -1 : want) << t;
    EXPECT_TRUE(chemical_distance_ok(c, R, want));
    if (want > 0) {
      EXPECT_FALSE(chemical_distance_ok(c, R, want - 1));
    }
    // Conservative mode only drops edges.
    const auto cons = chemical_distance(c, R, true);
    EXPECT_TRUE(cons.diameter < 0 || cons.diameter >= got.diameter);
  }
}

TEST(Events, CrossingThresholdAgreesWithLevels) {
  for (std::uint64_t t = 0; t < 10; ++t) {
    const auto c = sample(5.0, 4.0, 1900 + t);
    const Box<2> dom = Box<2>::centered(5.0);
    const auto g = std::make_shared<const CellGraph<2>>(build_cell_graph(c, std::optional<Box<2>>(dom)));
    const auto [l, r] = opposite_faces(dom);
    const double thr = crossing_threshold(*g, l, r);
    ASSERT_TRUE(std::isfinite(thr));
    for (int k = 1; k < 20; ++k) {
      const double p = 0.05 * k;
      EXPECT_EQ(crossing(label_cells<2>(g, p), l, r), thr <= p) << t << " " << p;
    }
    const double thr_lat = crossing_threshold_lattice(c, dom, 0.25);
    for (int k = 1; k < 20; ++k) {
      const double p = 0.05 * k;
      const auto lab = label_lattice(Coloring<2>(c, ColoringModel<2>::continuum(p)), dom, 0.25);
      EXPECT_EQ(crossing(lab, l, r), thr_lat <= p) << t << " " << p;
    }
  }
}

TEST(Events, LatticeLabelingMatchesFloodFill) {
  const auto c = sample(3.0, 3.0, 21, 2.0);
  const Box<2> dom = Box<2>::centered(3.0);
  const double h = 0.2;
  const Coloring<2> col(c, ColoringModel<2>::continuum(0.55));
  const auto lab = label_lattice(col, dom, h);
  // Flood fill on a dense boolean image.
  const int m = 31;
  std::vector<int> img(m * m), comp(m * m, -1);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const Point<2> y{-3.0 + h * i, -3.0 + h * j};
      double dopen = kInf, dclosed = kInf;
      for (std::size_t k = 0; k < c.size(); ++k) {
        double& d = c.is_open(k, 0.55) ? dopen : dclosed;
        d = std::min(d, dist(y, c.position(k)));
      }
      img[i * m + j] = dopen <= dclosed;
    }
  int ncomp = 0;
  for (int s = 0; s < m * m; ++s) {
    if (!img[s] || comp[s] >= 0) continue;
    std::vector<int> st{s};
    comp[s] = ncomp;
    while (!st.empty()) {
      const int u = st.back();
      st.pop_back();
      const int i = u / m, j = u % m;
      const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (const auto& q : nb) {
        if (q[0] < 0 || q[0] >= m || q[1] < 0 || q[1] >= m) continue;
        const int v = q[0] * m + q[1];
        if (img[v] && comp[v] < 0) {
          comp[v] = ncomp;
          st.push_back(v);
        }
      }
    }
    ++ncomp;
  }
  EXPECT_EQ(lab.clusters, ncomp);
  std::size_t open = 0;
  for (int v : img) open += v;
  EXPECT_EQ(lab.nodes.size(), open);
  // Same partition: label pairs map one-to-one.
  std::map<int, int> fwd, back;
  for (std::size_t k = 0; k < lab.nodes.size(); ++k) {
    const int f = comp[lab.nodes[k]];
    const int l = lab.label[k];
    EXPECT_TRUE(!fwd.count(l) || fwd[l] == f);
    EXPECT_TRUE(!back.count(f) || back[f] == l);
    fwd[l] = f;
    back[f] = l;
  }
}

TEST(Events, StarComponentsMatchExhaustive) {
  Stream s(12);
  for (int t = 0; t < 30; ++t) {
    const std::array<std::int64_t, 2> dims{7, 9};
    std::vector<std::uint8_t> mask(63);
    for (auto& v : mask) v = s.uniform() < 0.35;
    // Union-find over every pair at l_inf distance 1.
    std::vector<int> parent(63);
    for (int i = 0; i < 63; ++i) parent[i] = i;
    std::function<int(int)> find = [&](int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); };
    for (int a = 0; a < 63; ++a)
      for (int b = 0; b < 63; ++b)
        if (mask[a] && mask[b] && std::abs(a / 9 - b / 9) <= 1 && std::abs(a % 9 - b % 9) <= 1) parent[find(a)] = find(b);
    std::map<int, std::size_t> size;
    for (int a = 0; a < 63; ++a)
      if (mask[a]) ++size[find(a)];
    std::vector<std::size_t> want;
    for (const auto& [r, k] : size) want.push_back(k);
    auto got = star_components<2>(dims, mask);
    std::sort(want.begin(), want.end());
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, want);
  }
  // Diagonal neighbours join; a checkerboard is one component.
  std::vector<std::uint8_t> checker(16);
  for (int i = 0; i < 16; ++i) checker[i] = (i / 4 + i % 4) % 2 == 0;
  EXPECT_EQ(star_components<2>({4, 4}, checker), std::vector<std::size_t>{8});
}

TEST(Events, StarSurrogateThreshold) {
  const auto c = sample(12.0, 6.0, 5);
  const auto r = star_connected_good_fraction(c, 4.0, 1.0, 20.0);
  EXPECT_EQ(r.site_ok.size(), 81u);
  EXPECT_DOUBLE_EQ(r.threshold, std::sqrt(4.0) / 1000.0);
  for (std::size_t f = 0; f < 81; ++f) {
    const Point<2> x{static_cast<double>(f / 9) - 4.0, static_cast<double>(f % 9) - 4.0};
    EXPECT_EQ(r.site_ok[f], chemical_distance_ok(c, 3.0, 20.0, false, x));
  }
  // The threshold is below one site, so any failure makes the event fail.
  const bool any_fail = std::find(r.site_ok.begin(), r.site_ok.end(), 0) != r.site_ok.end();
  EXPECT_EQ(r.good, !any_fail);
}

TEST(Events, OriginClusterMatchesOracle) {
  int open = 0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const auto c = sample(4.0, 3.0, 2300 + t);
    const Oracle2D o(c);
    const auto st = origin_cluster_stats(c, ColoringModel<2>::continuum(0.45), 2000, t);
    const Box<2> dom = c.window().analysis();
    const auto g = o.graph(dom, 0.45);
    const int start = c.index().nearest(Point<2>{0, 0}).id;
    EXPECT_EQ(st.open, c.is_open(start, 0.45));
    if (!st.open) continue;
    ++open;
    std::vector<Point<2>> verts;
    bool censored = false;
    std::size_t members = 0;
    for (int i : g.nodes) {
      if (g.comp[i] != g.comp[start]) continue;
      ++members;
      for (const auto& v : o.cell(i, dom)) {
        verts.push_back(v);
        for (int ax = 0; ax < 2; ++ax)
          censored = censored || std::fabs(v[ax] - dom.lo[ax]) < 1e-9 || std::fabs(v[ax] - dom.hi[ax]) < 1e-9;
      }
    }
    double diam = 0.0;
    for (std::size_t a = 0; a < verts.size(); ++a)
      for (std::size_t b = a + 1; b < verts.size(); ++b) diam = std::max(diam, dist(verts[a], verts[b]));
    EXPECT_EQ(st.members, members) << t;
    EXPECT_EQ(st.censored, censored) << t;
    EXPECT_NEAR(st.diameter, diam, 1e-7) << t;
    EXPECT_GE(st.diam_proxy + 1e-9, diam / std::sqrt(2.0));
    EXPECT_GT(st.vol_estimate, 0.0);
  }
  EXPECT_GT(open, 3);
}

TEST(Events, OriginClusterLatticeBackend) {
  const auto c = sample(4.0, 3.0, 17);
  EventOptions opt;
  opt.backend = Backend::lattice;
  opt.lattice_h = 0.25;
  const auto lat = origin_cluster_stats(c, ColoringModel<2>::continuum(0.5), 0, 1, opt);
  const Coloring<2> col(c, ColoringModel<2>::continuum(0.5));
  EXPECT_EQ(lat.open, col.contains(Point<2>{0, 0}));
  if (lat.open) {
    EXPECT_NEAR(lat.vol_estimate, lat.members * 0.0625, 1e-12);
  }
  // The cellgraph backend rejects non-continuum models.
  EXPECT_THROW(origin_cluster_stats(c, ColoringModel<2>::truncated(1.0, 0.5), 0, 1), std::invalid_argument);
}

TEST(Events, CertificationAndArguments) {
  const auto c = sample(2.0, 2.0, 3);
  EXPECT_THROW(open_clusters(c, ColoringModel<2>::continuum(0.5), Box<2>::centered(3.0)), std::invalid_argument);
  EXPECT_THROW(local_uniqueness(c, ColoringModel<2>::continuum(0.5), 0.0), std::invalid_argument);
  EXPECT_THROW(dense_cluster(c, ColoringModel<2>::continuum(0.5), 1.0, 2.0), std::invalid_argument);
  EXPECT_THROW(chemical_distance(c, -1.0), std::invalid_argument);
  EXPECT_THROW(Region<2>::annulus(Box<2>::centered(1.0), Box<2>::centered(2.0)), std::invalid_argument);
  EXPECT_THROW(n_good(c, ColoringModel<2>::continuum(0.5), {0, 0}, 0.0), std::invalid_argument);
}

TEST(Events, MonotoneAlongPGrid) {
  for (std::uint64_t t = 0; t < 10; ++t) {
    const auto c = sample(8.0, 8.0, 40 + t);
    const Box<2> dom = Box<2>::centered(8.0);
    const auto g = std::make_shared<const CellGraph<2>>(build_cell_graph(c, std::optional<Box<2>>(dom)));
    const auto [l, r] = opposite_faces(dom);
    bool prev_cross = false, prev_dense = false;
    for (int k = 1; k <= 9; ++k) {
      const auto lab = label_cells<2>(g, 0.1 * k);
      const bool cr = crossing(lab, l, r), de = dense_from_labeling(lab, 4.0, 1.0);
      EXPECT_TRUE(cr || !prev_cross);
      EXPECT_TRUE(de || !prev_dense);
      prev_cross = cr;
      prev_dense = de;
    }
  }
}
