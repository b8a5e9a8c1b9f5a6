#pragma once

// Clusters of the open region inside a domain and the event detectors built
// on them. Two backends share one labelling type: the exact cell graph
// (continuum model only) and a lattice of sample sites (any model).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cellgraph.hpp"
#include "geometry.hpp"
#include "models.hpp"
#include "ppp.hpp"
#include "rng.hpp"
#include "union_find.hpp"

namespace voroperc {

enum class Backend { cellgraph, lattice };

inline std::string to_string(Backend b) { return b == Backend::cellgraph ? "cellgraph" : "lattice"; }

struct EventOptions {
  Backend backend = Backend::cellgraph;
  double lattice_h = 0.25;  // site spacing for the lattice backend
};

// ---------------------------------------------------------------------------
// Regions

/// Finite union of closed axis-aligned boxes.
template <std::size_t D>
struct Region {
  std::vector<Box<D>> parts;

  static Region box(const Box<D>& b) { return Region{{b}}; }

  /// outer \ int(inner), as 2d closed slabs.
  static Region annulus(const Box<D>& outer, const Box<D>& inner) {
    if (!outer.contains(inner)) throw std::invalid_argument("annulus: inner box must lie inside outer box");
    Region r;
    for (std::size_t i = 0; i < D; ++i) {
      Box<D> lo = outer, hi = outer;
      lo.hi[i] = inner.lo[i];
      hi.lo[i] = inner.hi[i];
      r.parts.push_back(lo);
      r.parts.push_back(hi);
    }
    return r;
  }

  /// [-L, L]^2 x [0, M]^(d-2).
  static Region slab(double L, double M) {
    if (!(M > 0.0)) throw std::invalid_argument("slab: thickness must be > 0");
    Box<D> b;
    for (std::size_t i = 0; i < D; ++i) {
      b.lo[i] = i < 2 ? -L : 0.0;
      b.hi[i] = i < 2 ? L : M;
    }
    return box(b);
  }

  Box<D> hull() const {
    Box<D> h{filled<D>(kInf), filled<D>(-kInf)};
    for (const auto& b : parts)
      for (std::size_t i = 0; i < D; ++i) {
        h.lo[i] = std::min(h.lo[i], b.lo[i]);
        h.hi[i] = std::max(h.hi[i], b.hi[i]);
      }
    return h;
  }
};

// ---------------------------------------------------------------------------
// Labelling

template <std::size_t D>
struct ClusterLabeling {
  Box<D> domain{};
  Backend backend = Backend::cellgraph;
  std::vector<std::int32_t> nodes;        // open cell ids or lattice site indices
  std::vector<std::int32_t> label;        // cluster of nodes[i]
  std::vector<Box<D>> node_box;           // extent of the node inside the domain
  std::vector<Point<D>> node_center;      // generating point or site
  std::vector<double> node_diameter;      // diameter bound of the node's piece
  std::vector<Box<D>> cluster_bbox;       // bounding box of member centres
  std::int32_t clusters = 0;
  std::function<bool(std::size_t, const Box<D>&)> meets;  // node index, box
  std::shared_ptr<const void> keep_alive;

  bool node_meets(std::size_t i, const Region<D>& r) const {
    for (const auto& b : r.parts) {
      if (!node_box[i].intersects(b, kGeomTol)) continue;
      if (meets(i, b)) return true;
    }
    return false;
  }

  /// Per-cluster flag: some member meets the region.
  std::vector<std::uint8_t> touching(const Region<D>& r) const {
    std::vector<std::uint8_t> t(static_cast<std::size_t>(clusters), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (!t[label[i]] && node_meets(i, r)) t[label[i]] = 1;
    return t;
  }

  /// Centre-based diameter proxy: l_inf spread of member centres plus twice
  /// the largest member diameter.
  std::vector<double> cluster_diameters() const {
    std::vector<double> md(static_cast<std::size_t>(clusters), 0.0);
    for (std::size_t i = 0; i < nodes.size(); ++i) md[label[i]] = std::max(md[label[i]], node_diameter[i]);
    std::vector<double> out(md.size());
    for (std::size_t c = 0; c < md.size(); ++c) {
      double spread = 0.0;
      for (std::size_t k = 0; k < D; ++k) spread = std::max(spread, cluster_bbox[c].side(k));
      out[c] = spread + 2.0 * md[c];
    }
    return out;
  }
};

namespace detail {

template <std::size_t D>
void finish_labeling(ClusterLabeling<D>& lab, UnionFind& uf) {
  lab.label = uf.labels(&lab.clusters);
  lab.cluster_bbox.assign(static_cast<std::size_t>(lab.clusters), Box<D>{filled<D>(kInf), filled<D>(-kInf)});
  for (std::size_t i = 0; i < lab.nodes.size(); ++i) {
    auto& b = lab.cluster_bbox[lab.label[i]];
    for (std::size_t k = 0; k < D; ++k) {
      b.lo[k] = std::min(b.lo[k], lab.node_center[i][k]);
      b.hi[k] = std::max(b.hi[k], lab.node_center[i][k]);
    }
  }
}

template <std::size_t D>
double record_diameter(const CellRecord<D>& rec) {
  if (rec.empty) return 0.0;
  if constexpr (D == 2) {
    double d = 0.0;
    for (std::size_t i = 0; i < rec.vertices.size(); ++i)
      for (std::size_t j = i + 1; j < rec.vertices.size(); ++j) d = std::max(d, dist(rec.vertices[i], rec.vertices[j]));
    return d;
  } else {
    return dist(rec.bbox.lo, rec.bbox.hi);
  }
}

template <std::size_t D>
void check_certified(const PointConfig<D>& config, const Box<D>& domain) {
  if (!config.window().analysis().contains(domain, kGeomTol))
    throw std::invalid_argument("domain exceeds the certified region " + to_string(config.window().analysis().lo) +
                                " .. " + to_string(config.window().analysis().hi));
}

}  // namespace detail

/// Open clusters of V(p) from a prebuilt cell graph (nodes: open cells that
/// meet the graph's domain).
template <std::size_t D>
ClusterLabeling<D> label_cells(std::shared_ptr<const CellGraph<D>> graph, double p) {
  ClusterLabeling<D> lab;
  const auto& g = *graph;
  const auto& cfg = g.config();
  lab.domain = g.clip();
  lab.backend = Backend::cellgraph;
  std::vector<std::int32_t> slot(g.size(), -1);
  for (std::int32_t x = 0; x < static_cast<std::int32_t>(g.size()); ++x) {
    if (!g.meets_domain(x) || !cfg.is_open(x, p)) continue;
    slot[x] = static_cast<std::int32_t>(lab.nodes.size());
    lab.nodes.push_back(x);
    lab.node_box.push_back(g.cell(x).bbox);
    lab.node_center.push_back(cfg.position(x));
    lab.node_diameter.push_back(detail::record_diameter(g.cell(x)));
  }
  UnionFind uf(lab.nodes.size());
  for (std::size_t i = 0; i < lab.nodes.size(); ++i)
    for (const auto y : g.neighbors(lab.nodes[i]))
      if (slot[y] >= 0) uf.unite(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(slot[y]));
  detail::finish_labeling(lab, uf);
  const CellGraph<D>* gp = graph.get();
  auto nodes = std::make_shared<std::vector<std::int32_t>>(lab.nodes);
  lab.meets = [gp, nodes](std::size_t i, const Box<D>& b) { return gp->meets_box((*nodes)[i], b); };
  lab.keep_alive = graph;
  return lab;
}

/// Open clusters of any model on the sites of domain ∩ hZ^d, joined along
/// lattice axes.
template <std::size_t D>
ClusterLabeling<D> label_lattice(const Coloring<D>& coloring, const Box<D>& domain, double h) {
  ClusterLabeling<D> lab;
  lab.domain = domain;
  lab.backend = Backend::lattice;
  const auto grid = LatticeGrid<D>::make(domain, h);
  if (static_cast<double>(grid.size()) > static_cast<double>(kMaxLatticeSites))
    throw BudgetError("lattice backend: too many sites");
  std::vector<std::int32_t> slot(grid.size(), -1);
  for (std::size_t f = 0; f < grid.size(); ++f) {
    const auto s = grid.site(f);
    if (!coloring.contains_unchecked(s)) continue;
    slot[f] = static_cast<std::int32_t>(lab.nodes.size());
    lab.nodes.push_back(static_cast<std::int32_t>(f));
    lab.node_box.push_back(Box<D>{s, s});
    lab.node_center.push_back(s);
    lab.node_diameter.push_back(0.0);
  }
  UnionFind uf(lab.nodes.size());
  grid.for_each_edge([&](std::size_t a, std::size_t b) {
    if (slot[a] >= 0 && slot[b] >= 0) uf.unite(static_cast<std::uint32_t>(slot[a]), static_cast<std::uint32_t>(slot[b]));
  });
  detail::finish_labeling(lab, uf);
  auto centers = std::make_shared<std::vector<Point<D>>>(lab.node_center);
  lab.meets = [centers](std::size_t i, const Box<D>& b) { return b.contains((*centers)[i], kGeomTol); };
  lab.keep_alive = centers;
  return lab;
}

template <std::size_t D>
ClusterLabeling<D> open_clusters(const PointConfig<D>& config, const ColoringModel<D>& model, const Box<D>& domain,
                                 const EventOptions& opt = {}) {
  detail::check_certified(config, domain);
  model.validate();
  if (opt.backend == Backend::cellgraph) {
    if (!model.pure_continuum()) throw std::invalid_argument("cellgraph backend supports the continuum model only");
    auto g = std::make_shared<const CellGraph<D>>(build_cell_graph(config, std::optional<Box<D>>(domain)));
    return label_cells<D>(g, model.p);
  }
  return label_lattice(Coloring<D>(config, model), domain, opt.lattice_h);
}

// ---------------------------------------------------------------------------
// Crossing-type events

template <std::size_t D>
bool crossing(const ClusterLabeling<D>& lab, const Region<D>& source, const Region<D>& target) {
  const auto s = lab.touching(source);
  const auto t = lab.touching(target);
  for (std::size_t c = 0; c < s.size(); ++c)
    if (s[c] && t[c]) return true;
  return false;
}

/// Left-right faces of a box along axis 0.
template <std::size_t D>
std::pair<Region<D>, Region<D>> opposite_faces(const Box<D>& b, std::size_t axis = 0) {
  Box<D> l = b, r = b;
  l.hi[axis] = b.lo[axis];
  r.lo[axis] = b.hi[axis];
  return {Region<D>::box(l), Region<D>::box(r)};
}

/// Number of clusters in Λ_{2L}(c) meeting both Λ_{L/2}(c) and Λ_{2L}(c) \ int Λ_L(c).
template <std::size_t D>
std::int32_t annulus_crossers(const ClusterLabeling<D>& lab, double L, const Point<D>& c = {}) {
  const auto inner = Region<D>::box(Box<D>::cube(c, L / 2));
  const auto outer = Region<D>::annulus(Box<D>::cube(c, 2 * L), Box<D>::cube(c, L));
  const auto a = lab.touching(inner);
  const auto b = lab.touching(outer);
  std::int32_t n = 0;
  for (std::size_t k = 0; k < a.size(); ++k) n += (a[k] && b[k]) ? 1 : 0;
  return n;
}

struct UniquenessResult {
  std::int32_t count = 0;
  bool value = false;
};

template <std::size_t D>
UniquenessResult local_uniqueness(const PointConfig<D>& config, const ColoringModel<D>& model, double L,
                                  bool strict = false, const EventOptions& opt = {}) {
  if (!(L > 0.0)) throw std::invalid_argument("local_uniqueness: L must be > 0");
  const auto lab = open_clusters(config, model, Box<D>::centered(2 * L), opt);
  UniquenessResult r;
  r.count = annulus_crossers(lab, L);
  r.value = strict ? r.count <= 1 : r.count == 1;
  return r;
}

/// Some cluster meets every probe box Λ_ℓ(x), x ∈ ℓZ^d ∩ Λ_L(c).
template <std::size_t D>
bool dense_from_labeling(const ClusterLabeling<D>& lab, double L, double ell, const Point<D>& c = {}) {
  std::vector<Box<D>> probes;
  std::array<std::int64_t, D> lo{}, hi{};
  for (std::size_t i = 0; i < D; ++i) {
    lo[i] = static_cast<std::int64_t>(std::ceil((c[i] - L) / ell - 1e-9));
    hi[i] = static_cast<std::int64_t>(std::floor((c[i] + L) / ell + 1e-9));
  }
  std::array<std::int64_t, D> k = lo;
  for (bool more = true; more;) {
    Point<D> x{};
    for (std::size_t i = 0; i < D; ++i) x[i] = ell * static_cast<double>(k[i]);
    probes.push_back(Box<D>::cube(x, ell));
    more = false;
    for (std::size_t i = D; i-- > 0;) {
      if (k[i] < hi[i]) {
        ++k[i];
        for (std::size_t j = i + 1; j < D; ++j) k[j] = lo[j];
        more = true;
        break;
      }
    }
  }
  if (lab.clusters == 0 || probes.empty()) return false;
  const std::size_t P = probes.size();
  std::vector<std::uint8_t> hit(static_cast<std::size_t>(lab.clusters) * P, 0);
  std::vector<std::size_t> covered(static_cast<std::size_t>(lab.clusters), 0);
  for (std::size_t i = 0; i < lab.nodes.size(); ++i) {
    const auto cl = static_cast<std::size_t>(lab.label[i]);
    for (std::size_t q = 0; q < P; ++q) {
      auto& h = hit[cl * P + q];
      if (h || !lab.node_box[i].intersects(probes[q], kGeomTol)) continue;
      if (lab.meets(i, probes[q])) {
        h = 1;
        if (++covered[cl] == P) return true;
      }
    }
  }
  return false;
}

template <std::size_t D>
bool dense_cluster(const PointConfig<D>& config, const ColoringModel<D>& model, double L, double ell,
                   const EventOptions& opt = {}) {
  if (!(ell > 0.0) || ell > L) throw std::invalid_argument("dense_cluster: need 0 < ell <= L");
  const auto lab = open_clusters(config, model, Box<D>::centered(2 * L), opt);
  return dense_from_labeling(lab, L, ell);
}

/// Smallest p at which the graph's open cells connect `source` to `target`
/// (cells added in mark order). +inf when no crossing exists even at p = 1.
template <std::size_t D>
double crossing_threshold(const CellGraph<D>& g, const Region<D>& source, const Region<D>& target) {
  const auto& cfg = g.config();
  std::vector<std::int32_t> order;
  for (std::int32_t x = 0; x < static_cast<std::int32_t>(g.size()); ++x)
    if (g.meets_domain(x)) order.push_back(x);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    return cfg.mark(a) != cfg.mark(b) ? cfg.mark(a) < cfg.mark(b) : a < b;
  });
  auto meets = [&](std::int32_t x, const Region<D>& r) {
    for (const auto& b : r.parts)
      if (g.meets_box(x, b)) return true;
    return false;
  };
  UnionFind uf(g.size());
  std::vector<std::uint8_t> s(g.size(), 0), t(g.size(), 0), added(g.size(), 0);
  for (const auto x : order) {
    added[x] = 1;
    s[x] = meets(x, source);
    t[x] = meets(x, target);
    auto root = uf.find(static_cast<std::uint32_t>(x));
    for (const auto y : g.neighbors(x)) {
      if (!added[y]) continue;
      const auto ry = uf.find(static_cast<std::uint32_t>(y));
      if (ry == root) continue;
      const std::uint8_t ss = s[root] | s[ry], tt = t[root] | t[ry];
      uf.unite(root, ry);
      root = uf.find(root);
      s[root] = ss;
      t[root] = tt;
    }
    if (s[root] && t[root]) return cfg.mark(x);
  }
  return kInf;
}

/// Lattice analogue: sites take the mark of their owner.
template <std::size_t D>
double crossing_threshold_lattice(const PointConfig<D>& config, const Box<D>& domain, double h, std::size_t axis = 0) {
  const auto field = grid_coloring(config, domain, h);
  const auto& grid = field.grid;
  std::vector<std::uint32_t> order(grid.size());
  std::iota(order.begin(), order.end(), 0u);
  std::vector<double> mark(grid.size());
  for (std::size_t f = 0; f < grid.size(); ++f) mark[f] = config.mark(field.owner[f]);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return mark[a] < mark[b]; });
  std::array<std::size_t, D> stride{};
  std::size_t s = 1;
  for (std::size_t i = D; i-- > 0;) {
    stride[i] = s;
    s *= static_cast<std::size_t>(grid.dims[i]);
  }
  UnionFind uf(grid.size());
  std::vector<std::uint8_t> src(grid.size(), 0), dst(grid.size(), 0), added(grid.size(), 0);
  for (const auto f : order) {
    added[f] = 1;
    const auto c = grid.unflat(f);
    src[f] = c[axis] == 0;
    dst[f] = c[axis] == grid.dims[axis] - 1;
    auto root = uf.find(f);
    for (std::size_t i = 0; i < D; ++i) {
      for (int dir : {-1, 1}) {
        const auto v = c[i] + dir;
        if (v < 0 || v >= grid.dims[i]) continue;
        const std::size_t g = dir < 0 ? f - stride[i] : f + stride[i];
        if (!added[g]) continue;
        const auto rg = uf.find(static_cast<std::uint32_t>(g));
        if (rg == root) continue;
        const std::uint8_t ss = src[root] | src[rg], tt = dst[root] | dst[rg];
        uf.unite(root, rg);
        root = uf.find(root);
        src[root] = ss;
        dst[root] = tt;
      }
    }
    if (src[root] && dst[root]) return mark[f];
  }
  return kInf;
}

// ---------------------------------------------------------------------------
// Chemical distance

struct ChemicalDistance {
  bool ok = false;
  std::int64_t diameter = -1;  // max graph distance over source pairs, -1 if disconnected
  std::size_t sources = 0;
};

/// Longest shortest path between cells meeting Λ_R(c), in the graph of
/// cells meeting Λ_{2R}(c) (witnesses inside Λ_{2R}(c)). In conservative
/// mode only edges whose witness ball B(z, |z - x|) fits in Λ_{2R}(c) count.
template <std::size_t D>
ChemicalDistance chemical_distance(const PointConfig<D>& config, double R, bool conservative = false,
                                   const Point<D>& c = {}) {
  if (!(R > 0.0)) throw std::invalid_argument("chemical_distance: R must be > 0");
  const Box<D> outer = Box<D>::cube(c, 2 * R);
  const Box<D> inner = Box<D>::cube(c, R);
  detail::check_certified(config, outer);
  const auto g = build_cell_graph(config, std::optional<Box<D>>(outer));
  const auto n = g.size();
  // Adjacency, filtered in conservative mode.
  std::vector<std::vector<std::int32_t>> adj(n);
  for (const auto& e : g.pairs()) {
    if (e.degenerate) continue;
    if (conservative) {
      const double r = dist(e.witness, config.position(e.a));
      if (!outer.contains(Box<D>::cube(e.witness, r))) continue;
    }
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  std::vector<std::int32_t> src;
  for (std::int32_t x = 0; x < static_cast<std::int32_t>(n); ++x)
    if (g.meets_domain(x) && g.meets_box(x, inner)) src.push_back(x);
  ChemicalDistance out;
  out.sources = src.size();
  std::vector<std::uint8_t> is_src(n, 0);
  for (const auto s : src) is_src[s] = 1;
  std::vector<std::int64_t> depth(n, -1);
  std::vector<std::int32_t> queue;
  std::int64_t worst = 0;
  for (const auto s : src) {
    std::fill(depth.begin(), depth.end(), -1);
    queue.assign(1, s);
    depth[s] = 0;
    std::size_t reached = 1;
    for (std::size_t h = 0; h < queue.size() && reached < src.size(); ++h) {
      const auto u = queue[h];
      for (const auto v : adj[u]) {
        if (depth[v] >= 0) continue;
        depth[v] = depth[u] + 1;
        queue.push_back(v);
        if (is_src[v]) {
          ++reached;
          worst = std::max(worst, depth[v]);
        }
      }
    }
    if (reached < src.size()) return out;
  }
  out.diameter = worst;
  out.ok = true;
  return out;
}

template <std::size_t D>
bool chemical_distance_ok(const PointConfig<D>& config, double R, double M, bool conservative = false,
                          const Point<D>& c = {}) {
  const auto cd = chemical_distance(config, R, conservative, c);
  return cd.diameter >= 0 && static_cast<double>(cd.diameter) <= M;
}

// ---------------------------------------------------------------------------
// *-connected failure components

/// Sizes of the *-connected components (l_inf neighbours) of the marked
/// sites of a box-shaped site grid.
template <std::size_t D>
std::vector<std::size_t> star_components(const std::array<std::int64_t, D>& dims, const std::vector<std::uint8_t>& marked) {
  LatticeGrid<D> g;
  g.dims = dims;
  const std::size_t n = g.size();
  if (marked.size() != n) throw std::invalid_argument("star_components: mask size mismatch");
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<std::size_t> sizes, stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (!marked[start] || seen[start]) continue;
    std::size_t size = 0;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const auto f = stack.back();
      stack.pop_back();
      ++size;
      const auto c = g.unflat(f);
      for (unsigned m = 0; m < static_cast<unsigned>(std::pow(3, D)); ++m) {
        std::array<std::int64_t, D> q = c;
        unsigned r = m;
        bool valid = true;
        for (std::size_t i = 0; i < D; ++i) {
          q[i] += static_cast<std::int64_t>(r % 3) - 1;
          r /= 3;
          valid = valid && q[i] >= 0 && q[i] < dims[i];
        }
        if (!valid) continue;
        const auto h = g.flat(q);
        if (marked[h] && !seen[h]) {
          seen[h] = 1;
          stack.push_back(h);
        }
      }
    }
    sizes.push_back(size);
  }
  return sizes;
}

template <std::size_t D>
struct StarResult {
  bool good = true;
  std::array<std::int64_t, D> dims{};
  std::vector<std::uint8_t> site_ok;  // row-major over Z^d ∩ Λ_{L/ℓ}
  std::size_t largest_failure = 0;
  double threshold = 0.0;
};

/// Surrogate for G_{L,ℓ,κ}: evaluate D(3ℓ, κℓ) around ℓx for x ∈ Z^d ∩ Λ_{L/ℓ}
/// and fail when a *-connected failure component reaches √L / (1000 ℓ) sites.
template <std::size_t D>
StarResult<D> star_connected_good_fraction(const PointConfig<D>& config, double L, double ell, double kappa) {
  if (!(ell > 0.0) || ell > L) throw std::invalid_argument("star_connected_good_fraction: need 0 < ell <= L");
  StarResult<D> r;
  const auto grid = LatticeGrid<D>::make(Box<D>::centered(L / ell), 1.0);
  r.dims = grid.dims;
  r.threshold = std::sqrt(L) / (1000.0 * ell);
  r.site_ok.resize(grid.size());
  std::vector<std::uint8_t> fail(grid.size());
  for (std::size_t f = 0; f < grid.size(); ++f) {
    const Point<D> center = ell * grid.site(f);
    r.site_ok[f] = chemical_distance_ok(config, 3 * ell, kappa * ell, false, center);
    fail[f] = !r.site_ok[f];
  }
  for (const auto s : star_components<D>(r.dims, fail)) r.largest_failure = std::max(r.largest_failure, s);
  r.good = !(r.largest_failure > 0 && static_cast<double>(r.largest_failure) >= r.threshold);
  return r;
}

// ---------------------------------------------------------------------------
// Origin cluster

namespace detail {

/// Euclidean diameter of a planar point set (convex hull, then all hull pairs).
inline double planar_diameter(std::vector<Point<2>> pts) {
  if (pts.size() < 2) return 0.0;
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts.size() == 2 ? dist(pts[0], pts[1]) : 0.0;
  auto cross = [](const Point<2>& o, const Point<2>& a, const Point<2>& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<Point<2>> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  double d = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j) d = std::max(d, dist(hull[i], hull[j]));
  return d;
}

}  // namespace detail

struct OriginClusterStats {
  bool open = false;
  std::size_t members = 0;
  double diam_proxy = 0.0;
  double diameter = 0.0;  // Euclidean in d = 2; l_inf spread of sites (lattice) or diam_proxy otherwise
  double vol_estimate = 0.0;
  double vol_stderr = 0.0;
  bool censored = false;
};

/// Cluster of the origin, explored cell by cell inside the window's analysis
/// domain. Volume is estimated by `sample_budget` uniform points in the
/// cluster's bounding box.
template <std::size_t D>
OriginClusterStats origin_cluster_stats(const PointConfig<D>& config, const ColoringModel<D>& model,
                                        std::size_t sample_budget, std::uint64_t seed, const EventOptions& opt = {}) {
  model.validate();
  const Box<D> domain = config.window().analysis();
  if (!domain.contains(Point<D>{})) throw std::invalid_argument("origin_cluster_stats: origin not certified");
  OriginClusterStats st;
  if (config.empty()) return st;
  Stream rng = Stream(seed).child("origin-volume");
  Box<D> bb{filled<D>(kInf), filled<D>(-kInf)};
  auto grow = [&](const Box<D>& b) {
    for (std::size_t i = 0; i < D; ++i) {
      bb.lo[i] = std::min(bb.lo[i], b.lo[i]);
      bb.hi[i] = std::max(bb.hi[i], b.hi[i]);
    }
  };
  Box<D> centers{filled<D>(kInf), filled<D>(-kInf)};
  auto grow_center = [&](const Point<D>& p) {
    for (std::size_t i = 0; i < D; ++i) {
      centers.lo[i] = std::min(centers.lo[i], p[i]);
      centers.hi[i] = std::max(centers.hi[i], p[i]);
    }
  };
  double max_diam = 0.0;

  if (opt.backend == Backend::cellgraph) {
    if (!model.pure_continuum()) throw std::invalid_argument("cellgraph backend supports the continuum model only");
    const auto start = locate(config, Point<D>{}).id;
    if (!config.is_open(start, model.p)) return st;
    st.open = true;
    std::unordered_map<std::int32_t, bool> member;
    std::vector<std::int32_t> queue{start};
    std::vector<Point<D>> corners;
    member[start] = true;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      const auto x = queue[h];
      const auto rec = compute_cell<D>(config, x, domain);
      if (rec.touches_clip_boundary()) st.censored = true;
      if constexpr (D == 2) corners.insert(corners.end(), rec.vertices.begin(), rec.vertices.end());
      grow(rec.bbox);
      grow_center(config.position(x));
      max_diam = std::max(max_diam, detail::record_diameter(rec));
      for (const auto& f : rec.faces) {
        if (f.degenerate || !config.is_open(f.neighbor, model.p) || member.count(f.neighbor)) continue;
        member[f.neighbor] = true;
        queue.push_back(f.neighbor);
      }
    }
    st.members = queue.size();
    double spread = 0.0;
    for (std::size_t i = 0; i < D; ++i) spread = std::max(spread, centers.side(i));
    st.diam_proxy = spread + 2.0 * max_diam;
    if constexpr (D == 2) st.diameter = detail::planar_diameter(std::move(corners));
    else st.diameter = st.diam_proxy;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < sample_budget; ++k) {
      Point<D> z{};
      for (std::size_t i = 0; i < D; ++i) z[i] = rng.uniform(bb.lo[i], bb.hi[i]);
      if (member.count(config.index().nearest(z).id)) ++hits;
    }
    if (sample_budget > 0) {
      const double f = static_cast<double>(hits) / static_cast<double>(sample_budget);
      st.vol_estimate = f * bb.volume();
      st.vol_stderr = bb.volume() * std::sqrt(f * (1.0 - f) / static_cast<double>(sample_budget));
    }
    return st;
  }

  // Lattice: breadth-first search over open sites of hZ^d ∩ domain.
  const Coloring<D> col(config, model);
  const auto grid = LatticeGrid<D>::make(domain, opt.lattice_h);
  std::array<std::int64_t, D> origin{};
  for (std::size_t i = 0; i < D; ++i) origin[i] = -grid.k0[i];
  if (!col.contains_unchecked(grid.site(origin))) return st;
  st.open = true;
  std::unordered_map<std::size_t, bool> seen;
  std::vector<std::array<std::int64_t, D>> queue{origin};
  seen[grid.flat(origin)] = true;
  for (std::size_t h = 0; h < queue.size(); ++h) {
    const auto c = queue[h];
    const auto s = grid.site(c);
    grow_center(s);
    for (std::size_t i = 0; i < D; ++i) {
      if (c[i] == 0 || c[i] == grid.dims[i] - 1) st.censored = true;
      for (int dir : {-1, 1}) {
        auto q = c;
        q[i] += dir;
        if (q[i] < 0 || q[i] >= grid.dims[i]) continue;
        const auto f = grid.flat(q);
        if (seen.count(f)) continue;
        seen[f] = false;
        if (!col.contains_unchecked(grid.site(q))) continue;
        seen[f] = true;
        queue.push_back(q);
      }
    }
  }
  st.members = queue.size();
  double spread = 0.0;
  for (std::size_t i = 0; i < D; ++i) spread = std::max(spread, centers.side(i));
  st.diam_proxy = spread;
  if constexpr (D == 2) {
    std::vector<Point<2>> sites;
    sites.reserve(queue.size());
    for (const auto& c : queue) sites.push_back(grid.site(c));
    st.diameter = detail::planar_diameter(std::move(sites));
  } else {
    st.diameter = spread;
  }
  st.vol_estimate = static_cast<double>(queue.size()) * std::pow(opt.lattice_h, static_cast<double>(D));
  return st;
}

// ---------------------------------------------------------------------------
// N-good boxes

/// x is N-good: exactly one cluster of diameter > N/4 in Λ_{4N}(2Nx), and it
/// meets all 3^d boxes Λ_N(2Ny) with ‖y − x‖∞ ≤ 1.
template <std::size_t D>
bool n_good(const PointConfig<D>& config, const ColoringModel<D>& model, const std::array<std::int64_t, D>& x,
            double N, const EventOptions& opt = {}) {
  if (!(N > 0.0)) throw std::invalid_argument("n_good: N must be > 0");
  Point<D> c{};
  for (std::size_t i = 0; i < D; ++i) c[i] = 2.0 * N * static_cast<double>(x[i]);
  const auto lab = open_clusters(config, model, Box<D>::cube(c, 4 * N), opt);
  const auto diam = lab.cluster_diameters();
  std::int32_t big = -1;
  for (std::int32_t k = 0; k < lab.clusters; ++k) {
    if (diam[k] <= N / 4) continue;
    if (big >= 0) return false;
    big = k;
  }
  if (big < 0) return false;
  for (unsigned m = 0; m < static_cast<unsigned>(std::pow(3, D)); ++m) {
    Point<D> y = c;
    unsigned r = m;
    for (std::size_t i = 0; i < D; ++i) {
      y[i] += 2.0 * N * (static_cast<double>(r % 3) - 1.0);
      r /= 3;
    }
    const auto t = lab.touching(Region<D>::box(Box<D>::cube(y, N)));
    if (!t[big]) return false;
  }
  return true;
}

}  // namespace voroperc
