#pragma once

// Voronoi adjacency graph of a point configuration.
//
// A cell is computed against the points within twice its own radius, which
// makes it exact: a point w with |w - x| > 2R cannot cut a cell contained in
// B(x, R). Candidates are collected ring by ring from the spatial hash until
// that radius is covered. In d = 2 the cell is kept as an explicit convex
// polygon (clipping with labelled edges); in d >= 3 it is kept as its
// halfspace list and all questions go through small LPs. Coordinates are
// taken relative to the cell's own point so halfspaces stay well scaled.
//
// Faces whose inscribed (d-1)-ball has radius <= kGeomTol are not edges; they
// are recorded as degenerate pairs instead.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "format.hpp"
#include "geometry.hpp"
#include "json.hpp"
#include "lp.hpp"
#include "ppp.hpp"

namespace voroperc {

/// Raised when an internal consistency check fails (CLI exit code 3).
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a configured memory or sample budget is exhausted (exit code 2).
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Factor by which the window is blown up to stand in for R^d when no
/// domain is given. Cells reaching this box are reported as unbounded.
inline constexpr double kFarBoxFactor = 1e6;

template <std::size_t D>
Box<D> far_box(const Box<D>& window) {
  return window.expanded(kFarBoxFactor * std::max(1.0, window.max_side()));
}

// ---------------------------------------------------------------------------
// locate

struct Located {
  std::int32_t id = -1;
  bool degenerate = false;  // runner-up within kGeomTol
};

template <std::size_t D>
Located locate(const PointConfig<D>& config, const Point<D>& y) {
  if (config.empty()) throw std::invalid_argument("locate: empty configuration");
  const auto [a, b] = config.index().nearest_two(y);
  Located r{a.id, false};
  if (b.id >= 0 && b.distance - a.distance <= kGeomTol) {
    r.id = std::min(a.id, b.id);
    r.degenerate = true;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Per-cell computation

template <std::size_t D>
struct Face {
  std::int32_t neighbor = -1;
  Point<D> witness{};       // absolute coordinates
  double thickness = 0.0;   // inscribed radius of the face within the clip box
  bool degenerate = false;
};

template <std::size_t D>
struct CellRecord {
  std::int32_t id = -1;
  bool empty = true;                       // cell does not meet the clip box
  Box<D> clip{};                           // box the cell was intersected with
  Box<D> bbox{};                           // bounding box of cell within clip
  std::array<bool, 2 * D> touches{};       // touches clip face 2*axis + (hi ? 1 : 0)
  std::vector<Face<D>> faces;              // sorted by neighbor id
  std::vector<Point<D>> vertices;          // d = 2: polygon, counter-clockwise
  std::vector<std::int32_t> constraints;   // d >= 3: halfspaces that bound the cell

  bool touches_clip_boundary() const {
    return std::any_of(touches.begin(), touches.end(), [](bool t) { return t; });
  }
  /// Largest distance from the generating point to the cell (within clip).
  double radius(const Point<D>& x) const {
    double r = 0.0;
    for_each_corner(bbox, [&](const Point<D>& c) { r = std::max(r, dist(c, x)); });
    return r;
  }
};

namespace detail {

// Halfspace a.z <= b in coordinates relative to the cell's point.
template <std::size_t D>
struct Half {
  Point<D> a{};
  double b = 0.0;
};

template <std::size_t D>
Half<D> bisector_half(const Point<D>& x, const Point<D>& w) {
  const Point<D> u = w - x;
  return {2.0 * u, norm2(u)};
}

// Label < 0 encodes clip-box face f as -1 - f.
template <std::size_t D>
Half<D> box_half(const Box<D>& rel, int label) {
  const int f = -1 - label;
  const std::size_t axis = static_cast<std::size_t>(f / 2);
  Half<D> h;
  if (f % 2 == 0) {
    h.a[axis] = -1.0;
    h.b = -rel.lo[axis];
  } else {
    h.a[axis] = 1.0;
    h.b = rel.hi[axis];
  }
  return h;
}

// Visits hash rings outward from a point, tracking the covered radius.
template <std::size_t D>
class RingGatherer {
 public:
  RingGatherer(const PointConfig<D>& config, std::int32_t self)
      : config_(config), self_(self), center_(config.index().coords(config.position(self))),
        max_ring_(config.index().max_ring(center_)) {}

  /// Visits rings until every point within `reach` of the centre has been seen.
  template <class F>
  void cover(double reach, F&& on_point) {
    while (covered() < reach) {
      config_.index().for_each_in_ring(center_, next_, [&](std::int32_t id, const Point<D>&) {
        if (id != self_) on_point(id);
      });
      ++next_;
    }
  }
  double covered() const {
    if (next_ > max_ring_) return kInf;
    return next_ == 0 ? 0.0 : static_cast<double>(next_ - 1) * config_.index().cell_side();
  }

 private:
  const PointConfig<D>& config_;
  std::int32_t self_;
  std::array<std::int64_t, D> center_;
  std::int64_t max_ring_;
  std::int64_t next_ = 0;
};

// ---------------------------- d = 2 polygons --------------------------------

struct Poly {
  std::vector<Point<2>> v;  // relative coordinates, counter-clockwise
  std::vector<int> label;   // label[i] names the edge v[i] -> v[i+1]
};

inline Point<2> meet(const Half<2>& h1, const Half<2>& h2, const Point<2>& p, const Point<2>& q, double sp,
                     double sq) {
  const double det = h1.a[0] * h2.a[1] - h1.a[1] * h2.a[0];
  const double scale = norm(h1.a) * norm(h2.a);
  if (std::fabs(det) > 1e-12 * scale) {
    return {(h1.b * h2.a[1] - h1.a[1] * h2.b) / det, (h1.a[0] * h2.b - h1.b * h2.a[0]) / det};
  }
  const double t = sp / (sp - sq);
  return p + t * (q - p);
}

class PolyClipper {
 public:
  PolyClipper(const Point<2>& x, const Box<2>& rel, const PointConfig<2>& config)
      : x_(x), rel_(rel), config_(config) {}

  Half<2> half(int label) const {
    return label < 0 ? box_half<2>(rel_, label) : bisector_half<2>(x_, config_.position(static_cast<std::size_t>(label)));
  }

  void init(Poly& P) const {
    P.v = {{rel_.lo[0], rel_.lo[1]}, {rel_.hi[0], rel_.lo[1]}, {rel_.hi[0], rel_.hi[1]}, {rel_.lo[0], rel_.hi[1]}};
    P.label = {-1 - 2, -1 - 1, -1 - 3, -1 - 0};
  }

  // Sutherland-Hodgman against one halfspace; vertices on the line are kept.
  void clip(Poly& P, int label) const {
    const auto h = half(label);
    const std::size_t n = P.v.size();
    if (n == 0) return;
    sv_.resize(n);
    bool any_out = false;
    for (std::size_t i = 0; i < n; ++i) {
      sv_[i] = dot(h.a, P.v[i]) - h.b;
      any_out = any_out || sv_[i] > 0.0;
    }
    if (!any_out) return;
    out_v_.clear();
    out_l_.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = (i + 1) % n;
      const bool in_i = sv_[i] <= 0.0, in_j = sv_[j] <= 0.0;
      if (in_i) {
        out_v_.push_back(P.v[i]);
        if (in_j) {
          out_l_.push_back(P.label[i]);
        } else if (sv_[i] == 0.0) {
          out_l_.push_back(label);
        } else {
          out_l_.push_back(P.label[i]);
          out_v_.push_back(meet(half(P.label[i]), h, P.v[i], P.v[j], sv_[i], sv_[j]));
          out_l_.push_back(label);
        }
      } else if (in_j && sv_[j] < 0.0) {
        out_v_.push_back(meet(half(P.label[i]), h, P.v[i], P.v[j], sv_[i], sv_[j]));
        out_l_.push_back(P.label[i]);
      }
    }
    P.v.swap(out_v_);
    P.label.swap(out_l_);
  }

 private:
  Point<2> x_;
  Box<2> rel_;
  const PointConfig<2>& config_;
  mutable std::vector<double> sv_;
  mutable std::vector<Point<2>> out_v_;
  mutable std::vector<int> out_l_;
};

inline double poly_radius(const Poly& P) {
  double r = 0.0;
  for (const auto& v : P.v) r = std::max(r, norm(v));
  return r;
}

inline CellRecord<2> compute_cell_2d(const PointConfig<2>& config, std::int32_t x, const Box<2>& clip) {
  CellRecord<2> rec;
  rec.id = x;
  rec.clip = clip;
  const Point<2> px = config.position(static_cast<std::size_t>(x));
  const Box<2> rel = clip.translated(-1.0 * px);
  PolyClipper clipper(px, rel, config);
  Poly P;
  clipper.init(P);
  std::vector<std::int32_t> cand;
  RingGatherer<2> rings(config, x);
  // Nearest points first: the polygon shrinks quickly and later clips are cheap.
  rings.cover(config.index().cell_side(), [&](std::int32_t id) { cand.push_back(id); });
  std::size_t done = 0;
  for (;;) {
    std::sort(cand.begin() + static_cast<std::ptrdiff_t>(done), cand.end(), [&](std::int32_t a, std::int32_t b) {
      return dist2(config.position(a), px) < dist2(config.position(b), px);
    });
    for (; done < cand.size() && !P.v.empty(); ++done) clipper.clip(P, cand[done]);
    if (P.v.empty()) return rec;
    done = cand.size();
    const double reach = 2.0 * poly_radius(P) + kGeomTol;
    if (rings.covered() >= reach) break;
    rings.cover(std::min(reach, rings.covered() + config.index().cell_side()),
                [&](std::int32_t id) { cand.push_back(id); });
  }

  rec.empty = false;
  Box<2> bb{{kInf, kInf}, {-kInf, -kInf}};
  for (const auto& v : P.v) {
    for (std::size_t i = 0; i < 2; ++i) {
      bb.lo[i] = std::min(bb.lo[i], v[i]);
      bb.hi[i] = std::max(bb.hi[i], v[i]);
    }
  }
  rec.bbox = bb.translated(px);
  for (std::size_t i = 0; i < 2; ++i) {
    rec.touches[2 * i] = bb.lo[i] <= rel.lo[i] + kGeomTol;
    rec.touches[2 * i + 1] = bb.hi[i] >= rel.hi[i] - kGeomTol;
  }
  rec.vertices.reserve(P.v.size());
  for (const auto& v : P.v) rec.vertices.push_back(v + px);

  // Edges labelled by neighbours. Half the edge length is the face's
  // inscribed radius; candidates whose bisector only grazes a vertex are
  // degenerate.
  const std::size_t n = P.v.size();
  std::vector<std::pair<std::int32_t, Face<2>>> found;
  for (std::size_t i = 0; i < n; ++i) {
    if (P.label[i] < 0) continue;
    const auto& a = P.v[i];
    const auto& b = P.v[(i + 1) % n];
    Face<2> f;
    f.neighbor = P.label[i];
    f.thickness = 0.5 * dist(a, b);
    f.witness = 0.5 * (a + b) + px;
    f.degenerate = f.thickness <= kGeomTol;
    found.emplace_back(f.neighbor, f);
  }
  std::sort(found.begin(), found.end(), [](const auto& l, const auto& r) {
    return l.first != r.first ? l.first < r.first : l.second.thickness > r.second.thickness;
  });
  for (std::size_t i = 0; i < found.size(); ++i)
    if (i == 0 || found[i].first != found[i - 1].first) rec.faces.push_back(found[i].second);

  std::sort(cand.begin(), cand.end());
  for (const auto w : cand) {
    const bool listed = std::binary_search(found.begin(), found.end(), std::pair<std::int32_t, Face<2>>{w, {}},
                                           [](const auto& l, const auto& r) { return l.first < r.first; });
    if (listed) continue;
    const auto h = bisector_half<2>(px, config.position(w));
    const double hn = norm(h.a);
    double best = kInf;
    Point<2> at{};
    for (const auto& v : P.v) {
      const double s = (h.b - dot(h.a, v)) / hn;
      if (s < best) {
        best = s;
        at = v;
      }
    }
    if (best <= kGeomTol) {
      Face<2> f;
      f.neighbor = w;
      f.thickness = std::min(best, 0.0);
      f.witness = at + px;
      f.degenerate = true;
      rec.faces.push_back(f);
    }
  }
  std::sort(rec.faces.begin(), rec.faces.end(), [](const auto& l, const auto& r) { return l.neighbor < r.neighbor; });
  return rec;
}

inline bool polygon_meets_box(std::span<const Point<2>> poly, const Box<2>& box) {
  if (poly.empty()) return false;
  Box<2> bb{{kInf, kInf}, {-kInf, -kInf}};
  for (const auto& v : poly) {
    for (std::size_t i = 0; i < 2; ++i) {
      bb.lo[i] = std::min(bb.lo[i], v[i]);
      bb.hi[i] = std::max(bb.hi[i], v[i]);
    }
  }
  if (!bb.intersects(box, kGeomTol)) return false;
  for (const auto& v : poly)
    if (box.contains(v, kGeomTol)) return true;
  // Clip the polygon by the (slightly inflated) box.
  std::vector<Point<2>> cur(poly.begin(), poly.end()), nxt;
  const Box<2> b = box.expanded(kGeomTol);
  for (int f = 0; f < 4 && !cur.empty(); ++f) {
    const std::size_t axis = static_cast<std::size_t>(f / 2);
    const bool hi = f % 2 == 1;
    auto s = [&](const Point<2>& v) { return hi ? v[axis] - b.hi[axis] : b.lo[axis] - v[axis]; };
    nxt.clear();
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const auto& p = cur[i];
      const auto& q = cur[(i + 1) % cur.size()];
      const double sp = s(p), sq = s(q);
      if (sp <= 0.0) nxt.push_back(p);
      if ((sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0)) nxt.push_back(p + (sp / (sp - sq)) * (q - p));
    }
    cur.swap(nxt);
  }
  return !cur.empty();
}

// ------------------------------ LP path -------------------------------------

template <std::size_t D>
void add_half(lp::Problem& prob, const Half<D>& h) {
  prob.add_row(std::span<const double>(h.a.data(), D), h.b);
}

template <std::size_t D>
lp::Problem cell_problem(const PointConfig<D>& config, const Point<D>& px, const Box<D>& rel,
                         std::span<const std::int32_t> ids) {
  lp::Problem prob(D);
  for (const auto w : ids) add_half(prob, bisector_half<D>(px, config.position(w)));
  for (int f = 0; f < static_cast<int>(2 * D); ++f) add_half(prob, box_half<D>(rel, -1 - f));
  return prob;
}

// Bounding box of a feasible polytope via 2D support LPs.
template <std::size_t D>
Box<D> support_box(const lp::Problem& prob, std::span<const double> start) {
  Box<D> bb;
  std::vector<double> c(D, 0.0);
  for (std::size_t i = 0; i < D; ++i) {
    c.assign(D, 0.0);
    c[i] = 1.0;
    bb.hi[i] = lp::maximize(prob, c, start).objective;
    c[i] = -1.0;
    bb.lo[i] = -lp::maximize(prob, c, start).objective;
  }
  return bb;
}

// Orthonormal basis of the complement of u (columns).
template <std::size_t D>
std::array<Point<D>, D - 1> complement_basis(const Point<D>& u) {
  const Point<D> n = (1.0 / norm(u)) * u;
  std::array<Point<D>, D - 1> basis{};
  std::size_t k = 0;
  for (std::size_t e = 0; e < D && k < D - 1; ++e) {
    Point<D> v{};
    v[e] = 1.0;
    v = v - dot(v, n) * n;
    for (std::size_t j = 0; j < k; ++j) v = v - dot(v, basis[j]) * basis[j];
    const double len = norm(v);
    if (len < 0.3) continue;
    basis[k++] = (1.0 / len) * v;
  }
  return basis;
}

// Face of x's cell shared with y: Chebyshev centre of the cell constraints
// restricted to the bisector hyperplane.
template <std::size_t D>
Face<D> face_lp(const PointConfig<D>& config, const Point<D>& px, const Box<D>& rel, std::int32_t y,
                std::span<const std::int32_t> others) {
  const Point<D> u = config.position(y) - px;
  const Point<D> z0 = 0.5 * u;
  const auto B = complement_basis<D>(u);
  lp::Problem sub(D - 1);
  std::array<double, D - 1> row{};
  auto add = [&](const Half<D>& h) {
    for (std::size_t j = 0; j + 1 < D; ++j) row[j] = dot(h.a, B[j]);
    sub.add_row(row, h.b - dot(h.a, z0));
  };
  for (const auto w : others)
    if (w != y) add(bisector_half<D>(px, config.position(w)));
  for (int f = 0; f < static_cast<int>(2 * D); ++f) add(box_half<D>(rel, -1 - f));
  const auto cheb = lp::chebyshev_center(sub);
  Face<D> face;
  face.neighbor = y;
  face.thickness = cheb.radius;
  Point<D> z = z0;
  for (std::size_t j = 0; j + 1 < D; ++j) z = z + cheb.center[j] * B[j];
  face.witness = z + px;
  face.degenerate = cheb.radius <= kGeomTol;
  return face;
}

template <std::size_t D>
CellRecord<D> compute_cell_lp(const PointConfig<D>& config, std::int32_t x, const Box<D>& clip) {
  CellRecord<D> rec;
  rec.id = x;
  rec.clip = clip;
  const Point<D> px = config.position(static_cast<std::size_t>(x));
  const Box<D> rel = clip.translated(-1.0 * px);
  std::vector<std::int32_t> cand;
  RingGatherer<D> rings(config, x);
  rings.cover(config.index().cell_side(), [&](std::int32_t id) { cand.push_back(id); });
  Box<D> bb;
  for (;;) {
    const auto prob = cell_problem<D>(config, px, rel, cand);
    const auto cheb = lp::chebyshev_center(prob);
    if (cheb.radius < -kGeomTol) return rec;
    bb = support_box<D>(prob, cheb.center);
    double r = 0.0;
    for_each_corner(bb, [&](const Point<D>& c) { r = std::max(r, norm(c)); });
    const double reach = 2.0 * r + kGeomTol;
    if (rings.covered() >= reach) break;
    const double side = config.index().cell_side();
    rings.cover(std::min(reach, std::max(2.0 * rings.covered(), rings.covered() + side)),
                [&](std::int32_t id) { cand.push_back(id); });
  }
  rec.empty = false;
  rec.bbox = bb.translated(px);
  for (std::size_t i = 0; i < D; ++i) {
    rec.touches[2 * i] = bb.lo[i] <= rel.lo[i] + kGeomTol;
    rec.touches[2 * i + 1] = bb.hi[i] >= rel.hi[i] - kGeomTol;
  }
  // Drop halfspaces that contain the whole bounding box with room to spare.
  std::sort(cand.begin(), cand.end());
  for (const auto w : cand) {
    const auto h = bisector_half<D>(px, config.position(w));
    double worst = -kInf;
    for_each_corner(bb, [&](const Point<D>& c) { worst = std::max(worst, dot(h.a, c) - h.b); });
    if (worst > -kGeomTol * norm(h.a)) rec.constraints.push_back(w);
  }
  for (const auto y : rec.constraints) {
    auto f = face_lp<D>(config, px, rel, y, rec.constraints);
    if (f.thickness >= -kGeomTol) rec.faces.push_back(f);
  }
  return rec;
}

}  // namespace detail

/// Cell of point x intersected with `clip`, with all its faces.
template <std::size_t D>
CellRecord<D> compute_cell(const PointConfig<D>& config, std::int32_t x, const Box<D>& clip) {
  if (x < 0 || static_cast<std::size_t>(x) >= config.size()) throw std::invalid_argument("cell: id out of range");
  if constexpr (D == 2) return detail::compute_cell_2d(config, x, clip);
  else return detail::compute_cell_lp<D>(config, x, clip);
}

/// Whether the cell described by `rec` meets `box` (within kGeomTol).
template <std::size_t D>
bool record_meets_box(const PointConfig<D>& config, const CellRecord<D>& rec, const Box<D>& box) {
  if (rec.empty || !rec.bbox.intersects(box, kGeomTol)) return false;
  if (box.contains(rec.bbox, kGeomTol)) return true;
  if constexpr (D == 2) {
    return detail::polygon_meets_box(rec.vertices, box);
  } else {
    const Point<D> px = config.position(static_cast<std::size_t>(rec.id));
    auto prob = detail::cell_problem<D>(config, px, rec.clip.translated(-1.0 * px), rec.constraints);
    const Box<D> rel = box.translated(-1.0 * px);
    for (int f = 0; f < static_cast<int>(2 * D); ++f) detail::add_half(prob, detail::box_half<D>(rel, -1 - f));
    return lp::chebyshev_center(prob).radius >= -kGeomTol;
  }
}

// ---------------------------------------------------------------------------
// Witness certification

/// Whether the globally nearest point to z is x or y (within tolerance).
template <std::size_t D>
bool witness_certified(const PointConfig<D>& config, std::int32_t x, std::int32_t y, const Point<D>& z) {
  const auto nn = config.index().nearest(z);
  const double dx = dist(z, config.position(x));
  const double dy = dist(z, config.position(y));
  const double tol = kGeomTol * (1.0 + dx);
  return std::fabs(dx - dy) <= tol && dx <= nn.distance + tol;
}

template <std::size_t D>
struct Adjacency {
  bool adjacent = false;
  bool degenerate = false;
  double thickness = -kInf;
  Point<D> witness{};
};

/// Face test for a single pair, with a certification loop: the witness is
/// checked against the global nearest neighbour and any closer point found
/// is added as a constraint before re-solving.
template <std::size_t D>
Adjacency<D> adjacent_pair(const PointConfig<D>& config, std::int32_t x, std::int32_t y,
                           const std::optional<Box<D>>& domain = std::nullopt) {
  const auto n = static_cast<std::int32_t>(config.size());
  if (x < 0 || y < 0 || x >= n || y >= n) throw std::invalid_argument("adjacent_pair: id out of range");
  if (x == y) throw std::invalid_argument("adjacent_pair: x == y");
  const Box<D> clip = domain ? *domain : far_box(config.window().box);
  const Point<D> px = config.position(static_cast<std::size_t>(x));
  const Point<D> py = config.position(static_cast<std::size_t>(y));
  const Box<D> rel = clip.translated(-1.0 * px);
  // Initial constraints: points within 4|x - y| of the pair's midpoint.
  std::vector<std::int32_t> cons;
  const double rho = 4.0 * dist(px, py);
  config.index().for_each_in_ball(0.5 * (px + py), rho, [&](std::int32_t id, const Point<D>&) {
    if (id != x && id != y) cons.push_back(id);
  });
  Adjacency<D> out;
  for (std::size_t round = 0; round <= config.size(); ++round) {
    const auto face = detail::face_lp<D>(config, px, rel, y, cons);
    if (face.thickness < -kGeomTol) return out;
    const auto nn = config.index().nearest(face.witness);
    const double dx = dist(face.witness, px);
    if (nn.id == x || nn.id == y || dx <= nn.distance + kGeomTol * (1.0 + dx)) {
      out.thickness = face.thickness;
      out.witness = face.witness;
      out.degenerate = face.degenerate;
      out.adjacent = !face.degenerate;
      return out;
    }
    cons.push_back(nn.id);
  }
  throw InvariantError("adjacent_pair: certification loop did not terminate");
}

// ---------------------------------------------------------------------------
// CellGraph

template <std::size_t D>
class CellGraph;

template <std::size_t D>
CellGraph<D> build_cell_graph(const PointConfig<D>& config, const std::optional<Box<D>>& domain = std::nullopt);

template <std::size_t D>
struct CellEdge {
  std::int32_t a = -1, b = -1;  // a < b
  Point<D> witness{};
  bool degenerate = false;
};

template <std::size_t D>
class CellGraph {
 public:
  CellGraph() = default;

  const PointConfig<D>& config() const { return *config_; }
  const std::optional<Box<D>>& domain() const { return domain_; }
  const Box<D>& clip() const { return clip_; }
  std::size_t size() const { return records_.size(); }

  /// All recorded pairs, including degenerate ones (flagged).
  const std::vector<CellEdge<D>>& pairs() const { return pairs_; }
  std::size_t edge_count() const { return adj_.size() / 2; }

  /// Non-degenerate neighbours of x.
  std::span<const std::int32_t> neighbors(std::int32_t x) const {
    return {adj_.data() + adj_off_[x], adj_off_[x + 1] - adj_off_[x]};
  }
  bool adjacent(std::int32_t x, std::int32_t y) const {
    const auto nb = neighbors(x);
    return std::binary_search(nb.begin(), nb.end(), y);
  }
  bool meets_domain(std::int32_t x) const { return !records_[x].empty; }
  const CellRecord<D>& cell(std::int32_t x) const { return records_[x]; }
  /// Cell touches the clip box boundary (for no domain: the cell is unbounded).
  bool touches_boundary(std::int32_t x) const { return records_[x].touches_clip_boundary(); }

  bool meets_box(std::int32_t x, const Box<D>& box) const { return record_meets_box(*config_, records_[x], box); }

  template <std::size_t E>
  friend CellGraph<E> build_cell_graph(const PointConfig<E>&, const std::optional<Box<E>>&);

 private:
  const PointConfig<D>* config_ = nullptr;
  std::optional<Box<D>> domain_;
  Box<D> clip_{};
  std::vector<CellRecord<D>> records_;
  std::vector<CellEdge<D>> pairs_;
  std::vector<std::size_t> adj_off_;
  std::vector<std::int32_t> adj_;
};

/// Builds G restricted to `domain` (witnesses inside it), or the whole graph
/// when no domain is given. An edge is kept only when both cells report the
/// face as non-degenerate; a one-sided report is recorded as degenerate.
template <std::size_t D>
CellGraph<D> build_cell_graph(const PointConfig<D>& config, const std::optional<Box<D>>& domain) {
  if (config.empty()) throw std::invalid_argument("build_cell_graph: empty configuration");
  CellGraph<D> g;
  g.config_ = &config;
  g.domain_ = domain;
  g.clip_ = domain ? *domain : far_box(config.window().box);
  const auto n = static_cast<std::int32_t>(config.size());
  g.records_.resize(config.size());
  if (!domain) {
    for (std::int32_t x = 0; x < n; ++x) g.records_[x] = compute_cell<D>(config, x, g.clip_);
  } else {
    // Cells meeting a box form a connected family under face contact, so a
    // search from the cells of points inside it reaches all of them.
    for (std::int32_t x = 0; x < n; ++x) {
      g.records_[x].id = x;
      g.records_[x].clip = g.clip_;
    }
    std::vector<char> seen(config.size(), 0);
    std::vector<std::int32_t> queue;
    auto push = [&](std::int32_t x) {
      if (!seen[x]) {
        seen[x] = 1;
        queue.push_back(x);
      }
    };
    for (std::int32_t x = 0; x < n; ++x)
      if (g.clip_.contains(config.position(static_cast<std::size_t>(x)))) push(x);
    push(config.index().nearest(g.clip_.center()).id);
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const auto x = queue[q];
      g.records_[x] = compute_cell<D>(config, x, g.clip_);
      for (const auto& f : g.records_[x].faces) push(f.neighbor);
    }
  }

  auto find = [&](std::int32_t x, std::int32_t y) -> const Face<D>* {
    const auto& f = g.records_[x].faces;
    auto it = std::lower_bound(f.begin(), f.end(), y, [](const Face<D>& a, std::int32_t v) { return a.neighbor < v; });
    return it != f.end() && it->neighbor == y ? &*it : nullptr;
  };
  std::vector<std::pair<std::int32_t, std::int32_t>> half;
  for (std::int32_t x = 0; x < n; ++x) {
    for (const auto& f : g.records_[x].faces) {
      const auto y = f.neighbor;
      const Face<D>* back = find(y, x);
      if (y < x && back != nullptr) continue;  // handled from y's side
      CellEdge<D> e{std::min(x, y), std::max(x, y), f.witness, true};
      if (back != nullptr && !f.degenerate && !back->degenerate) {
        e.degenerate = false;
        if (!witness_certified(config, x, y, f.witness))
          throw InvariantError("cell graph: witness failed nearest-neighbour certification");
        half.emplace_back(x, y);
        half.emplace_back(y, x);
      }
      g.pairs_.push_back(e);
    }
  }
  std::sort(g.pairs_.begin(), g.pairs_.end(),
            [](const auto& l, const auto& r) { return l.a != r.a ? l.a < r.a : l.b < r.b; });
  std::sort(half.begin(), half.end());
  g.adj_off_.assign(config.size() + 1, 0);
  for (const auto& [x, y] : half) ++g.adj_off_[x + 1];
  for (std::size_t i = 0; i < config.size(); ++i) g.adj_off_[i + 1] += g.adj_off_[i];
  g.adj_.reserve(half.size());
  for (const auto& [x, y] : half) g.adj_.push_back(y);
  return g;
}

/// Whether C(x) meets `box` (within kGeomTol).
template <std::size_t D>
bool cell_intersects_box(const PointConfig<D>& config, std::int32_t x, const Box<D>& box) {
  if (!box.valid()) throw std::invalid_argument("cell_intersects_box: invalid box");
  return !compute_cell<D>(config, x, box).empty;
}

namespace detail {

// Vertices of {z : A z <= b}, by solving every D-subset of rows.
template <std::size_t D>
std::vector<Point<D>> enumerate_vertices(const lp::Problem& prob) {
  std::vector<Point<D>> out;
  const std::size_t m = prob.rows();
  std::array<std::size_t, D> idx{};
  for (std::size_t i = 0; i < D; ++i) idx[i] = i;
  if (m < D) return out;
  for (;;) {
    std::array<std::array<double, D + 1>, D> M{};
    for (std::size_t r = 0; r < D; ++r) {
      const auto row = prob.row(idx[r]);
      for (std::size_t c = 0; c < D; ++c) M[r][c] = row[c];
      M[r][D] = prob.rhs(idx[r]);
    }
    bool singular = false;
    for (std::size_t c = 0; c < D && !singular; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < D; ++r)
        if (std::fabs(M[r][c]) > std::fabs(M[piv][c])) piv = r;
      if (std::fabs(M[piv][c]) < 1e-12) {
        singular = true;
        break;
      }
      std::swap(M[c], M[piv]);
      for (std::size_t r = 0; r < D; ++r) {
        if (r == c) continue;
        const double f = M[r][c] / M[c][c];
        for (std::size_t k = c; k <= D; ++k) M[r][k] -= f * M[c][k];
      }
    }
    if (!singular) {
      Point<D> v{};
      for (std::size_t c = 0; c < D; ++c) v[c] = M[c][D] / M[c][c];
      bool feasible = true;
      for (std::size_t r = 0; r < m && feasible; ++r) {
        const auto row = prob.row(r);
        double s = -prob.rhs(r), sc = std::fabs(prob.rhs(r));
        for (std::size_t c = 0; c < D; ++c) {
          s += row[c] * v[c];
          sc += std::fabs(row[c] * v[c]);
        }
        feasible = s <= 1e-9 * (1.0 + sc);
      }
      if (feasible) out.push_back(v);
    }
    // next combination
    std::size_t i = D;
    while (i > 0 && idx[i - 1] == m - D + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < D; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

}  // namespace detail

/// Diameter of C(x), exact up to rounding for bounded cells. Returns +inf
/// when the cell is unbounded or x lies outside the window's analysis domain
/// (its cell is then not determined by the sampled points).
template <std::size_t D>
double cell_diameter_bound(const PointConfig<D>& config, std::int32_t x) {
  if (x < 0 || static_cast<std::size_t>(x) >= config.size()) throw std::invalid_argument("cell_diameter_bound: bad id");
  const auto& w = config.window();
  if (!w.analysis().contains(config.position(x))) return kInf;
  const auto rec = compute_cell<D>(config, x, far_box(w.box));
  if (rec.empty || rec.touches_clip_boundary()) return kInf;
  std::vector<Point<D>> verts;
  if constexpr (D == 2) {
    verts = rec.vertices;
  } else {
    const Point<D> px = config.position(x);
    const auto prob = detail::cell_problem<D>(config, px, rec.clip.translated(-1.0 * px), rec.constraints);
    verts = detail::enumerate_vertices<D>(prob);
  }
  double diam = 0.0;
  for (std::size_t i = 0; i < verts.size(); ++i)
    for (std::size_t j = i + 1; j < verts.size(); ++j) diam = std::max(diam, dist(verts[i], verts[j]));
  return diam;
}

// ---------------------------------------------------------------------------
// Graph dump

template <std::size_t D>
void write_edges_csv(const CellGraph<D>& g, std::ostream& out) {
  out << "x_id,y_id";
  for (std::size_t i = 0; i < D; ++i) out << ",z" << (i + 1);
  out << ",degenerate\n";
  for (const auto& e : g.pairs()) {
    out << e.a << ',' << e.b;
    for (std::size_t i = 0; i < D; ++i) out << ',' << fmt17(e.witness[i]);
    out << ',' << (e.degenerate ? 1 : 0) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Lattice sampling backend

/// Sites of region ∩ hZ^d in row-major order (axis 0 slowest).
template <std::size_t D>
struct LatticeGrid {
  Box<D> region{};
  double h = 1.0;
  std::array<std::int64_t, D> k0{};    // integer coordinate of the first site per axis
  std::array<std::int64_t, D> dims{};  // sites per axis

  static LatticeGrid make(const Box<D>& region, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("lattice: h must be > 0");
    if (!region.valid()) throw std::invalid_argument("lattice: invalid region");
    LatticeGrid g;
    g.region = region;
    g.h = h;
    for (std::size_t i = 0; i < D; ++i) {
      const auto lo = static_cast<std::int64_t>(std::ceil(region.lo[i] / h - 1e-9));
      const auto hi = static_cast<std::int64_t>(std::floor(region.hi[i] / h + 1e-9));
      g.k0[i] = lo;
      g.dims[i] = std::max<std::int64_t>(0, hi - lo + 1);
    }
    return g;
  }
  std::size_t size() const {
    std::size_t s = 1;
    for (auto d : dims) s *= static_cast<std::size_t>(d);
    return s;
  }
  std::array<std::int64_t, D> unflat(std::size_t f) const {
    std::array<std::int64_t, D> c{};
    for (std::size_t i = D; i-- > 0;) {
      c[i] = static_cast<std::int64_t>(f % static_cast<std::size_t>(dims[i]));
      f /= static_cast<std::size_t>(dims[i]);
    }
    return c;
  }
  std::size_t flat(const std::array<std::int64_t, D>& c) const {
    std::size_t f = 0;
    for (std::size_t i = 0; i < D; ++i) f = f * static_cast<std::size_t>(dims[i]) + static_cast<std::size_t>(c[i]);
    return f;
  }
  Point<D> site(const std::array<std::int64_t, D>& c) const {
    Point<D> p{};
    for (std::size_t i = 0; i < D; ++i) p[i] = static_cast<double>(k0[i] + c[i]) * h;
    return p;
  }
  Point<D> site(std::size_t f) const { return site(unflat(f)); }

  /// f(a, b) for each pair of sites adjacent along one axis.
  template <class F>
  void for_each_edge(F&& f) const {
    const std::size_t n = size();
    std::array<std::size_t, D> stride{};
    std::size_t s = 1;
    for (std::size_t i = D; i-- > 0;) {
      stride[i] = s;
      s *= static_cast<std::size_t>(dims[i]);
    }
    for (std::size_t a = 0; a < n; ++a) {
      const auto c = unflat(a);
      for (std::size_t i = 0; i < D; ++i)
        if (c[i] + 1 < dims[i]) f(a, a + stride[i]);
    }
  }
};

/// Memory guard for lattice fields (sites).
inline constexpr std::size_t kMaxLatticeSites = 200'000'000;

template <std::size_t D>
struct LatticeField {
  LatticeGrid<D> grid;
  std::vector<std::int32_t> owner;
};

template <std::size_t D>
LatticeField<D> grid_coloring(const PointConfig<D>& config, const Box<D>& region, double h) {
  if (config.empty()) throw std::invalid_argument("grid_coloring: empty configuration");
  LatticeField<D> field;
  field.grid = LatticeGrid<D>::make(region, h);
  double total = 1.0;
  for (auto d : field.grid.dims) total *= static_cast<double>(d);
  if (total > static_cast<double>(kMaxLatticeSites)) throw BudgetError("grid_coloring: lattice exceeds the site cap");
  field.owner.resize(field.grid.size());
  for (std::size_t f = 0; f < field.owner.size(); ++f) field.owner[f] = locate(config, field.grid.site(f)).id;
  return field;
}

template <std::size_t D>
nlohmann::json lattice_header(const LatticeGrid<D>& g) {
  return nlohmann::json{{"region", {{"lo", std::vector<double>(g.region.lo.begin(), g.region.lo.end())},
                                    {"hi", std::vector<double>(g.region.hi.begin(), g.region.hi.end())}}},
                        {"h", g.h},
                        {"first_index", std::vector<std::int64_t>(g.k0.begin(), g.k0.end())},
                        {"dims", std::vector<std::int64_t>(g.dims.begin(), g.dims.end())},
                        {"dtype", "int32le"},
                        {"order", "row-major by axis"}};
}

template <std::size_t D>
void save_lattice(const LatticeField<D>& field, const std::string& bin_path, const std::string& json_path) {
  std::ofstream bin(bin_path, std::ios::binary);
  std::ofstream js(json_path);
  if (!bin || !js) throw std::runtime_error("cannot open lattice dump files");
  bin.write(reinterpret_cast<const char*>(field.owner.data()),
            static_cast<std::streamsize>(field.owner.size() * sizeof(std::int32_t)));
  js << lattice_header(field.grid).dump(2) << '\n';
}

}  // namespace voroperc
