#pragma once

// Uniform-grid bucket index over a fixed box. Points are stored in bucket
// order (CSR layout) so range scans walk contiguous memory.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "geometry.hpp"

namespace voroperc {

template <std::size_t D>
struct Neighbor {
  std::int32_t id = -1;
  double distance = kInf;
};

template <std::size_t D>
class SpatialHash {
 public:
  SpatialHash() = default;

  SpatialHash(const Box<D>& extent, double cell_side, std::span<const Point<D>> points) : extent_(extent) {
    if (!(cell_side > 0.0) || !std::isfinite(cell_side)) throw std::invalid_argument("spatial hash: cell side must be > 0");
    // Keep the bucket count proportional to the point count.
    const double max_buckets = std::max<double>(64.0, 4.0 * static_cast<double>(points.size()));
    double h = cell_side;
    for (;;) {
      double total = 1.0;
      for (std::size_t i = 0; i < D; ++i) total *= std::max(1.0, std::ceil(extent.side(i) / h));
      if (total <= max_buckets) break;
      h *= 1.25;
    }
    side_ = h;
    std::size_t total = 1;
    for (std::size_t i = 0; i < D; ++i) {
      dims_[i] = static_cast<std::int64_t>(std::max(1.0, std::ceil(extent.side(i) / h)));
      total *= static_cast<std::size_t>(dims_[i]);
    }
    std::vector<std::uint32_t> bucket(points.size());
    offsets_.assign(total + 1, 0);
    for (std::size_t k = 0; k < points.size(); ++k) {
      bucket[k] = static_cast<std::uint32_t>(flat(coords(points[k])));
      ++offsets_[bucket[k] + 1];
    }
    for (std::size_t b = 0; b < total; ++b) offsets_[b + 1] += offsets_[b];
    positions_.resize(points.size());
    ids_.resize(points.size());
    std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t k = 0; k < points.size(); ++k) {
      const auto slot = fill[bucket[k]]++;
      positions_[slot] = points[k];
      ids_[slot] = static_cast<std::int32_t>(k);
    }
  }

  std::size_t size() const { return ids_.size(); }
  double cell_side() const { return side_; }
  const Box<D>& extent() const { return extent_; }

  /// Bucket index of a position, clamped to the grid.
  std::array<std::int64_t, D> coords(const Point<D>& p) const {
    std::array<std::int64_t, D> c{};
    for (std::size_t i = 0; i < D; ++i) {
      const double t = std::floor((p[i] - extent_.lo[i]) / side_);
      c[i] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::clamp(t, -1.0, 9e15)), 0, dims_[i] - 1);
    }
    return c;
  }

  /// Flat bucket index of a position (exposed for index soundness checks).
  std::int32_t bucket_of(const Point<D>& p) const { return static_cast<std::int32_t>(flat(coords(p))); }
  bool bucket_contains(std::int32_t bucket, std::int32_t id) const {
    for (auto s = offsets_[bucket]; s < offsets_[bucket + 1]; ++s)
      if (ids_[s] == id) return true;
    return false;
  }

  /// Visits every point in buckets at Chebyshev index distance exactly `ring`
  /// from `center`. f(id, position).
  template <class F>
  void for_each_in_ring(const std::array<std::int64_t, D>& center, std::int64_t ring, F&& f) const {
    std::array<std::int64_t, D> c{};
    ring_recurse(center, ring, 0, false, c, f);
  }

  /// Largest ring index that can contain points for a given center.
  std::int64_t max_ring(const std::array<std::int64_t, D>& center) const {
    std::int64_t r = 0;
    for (std::size_t i = 0; i < D; ++i) r = std::max({r, center[i], dims_[i] - 1 - center[i]});
    return r;
  }

  /// Nearest stored point among those accepted by `keep`.
  template <class Pred>
  Neighbor<D> nearest_if(const Point<D>& y, Pred&& keep) const {
    Neighbor<D> best;
    if (ids_.empty()) return best;
    const auto c = coords(y);
    const auto rmax = max_ring(c);
    double best2 = kInf;
    for (std::int64_t r = 0; r <= rmax; ++r) {
      // After ring r every point within r * side_ of y has been visited.
      if (r > 0) {
        const double reach = static_cast<double>(r - 1) * side_;
        if (best2 <= reach * reach) break;
      }
      for_each_in_ring(c, r, [&](std::int32_t id, const Point<D>& p) {
        if (!keep(id)) return;
        const double d2 = dist2(p, y);
        if (d2 < best2 || (d2 == best2 && id < best.id)) {
          best2 = d2;
          best.id = id;
        }
      });
    }
    if (best.id >= 0) best.distance = std::sqrt(best2);
    return best;
  }

  Neighbor<D> nearest(const Point<D>& y) const {
    return nearest_if(y, [](std::int32_t) { return true; });
  }

  /// Two nearest points (first.distance <= second.distance).
  std::pair<Neighbor<D>, Neighbor<D>> nearest_two(const Point<D>& y) const {
    Neighbor<D> a, b;
    if (ids_.empty()) return {a, b};
    const auto c = coords(y);
    const auto rmax = max_ring(c);
    double a2 = kInf, b2 = kInf;
    for (std::int64_t r = 0; r <= rmax; ++r) {
      if (r > 0) {
        const double reach = static_cast<double>(r - 1) * side_;
        if (b2 <= reach * reach) break;
      }
      for_each_in_ring(c, r, [&](std::int32_t id, const Point<D>& p) {
        const double d2 = dist2(p, y);
        if (d2 < a2 || (d2 == a2 && id < a.id)) {
          b2 = a2;
          b = a;
          a2 = d2;
          a.id = id;
        } else if (d2 < b2 || (d2 == b2 && id < b.id)) {
          b2 = d2;
          b.id = id;
        }
      });
    }
    if (a.id >= 0) a.distance = std::sqrt(a2);
    if (b.id >= 0) b.distance = std::sqrt(b2);
    return {a, b};
  }

  /// f(id, position) for every point with |p - y| <= radius.
  template <class F>
  void for_each_in_ball(const Point<D>& y, double radius, F&& f) const {
    if (ids_.empty() || !(radius >= 0.0)) return;
    std::array<std::int64_t, D> lo{}, hi{};
    for (std::size_t i = 0; i < D; ++i) {
      lo[i] = coords_axis(y[i] - radius, i);
      hi[i] = coords_axis(y[i] + radius, i);
    }
    const double r2 = radius * radius;
    for_each_bucket(lo, hi, [&](std::size_t b) {
      for (auto s = offsets_[b]; s < offsets_[b + 1]; ++s)
        if (dist2(positions_[s], y) <= r2) f(ids_[s], positions_[s]);
    });
  }

  /// f(id, position) for every point inside the closed box.
  template <class F>
  void for_each_in_box(const Box<D>& box, F&& f) const {
    if (ids_.empty()) return;
    std::array<std::int64_t, D> lo{}, hi{};
    for (std::size_t i = 0; i < D; ++i) {
      lo[i] = coords_axis(box.lo[i], i);
      hi[i] = coords_axis(box.hi[i], i);
    }
    for_each_bucket(lo, hi, [&](std::size_t b) {
      for (auto s = offsets_[b]; s < offsets_[b + 1]; ++s)
        if (box.contains(positions_[s])) f(ids_[s], positions_[s]);
    });
  }

 private:
  template <class F>
  void ring_recurse(const std::array<std::int64_t, D>& center, std::int64_t ring, std::size_t axis, bool on_face,
                    std::array<std::int64_t, D>& c, F& f) const {
    const std::int64_t lo = std::max<std::int64_t>(0, center[axis] - ring);
    const std::int64_t hi = std::min<std::int64_t>(dims_[axis] - 1, center[axis] + ring);
    if (axis + 1 == D) {
      auto visit = [&](std::int64_t v) {
        c[axis] = v;
        const auto b = flat(c);
        for (auto s = offsets_[b]; s < offsets_[b + 1]; ++s) f(ids_[s], positions_[s]);
      };
      if (on_face || ring == 0) {
        for (std::int64_t v = lo; v <= hi; ++v) visit(v);
      } else {
        if (center[axis] - ring >= 0) visit(center[axis] - ring);
        if (center[axis] + ring <= dims_[axis] - 1) visit(center[axis] + ring);
      }
      return;
    }
    for (std::int64_t v = lo; v <= hi; ++v) {
      c[axis] = v;
      ring_recurse(center, ring, axis + 1, on_face || std::abs(v - center[axis]) == ring, c, f);
    }
  }

  std::int64_t coords_axis(double v, std::size_t i) const {
    const double t = std::floor((v - extent_.lo[i]) / side_);
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::clamp(t, -1.0, 9e15)), 0, dims_[i] - 1);
  }

  std::size_t flat(const std::array<std::int64_t, D>& c) const {
    std::size_t f = 0;
    for (std::size_t i = 0; i < D; ++i) f = f * static_cast<std::size_t>(dims_[i]) + static_cast<std::size_t>(c[i]);
    return f;
  }

  template <class F>
  void for_each_bucket(const std::array<std::int64_t, D>& lo, const std::array<std::int64_t, D>& hi, F&& f) const {
    std::array<std::int64_t, D> c = lo;
    for (;;) {
      f(flat(c));
      std::size_t axis = D;
      bool done = true;
      while (axis > 0) {
        --axis;
        if (c[axis] < hi[axis]) {
          ++c[axis];
          for (std::size_t j = axis + 1; j < D; ++j) c[j] = lo[j];
          done = false;
          break;
        }
      }
      if (done) return;
    }
  }

  Box<D> extent_{};
  double side_ = 1.0;
  std::array<std::int64_t, D> dims_{};
  std::vector<std::uint32_t> offsets_;
  std::vector<Point<D>> positions_;
  std::vector<std::int32_t> ids_;
};

}  // namespace voroperc
