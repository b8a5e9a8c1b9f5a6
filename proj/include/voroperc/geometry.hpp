#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace voroperc {

/// Geometric tolerance in window units (ties, face thickness, certification).
inline constexpr double kGeomTol = 1e-9;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

template <std::size_t D>
using Point = std::array<double, D>;

template <std::size_t D>
constexpr Point<D> operator+(const Point<D>& a, const Point<D>& b) {
  Point<D> r{};
  for (std::size_t i = 0; i < D; ++i) r[i] = a[i] + b[i];
  return r;
}

template <std::size_t D>
constexpr Point<D> operator-(const Point<D>& a, const Point<D>& b) {
  Point<D> r{};
  for (std::size_t i = 0; i < D; ++i) r[i] = a[i] - b[i];
  return r;
}

template <std::size_t D>
constexpr Point<D> operator*(double s, const Point<D>& a) {
  Point<D> r{};
  for (std::size_t i = 0; i < D; ++i) r[i] = s * a[i];
  return r;
}

template <std::size_t D>
constexpr double dot(const Point<D>& a, const Point<D>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < D; ++i) s += a[i] * b[i];
  return s;
}

template <std::size_t D>
constexpr double norm2(const Point<D>& a) { return dot(a, a); }

template <std::size_t D>
inline double norm(const Point<D>& a) { return std::sqrt(norm2(a)); }

template <std::size_t D>
constexpr double dist2(const Point<D>& a, const Point<D>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < D; ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

template <std::size_t D>
inline double dist(const Point<D>& a, const Point<D>& b) { return std::sqrt(dist2(a, b)); }

template <std::size_t D>
constexpr double linf(const Point<D>& a, const Point<D>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < D; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

template <std::size_t D>
constexpr Point<D> filled(double v) {
  Point<D> p{};
  p.fill(v);
  return p;
}

/// Axis-aligned closed box [lo, hi]. Windows treat it as half-open; the
/// difference has probability zero for sampled points.
template <std::size_t D>
struct Box {
  Point<D> lo{};
  Point<D> hi{};

  /// Lambda_r(c) = c + [-r, r]^D.
  static constexpr Box cube(const Point<D>& c, double r) {
    Box b;
    for (std::size_t i = 0; i < D; ++i) {
      b.lo[i] = c[i] - r;
      b.hi[i] = c[i] + r;
    }
    return b;
  }
  static constexpr Box centered(double r) { return cube(Point<D>{}, r); }

  constexpr bool valid() const {
    for (std::size_t i = 0; i < D; ++i)
      if (!(hi[i] >= lo[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i])) return false;
    return true;
  }
  constexpr bool nondegenerate() const {
    for (std::size_t i = 0; i < D; ++i)
      if (!(hi[i] > lo[i])) return false;
    return valid();
  }
  constexpr double side(std::size_t i) const { return hi[i] - lo[i]; }
  constexpr double max_side() const {
    double m = 0.0;
    for (std::size_t i = 0; i < D; ++i) m = std::max(m, side(i));
    return m;
  }
  constexpr double volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < D; ++i) v *= side(i);
    return v;
  }
  constexpr Point<D> center() const {
    Point<D> c{};
    for (std::size_t i = 0; i < D; ++i) c[i] = 0.5 * (lo[i] + hi[i]);
    return c;
  }
  constexpr bool contains(const Point<D>& p, double tol = 0.0) const {
    for (std::size_t i = 0; i < D; ++i)
      if (p[i] < lo[i] - tol || p[i] > hi[i] + tol) return false;
    return true;
  }
  constexpr bool contains(const Box& b, double tol = 0.0) const {
    for (std::size_t i = 0; i < D; ++i)
      if (b.lo[i] < lo[i] - tol || b.hi[i] > hi[i] + tol) return false;
    return true;
  }
  constexpr bool intersects(const Box& b, double tol = 0.0) const {
    for (std::size_t i = 0; i < D; ++i)
      if (b.hi[i] < lo[i] - tol || b.lo[i] > hi[i] + tol) return false;
    return true;
  }
  constexpr Box expanded(double r) const {
    Box b = *this;
    for (std::size_t i = 0; i < D; ++i) {
      b.lo[i] -= r;
      b.hi[i] += r;
    }
    return b;
  }
  constexpr Box translated(const Point<D>& v) const { return Box{lo + v, hi + v}; }
  /// Euclidean distance from p to the box as a set (0 inside).
  double distance(const Point<D>& p) const {
    double s = 0.0;
    for (std::size_t i = 0; i < D; ++i) {
      double t = 0.0;
      if (p[i] < lo[i]) t = lo[i] - p[i];
      else if (p[i] > hi[i]) t = p[i] - hi[i];
      s += t * t;
    }
    return std::sqrt(s);
  }
  constexpr bool operator==(const Box&) const = default;
};

template <std::size_t D>
std::string to_string(const Point<D>& p) {
  std::string s = "(";
  for (std::size_t i = 0; i < D; ++i) {
    if (i) s += ", ";
    s += std::to_string(p[i]);
  }
  return s + ")";
}

/// Calls f(Point<D>) for each corner of the box.
template <std::size_t D, class F>
void for_each_corner(const Box<D>& b, F&& f) {
  for (unsigned mask = 0; mask < (1u << D); ++mask) {
    Point<D> c{};
    for (std::size_t i = 0; i < D; ++i) c[i] = (mask >> i) & 1u ? b.hi[i] : b.lo[i];
    f(c);
  }
}

}  // namespace voroperc
