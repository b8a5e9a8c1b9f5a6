#pragma once

// Small dense linear programs: maximize c.x subject to A x <= b with free
// variables, started from a known feasible point. Problems here have a
// handful of columns and tens of rows, so a plain tableau simplex is enough.
// Pricing is Dantzig's rule, switching to Bland's rule after a pivot budget
// so degenerate problems cannot cycle.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace voroperc::lp {

class Problem {
 public:
  explicit Problem(std::size_t columns = 0) : n_(columns) {}

  std::size_t columns() const { return n_; }
  std::size_t rows() const { return b_.size(); }

  void add_row(std::span<const double> coeffs, double rhs) {
    if (coeffs.size() != n_) throw std::invalid_argument("lp: row width mismatch");
    a_.insert(a_.end(), coeffs.begin(), coeffs.end());
    b_.push_back(rhs);
  }
  void clear() {
    a_.clear();
    b_.clear();
  }
  void reset(std::size_t columns) {
    n_ = columns;
    clear();
  }

  std::span<const double> row(std::size_t i) const { return {a_.data() + i * n_, n_}; }
  double rhs(std::size_t i) const { return b_[i]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
  std::vector<double> b_;
};

enum class Status { optimal, unbounded };

struct Solution {
  Status status = Status::optimal;
  std::vector<double> x;    // optimal vertex, or the last vertex before the ray
  std::vector<double> ray;  // improving direction when unbounded
  double objective = 0.0;
};

namespace detail {

struct Tableau {
  std::size_t m = 0, cols = 0;  // cols excludes the rhs column
  std::vector<double> t;        // (m + 1) x (cols + 1), last row = reduced costs
  std::vector<std::size_t> basis;

  double& at(std::size_t i, std::size_t j) { return t[i * (cols + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return t[i * (cols + 1) + j]; }

  void pivot(std::size_t r, std::size_t c) {
    const double inv = 1.0 / at(r, c);
    for (std::size_t j = 0; j <= cols; ++j) at(r, j) *= inv;
    at(r, c) = 1.0;
    for (std::size_t i = 0; i <= m; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      double* ri = &t[i * (cols + 1)];
      const double* rr = &t[r * (cols + 1)];
      for (std::size_t j = 0; j <= cols; ++j) ri[j] -= f * rr[j];
      ri[c] = 0.0;
    }
    basis[r] = c;
  }
};

}  // namespace detail

/// Maximizes c.x over {x : A x <= b}. `start` must be feasible (violations up
/// to a small relative tolerance are clamped).
inline Solution maximize(const Problem& prob, std::span<const double> c, std::span<const double> start) {
  const std::size_t n = prob.columns();
  const std::size_t m = prob.rows();
  if (c.size() != n || start.size() != n) throw std::invalid_argument("lp: objective/start width mismatch");
  constexpr double kPivotTol = 1e-11;
  constexpr double kCostTol = 1e-12;

  thread_local detail::Tableau tab;
  tab.m = m;
  tab.cols = 2 * n + m;
  tab.t.assign((m + 1) * (tab.cols + 1), 0.0);
  tab.basis.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto a = prob.row(i);
    double slack = prob.rhs(i);
    double scale = std::fabs(prob.rhs(i));
    for (std::size_t j = 0; j < n; ++j) {
      slack -= a[j] * start[j];
      scale += std::fabs(a[j] * start[j]);
      tab.at(i, j) = a[j];
      tab.at(i, n + j) = -a[j];
    }
    if (slack < -1e-7 * (1.0 + scale)) throw std::invalid_argument("lp: start point is infeasible");
    tab.at(i, 2 * n + i) = 1.0;
    tab.at(i, tab.cols) = std::max(slack, 0.0);
    tab.basis[i] = 2 * n + i;
  }
  for (std::size_t j = 0; j < n; ++j) {
    tab.at(m, j) = -c[j];
    tab.at(m, n + j) = c[j];
  }

  auto extract = [&](Solution& sol) {
    sol.x.assign(start.begin(), start.end());
    for (std::size_t i = 0; i < m; ++i) {
      const auto bv = tab.basis[i];
      const double v = tab.at(i, tab.cols);
      if (bv < n) sol.x[bv] += v;
      else if (bv < 2 * n) sol.x[bv - n] -= v;
    }
    sol.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j) sol.objective += c[j] * sol.x[j];
  };

  const std::size_t bland_after = 20 * (tab.cols + m) + 50;
  for (std::size_t iter = 0;; ++iter) {
    const bool bland = iter > bland_after;
    std::size_t enter = tab.cols;
    double best = -kCostTol;
    for (std::size_t j = 0; j < tab.cols; ++j) {
      const double rc = tab.at(m, j);
      if (rc < best) {
        enter = j;
        if (bland) break;
        best = rc;
      }
    }
    Solution sol;
    if (enter == tab.cols) {
      extract(sol);
      return sol;
    }
    std::size_t leave = m;
    double ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      const double a = tab.at(i, enter);
      if (a <= kPivotTol) continue;
      const double r = tab.at(i, tab.cols) / a;
      if (r < ratio - 1e-15 || (r <= ratio + 1e-15 && leave < m && tab.basis[i] < tab.basis[leave])) {
        ratio = r;
        leave = i;
      }
    }
    if (leave == m) {
      extract(sol);
      sol.status = Status::unbounded;
      sol.ray.assign(n, 0.0);
      if (enter < n) sol.ray[enter] += 1.0;
      else if (enter < 2 * n) sol.ray[enter - n] -= 1.0;
      for (std::size_t i = 0; i < m; ++i) {
        const auto bv = tab.basis[i];
        const double a = tab.at(i, enter);
        if (bv < n) sol.ray[bv] -= a;
        else if (bv < 2 * n) sol.ray[bv - n] += a;
      }
      return sol;
    }
    tab.pivot(leave, enter);
    if (iter > 100000) throw std::runtime_error("lp: simplex failed to terminate");
  }
}

struct Chebyshev {
  bool bounded = true;
  double radius = -std::numeric_limits<double>::infinity();  // < 0: empty
  std::vector<double> center;
};

/// Largest ball inside {x : A x <= b}: maximize t s.t. a_i.x + |a_i| t <= b_i.
/// Rows with (numerically) zero normal are feasibility checks on b_i alone.
/// A negative radius measures how far the system is from feasible.
inline Chebyshev chebyshev_center(const Problem& prob) {
  const std::size_t n = prob.columns();
  Chebyshev out;
  out.center.assign(n, 0.0);
  constexpr double kZeroNormal = 1e-13;

  std::vector<double> norms(prob.rows());
  double zero_row_deficit = 0.0;
  for (std::size_t i = 0; i < prob.rows(); ++i) {
    double s = 0.0;
    for (double v : prob.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
    if (norms[i] <= kZeroNormal) zero_row_deficit = std::min(zero_row_deficit, prob.rhs(i));
  }
  if (zero_row_deficit < 0.0) {
    out.radius = zero_row_deficit;  // inconsistent independent of x
    // Still report the best center of the remaining rows below.
  }

  if (n == 1) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < prob.rows(); ++i) {
      if (norms[i] <= kZeroNormal) continue;
      const double a = prob.row(i)[0];
      const double v = prob.rhs(i) / a;
      if (a > 0) hi = std::min(hi, v);
      else lo = std::max(lo, v);
    }
    if (std::isinf(lo) || std::isinf(hi)) {
      out.bounded = false;
      out.center[0] = std::isinf(lo) ? (std::isinf(hi) ? 0.0 : hi - 1.0) : lo + 1.0;
      if (zero_row_deficit >= 0.0) out.radius = std::numeric_limits<double>::infinity();
      return out;
    }
    out.center[0] = 0.5 * (lo + hi);
    if (zero_row_deficit >= 0.0) out.radius = 0.5 * (hi - lo);
    return out;
  }

  Problem ext(n + 1);
  std::vector<double> row(n + 1);
  double t0 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < prob.rows(); ++i) {
    if (norms[i] <= kZeroNormal) continue;
    const auto a = prob.row(i);
    for (std::size_t j = 0; j < n; ++j) row[j] = a[j] / norms[i];
    row[n] = 1.0;
    ext.add_row(row, prob.rhs(i) / norms[i]);
    t0 = std::min(t0, prob.rhs(i) / norms[i]);
  }
  if (ext.rows() == 0) {
    out.bounded = false;
    if (zero_row_deficit >= 0.0) out.radius = std::numeric_limits<double>::infinity();
    return out;
  }
  std::vector<double> c(n + 1, 0.0);
  c[n] = 1.0;
  std::vector<double> start(n + 1, 0.0);
  start[n] = t0 - 1.0;
  const auto sol = maximize(ext, c, start);
  std::copy_n(sol.x.begin(), n, out.center.begin());
  if (sol.status == Status::unbounded) {
    out.bounded = false;
    // Walk along the ray until the inscribed radius reaches 1.
    const double rt = sol.ray[n];
    const double step = rt > 0 ? std::max(0.0, (1.0 - sol.x[n]) / rt) : 0.0;
    for (std::size_t j = 0; j < n; ++j) out.center[j] = sol.x[j] + step * sol.ray[j];
    if (zero_row_deficit >= 0.0) out.radius = std::numeric_limits<double>::infinity();
    return out;
  }
  if (zero_row_deficit >= 0.0) out.radius = sol.x[n];
  return out;
}

}  // namespace voroperc::lp
