#pragma once

// Monte Carlo harness. Replica r of an experiment with master seed s samples
// its configuration from Stream(s).child(r), so outcomes do not depend on
// thread count or scheduling; aggregation only counts.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cellgraph.hpp"
#include "events.hpp"
#include "geometry.hpp"
#include "models.hpp"
#include "ppp.hpp"
#include "rng.hpp"

namespace voroperc {

inline constexpr double kWilsonZ95 = 1.959963984540054;

struct Interval {
  double lo = 0.0, hi = 1.0;
};

inline Interval wilson(std::size_t k, std::size_t n, double z = kWilsonZ95) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double ph = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double den = 1.0 + z2 / nn;
  const double mid = (ph + z2 / (2.0 * nn)) / den;
  const double half = z * std::sqrt(ph * (1.0 - ph) / nn + z2 / (4.0 * nn * nn)) / den;
  return {std::max(0.0, std::min(ph, mid - half)), std::min(1.0, std::max(ph, mid + half))};
}

/// Standard normal upper quantile, via bisection on erfc (only used for
/// user-chosen test levels).
inline double normal_upper_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(mid / std::sqrt(2.0)) > alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Threads

inline unsigned thread_count(unsigned requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("VORO_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs f(i) for i in [begin, end) on up to `threads` workers. The first
/// exception (lowest index wins) is rethrown after all workers stop.
template <class F>
void parallel_for(std::size_t begin, std::size_t end, unsigned threads, F&& f) {
  if (end <= begin) return;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(end - begin)));
  if (threads == 1) {
    for (std::size_t i = begin; i < end; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{begin};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::exception_ptr first;
  std::size_t first_index = end;
  auto work = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= end) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < first_index) {
          first_index = i;
          first = std::current_exception();
        }
        stop = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t + 1 < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

// ---------------------------------------------------------------------------
// Margin policy and certification

/// max(8, 4 (ln(1 + Vol))^(1/d)) in units of the mean inter-point spacing.
template <std::size_t D>
double default_margin(const Box<D>& domain, double intensity = 1.0) {
  const double spacing = std::pow(1.0 / intensity, 1.0 / static_cast<double>(D));
  const double vol = domain.volume() / std::pow(spacing, static_cast<double>(D));
  return spacing * std::max(8.0, 4.0 * std::pow(std::log1p(vol), 1.0 / static_cast<double>(D)));
}

/// Every cell meeting `region` is the cell of the infinite configuration:
/// for each y in the region the empty ball B(y, d(y, config)) lies inside
/// the sampled window. Checked on a cover of the region by cubes of side s.
template <std::size_t D>
bool region_certified(const PointConfig<D>& config, const Box<D>& region, double s = 1.0) {
  if (config.empty()) return false;
  const auto& win = config.window().box;
  const auto grid = LatticeGrid<D>::make(region.expanded(s), s);
  const double slack = std::sqrt(static_cast<double>(D)) * s;
  for (std::size_t f = 0; f < grid.size(); ++f) {
    const auto c = grid.site(f);
    if (!region.expanded(s).contains(c)) continue;
    const double r = config.index().nearest(c).distance;
    if (!win.contains(Box<D>::cube(c, r + slack))) return false;
  }
  return true;
}

/// Certification for a model evaluated on `region`.
template <std::size_t D>
bool model_certified(const PointConfig<D>& config, const ColoringModel<D>& model, const Box<D>& region) {
  if (model.kind == ModelKind::truncated) return config.window().box.contains(region.expanded(model.range()), kGeomTol);
  return region_certified(config, region);
}

// ---------------------------------------------------------------------------
// Replicated experiments

struct Outcome {
  bool value = false;
  double aux = 0.0;
  bool certified = true;
};

template <std::size_t D>
using Detector = std::function<Outcome(const PointConfig<D>&, std::uint64_t replica_seed)>;

template <std::size_t D>
struct ExperimentSpec {
  Box<D> domain{};                // analysis domain (must contain what the detector reads)
  double intensity = 1.0;
  std::size_t n = 100;
  std::uint64_t seed = 1;
  std::optional<double> margin;  // default: margin policy
  double align = 0.0;            // round the margin up to a multiple of this
  int max_extensions = 3;        // margin doublings per replica
  unsigned threads = 0;
  Detector<D> detector;
};

struct ReplicaRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  Outcome outcome;
  int extensions = 0;
};

struct EstimatorReport {
  std::size_t n = 0;
  std::size_t k = 0;
  double phat = 0.0;
  Interval ci;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::size_t margin_violations = 0;
  std::vector<ReplicaRecord> records;
};

inline std::uint64_t replica_seed(std::uint64_t master, std::size_t r) { return Stream(master).child(r).key(); }

inline EstimatorReport summarize(std::vector<ReplicaRecord> recs, std::uint64_t seed) {
  EstimatorReport rep;
  rep.seed = seed;
  rep.n = recs.size();
  for (const auto& r : recs) {
    rep.k += r.outcome.value ? 1 : 0;
    rep.margin_violations += static_cast<std::size_t>(r.extensions);
  }
  rep.phat = rep.n ? static_cast<double>(rep.k) / static_cast<double>(rep.n) : 0.0;
  rep.ci = wilson(rep.k, rep.n);
  rep.records = std::move(recs);
  return rep;
}

template <std::size_t D>
double spec_margin(const ExperimentSpec<D>& spec) {
  double m = spec.margin ? *spec.margin : default_margin(spec.domain, spec.intensity);
  if (spec.align > 0.0) m = spec.align * std::ceil(m / spec.align - 1e-9);
  return m;
}

/// Runs one replica: sample, detect, and on a certification failure extend
/// the margin (doubling) and retry.
template <std::size_t D>
ReplicaRecord run_replica(const ExperimentSpec<D>& spec, std::size_t r) {
  ReplicaRecord rec;
  rec.index = r;
  rec.seed = replica_seed(spec.seed, r);
  double margin = spec_margin(spec);
  auto config = sample_ppp(Window<D>::around(spec.domain, margin), spec.intensity, rec.seed);
  for (;;) {
    rec.outcome = spec.detector(config, rec.seed);
    if (rec.outcome.certified || rec.extensions >= spec.max_extensions) return rec;
    ++rec.extensions;
    margin *= 2.0;
    config = extend_margin(config, margin, static_cast<std::uint64_t>(rec.extensions));
  }
}

template <std::size_t D>
std::vector<ReplicaRecord> run_replicas(const ExperimentSpec<D>& spec, std::size_t begin, std::size_t end) {
  std::vector<ReplicaRecord> out(end - begin);
  parallel_for(begin, end, thread_count(spec.threads), [&](std::size_t r) { out[r - begin] = run_replica(spec, r); });
  return out;
}

template <std::size_t D>
EstimatorReport mc_estimate(const ExperimentSpec<D>& spec) {
  if (spec.n < 1) throw std::invalid_argument("mc_estimate: n must be >= 1");
  if (!spec.detector) throw std::invalid_argument("mc_estimate: no detector");
  const auto t0 = std::chrono::steady_clock::now();
  auto rep = summarize(run_replicas(spec, 0, spec.n), spec.seed);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

/// One report per grid node; node i uses master seed derived from (seed, i).
template <std::size_t D>
std::vector<EstimatorReport> sweep(const std::vector<ExperimentSpec<D>>& nodes, std::uint64_t master) {
  std::vector<EstimatorReport> out;
  out.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto s = nodes[i];
    s.seed = Stream(master).child("sweep").child(i).key();
    out.push_back(mc_estimate(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Event descriptors -> detectors

enum class EventKind { crossing, uniqueness, dense, chemdist, origin };

inline std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::crossing: return "crossing";
    case EventKind::uniqueness: return "uniqueness";
    case EventKind::dense: return "dense-cluster";
    case EventKind::chemdist: return "chemdist";
    case EventKind::origin: return "origin-cluster";
  }
  return "?";
}

template <std::size_t D>
struct EventSpec {
  EventKind kind = EventKind::crossing;
  ColoringModel<D> model = ColoringModel<D>::continuum(0.5);
  double L = 16.0;            // crossing / uniqueness / dense scale
  double ell = 0.0;           // dense probe scale (0: L / 4)
  bool strict = false;        // uniqueness: count <= 1
  double R = 10.0;            // chemdist radius, origin-cluster diameter threshold
  double M = 80.0;            // chemdist path budget
  bool conservative = false;  // chemdist witness-ball mode
  double origin_extent = 0.0; // origin-cluster analysis half-width (0: 2R + 8)
  std::size_t volume_samples = 0;
  EventOptions options;

  bool increasing() const { return kind == EventKind::crossing || kind == EventKind::dense; }

  /// Analysis domain the event reads.
  Box<D> domain() const {
    switch (kind) {
      case EventKind::crossing: return Box<D>::centered(L);
      case EventKind::uniqueness:
      case EventKind::dense: return Box<D>::centered(2 * L);
      case EventKind::chemdist: return Box<D>::centered(2 * R);
      case EventKind::origin: return Box<D>::centered(origin_extent > 0 ? origin_extent : 2 * R + 8);
    }
    return Box<D>::centered(L);
  }
};

namespace detail {

template <std::size_t D>
Outcome detect_with_graph(const EventSpec<D>& ev, const PointConfig<D>& config, const Box<D>& dom) {
  Outcome o;
  o.certified = model_certified(config, ev.model, dom);
  ClusterLabeling<D> lab;
  if (ev.options.backend == Backend::cellgraph) {
    if (!ev.model.pure_continuum()) throw std::invalid_argument("cellgraph backend supports the continuum model only");
    auto g = std::make_shared<const CellGraph<D>>(build_cell_graph(config, std::optional<Box<D>>(dom)));
    lab = label_cells<D>(g, ev.model.p);
  } else {
    lab = label_lattice(Coloring<D>(config, ev.model), dom, ev.options.lattice_h);
  }
  switch (ev.kind) {
    case EventKind::crossing: {
      const auto [l, r] = opposite_faces(dom);
      o.value = crossing(lab, l, r);
      o.aux = lab.clusters;
      break;
    }
    case EventKind::uniqueness: {
      const auto n = annulus_crossers(lab, ev.L);
      o.value = ev.strict ? n <= 1 : n == 1;
      o.aux = n;
      break;
    }
    case EventKind::dense:
      o.value = dense_from_labeling(lab, ev.L, ev.ell > 0 ? ev.ell : ev.L / 4);
      o.aux = lab.clusters;
      break;
    default: break;
  }
  return o;
}

}  // namespace detail

/// Box fields are redrawn in every replica: each field's seed is combined
/// with the replica seed.
template <std::size_t D>
ColoringModel<D> replica_model(ColoringModel<D> model, std::uint64_t replica_seed) {
  for (auto& op : model.fields) op.field.seed = Stream(op.field.seed).child(replica_seed).key();
  return model;
}

template <std::size_t D>
Detector<D> make_detector(const EventSpec<D>& base) {
  base.model.validate();
  return [base](const PointConfig<D>& config, std::uint64_t seed) -> Outcome {
    EventSpec<D> ev = base;
    ev.model = replica_model(base.model, seed);
    const Box<D> dom = ev.domain();
    switch (ev.kind) {
      case EventKind::crossing:
      case EventKind::uniqueness:
      case EventKind::dense: return detail::detect_with_graph(ev, config, dom);
      case EventKind::chemdist: {
        Outcome o;
        o.certified = region_certified(config, dom);
        const auto cd = chemical_distance(config, ev.R, ev.conservative);
        o.value = cd.diameter >= 0 && static_cast<double>(cd.diameter) <= ev.M;
        o.aux = static_cast<double>(cd.diameter);
        return o;
      }
      case EventKind::origin: {
        Outcome o;
        const auto st = origin_cluster_stats(config, ev.model, ev.volume_samples, seed, ev.options);
        o.certified = model_certified(config, ev.model, config.window().analysis());
        o.value = st.open && !st.censored && st.diameter >= ev.R;
        o.aux = st.censored ? kInf : st.diameter;
        return o;
      }
    }
    return {};
  };
}

template <std::size_t D>
ExperimentSpec<D> experiment(const EventSpec<D>& ev, std::size_t n, std::uint64_t seed) {
  ExperimentSpec<D> s;
  s.domain = ev.domain();
  s.n = n;
  s.seed = seed;
  if (ev.model.kind == ModelKind::truncated) s.align = ev.model.N;
  s.detector = make_detector(ev);
  return s;
}

// ---------------------------------------------------------------------------
// Critical point by bisection

struct PcStep {
  double p = 0.0;
  std::size_t n = 0, k = 0;
  Interval ci;
  bool resolved = false;  // interval excluded 1/2
};

struct PcResult {
  double pc = 0.5;
  double lo = 0.0, hi = 1.0;   // final bracket
  std::vector<PcStep> steps;
  std::size_t replicas = 0;    // distinct replicas sampled
  std::size_t margin_violations = 0;
  bool converged = true;       // false: budget hit before the width target
  bool cap_hit = false;        // a midpoint was unresolved after step_cap replicas; [lo, hi]
                               // is then the band where 1/2 could not be excluded
  double wall_seconds = 0.0;
};

struct PcOptions {
  double tol = 0.02;
  std::size_t batch = 200;
  std::size_t step_cap = 2000;    // replicas per bisection step
  std::size_t budget = 50000;     // total replicas
  std::uint64_t seed = 1;
  unsigned threads = 0;
  Backend backend = Backend::cellgraph;
  double lattice_h = 0.25;
};

/// Finite-size critical point: the p at which the left-right crossing of
/// Λ_L (within Λ_L) has probability 1/2. Each replica's crossing threshold
/// (smallest mark at which it crosses) is computed once and reused by every
/// bisection step, so steps share random numbers.
template <std::size_t D>
PcResult estimate_pc(double L, const PcOptions& opt) {
  if (!(opt.tol >= 0.005)) throw std::invalid_argument("estimate_pc: tolerance must be >= 0.005");
  if (!(L > 0.0)) throw std::invalid_argument("estimate_pc: L must be > 0");
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentSpec<D> spec;
  spec.domain = Box<D>::centered(L);
  spec.seed = opt.seed;
  spec.threads = opt.threads;
  const auto [left, right] = opposite_faces(spec.domain);
  spec.detector = [&, left = left, right = right](const PointConfig<D>& config, std::uint64_t) {
    Outcome o;
    o.certified = region_certified(config, spec.domain);
    if (opt.backend == Backend::cellgraph) {
      const auto g = build_cell_graph(config, std::optional<Box<D>>(spec.domain));
      o.aux = crossing_threshold(g, left, right);
    } else {
      o.aux = crossing_threshold_lattice(config, spec.domain, opt.lattice_h);
    }
    return o;
  };
  std::vector<ReplicaRecord> cache;
  PcResult res;
  auto ensure = [&](std::size_t n) {
    if (n <= cache.size()) return;
    if (n > opt.budget) throw BudgetError("estimate_pc: replica budget exhausted");
    auto more = run_replicas(spec, cache.size(), n);
    cache.insert(cache.end(), more.begin(), more.end());
  };
  auto test = [&](double p) {
    PcStep step;
    step.p = p;
    for (std::size_t n = opt.batch;; n += opt.batch) {
      n = std::min(n, opt.step_cap);
      try {
        ensure(n);
      } catch (const BudgetError&) {
        res.converged = false;
        break;
      }
      step.n = n;
      step.k = 0;
      for (std::size_t r = 0; r < n; ++r) step.k += cache[r].outcome.aux <= p ? 1 : 0;
      step.ci = wilson(step.k, step.n);
      step.resolved = step.ci.lo > 0.5 || step.ci.hi < 0.5;
      if (step.resolved || n >= opt.step_cap) break;
    }
    res.steps.push_back(step);
    return step;
  };
  double lo = 0.0, hi = 1.0;
  for (;;) {
    const double mid = 0.5 * (lo + hi);
    const auto step = test(mid);
    res.pc = mid;
    if (!res.converged) break;
    if (!step.resolved) {
      // The crossing probability at mid is indistinguishable from 1/2 with
      // step_cap replicas. Narrow each side to the last resolved point; this
      // reuses the cached replicas.
      res.cap_hit = true;
      for (double a = lo, b = mid; b - a > opt.tol && res.converged;) {
        const double m = 0.5 * (a + b);
        const auto s = test(m);
        (s.resolved && s.k * 2 < s.n ? a : b) = m;
        lo = a;
      }
      for (double a = mid, b = hi; b - a > opt.tol && res.converged;) {
        const double m = 0.5 * (a + b);
        const auto s = test(m);
        (s.resolved && s.k * 2 > s.n ? b : a) = m;
        hi = b;
      }
      break;
    }
    (step.k * 2 > step.n ? hi : lo) = mid;
    if (hi - lo <= opt.tol) break;
  }
  res.lo = lo;
  res.hi = hi;
  res.replicas = cache.size();
  for (const auto& r : cache) res.margin_violations += static_cast<std::size_t>(r.extensions);
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// ---------------------------------------------------------------------------
// Stochastic domination

enum class Verdict { consistent, violated, inconclusive };

inline std::string to_string(Verdict v) {
  return v == Verdict::consistent ? "consistent" : v == Verdict::violated ? "violated" : "inconclusive";
}

struct DominanceResult {
  Verdict verdict = Verdict::inconclusive;
  bool strict = false;  // P_A < P_B significant at level alpha
  EstimatorReport a, b;
  double z = 0.0;       // (p_A - p_B) / pooled standard error
  double critical = 0.0;
};

/// One-sided two-proportion test of P_A[event] <= P_B[event] on independent
/// arms. `violated` only when p_A exceeds p_B significantly.
inline DominanceResult two_proportion_verdict(EstimatorReport a, EstimatorReport b, double alpha) {
  DominanceResult r;
  r.critical = normal_upper_quantile(alpha);
  const double na = static_cast<double>(a.n), nb = static_cast<double>(b.n);
  const double pool = static_cast<double>(a.k + b.k) / (na + nb);
  const double se = std::sqrt(pool * (1.0 - pool) * (1.0 / na + 1.0 / nb));
  r.z = se > 0.0 ? (a.phat - b.phat) / se : 0.0;
  if (r.z > r.critical) r.verdict = Verdict::violated;
  else if (a.phat <= b.phat) r.verdict = Verdict::consistent;
  else r.verdict = Verdict::inconclusive;
  r.strict = r.z < -r.critical;
  r.a = std::move(a);
  r.b = std::move(b);
  return r;
}

template <std::size_t D>
DominanceResult dominance_test(const EventSpec<D>& event_a, const EventSpec<D>& event_b, std::size_t n, double alpha,
                               std::uint64_t seed, unsigned threads = 0) {
  if (!event_a.increasing() || !event_b.increasing())
    throw std::invalid_argument("dominance_test: event must be increasing (crossing or dense-cluster)");
  auto sa = experiment(event_a, n, Stream(seed).child("A").key());
  auto sb = experiment(event_b, n, Stream(seed).child("B").key());
  sa.threads = sb.threads = threads;
  // Both arms use a common window so that aligned models stay aligned.
  const double align = std::max(sa.align, sb.align);
  sa.align = sb.align = align;
  return two_proportion_verdict(mc_estimate(sa), mc_estimate(sb), alpha);
}

// ---------------------------------------------------------------------------
// Decay fits

enum class DecayForm { exp_R, exp_R_pow };

struct DecayFit {
  double rate = 0.0;       // c in p(R) ~ A exp(-c R^gamma)
  double rate_se = 0.0;
  double intercept = 0.0;  // log A
  double exponent = 1.0;   // gamma
  double r_squared = 0.0;
  std::size_t used = 0;    // points with nonzero estimates
  bool bound_only = false; // too few nonzero points: `rate` is a lower bound
  bool goodness_ok = false;
};

/// Weighted least squares of log p̂ on R^gamma with inverse-variance weights
/// n p̂ / (1 - p̂). Zero estimates are left out; with fewer than two nonzero
/// points the result is a one-sided bound from the rule of three.
inline DecayFit decay_fit(const std::vector<double>& radii, const std::vector<EstimatorReport>& reports, DecayForm form,
                          std::size_t dimension = 2, double power = 0.0) {
  if (radii.size() != reports.size()) throw std::invalid_argument("decay_fit: radii/reports size mismatch");
  if (radii.size() < 3) throw std::invalid_argument("decay_fit: need at least 3 radii");
  DecayFit fit;
  fit.exponent = form == DecayForm::exp_R ? 1.0
                 : power > 0.0            ? power
                                          : (static_cast<double>(dimension) - 1.0) / static_cast<double>(dimension);
  std::vector<double> x, y, w;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const auto& r = reports[i];
    if (r.n == 0 || r.phat <= 0.0) continue;
    const double nn = static_cast<double>(r.n);
    const double ph = std::min(r.phat, 1.0 - 0.5 / nn);
    x.push_back(std::pow(radii[i], fit.exponent));
    y.push_back(std::log(r.phat));
    w.push_back(nn * ph / (1.0 - ph));
  }
  fit.used = x.size();
  if (x.size() < 2) {
    // Rule of three at the smallest radius with a zero count.
    fit.bound_only = true;
    for (std::size_t i = 0; i < radii.size(); ++i) {
      if (reports[i].n > 0 && reports[i].phat <= 0.0) {
        fit.rate = -std::log(3.0 / static_cast<double>(reports[i].n)) / std::pow(radii[i], fit.exponent);
        break;
      }
    }
    return fit;
  }
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
    syy += w[i] * (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("decay_fit: radii must not all coincide");
  const double slope = sxy / sxx;
  fit.rate = -slope;
  fit.intercept = my - slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.intercept + slope * x[i]);
    sse += w[i] * e * e;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 0.0;
  if (x.size() > 2) {
    const double sigma2 = sse / static_cast<double>(x.size() - 2);
    fit.rate_se = std::sqrt(sigma2 / sxx);
  }
  fit.goodness_ok = fit.r_squared >= 0.8 && fit.rate > 2.0 * fit.rate_se && fit.rate > 0.0;
  return fit;
}

}  // namespace voroperc
