#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <vector>

#include "voroperc/estimators.hpp"
#include "voroperc/selftest.hpp"

using namespace voroperc;

namespace {

ExperimentSpec<2> base_spec(std::size_t n, std::uint64_t seed, Detector<2> det) {
  ExperimentSpec<2> s;
  s.domain = Box<2>::centered(3.0);
  s.n = n;
  s.seed = seed;
  s.margin = 2.0;
  s.detector = std::move(det);
  return s;
}

EstimatorReport synthetic(std::size_t n, std::size_t k) {
  EstimatorReport r;
  r.n = n;
  r.k = k;
  r.phat = static_cast<double>(k) / static_cast<double>(n);
  r.ci = wilson(k, n);
  return r;
}

}  // namespace

TEST(Wilson, ClosedForm) {
  // Score interval: (k + z^2/2 +- z sqrt(k(n-k)/n + z^2/4)) / (n + z^2).
  const double z = 1.959963984540054;
  for (auto [k, n] : std::vector<std::pair<int, int>>{{0, 10}, {3, 10}, {50, 100}, {999, 1000}, {1000, 1000}}) {
    const double c = k + z * z / 2, h = z * std::sqrt(static_cast<double>(k) * (n - k) / n + z * z / 4);
    const auto ci = wilson(k, n);
    EXPECT_NEAR(ci.lo, std::max(0.0, (c - h) / (n + z * z)), 1e-12);
    EXPECT_NEAR(ci.hi, std::min(1.0, (c + h) / (n + z * z)), 1e-12);
    const double ph = static_cast<double>(k) / n;
    EXPECT_LE(ci.lo, ph);
    EXPECT_GE(ci.hi, ph);
  }
  EXPECT_EQ(wilson(0, 0).lo, 0.0);
  EXPECT_EQ(wilson(0, 0).hi, 1.0);
}

TEST(Wilson, CoverageMetaTest) {
  for (double q : {0.1, 0.5, 0.8}) {
    const double cov = wilson_coverage(q, 150, 1000, 7 + static_cast<std::uint64_t>(q * 100));
    EXPECT_GE(cov, 0.93) << q;
    EXPECT_LE(cov, 0.97) << q;
  }
}

TEST(Stats, NormalQuantile) {
  EXPECT_NEAR(normal_upper_quantile(0.05), 1.6448536269514722, 1e-9);
  EXPECT_NEAR(normal_upper_quantile(0.01), 2.3263478740408408, 1e-9);
  EXPECT_NEAR(normal_upper_quantile(0.025), kWilsonZ95, 1e-9);
  EXPECT_THROW(normal_upper_quantile(0.0), std::invalid_argument);
}

TEST(McEstimate, AlwaysTrue) {
  const auto rep = mc_estimate(base_spec(50, 1, [](const PointConfig<2>&, std::uint64_t) { return Outcome{true}; }));
  EXPECT_EQ(rep.k, 50u);
  EXPECT_EQ(rep.phat, 1.0);
  EXPECT_EQ(rep.ci.hi, 1.0);
  EXPECT_LT(rep.ci.lo, 1.0);
}

TEST(McEstimate, FirstMarkIsBernoulliHalf) {
  auto det = [](const PointConfig<2>& c, std::uint64_t) { return Outcome{!c.empty() && c.mark(0) <= 0.5}; };
  auto spec = base_spec(10000, 3, det);
  spec.domain = Box<2>::centered(0.5);
  spec.margin = 0.5;
  const auto rep = mc_estimate(spec);
  EXPECT_LE(rep.ci.lo, 0.5);
  EXPECT_GE(rep.ci.hi, 0.5);
}

TEST(McEstimate, ThreadCountInvariantAndRepeatable) {
  EventSpec<2> ev;
  ev.kind = EventKind::crossing;
  ev.L = 4.0;
  std::vector<EstimatorReport> reps;
  for (unsigned t : {1u, 2u, 8u, 1u}) {
    auto spec = experiment(ev, 60, 99);
    spec.threads = t;
    reps.push_back(mc_estimate(spec));
  }
  for (const auto& r : reps) {
    EXPECT_EQ(r.k, reps[0].k);
    ASSERT_EQ(r.records.size(), reps[0].records.size());
    for (std::size_t i = 0; i < r.records.size(); ++i) {
      EXPECT_EQ(r.records[i].seed, reps[0].records[i].seed);
      EXPECT_EQ(r.records[i].outcome.value, reps[0].records[i].outcome.value);
      EXPECT_EQ(r.records[i].outcome.aux, reps[0].records[i].outcome.aux);
    }
  }
}

TEST(McEstimate, MarginViolationsExtendAndCount) {
  auto det = [](const PointConfig<2>& c, std::uint64_t) {
    return Outcome{c.window().margin >= 10.0, c.window().margin, c.window().margin >= 10.0};
  };
  auto spec = base_spec(5, 4, det);
  spec.margin = 3.0;
  const auto rep = mc_estimate(spec);
  EXPECT_EQ(rep.margin_violations, 10u);  // 3 -> 6 -> 12 per replica
  EXPECT_EQ(rep.k, 5u);
  for (const auto& r : rep.records) EXPECT_EQ(r.outcome.aux, 12.0);
  spec.max_extensions = 1;
  EXPECT_EQ(mc_estimate(spec).k, 0u);
}

TEST(McEstimate, RejectsBadSpecs) {
  EXPECT_THROW(mc_estimate(base_spec(0, 1, [](const PointConfig<2>&, std::uint64_t) { return Outcome{}; })),
               std::invalid_argument);
  EXPECT_THROW(mc_estimate(base_spec(3, 1, nullptr)), std::invalid_argument);
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
  std::atomic<int> ran{0};
  try {
    parallel_for(0, 100, 4, [&](std::size_t i) {
      ++ran;
      if (i == 37 || i == 80) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_TRUE(std::string(e.what()) == "37" || std::string(e.what()) == "80");
  }
  try {
    parallel_for(0, 100, 1, [&](std::size_t i) {
      if (i >= 37) throw std::runtime_error(std::to_string(i));
    });
  } catch (const std::runtime_error& e) {
    EXPECT_EQ(std::string(e.what()), "37");
  }
}

TEST(Margin, PolicyFormula) {
  // Volume 1024: 4 (ln 1025)^(1/2) = 10.53...
  EXPECT_NEAR(default_margin(Box<2>::centered(16.0), 1.0), 4.0 * std::sqrt(std::log(1025.0)), 1e-12);
  EXPECT_DOUBLE_EQ(default_margin(Box<2>::centered(1.0), 1.0), 8.0);
  EXPECT_NEAR(default_margin(Box<3>::centered(1.0), 8.0), 4.0, 1e-12);
}

TEST(Margin, SoundnessUnderDoubling) {
  // With the policy margin, doubling the window changes no crossing outcome.
  const Box<2> dom = Box<2>::centered(8.0);
  const double m = default_margin(dom);
  int certified = 0;
  for (std::uint64_t r = 0; r < 200; ++r) {
    const auto c = sample_ppp(Window<2>::around(dom, m), 1.0, replica_seed(5, r));
    const auto big = extend_margin(c, 2 * m, 1);
    if (!region_certified(c, dom)) continue;
    ++certified;
    const auto [l, r2] = opposite_faces(dom);
    for (double p : {0.4, 0.5, 0.6}) {
      const auto a = open_clusters(c, ColoringModel<2>::continuum(p), dom);
      const auto b = open_clusters(big, ColoringModel<2>::continuum(p), dom);
      EXPECT_EQ(crossing(a, l, r2), crossing(b, l, r2));
      EXPECT_EQ(a.clusters, b.clusters);
    }
  }
  EXPECT_GE(certified, 195);
}

TEST(Margin, CertificationDetectsThinWindows) {
  const Box<2> dom = Box<2>::centered(6.0);
  const auto thin = sample_ppp(Window<2>::around(dom, 0.2), 1.0, 1);
  EXPECT_FALSE(region_certified(thin, dom));
  const auto wide = sample_ppp(Window<2>::around(dom, 8.0), 1.0, 1);
  EXPECT_TRUE(region_certified(wide, dom));
  EXPECT_TRUE(model_certified(sample_ppp(Window<2>::around(dom, 8.0), 1.0, 1), ColoringModel<2>::truncated(4.0, 0.5), dom));
  EXPECT_FALSE(model_certified(sample_ppp(Window<2>::around(dom, 6.0), 1.0, 1), ColoringModel<2>::truncated(4.0, 0.5), dom));
}

TEST(EstimatePc, DegenerateToleranceIsOneStep) {
  PcOptions opt;
  opt.tol = 0.5;
  opt.batch = 20;
  opt.step_cap = 20;
  const auto r = estimate_pc<2>(4.0, opt);
  EXPECT_EQ(r.pc, 0.5);
  EXPECT_EQ(r.steps.size(), 1u);
  opt.tol = 0.001;
  EXPECT_THROW(estimate_pc<2>(4.0, opt), std::invalid_argument);
}

TEST(EstimatePc, SmallScaleNearHalf) {
  PcOptions opt;
  opt.tol = 0.04;
  opt.seed = 3;
  const auto r = estimate_pc<2>(8.0, opt);
  EXPECT_GT(r.pc, 0.35);
  EXPECT_LT(r.pc, 0.65);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.cap_hit || r.hi - r.lo <= 0.04 + 1e-12);
  if (r.cap_hit) {
    // Oracle: recount the band edges from the recorded steps.
    const auto it = std::find_if(r.steps.begin(), r.steps.end(), [](const PcStep& s) { return !s.resolved; });
    ASSERT_NE(it, r.steps.end());
    EXPECT_EQ(it->n, opt.step_cap);
    EXPECT_DOUBLE_EQ(it->p, r.pc);
    EXPECT_LT(r.lo, r.pc);
    EXPECT_GT(r.hi, r.pc);
    for (const auto& s : r.steps) {
      if (s.resolved && s.k * 2 < s.n) {
        EXPECT_LE(s.p, r.lo + 1e-12);
      }
      if (s.resolved && s.k * 2 > s.n) {
        EXPECT_GE(s.p, r.hi - 1e-12);
      }
      if (!s.resolved) {
        EXPECT_GT(s.p, r.lo);
        EXPECT_LT(s.p, r.hi);
      }
    }
  }
  EXPECT_LE(r.replicas, opt.budget);
}

TEST(Sweep, SingleNodeEqualsMcEstimate) {
  EventSpec<2> ev;
  ev.L = 4.0;
  auto spec = experiment(ev, 40, 0);
  const auto reps = sweep<2>({spec}, 17);
  spec.seed = Stream(17).child("sweep").child(std::uint64_t{0}).key();
  const auto one = mc_estimate(spec);
  EXPECT_EQ(reps[0].k, one.k);
  EXPECT_EQ(reps[0].seed, one.seed);
}

TEST(Sweep, CrossingNondecreasingInP) {
  std::vector<ExperimentSpec<2>> nodes;
  for (int k = 2; k <= 8; k += 2) {
    EventSpec<2> ev;
    ev.L = 6.0;
    ev.model = ColoringModel<2>::continuum(0.1 * k);
    nodes.push_back(experiment(ev, 150, 0));
  }
  const auto reps = sweep(nodes, 8);
  for (std::size_t i = 1; i < reps.size(); ++i) EXPECT_GE(reps[i].ci.hi, reps[i - 1].ci.lo);
  EXPECT_LT(reps.front().phat, reps.back().phat);
}

TEST(Detector, BoxFieldRedrawnPerReplica) {
  // Closed cells everywhere, so the event is decided by the field alone. A
  // field shared by all replicas would give k in {0, n}.
  EventSpec<2> ev;
  ev.kind = EventKind::crossing;
  ev.L = 4.0;
  ev.model = compose(ColoringModel<2>::continuum(0.0), bernoulli_box_field<2>(2.0, 0.5, 11), FieldMode::unite);
  ev.options.backend = Backend::lattice;
  const auto rep = mc_estimate(experiment(ev, 60, 5));
  EXPECT_GT(rep.k, 0u);
  EXPECT_LT(rep.k, rep.n);
  const auto a = replica_model(ev.model, 1), b = replica_model(ev.model, 2);
  EXPECT_NE(a.fields[0].field.seed, b.fields[0].field.seed);
  EXPECT_EQ(a.fields[0].field.seed, replica_model(ev.model, 1).fields[0].field.seed);
}

TEST(Dominance, VerdictRules) {
  const auto v1 = two_proportion_verdict(synthetic(1000, 600), synthetic(1000, 400), 0.01);
  EXPECT_EQ(v1.verdict, Verdict::violated);
  const auto v2 = two_proportion_verdict(synthetic(1000, 400), synthetic(1000, 600), 0.01);
  EXPECT_EQ(v2.verdict, Verdict::consistent);
  EXPECT_TRUE(v2.strict);
  const auto v3 = two_proportion_verdict(synthetic(1000, 505), synthetic(1000, 500), 0.01);
  EXPECT_EQ(v3.verdict, Verdict::inconclusive);
  // Pooled z by hand.
  const double pool = 1000.0 / 2000.0, se = std::sqrt(pool * (1 - pool) * (2.0 / 1000));
  EXPECT_NEAR(v1.z, 0.2 / se, 1e-12);
}

TEST(Dominance, MonotoneModels) {
  EventSpec<2> a, b;
  a.L = b.L = 5.0;
  a.model = ColoringModel<2>::continuum(0.3);
  b.model = ColoringModel<2>::continuum(0.7);
  const auto r = dominance_test(a, b, 200, 0.01, 4);
  EXPECT_EQ(r.verdict, Verdict::consistent);
  EXPECT_TRUE(r.strict);
  const auto same = dominance_test(a, a, 200, 0.01, 5);
  EXPECT_NE(same.verdict, Verdict::violated);
  EventSpec<2> chem;
  chem.kind = EventKind::chemdist;
  EXPECT_THROW(dominance_test(chem, chem, 10, 0.01, 1), std::invalid_argument);
}

TEST(DecayFit, SyntheticExponential) {
  const std::vector<double> radii{2, 4, 6, 8, 10};
  std::vector<EstimatorReport> reps;
  const std::size_t n = 100000000;
  for (double R : radii) reps.push_back(synthetic(n, static_cast<std::size_t>(std::llround(n * std::exp(-0.5 * R)))));
  const auto fit = decay_fit(radii, reps, DecayForm::exp_R);
  EXPECT_NEAR(fit.rate, 0.5, 1e-3);
  EXPECT_NEAR(fit.intercept, 0.0, 1e-2);
  EXPECT_TRUE(fit.goodness_ok);
  EXPECT_GT(fit.r_squared, 0.999);
}

TEST(DecayFit, StretchedExponent) {
  const std::vector<double> radii{4, 9, 16, 25};
  std::vector<EstimatorReport> reps;
  for (double R : radii) reps.push_back(synthetic(1000000, static_cast<std::size_t>(1e6 * std::exp(-0.8 * std::sqrt(R)))));
  const auto fit = decay_fit(radii, reps, DecayForm::exp_R_pow, 2);
  EXPECT_DOUBLE_EQ(fit.exponent, 0.5);
  EXPECT_NEAR(fit.rate, 0.8, 0.01);
}

TEST(DecayFit, ConstantIsPoorAndZerosGiveBound) {
  const std::vector<double> radii{4, 8, 12, 16};
  std::vector<EstimatorReport> flat;
  Stream s(1);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    std::size_t k = 0;
    for (int j = 0; j < 2000; ++j) k += s.uniform() < 0.3;
    flat.push_back(synthetic(2000, k));
  }
  const auto f = decay_fit(radii, flat, DecayForm::exp_R);
  EXPECT_NEAR(f.rate, 0.0, 0.01);
  EXPECT_FALSE(f.goodness_ok);

  std::vector<EstimatorReport> zeros(4, synthetic(500, 0));
  const auto z = decay_fit(radii, zeros, DecayForm::exp_R);
  EXPECT_TRUE(z.bound_only);
  EXPECT_NEAR(z.rate, std::log(500.0 / 3.0) / 4.0, 1e-12);
  EXPECT_THROW(decay_fit({1, 2}, {synthetic(1, 1), synthetic(1, 1)}, DecayForm::exp_R), std::invalid_argument);
}

TEST(Selftest, AllChecksPass) {
  for (const auto& r : run_selftest()) EXPECT_TRUE(r.pass) << r.name << ": " << r.detail;
}
