// voroperc command-line driver.
//
// Every subcommand reads a flat JSON descriptor (--config) whose keys are the
// subcommand's flag names; flags given on the command line override it. The
// merged descriptor is echoed into a manifest next to the CSV outputs, and
// `replay` re-runs a manifest and checks the output hashes.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "voroperc.hpp"

#ifndef VOROPERC_VERSION
#define VOROPERC_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace voroperc;

namespace {

constexpr int kSchemaVersion = 1;

enum class Kind { uint, real, reals, flag, text, object };

struct Param {
  std::string name;
  Kind kind;
  json def;
  std::string help;
};

struct Command {
  std::string name;
  std::string about;
  std::vector<Param> params;
  std::vector<std::string> columns;
};

std::vector<Param> common_params(std::uint64_t seed = 1) {
  return {
      {"dim", Kind::uint, 2, "dimension: 2, 3 or 4"},
      {"seed", Kind::uint, seed, "master seed"},
      {"backend", Kind::text, "auto", "auto | cellgraph | lattice (auto: cellgraph for the d=2 continuum model)"},
      {"lattice-h", Kind::real, 0.0, "lattice site spacing (0: 0.25 in d=2, 0.5 otherwise)"},
  };
}

std::vector<Param> model_params(json p) {
  return {
      {"p", Kind::reals, std::move(p), "open probability (comma list for a grid)"},
      {"N", Kind::real, 0.0, "truncation scale; > 0 selects the truncated model"},
      {"model", Kind::object, nullptr, "full model descriptor {kind, p, N, fields}; p and N flags override it"},
  };
}

const std::vector<std::string> kGridColumns = {
    "dim: dimension",
    "L: scale",
    "p: open probability",
    "N: truncation scale (0: continuum)",
    "backend: cellgraph or lattice",
    "n: replicas",
    "k: replicas with the event",
    "phat: k / n",
    "ci_lo, ci_hi: Wilson 95% interval",
    "margin_violations: margin doublings over all replicas",
};

std::vector<Command> commands() {
  auto with = [](std::vector<Param> a, const std::vector<Param>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  std::vector<Command> out;
  out.push_back({"crossing", "Left-right crossing probability of the box [-L/2, L/2]^d.",
                 with(with(common_params(), model_params(json::array({0.5}))),
                      {{"L", Kind::reals, json::array({16.0}), "box side (comma list for a grid)"},
                       {"n", Kind::uint, 500, "replicas per grid node"}}),
                 kGridColumns});
  out.push_back({"uniqueness-curve", "Local uniqueness: one cluster crosses the annulus between the L/2 and L boxes.",
                 with(with(common_params(), model_params(json::array({0.7}))),
                      {{"L", Kind::reals, json::array({8.0, 16.0, 32.0}), "scales (comma list)"},
                       {"n", Kind::uint, 500, "replicas per grid node"},
                       {"strict", Kind::flag, false, "count at most one crosser instead of exactly one"}}),
                 kGridColumns});
  out.push_back({"dense-cluster", "Some cluster meets every ell-box of the L box.",
                 with(with(common_params(), model_params(json::array({0.7}))),
                      {{"L", Kind::reals, json::array({16.0}), "scales (comma list)"},
                       {"ell", Kind::real, 0.0, "probe box side (0: L/4)"},
                       {"n", Kind::uint, 500, "replicas per grid node"}}),
                 kGridColumns});
  out.push_back({"estimate-pc", "Bisection for the p at which the box crossing probability is 1/2.",
                 with(common_params(),
                      {{"L", Kind::real, 32.0, "box side"},
                       {"tol", Kind::real, 0.02, "bracket width target (>= 0.005)"},
                       {"batch", Kind::uint, 200, "replicas added per sequential batch"},
                       {"step-cap", Kind::uint, 2000, "replicas per bisection step"},
                       {"budget", Kind::uint, 50000, "total replicas"}}),
                 {"dim: dimension", "L: box side", "tol: width target", "pc: estimate (last midpoint)",
                  "lo, hi: final bracket", "steps: bisection steps", "replicas: replicas sampled",
                  "margin_violations: margin doublings", "converged: 0 when the budget ran out",
                  "cap_hit: 1 when the last midpoint was unresolved at step-cap",
                  "steps file: step, p, n, k, ci_lo, ci_hi, resolved"}});
  out.push_back({"chemdist", "Cells meeting the R box joined within the 2R box by paths of at most M cells.",
                 with(common_params(),
                      {{"R", Kind::reals, json::array({10.0}), "radii (comma list)"},
                       {"C", Kind::reals, json::array({4.0, 8.0, 16.0}), "M = ceil(C R) (ignored when M is given)"},
                       {"M", Kind::reals, json::array(), "explicit path budgets"},
                       {"conservative", Kind::flag, false, "require witness balls inside the 2R box"},
                       {"n", Kind::uint, 500, "replicas per radius"}}),
                 {"dim: dimension", "R: radius", "M: path budget (cells)", "n: replicas", "k: replicas with the event",
                  "phat: k / n", "ci_lo, ci_hi: Wilson 95% interval", "margin_violations: margin doublings"}});
  const std::vector<std::string> origin_cols = {
      "dim: dimension",       "R: diameter threshold",
      "p: open probability",  "N: truncation scale (0: continuum)",
      "n: replicas",          "k: replicas with R <= diam(origin cluster) < inf",
      "phat: k / n",          "ci_lo, ci_hi: Wilson 95% interval",
      "censored: replicas whose origin cluster reached the boundary",
      "margin_violations: margin doublings"};
  const std::vector<Param> origin_params = {
      {"R", Kind::reals, json::array({4.0, 8.0, 12.0, 16.0}), "diameter thresholds (comma list)"},
      {"extent", Kind::real, 0.0, "analysis box side (0: 2 max R + 8)"},
      {"n", Kind::uint, 2000, "replicas"}};
  out.push_back({"origin-cluster", "Diameter law of the open cluster of the origin.",
                 with(with(common_params(), model_params(json::array({0.3}))), origin_params), origin_cols});
  auto fit_cols = origin_cols;
  fit_cols.insert(fit_cols.begin(), "points file: the origin-cluster table; fit file columns follow");
  for (const char* c : {"form: exp_R or exp_R_pow", "exponent: gamma in exp(-c R^gamma)", "rate, rate_se: c and its error",
                        "intercept: log prefactor", "r_squared: weighted R^2", "used: nonzero points",
                        "bound_only: rate is a one-sided bound", "goodness_ok: fit passed the quality checks",
                        "decreasing: phat strictly decreasing in R"})
    fit_cols.push_back(c);
  out.push_back({"decay-fit", "Origin-cluster diameter law followed by a weighted log-linear fit.",
                 with(with(with(common_params(), model_params(json::array({0.3}))), origin_params),
                      {{"form", Kind::text, "exp_R", "exp_R | exp_R_pow"},
                       {"power", Kind::real, 0.0, "gamma for exp_R_pow (0: (d-1)/d)"}}),
                 fit_cols});
  out.push_back({"dominance", "One-sided test of P_A[event] <= P_B[event] for an increasing event.",
                 with(common_params(),
                      {{"model-a", Kind::object, nullptr, "model descriptor A"},
                       {"model-b", Kind::object, nullptr, "model descriptor B"},
                       {"event", Kind::text, "crossing", "crossing | dense-cluster"},
                       {"L", Kind::real, 16.0, "box scale"},
                       {"ell", Kind::real, 0.0, "dense probe side (0: L/4)"},
                       {"alpha", Kind::real, 0.01, "test level"},
                       {"n", Kind::uint, 2000, "replicas per arm"}}),
                 {"verdict: consistent, violated or inconclusive", "strict: P_A < P_B significant at alpha",
                  "z: (phat_a - phat_b) / pooled standard error", "critical: one-sided normal quantile",
                  "a_n, a_k, a_phat, a_lo, a_hi: arm A", "b_n, b_k, b_phat, b_lo, b_hi: arm B"}});
  out.push_back({"selftest", "Oracle-equivalence and statistical self checks.",
                 {{"seed", Kind::uint, 20240917, "seed"}, {"full", Kind::flag, false, "full-size checks"}},
                 {"name: check", "pass: 1 or 0"}});
  return out;
}

// ---------------------------------------------------------------------------
// Descriptor handling

json convert_flag_raw(const Param& p, const std::string& raw) {
  auto whole = [&](std::size_t used) {
    if (used != raw.size()) throw std::invalid_argument("--" + p.name + ": cannot parse '" + raw + "'");
  };
  std::size_t used = 0;
  switch (p.kind) {
    case Kind::uint: {
      if (raw.empty() || raw[0] == '-') throw std::invalid_argument("--" + p.name + ": expected a non-negative integer");
      const auto v = std::stoull(raw, &used);
      whole(used);
      return v;
    }
    case Kind::real: {
      const double v = std::stod(raw, &used);
      whole(used);
      return v;
    }
    case Kind::reals: {
      json arr = json::array();
      std::stringstream ss(raw);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const double v = std::stod(item, &used);
        if (used != item.size()) throw std::invalid_argument("--" + p.name + ": cannot parse '" + item + "'");
        arr.push_back(v);
      }
      return arr;
    }
    case Kind::flag: return true;
    case Kind::text: return raw;
    case Kind::object: return json::parse(raw);
  }
  return nullptr;
}

json convert_flag(const Param& p, const std::string& raw) {
  try {
    return convert_flag_raw(p, raw);
  } catch (const std::logic_error&) {
    throw std::invalid_argument("--" + p.name + ": cannot parse '" + raw + "'");
  }
}

json check_value(const Param& p, json v) {
  auto bad = [&](const char* what) { return std::invalid_argument("'" + p.name + "' must be " + what); };
  switch (p.kind) {
    case Kind::uint:
      if (!v.is_number_unsigned()) throw bad("a non-negative integer");
      break;
    case Kind::real:
      if (!v.is_number()) throw bad("a number");
      break;
    case Kind::reals:
      if (v.is_number()) v = json::array({v});
      if (!v.is_array()) throw bad("a number or a list of numbers");
      for (const auto& x : v)
        if (!x.is_number()) throw bad("a list of numbers");
      break;
    case Kind::flag:
      if (!v.is_boolean()) throw bad("true or false");
      break;
    case Kind::text:
      if (!v.is_string()) throw bad("a string");
      break;
    case Kind::object:
      if (!v.is_object() && !v.is_null()) throw bad("an object");
      break;
  }
  return v;
}

/// Defaults, then the config file, then flags.
json merge_spec(const Command& cmd, const json& config, const std::map<std::string, std::string>& flags) {
  if (!config.is_object()) throw std::invalid_argument("config: descriptor must be a JSON object");
  json spec = json::object();
  for (const auto& p : cmd.params) spec[p.name] = p.def;
  for (const auto& [key, value] : config.items()) {
    const auto it = std::find_if(cmd.params.begin(), cmd.params.end(), [&](const Param& p) { return p.name == key; });
    if (it == cmd.params.end()) throw std::invalid_argument("config: unknown key '" + key + "' for " + cmd.name);
    spec[key] = check_value(*it, value);
  }
  for (const auto& [key, raw] : flags) {
    const auto& p = *std::find_if(cmd.params.begin(), cmd.params.end(), [&](const Param& q) { return q.name == key; });
    spec[key] = check_value(p, convert_flag(p, raw));
  }
  return spec;
}

std::vector<double> reals(const json& spec, const char* key) { return spec.at(key).get<std::vector<double>>(); }

// ---------------------------------------------------------------------------
// Output

struct Csv {
  std::ostringstream out;
  explicit Csv(const std::vector<std::string>& header) { row(header); }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  }
  std::string str() const { return out.str(); }
};

std::string num(double v) { return fmt17(v); }
std::string num(std::size_t v) { return std::to_string(v); }
std::string flag01(bool v) { return v ? "1" : "0"; }

struct Run {
  std::string command;
  json spec;
  bool records = false;
  json resolved = json::object();
  std::vector<std::pair<std::string, std::string>> files;  // file name, content
  int status = 0;
};

void add_records(Run& run, const std::string& name, const std::vector<std::pair<std::string, const EstimatorReport*>>& nodes) {
  if (!run.records) return;
  Csv csv({"node", "replica", "seed", "value", "aux", "certified", "extensions"});
  for (const auto& [label, rep] : nodes) {
    for (const auto& r : rep->records)
      csv.row({label, num(r.index), std::to_string(r.seed), flag01(r.outcome.value), num(r.outcome.aux),
               flag01(r.outcome.certified), std::to_string(r.extensions)});
  }
  run.files.emplace_back(name + "_records.csv", csv.str());
}

// ---------------------------------------------------------------------------
// Subcommands

template <std::size_t D>
ColoringModel<D> model_at(const json& spec, double p) {
  ColoringModel<D> m;
  if (spec.contains("model") && !spec.at("model").is_null()) m = model_from_json<D>(spec.at("model"));
  m.p = p;
  const double N = spec.at("N").get<double>();
  if (N > 0.0) {
    m.kind = ModelKind::truncated;
    m.N = N;
  }
  m.validate();
  return m;
}

template <std::size_t D>
EventOptions options_for(const json& spec, bool continuum_only) {
  EventOptions o;
  const auto b = spec.at("backend").get<std::string>();
  if (b == "cellgraph") o.backend = Backend::cellgraph;
  else if (b == "lattice") o.backend = Backend::lattice;
  else if (b == "auto") o.backend = D == 2 && continuum_only ? Backend::cellgraph : Backend::lattice;
  else throw std::invalid_argument("backend must be auto, cellgraph or lattice");
  const double h = spec.at("lattice-h").get<double>();
  if (h < 0.0) throw std::invalid_argument("h must be >= 0");
  o.lattice_h = h > 0.0 ? h : (D == 2 ? 0.25 : 0.5);
  return o;
}

std::size_t replicas(const json& spec) {
  const auto n = spec.at("n").get<std::size_t>();
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  return n;
}

template <std::size_t D>
void run_grid(Run& run, EventKind kind) {
  const auto& s = run.spec;
  const auto Ls = reals(s, "L");
  const auto ps = reals(s, "p");
  if (Ls.empty() || ps.empty()) throw std::invalid_argument("L and p need at least one value");
  const auto n = replicas(s);
  std::vector<ExperimentSpec<D>> nodes;
  std::vector<std::pair<double, double>> at;
  std::vector<EventSpec<D>> events;
  for (const double L : Ls) {
    if (!(L > 0.0)) throw std::invalid_argument("L must be > 0");
    for (const double p : ps) {
      EventSpec<D> ev;
      ev.kind = kind;
      ev.L = L;
      ev.model = model_at<D>(s, p);
      ev.options = options_for<D>(s, ev.model.pure_continuum());
      if (kind == EventKind::uniqueness) ev.strict = s.at("strict").get<bool>();
      if (kind == EventKind::dense) ev.ell = s.at("ell").get<double>();
      nodes.push_back(experiment(ev, n, 0));
      at.emplace_back(L, p);
      events.push_back(ev);
    }
  }
  const auto reports = sweep(nodes, s.at("seed").get<std::uint64_t>());
  Csv csv({"dim", "L", "p", "N", "backend", "n", "k", "phat", "ci_lo", "ci_hi", "margin_violations"});
  std::vector<std::pair<std::string, const EstimatorReport*>> rec;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    csv.row({num(D), num(at[i].first), num(at[i].second), num(events[i].model.N), to_string(events[i].options.backend),
             num(r.n), num(r.k), num(r.phat), num(r.ci.lo), num(r.ci.hi), num(r.margin_violations)});
    rec.emplace_back(std::to_string(i), &r);
  }
  run.resolved["backend"] = to_string(events.front().options.backend);
  run.resolved["h"] = events.front().options.lattice_h;
  run.files.emplace_back(run.command + ".csv", csv.str());
  add_records(run, run.command, rec);
}

template <std::size_t D>
void run_estimate_pc(Run& run) {
  const auto& s = run.spec;
  PcOptions opt;
  opt.tol = s.at("tol").get<double>();
  opt.batch = s.at("batch").get<std::size_t>();
  opt.step_cap = s.at("step-cap").get<std::size_t>();
  opt.budget = s.at("budget").get<std::size_t>();
  opt.seed = s.at("seed").get<std::uint64_t>();
  if (opt.batch < 1 || opt.step_cap < 1) throw std::invalid_argument("batch and step-cap must be >= 1");
  const auto eo = options_for<D>(s, true);
  opt.backend = eo.backend;
  opt.lattice_h = eo.lattice_h;
  const double L = s.at("L").get<double>();
  const auto r = estimate_pc<D>(L, opt);
  Csv csv({"dim", "L", "tol", "pc", "lo", "hi", "steps", "replicas", "margin_violations", "converged", "cap_hit"});
  csv.row({num(D), num(L), num(opt.tol), num(r.pc), num(r.lo), num(r.hi), num(r.steps.size()), num(r.replicas),
           num(r.margin_violations), flag01(r.converged), flag01(r.cap_hit)});
  Csv steps({"step", "p", "n", "k", "ci_lo", "ci_hi", "resolved"});
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto& st = r.steps[i];
    steps.row({num(i), num(st.p), num(st.n), num(st.k), num(st.ci.lo), num(st.ci.hi), flag01(st.resolved)});
  }
  run.resolved["backend"] = to_string(opt.backend);
  run.resolved["h"] = opt.lattice_h;
  run.files.emplace_back("estimate-pc.csv", csv.str());
  run.files.emplace_back("estimate-pc_steps.csv", steps.str());
  if (!r.converged) {
    std::cerr << "estimate-pc: replica budget exhausted; best bracket written\n";
    run.status = 2;
  }
}

EstimatorReport rethreshold(const EstimatorReport& base, const std::function<bool(const Outcome&)>& event) {
  auto recs = base.records;
  for (auto& r : recs) r.outcome.value = event(r.outcome);
  auto rep = summarize(std::move(recs), base.seed);
  rep.records.clear();
  return rep;
}

template <std::size_t D>
void run_chemdist(Run& run) {
  const auto& s = run.spec;
  const auto Rs = reals(s, "R");
  const auto Cs = reals(s, "C");
  const auto Ms = reals(s, "M");
  if (Rs.empty()) throw std::invalid_argument("R needs at least one value");
  if (Ms.empty() && Cs.empty()) throw std::invalid_argument("give M or C");
  const auto n = replicas(s);
  std::vector<ExperimentSpec<D>> nodes;
  for (const double R : Rs) {
    if (!(R > 0.0)) throw std::invalid_argument("R must be > 0");
    EventSpec<D> ev;
    ev.kind = EventKind::chemdist;
    ev.R = R;
    ev.M = kInf;
    ev.conservative = s.at("conservative").get<bool>();
    nodes.push_back(experiment(ev, n, 0));
  }
  const auto reports = sweep(nodes, s.at("seed").get<std::uint64_t>());
  Csv csv({"dim", "R", "M", "n", "k", "phat", "ci_lo", "ci_hi", "margin_violations"});
  std::vector<std::pair<std::string, const EstimatorReport*>> rec;
  for (std::size_t i = 0; i < Rs.size(); ++i) {
    std::vector<double> budgets = Ms;
    if (budgets.empty())
      for (const double c : Cs) budgets.push_back(std::ceil(c * Rs[i] - 1e-9));
    for (const double M : budgets) {
      const auto r = rethreshold(reports[i], [M](const Outcome& o) { return o.aux >= 0.0 && o.aux <= M; });
      csv.row({num(D), num(Rs[i]), num(M), num(r.n), num(r.k), num(r.phat), num(r.ci.lo), num(r.ci.hi),
               num(r.margin_violations)});
    }
    rec.emplace_back(std::to_string(i), &reports[i]);
  }
  run.files.emplace_back("chemdist.csv", csv.str());
  add_records(run, "chemdist", rec);
}

template <std::size_t D>
std::vector<EstimatorReport> origin_table(Run& run, const std::string& file, std::vector<double>& Rs) {
  const auto& s = run.spec;
  Rs = reals(s, "R");
  if (Rs.empty()) throw std::invalid_argument("R needs at least one value");
  const auto ps = reals(s, "p");
  if (ps.size() != 1) throw std::invalid_argument("p must be a single value here");
  double maxR = 0.0;
  for (const double R : Rs) {
    if (!(R > 0.0)) throw std::invalid_argument("R must be > 0");
    maxR = std::max(maxR, R);
  }
  EventSpec<D> ev;
  ev.kind = EventKind::origin;
  ev.model = model_at<D>(s, ps[0]);
  ev.options = options_for<D>(s, ev.model.pure_continuum());
  ev.R = maxR;
  const double extent = s.at("extent").get<double>();
  ev.origin_extent = extent > 0.0 ? extent : 2.0 * maxR + 8.0;
  const auto base = mc_estimate(experiment(ev, replicas(s), s.at("seed").get<std::uint64_t>()));
  std::size_t censored = 0;
  for (const auto& r : base.records) censored += std::isinf(r.outcome.aux) ? 1 : 0;
  Csv csv({"dim", "R", "p", "N", "n", "k", "phat", "ci_lo", "ci_hi", "censored", "margin_violations"});
  std::vector<EstimatorReport> out;
  for (const double R : Rs) {
    out.push_back(rethreshold(base, [R](const Outcome& o) { return std::isfinite(o.aux) && o.aux >= R; }));
    const auto& r = out.back();
    csv.row({num(D), num(R), num(ps[0]), num(ev.model.N), num(r.n), num(r.k), num(r.phat), num(r.ci.lo), num(r.ci.hi),
             num(censored), num(r.margin_violations)});
  }
  run.resolved["backend"] = to_string(ev.options.backend);
  run.resolved["h"] = ev.options.lattice_h;
  run.resolved["extent"] = ev.origin_extent;
  run.files.emplace_back(file, csv.str());
  add_records(run, run.command, {{"0", &base}});
  return out;
}

template <std::size_t D>
void run_origin(Run& run) {
  std::vector<double> Rs;
  origin_table<D>(run, "origin-cluster.csv", Rs);
}

template <std::size_t D>
void run_decay(Run& run) {
  std::vector<double> Rs;
  const auto reports = origin_table<D>(run, "decay-fit_points.csv", Rs);
  const auto form_name = run.spec.at("form").get<std::string>();
  DecayForm form;
  if (form_name == "exp_R") form = DecayForm::exp_R;
  else if (form_name == "exp_R_pow") form = DecayForm::exp_R_pow;
  else throw std::invalid_argument("form must be exp_R or exp_R_pow");
  const auto fit = decay_fit(Rs, reports, form, D, run.spec.at("power").get<double>());
  bool decreasing = true;
  for (std::size_t i = 1; i < reports.size(); ++i) decreasing = decreasing && reports[i].phat < reports[i - 1].phat;
  Csv csv({"form", "exponent", "rate", "rate_se", "intercept", "r_squared", "used", "bound_only", "goodness_ok",
           "decreasing"});
  csv.row({form_name, num(fit.exponent), num(fit.rate), num(fit.rate_se), num(fit.intercept), num(fit.r_squared),
           num(fit.used), flag01(fit.bound_only), flag01(fit.goodness_ok), flag01(decreasing)});
  run.files.emplace_back("decay-fit.csv", csv.str());
}

template <std::size_t D>
void run_dominance(Run& run) {
  const auto& s = run.spec;
  if (s.at("model-a").is_null() || s.at("model-b").is_null())
    throw std::invalid_argument("dominance needs model-a and model-b");
  EventSpec<D> a, b;
  const auto event = s.at("event").get<std::string>();
  if (event == "crossing") a.kind = EventKind::crossing;
  else if (event == "dense-cluster") a.kind = EventKind::dense;
  else throw std::invalid_argument("event must be crossing or dense-cluster");
  a.L = s.at("L").get<double>();
  a.ell = s.at("ell").get<double>();
  b = a;
  a.model = model_from_json<D>(s.at("model-a"));
  b.model = model_from_json<D>(s.at("model-b"));
  a.options = b.options = options_for<D>(s, a.model.pure_continuum() && b.model.pure_continuum());
  const auto r = dominance_test(a, b, replicas(s), s.at("alpha").get<double>(), s.at("seed").get<std::uint64_t>());
  Csv csv({"verdict", "strict", "z", "critical", "a_n", "a_k", "a_phat", "a_lo", "a_hi", "b_n", "b_k", "b_phat", "b_lo",
           "b_hi"});
  csv.row({to_string(r.verdict), flag01(r.strict), num(r.z), num(r.critical), num(r.a.n), num(r.a.k), num(r.a.phat),
           num(r.a.ci.lo), num(r.a.ci.hi), num(r.b.n), num(r.b.k), num(r.b.phat), num(r.b.ci.lo), num(r.b.ci.hi)});
  run.resolved["backend"] = to_string(a.options.backend);
  run.resolved["h"] = a.options.lattice_h;
  run.files.emplace_back("dominance.csv", csv.str());
  add_records(run, "dominance", {{"A", &r.a}, {"B", &r.b}});
}

void run_selftest_cmd(Run& run) {
  const auto results = run_selftest(run.spec.at("seed").get<std::uint64_t>(), !run.spec.at("full").get<bool>());
  Csv csv({"name", "pass"});
  bool all = true;
  for (const auto& c : results) {
    std::cerr << (c.pass ? "PASS " : "FAIL ") << c.name << "  " << c.detail << '\n';
    csv.row({c.name, flag01(c.pass)});
    all = all && c.pass;
  }
  run.files.emplace_back("selftest.csv", csv.str());
  if (!all) run.status = 3;
}

template <std::size_t D>
void dispatch_dim(Run& run) {
  const auto& c = run.command;
  if (c == "crossing") run_grid<D>(run, EventKind::crossing);
  else if (c == "uniqueness-curve") run_grid<D>(run, EventKind::uniqueness);
  else if (c == "dense-cluster") run_grid<D>(run, EventKind::dense);
  else if (c == "estimate-pc") run_estimate_pc<D>(run);
  else if (c == "chemdist") run_chemdist<D>(run);
  else if (c == "origin-cluster") run_origin<D>(run);
  else if (c == "decay-fit") run_decay<D>(run);
  else if (c == "dominance") run_dominance<D>(run);
  else throw std::invalid_argument("unknown subcommand '" + c + "'");
}

void execute(Run& run) {
  if (run.command == "selftest") return run_selftest_cmd(run);
  switch (run.spec.at("dim").get<std::size_t>()) {
    case 2: return dispatch_dim<2>(run);
    case 3: return dispatch_dim<3>(run);
    case 4: return dispatch_dim<4>(run);
    default: throw std::invalid_argument("dim must be 2, 3 or 4");
  }
}

json write_outputs(const Run& run, const fs::path& dir, double seconds) {
  fs::create_directories(dir);
  json outputs = json::array();
  for (const auto& [name, content] : run.files) {
    std::ofstream f(dir / name, std::ios::binary);
    f << content;
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    outputs.push_back({{"path", name}, {"fnv1a64", hex64(fnv1a64(content))}, {"bytes", content.size()}});
  }
  json m;
  m["schema_version"] = kSchemaVersion;
  m["tool"] = "voroperc";
  m["version"] = VOROPERC_VERSION;
  m["subcommand"] = run.command;
  m["spec"] = run.spec;
  m["spec_hash"] = hex64(fnv1a64(run.spec.dump()));
  if (run.spec.contains("seed")) m["seed"] = run.spec.at("seed");
  m["options"] = {{"records", run.records}};
  m["resolved"] = run.resolved;
  m["outputs"] = outputs;
  m["timings"] = {{"wall_seconds", seconds}, {"threads", thread_count(0)}};
  std::ofstream f(dir / (run.command + ".manifest.json"));
  f << m.dump(2) << '\n';
  if (!f) throw std::runtime_error("cannot write manifest");
  return m;
}

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open " + path);
  return json::parse(f);
}

int replay(const std::string& manifest_path, const fs::path& out, bool quiet) {
  const json m = read_json_file(manifest_path);
  if (m.value("schema_version", 0) != kSchemaVersion) throw std::invalid_argument("replay: unsupported manifest schema");
  const auto cmds = commands();
  const auto name = m.at("subcommand").get<std::string>();
  const auto it = std::find_if(cmds.begin(), cmds.end(), [&](const Command& c) { return c.name == name; });
  if (it == cmds.end()) throw std::invalid_argument("replay: unknown subcommand '" + name + "'");
  Run run;
  run.command = name;
  run.spec = merge_spec(*it, m.at("spec"), {});
  run.records = m.at("options").value("records", false);
  const auto t0 = std::chrono::steady_clock::now();
  execute(run);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto fresh = write_outputs(run, out, secs);
  std::map<std::string, std::string> want;
  for (const auto& o : m.at("outputs")) want[o.at("path").get<std::string>()] = o.at("fnv1a64").get<std::string>();
  std::size_t bad = 0;
  for (const auto& o : fresh.at("outputs")) {
    const auto path = o.at("path").get<std::string>();
    const bool same = want.count(path) && want[path] == o.at("fnv1a64").get<std::string>();
    bad += same ? 0 : 1;
    if (!quiet) std::cout << (same ? "identical " : "DIFFERS   ") << path << '\n';
  }
  if (bad || want.size() != fresh.at("outputs").size()) {
    std::cerr << "replay: outputs differ from the manifest\n";
    return 3;
  }
  return run.status;
}

std::string footer(const Command& c) {
  std::string s = "CSV columns:\n";
  for (const auto& col : c.columns) s += "  " + col + "\n";
  s += "\nA --config file is a JSON object whose keys are the option names above (without dashes in front);\n"
       "unknown keys are rejected. Threads: VORO_THREADS (default: all cores).\n"
       "Exit codes: 0 ok, 1 invalid input, 2 budget exhausted, 3 internal check failed.";
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Voronoi percolation Monte Carlo experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(VOROPERC_VERSION));

  const auto cmds = commands();
  struct Bound {
    const Command* cmd;
    CLI::App* sub;
    std::map<std::string, std::string> raw;
    std::map<std::string, bool> flags;
    std::map<std::string, CLI::Option*> opts;
    std::string config;
    std::string out = ".";
    bool records = false;
    bool quiet = false;
  };
  std::vector<Bound> bound(cmds.size());
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    auto& b = bound[i];
    b.cmd = &cmds[i];
    b.sub = app.add_subcommand(cmds[i].name, cmds[i].about);
    b.sub->add_option("--config", b.config, "JSON descriptor file");
    b.sub->add_option("--out", b.out, "output directory")->capture_default_str();
    b.sub->add_flag("--records", b.records, "also write per-replica records");
    b.sub->add_flag("--quiet", b.quiet, "do not echo the main CSV");
    for (const auto& p : cmds[i].params) {
      const std::string help = p.help + (p.def.is_null() ? "" : " [default " + p.def.dump() + "]");
      if (p.kind == Kind::flag) b.opts[p.name] = b.sub->add_flag("--" + p.name, b.flags[p.name], help);
      else b.opts[p.name] = b.sub->add_option("--" + p.name, b.raw[p.name], help);
    }
    b.sub->footer(footer(cmds[i]));
  }
  std::string manifest_path, replay_out = "replay";
  bool replay_quiet = false;
  auto* rp = app.add_subcommand("replay", "Re-run a manifest and compare output hashes.");
  rp->add_option("manifest", manifest_path, "manifest JSON written by an earlier run")->required();
  rp->add_option("--out", replay_out, "output directory")->capture_default_str();
  rp->add_flag("--quiet", replay_quiet, "only report differences");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (rp->parsed()) return replay(manifest_path, replay_out, replay_quiet);
    for (auto& b : bound) {
      if (!b.sub->parsed()) continue;
      std::map<std::string, std::string> given;
      for (const auto& [name, opt] : b.opts)
        if (opt->count() > 0) given[name] = b.flags.count(name) ? "true" : b.raw[name];
      Run run;
      run.command = b.cmd->name;
      run.spec = merge_spec(*b.cmd, b.config.empty() ? json::object() : read_json_file(b.config), given);
      run.records = b.records;
      const auto t0 = std::chrono::steady_clock::now();
      execute(run);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_outputs(run, b.out, secs);
      if (!b.quiet && !run.files.empty()) std::cout << run.files.front().second;
      return run.status;
    }
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const BudgetError& e) {
    std::cerr << "budget: " << e.what() << '\n';
    return 2;
  } catch (const std::length_error& e) {
    std::cerr << "budget: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
