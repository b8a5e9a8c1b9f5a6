#pragma once

// Coloring rules: the continuum model V(p), the truncated model V_N(p) and
// Bernoulli box fields composed on top of either one.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "json.hpp"
#include "ppp.hpp"
#include "rng.hpp"

namespace voroperc {

enum class ModelKind { continuum, truncated };
enum class FieldMode { unite, subtract };

inline std::string to_string(ModelKind k) { return k == ModelKind::continuum ? "continuum" : "truncated"; }
inline std::string to_string(FieldMode m) { return m == FieldMode::unite ? "union" : "difference"; }

// ---------------------------------------------------------------------------
// Box fields

/// i.i.d. Bernoulli(delta) occupation of Z^d; site k carries the closed box
/// N * (k + [0,1]^d). Occupation is a stateless function of (seed, k).
template <std::size_t D>
struct BoxField {
  double N = 1.0;
  double delta = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(N > 0.0) || !std::isfinite(N)) throw std::invalid_argument("box field: N must be > 0");
    if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("box field: delta must lie in [0,1]");
  }

  bool occupied(const std::array<std::int64_t, D>& k) const {
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < D; ++i) h = mix64(h ^ (static_cast<std::uint64_t>(k[i]) + kGolden * (i + 1)));
    return Stream(seed).child("boxfield").uniform_at(h) < delta;
  }

  Box<D> box_of(const std::array<std::int64_t, D>& k) const {
    Box<D> b;
    for (std::size_t i = 0; i < D; ++i) {
      b.lo[i] = N * static_cast<double>(k[i]);
      b.hi[i] = N * static_cast<double>(k[i] + 1);
    }
    return b;
  }

  /// Whether y lies in the union of occupied closed boxes.
  bool contains(const Point<D>& y) const {
    if (delta <= 0.0) return false;
    std::array<std::int64_t, D> base{};
    std::array<bool, D> on_face{};
    for (std::size_t i = 0; i < D; ++i) {
      const double t = y[i] / N;
      base[i] = static_cast<std::int64_t>(std::floor(t));
      on_face[i] = t - std::floor(t) <= kGeomTol / N;
    }
    // A point on shared faces belongs to every adjacent closed box.
    for (unsigned mask = 0; mask < (1u << D); ++mask) {
      std::array<std::int64_t, D> k = base;
      bool skip = false;
      for (std::size_t i = 0; i < D; ++i) {
        if ((mask >> i) & 1u) {
          if (!on_face[i]) {
            skip = true;
            break;
          }
          k[i] -= 1;
        }
      }
      if (!skip && occupied(k)) return true;
    }
    return false;
  }

  /// Occupied sites whose boxes meet `region`.
  std::vector<std::array<std::int64_t, D>> occupied_sites(const Box<D>& region) const {
    std::array<std::int64_t, D> lo{}, hi{};
    for (std::size_t i = 0; i < D; ++i) {
      lo[i] = static_cast<std::int64_t>(std::floor(region.lo[i] / N)) - 1;
      hi[i] = static_cast<std::int64_t>(std::floor(region.hi[i] / N));
    }
    std::vector<std::array<std::int64_t, D>> out;
    std::array<std::int64_t, D> k = lo;
    for (;;) {
      if (occupied(k) && box_of(k).intersects(region)) out.push_back(k);
      std::size_t i = D;
      while (i > 0) {
        --i;
        if (k[i] < hi[i]) {
          ++k[i];
          for (std::size_t j = i + 1; j < D; ++j) k[j] = lo[j];
          break;
        }
        if (i == 0) return out;
      }
    }
  }
};

template <std::size_t D>
BoxField<D> bernoulli_box_field(double N, double delta, std::uint64_t seed) {
  BoxField<D> f{N, delta, seed};
  f.validate();
  return f;
}

template <std::size_t D>
struct FieldOp {
  BoxField<D> field;
  FieldMode mode = FieldMode::unite;
};

// ---------------------------------------------------------------------------
// Model description

template <std::size_t D>
struct ColoringModel {
  ModelKind kind = ModelKind::continuum;
  double p = 0.5;
  double N = 0.0;  // truncated only
  std::vector<FieldOp<D>> fields;

  static ColoringModel continuum(double p) { return {ModelKind::continuum, p, 0.0, {}}; }
  static ColoringModel truncated(double N, double p) { return {ModelKind::truncated, p, N, {}}; }

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("model: p must lie in [0,1]");
    if (kind == ModelKind::truncated && (!(N > 0.0) || !std::isfinite(N)))
      throw std::invalid_argument("model: truncated model needs N > 0");
    for (const auto& f : fields) f.field.validate();
  }
  bool pure_continuum() const { return kind == ModelKind::continuum && fields.empty(); }
  /// Largest distance from a query point at which points can matter.
  double range() const { return kind == ModelKind::truncated ? 2.0 * N : kInf; }
};

template <std::size_t D>
ColoringModel<D> compose(ColoringModel<D> model, const BoxField<D>& field, FieldMode mode) {
  field.validate();
  model.fields.push_back({field, mode});
  return model;
}

template <std::size_t D>
nlohmann::json to_json(const ColoringModel<D>& m) {
  nlohmann::json j{{"kind", to_string(m.kind)}, {"p", m.p}};
  if (m.kind == ModelKind::truncated) j["N"] = m.N;
  j["fields"] = nlohmann::json::array();
  for (const auto& f : m.fields)
    j["fields"].push_back({{"N", f.field.N}, {"delta", f.field.delta}, {"seed", f.field.seed}, {"mode", to_string(f.mode)}});
  return j;
}

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed, const char* what) {
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw std::invalid_argument(std::string(what) + ": unknown key '" + key + "'");
  }
}

}  // namespace detail

template <std::size_t D>
ColoringModel<D> model_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("model: descriptor must be an object");
  detail::reject_unknown(j, {"kind", "p", "N", "fields"}, "model");
  ColoringModel<D> m;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "continuum") m.kind = ModelKind::continuum;
  else if (kind == "truncated") m.kind = ModelKind::truncated;
  else throw std::invalid_argument("model: unknown kind '" + kind + "'");
  m.p = j.at("p").get<double>();
  if (j.contains("N")) m.N = j.at("N").get<double>();
  if (j.contains("fields")) {
    for (const auto& f : j.at("fields")) {
      detail::reject_unknown(f, {"N", "delta", "seed", "mode"}, "field");
      FieldOp<D> op;
      op.field.N = f.at("N").get<double>();
      op.field.delta = f.at("delta").get<double>();
      op.field.seed = f.at("seed").get<std::uint64_t>();
      const auto mode = f.at("mode").get<std::string>();
      if (mode == "union") op.mode = FieldMode::unite;
      else if (mode == "difference") op.mode = FieldMode::subtract;
      else throw std::invalid_argument("field: unknown mode '" + mode + "'");
      m.fields.push_back(op);
    }
  }
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Truncated obstacles

template <std::size_t D>
struct TruncatedObstacles {
  double N = 1.0;
  double threshold = 0.0;              // 2 N^d
  std::array<std::int64_t, D> k0{};    // first box index per axis
  std::array<std::int64_t, D> dims{};  // boxes per axis
  std::vector<std::uint32_t> closed_count;
  std::vector<std::uint8_t> saturated;
  std::vector<std::int32_t> closed_points;  // closed points of non-saturated boxes

  std::size_t flat(const std::array<std::int64_t, D>& k) const {
    std::size_t f = 0;
    for (std::size_t i = 0; i < D; ++i) f = f * static_cast<std::size_t>(dims[i]) + static_cast<std::size_t>(k[i] - k0[i]);
    return f;
  }
  bool in_range(const std::array<std::int64_t, D>& k) const {
    for (std::size_t i = 0; i < D; ++i)
      if (k[i] < k0[i] || k[i] >= k0[i] + dims[i]) return false;
    return true;
  }
  std::array<std::int64_t, D> box_index(const Point<D>& y) const {
    std::array<std::int64_t, D> k{};
    for (std::size_t i = 0; i < D; ++i) k[i] = static_cast<std::int64_t>(std::floor(y[i] / N));
    return k;
  }
  bool is_saturated(const std::array<std::int64_t, D>& k) const { return in_range(k) && saturated[flat(k)] != 0; }
  Box<D> box_of(const std::array<std::int64_t, D>& k) const {
    Box<D> b;
    for (std::size_t i = 0; i < D; ++i) {
      b.lo[i] = N * static_cast<double>(k[i]);
      b.hi[i] = N * static_cast<double>(k[i] + 1);
    }
    return b;
  }
  std::vector<Box<D>> saturated_boxes() const {
    std::vector<Box<D>> out;
    for (std::size_t f = 0; f < saturated.size(); ++f) {
      if (!saturated[f]) continue;
      std::array<std::int64_t, D> k{};
      std::size_t r = f;
      for (std::size_t i = D; i-- > 0;) {
        k[i] = k0[i] + static_cast<std::int64_t>(r % static_cast<std::size_t>(dims[i]));
        r /= static_cast<std::size_t>(dims[i]);
      }
      out.push_back(box_of(k));
    }
    return out;
  }
};

/// Whether the window is paved exactly by boxes x + [0,N)^d, x in NZ^d.
template <std::size_t D>
bool window_aligned(const Box<D>& box, double N) {
  for (std::size_t i = 0; i < D; ++i) {
    for (double v : {box.lo[i], box.hi[i]}) {
      const double t = v / N;
      if (std::fabs(t - std::round(t)) > 1e-9) return false;
    }
  }
  return true;
}

template <std::size_t D>
TruncatedObstacles<D> truncated_obstacles(const PointConfig<D>& config, double p, double N) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("truncated: p must lie in [0,1]");
  if (!(N > 0.0)) throw std::invalid_argument("truncated: N must be > 0");
  const auto& box = config.window().box;
  if (!window_aligned(box, N)) throw std::invalid_argument("truncated: window is not paved by N-boxes");
  TruncatedObstacles<D> t;
  t.N = N;
  t.threshold = 2.0 * std::pow(N, static_cast<double>(D));
  std::size_t total = 1;
  for (std::size_t i = 0; i < D; ++i) {
    t.k0[i] = static_cast<std::int64_t>(std::llround(box.lo[i] / N));
    t.dims[i] = static_cast<std::int64_t>(std::llround(box.hi[i] / N)) - t.k0[i];
    total *= static_cast<std::size_t>(t.dims[i]);
  }
  t.closed_count.assign(total, 0);
  t.saturated.assign(total, 0);
  std::vector<std::size_t> owner_box(config.size(), total);
  for (const auto& pt : config.points()) {
    auto k = t.box_index(pt.position);
    for (std::size_t i = 0; i < D; ++i) k[i] = std::clamp(k[i], t.k0[i], t.k0[i] + t.dims[i] - 1);
    owner_box[pt.id] = t.flat(k);
    if (pt.mark > p) ++t.closed_count[owner_box[pt.id]];
  }
  for (std::size_t f = 0; f < total; ++f) t.saturated[f] = static_cast<double>(t.closed_count[f]) > t.threshold;
  for (const auto& pt : config.points())
    if (pt.mark > p && !t.saturated[owner_box[pt.id]]) t.closed_points.push_back(pt.id);
  return t;
}

// ---------------------------------------------------------------------------
// Membership

/// A model bound to one configuration; membership queries are pure.
template <std::size_t D>
class Coloring {
 public:
  Coloring(const PointConfig<D>& config, ColoringModel<D> model) : config_(&config), model_(std::move(model)) {
    model_.validate();
    if (model_.kind == ModelKind::truncated) obstacles_ = truncated_obstacles(config, model_.p, model_.N);
  }

  const ColoringModel<D>& model() const { return model_; }
  const PointConfig<D>& config() const { return *config_; }
  const std::optional<TruncatedObstacles<D>>& obstacles() const { return obstacles_; }

  /// Base model only (fields not applied).
  bool base_contains(const Point<D>& y) const {
    return model_.kind == ModelKind::continuum ? continuum(y) : truncated(y);
  }

  bool contains(const Point<D>& y) const {
    if (!config_->window().analysis().contains(y, kGeomTol))
      throw std::invalid_argument("membership: query point outside the certified region");
    return contains_unchecked(y);
  }

  bool contains_unchecked(const Point<D>& y) const {
    bool in = base_contains(y);
    for (const auto& op : model_.fields) {
      if (op.mode == FieldMode::unite) in = in || op.field.contains(y);
      else in = in && !op.field.contains(y);
    }
    return in;
  }

 private:
  bool continuum(const Point<D>& y) const {
    const auto& cfg = *config_;
    if (cfg.empty()) return false;
    const auto nn = cfg.index().nearest(y);
    if (cfg.is_open(nn.id, model_.p)) return true;
    // Nearest is closed: open only if an open point ties with it.
    bool tie = false;
    cfg.index().for_each_in_ball(y, nn.distance + kGeomTol, [&](std::int32_t id, const Point<D>&) {
      tie = tie || cfg.is_open(id, model_.p);
    });
    return tie;
  }

  bool truncated(const Point<D>& y) const {
    const auto& cfg = *config_;
    const auto& obs = *obstacles_;
    const double N = model_.N;
    double d_open = kInf, d_closed = kInf;
    cfg.index().for_each_in_ball(y, N + kGeomTol, [&](std::int32_t id, const Point<D>& pos) {
      const double d = dist(pos, y);
      if (cfg.is_open(id, model_.p)) {
        d_open = std::min(d_open, d);
      } else {
        auto k = obs.box_index(pos);
        for (std::size_t i = 0; i < D; ++i) k[i] = std::clamp(k[i], obs.k0[i], obs.k0[i] + obs.dims[i] - 1);
        if (!obs.saturated[obs.flat(k)]) d_closed = std::min(d_closed, d);
      }
    });
    if (d_open > N + kGeomTol) return false;
    // Saturated boxes within reach.
    std::array<std::int64_t, D> lo{}, hi{};
    for (std::size_t i = 0; i < D; ++i) {
      lo[i] = std::max(obs.k0[i], static_cast<std::int64_t>(std::floor((y[i] - N) / N)));
      hi[i] = std::min(obs.k0[i] + obs.dims[i] - 1, static_cast<std::int64_t>(std::floor((y[i] + N) / N)));
      if (lo[i] > hi[i]) return d_open <= std::min(d_closed, N) + kGeomTol;
    }
    std::array<std::int64_t, D> k = lo;
    for (;;) {
      if (obs.saturated[obs.flat(k)]) d_closed = std::min(d_closed, obs.box_of(k).distance(y));
      std::size_t i = D;
      bool done = true;
      while (i > 0) {
        --i;
        if (k[i] < hi[i]) {
          ++k[i];
          for (std::size_t j = i + 1; j < D; ++j) k[j] = lo[j];
          done = false;
          break;
        }
      }
      if (done) break;
    }
    return d_open <= std::min(d_closed, N) + kGeomTol;
  }

  const PointConfig<D>* config_;
  ColoringModel<D> model_;
  std::optional<TruncatedObstacles<D>> obstacles_;
};

/// One-shot membership query.
template <std::size_t D>
bool membership(const Point<D>& y, const ColoringModel<D>& model, const PointConfig<D>& config) {
  return Coloring<D>(config, model).contains(y);
}

}  // namespace voroperc
