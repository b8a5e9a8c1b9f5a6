#pragma once

// Marked Poisson point processes on axis-aligned windows.
//
// Every point carries a uniform mark in (0,1). The open/closed split at level
// p is {mark <= p} / {mark > p}, so one sample serves every p at once.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "format.hpp"
#include "geometry.hpp"
#include "json.hpp"
#include "rng.hpp"
#include "spatial_hash.hpp"

namespace voroperc {

/// Hard cap on the number of sampled points per configuration.
inline constexpr std::uint64_t kMaxPoints = 100'000'000ULL;

template <std::size_t D>
struct Window {
  Box<D> box;          // sampled region [lo, hi)
  double margin = 0.0;  // shell between the analysis domain and the box

  Box<D> analysis() const { return box.expanded(-margin); }

  void validate() const {
    static_assert(D >= 2, "dimension must be >= 2");
    if (!box.nondegenerate()) throw std::invalid_argument("window: hi must exceed lo on every axis");
    if (!(margin >= 0.0) || !std::isfinite(margin)) throw std::invalid_argument("window: margin must be >= 0");
    for (std::size_t i = 0; i < D; ++i)
      if (!(box.side(i) > 2.0 * margin)) throw std::invalid_argument("window: margin leaves no analysis domain");
  }

  /// Window whose analysis domain is `domain`, padded by `margin`.
  static Window around(const Box<D>& domain, double margin) { return Window{domain.expanded(margin), margin}; }
};

template <std::size_t D>
struct MarkedPoint {
  std::int32_t id = 0;
  Point<D> position{};
  double mark = 0.0;
};

template <std::size_t D>
class PointConfig {
 public:
  PointConfig() = default;

  PointConfig(Window<D> window, double intensity, std::uint64_t seed, std::vector<MarkedPoint<D>> points)
      : window_(window), intensity_(intensity), seed_(seed), points_(std::move(points)) {
    window_.validate();
    if (!(intensity_ > 0.0) || !std::isfinite(intensity_)) throw std::invalid_argument("intensity must be > 0");
    positions_.reserve(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto& pt = points_[i];
      if (pt.id != static_cast<std::int32_t>(i)) throw std::invalid_argument("point ids must be contiguous from 0");
      if (!(pt.mark >= 0.0 && pt.mark <= 1.0)) throw std::invalid_argument("marks must lie in [0,1]");
      if (!window_.box.contains(pt.position, kGeomTol)) throw std::invalid_argument("point outside its window");
      positions_.push_back(pt.position);
    }
    index_ = SpatialHash<D>(window_.box, std::pow(1.0 / intensity_, 1.0 / static_cast<double>(D)), positions_);
  }

  /// Convenience constructor for hand-built configurations.
  static PointConfig from_positions(const Window<D>& window, std::span<const Point<D>> positions,
                                    std::span<const double> marks, double intensity = 1.0, std::uint64_t seed = 0) {
    if (positions.size() != marks.size()) throw std::invalid_argument("positions/marks size mismatch");
    std::vector<MarkedPoint<D>> pts(positions.size());
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {static_cast<std::int32_t>(i), positions[i], marks[i]};
    return PointConfig(window, intensity, seed, std::move(pts));
  }

  const Window<D>& window() const { return window_; }
  double intensity() const { return intensity_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<MarkedPoint<D>>& points() const { return points_; }
  const MarkedPoint<D>& operator[](std::size_t i) const { return points_[i]; }
  const Point<D>& position(std::size_t i) const { return positions_[i]; }
  std::span<const Point<D>> positions() const { return positions_; }
  double mark(std::size_t i) const { return points_[i].mark; }
  bool is_open(std::size_t i, double p) const { return points_[i].mark <= p; }
  const SpatialHash<D>& index() const { return index_; }

 private:
  Window<D> window_{};
  double intensity_ = 1.0;
  std::uint64_t seed_ = 0;
  std::vector<MarkedPoint<D>> points_;
  std::vector<Point<D>> positions_;
  SpatialHash<D> index_;
};

namespace detail {

template <std::size_t D>
void append_uniform_points(const Box<D>& box, std::uint64_t count, Stream& rng, const Box<D>* exclude,
                           std::vector<MarkedPoint<D>>& out) {
  for (std::uint64_t k = 0; k < count; ++k) {
    MarkedPoint<D> pt;
    for (std::size_t i = 0; i < D; ++i) pt.position[i] = rng.uniform(box.lo[i], box.hi[i]);
    pt.mark = rng.uniform();
    if (exclude != nullptr && exclude->contains(pt.position)) continue;
    pt.id = static_cast<std::int32_t>(out.size());
    out.push_back(pt);
  }
}

template <std::size_t D>
std::uint64_t checked_count(double mean, Stream& rng) {
  if (mean > static_cast<double>(kMaxPoints)) throw std::length_error("expected point count exceeds the 1e8 cap");
  const auto n = sample_poisson(mean, rng);
  if (n > kMaxPoints) throw std::length_error("point count exceeds the 1e8 cap");
  return n;
}

}  // namespace detail

/// Homogeneous marked Poisson process on `window`. Draw order: the count,
/// then per point its D coordinates followed by its mark.
template <std::size_t D>
PointConfig<D> sample_ppp(const Window<D>& window, double intensity, std::uint64_t seed) {
  window.validate();
  if (!(intensity > 0.0) || !std::isfinite(intensity)) throw std::invalid_argument("intensity must be > 0");
  Stream rng = Stream(seed).child("ppp");
  const auto n = detail::checked_count<D>(intensity * window.box.volume(), rng);
  std::vector<MarkedPoint<D>> pts;
  pts.reserve(n);
  detail::append_uniform_points(window.box, n, rng, static_cast<const Box<D>*>(nullptr), pts);
  return PointConfig<D>(window, intensity, seed, std::move(pts));
}

/// Grows the margin to `new_margin` by sampling the added shell independently
/// (thinning a sample of the enlarged box). Existing points keep their ids.
template <std::size_t D>
PointConfig<D> extend_margin(const PointConfig<D>& config, double new_margin, std::uint64_t attempt) {
  const auto& w = config.window();
  if (!(new_margin > w.margin)) throw std::invalid_argument("extend_margin: margin must grow");
  Window<D> grown{w.box.expanded(new_margin - w.margin), new_margin};
  Stream rng = Stream(config.seed()).child("extend").child(attempt);
  const auto n = detail::checked_count<D>(config.intensity() * grown.box.volume(), rng);
  std::vector<MarkedPoint<D>> pts = config.points();
  detail::append_uniform_points(grown.box, n, rng, &w.box, pts);
  return PointConfig<D>(grown, config.intensity(), config.seed(), std::move(pts));
}

struct OpenClosed {
  std::vector<std::int32_t> open;
  std::vector<std::int32_t> closed;
};

template <std::size_t D>
OpenClosed open_closed(const PointConfig<D>& config, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0,1]");
  OpenClosed r;
  for (const auto& pt : config.points()) (pt.mark <= p ? r.open : r.closed).push_back(pt.id);
  return r;
}

// ---------------------------------------------------------------------------
// Dump / load: `id,x1..xd,mark` CSV plus a JSON sidecar.

template <std::size_t D>
nlohmann::json window_sidecar(const PointConfig<D>& config) {
  const auto& w = config.window();
  return nlohmann::json{{"dimension", D},
                        {"lo", std::vector<double>(w.box.lo.begin(), w.box.lo.end())},
                        {"hi", std::vector<double>(w.box.hi.begin(), w.box.hi.end())},
                        {"margin", w.margin},
                        {"intensity", config.intensity()},
                        {"seed", config.seed()}};
}

template <std::size_t D>
void write_config_csv(const PointConfig<D>& config, std::ostream& out) {
  out << "id";
  for (std::size_t i = 0; i < D; ++i) out << ",x" << (i + 1);
  out << ",mark\n";
  for (const auto& pt : config.points()) {
    out << pt.id;
    for (std::size_t i = 0; i < D; ++i) out << ',' << fmt17(pt.position[i]);
    out << ',' << fmt17(pt.mark) << '\n';
  }
}

template <std::size_t D>
PointConfig<D> read_config(std::istream& csv, const nlohmann::json& sidecar) {
  if (sidecar.at("dimension").get<std::size_t>() != D) throw std::invalid_argument("config dimension mismatch");
  Window<D> w;
  const auto lo = sidecar.at("lo").get<std::vector<double>>();
  const auto hi = sidecar.at("hi").get<std::vector<double>>();
  if (lo.size() != D || hi.size() != D) throw std::invalid_argument("sidecar lo/hi length mismatch");
  for (std::size_t i = 0; i < D; ++i) {
    w.box.lo[i] = lo[i];
    w.box.hi[i] = hi[i];
  }
  w.margin = sidecar.at("margin").get<double>();
  std::vector<MarkedPoint<D>> pts;
  std::string line;
  std::getline(csv, line);  // header
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    MarkedPoint<D> pt;
    std::getline(ss, cell, ',');
    pt.id = static_cast<std::int32_t>(std::stol(cell));
    for (std::size_t i = 0; i < D; ++i) {
      std::getline(ss, cell, ',');
      pt.position[i] = std::stod(cell);
    }
    std::getline(ss, cell, ',');
    pt.mark = std::stod(cell);
    pts.push_back(pt);
  }
  return PointConfig<D>(w, sidecar.at("intensity").get<double>(), sidecar.at("seed").get<std::uint64_t>(),
                        std::move(pts));
}

template <std::size_t D>
void save_config(const PointConfig<D>& config, const std::string& csv_path, const std::string& json_path) {
  std::ofstream csv(csv_path);
  std::ofstream js(json_path);
  if (!csv || !js) throw std::runtime_error("cannot open config dump files");
  write_config_csv(config, csv);
  js << window_sidecar(config).dump(2) << '\n';
}

template <std::size_t D>
PointConfig<D> load_config(const std::string& csv_path, const std::string& json_path) {
  std::ifstream csv(csv_path);
  std::ifstream js(json_path);
  if (!csv || !js) throw std::runtime_error("cannot open config dump files");
  return read_config<D>(csv, nlohmann::json::parse(js));
}

}  // namespace voroperc
