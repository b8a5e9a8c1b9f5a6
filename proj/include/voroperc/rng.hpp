#pragma once

// Counter-based, splittable random streams.
//
// A Stream is a 64-bit key plus a counter. The i-th draw is
// mix64(key + i * kGolden), i.e. SplitMix64 evaluated at an arbitrary counter
// position, so any draw can be produced without touching earlier ones.
// Child streams are keyed by mix64(key ^ mix64(tag * kGolden + kTagOffset));
// replica r of an experiment with master seed s uses Stream(s).child(r), which
// makes every replica independent of execution order and thread count.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace voroperc {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kTagOffset = 0xD1B54A32D192ED03ULL;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stable 64-bit tag for short ASCII labels ("ppp", "boxfield", ...).
constexpr std::uint64_t tag_of(const char* s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (; *s != '\0'; ++s) {
    h ^= static_cast<unsigned char>(*s);
    h *= 0x100000001B3ULL;
  }
  return h;
}

class Stream {
 public:
  constexpr explicit Stream(std::uint64_t seed = 0) noexcept : key_(mix64(seed ^ kTagOffset)) {}

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t position() const noexcept { return counter_; }

  constexpr Stream child(std::uint64_t tag) const noexcept {
    Stream s;
    s.key_ = mix64(key_ ^ mix64(tag * kGolden + kTagOffset));
    return s;
  }
  constexpr Stream child(const char* label) const noexcept { return child(tag_of(label)); }

  constexpr std::uint64_t next_u64() noexcept { return mix64(key_ + (++counter_) * kGolden); }

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  constexpr double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Stateless draw at an explicit counter position (used for lattice fields).
  constexpr double uniform_at(std::uint64_t position) const noexcept {
    return (static_cast<double>(mix64(key_ + (position + 1) * kGolden) >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

namespace detail {

inline std::uint64_t poisson_inversion(double mean, Stream& rng) {
  // Sequential search on the CDF; used for small means only.
  const double u = rng.uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::uint64_t k = 0;
  while (u > cdf) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
    if (p < 1e-300 && static_cast<double>(k) > mean) break;
  }
  return k;
}

// Transformed rejection with squeeze (Hormann 1993, "PTRS").
inline std::uint64_t poisson_ptrs(double mean, Stream& rng) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + kf * loglam - std::lgamma(kf + 1.0)) {
      return static_cast<std::uint64_t>(kf);
    }
  }
}

}  // namespace detail

/// Means below this use CDF inversion, above it PTRS rejection.
inline constexpr double kPoissonInversionLimit = 30.0;

inline std::uint64_t sample_poisson(double mean, Stream& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw std::invalid_argument("poisson mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  return mean < kPoissonInversionLimit ? detail::poisson_inversion(mean, rng) : detail::poisson_ptrs(mean, rng);
}

}  // namespace voroperc
