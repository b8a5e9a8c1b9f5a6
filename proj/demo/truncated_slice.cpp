// ASCII picture of V(p) and the truncated V_N(p) on one configuration.
// '#': in both, '+': in V(p) only, '.': in neither.

#include <cstdio>

#include "voroperc.hpp"

using namespace voroperc;

int main() {
  const double N = 1.0, p = 0.45;
  const auto config = sample_ppp(Window<2>{Box<2>::centered(16.0), 8.0}, 1.0, 7);
  const Coloring<2> full(config, ColoringModel<2>::continuum(p));
  const Coloring<2> trunc(config, ColoringModel<2>::truncated(N, p));
  std::size_t only_full = 0, both = 0;
  for (int row = 0; row < 32; ++row) {
    for (int col = 0; col < 64; ++col) {
      const Point<2> y{-8.0 + 16.0 * (col + 0.5) / 64, 8.0 - 16.0 * (row + 0.5) / 32};
      const bool a = full.contains(y), b = trunc.contains(y);
      both += a && b;
      only_full += a && !b;
      std::putchar(b ? '#' : a ? '+' : '.');
    }
    std::putchar('\n');
  }
  std::printf("N = %.0f, p = %.2f: %zu samples in both, %zu in V(p) only\n", N, p, both, only_full);
}
