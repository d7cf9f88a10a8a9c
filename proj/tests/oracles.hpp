#pragma once

// Slow reference computations the tests compare the library against.

#include "tangle/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tangle::oracle {

/// Surface distance between two capsules by sampling both axes on a grid
/// and zooming in around the best pair until the spacing is below
/// `resolution` mm. The squared distance between axis points is convex in
/// the two parameters, so the zoom cannot lose the global minimum.
inline double sampled_capsule_distance(const Capsule& a, const Capsule& b, double resolution = 1e-4) {
  constexpr int n = 64;
  double s_lo = 0, s_hi = 1, t_lo = 0, t_hi = 1;
  const double len = std::max({a.length(), b.length(), 1e-12});
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    const double ds = (s_hi - s_lo) / n, dt = (t_hi - t_lo) / n;
    int bi = 0, bj = 0;
    best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
      const Vec3 p = a.a + (s_lo + i * ds) * (a.b - a.a);
      for (int j = 0; j <= n; ++j) {
        const Vec3 q = b.a + (t_lo + j * dt) * (b.b - b.a);
        const double d = (p - q).squaredNorm();
        if (d < best) best = d, bi = i, bj = j;
      }
    }
    if (std::max(ds, dt) * len < resolution) break;
    const double sc = s_lo + bi * ds, tc = t_lo + bj * dt;
    s_lo = std::max(0.0, sc - 2 * ds), s_hi = std::min(1.0, sc + 2 * ds);
    t_lo = std::max(0.0, tc - 2 * dt), t_hi = std::min(1.0, tc + 2 * dt);
  }
  return std::sqrt(best) - a.radius - b.radius;
}

}  // namespace tangle::oracle
