#pragma once

#include <algorithm>
#include <array>

namespace tangle {

template <typename F>
NelderMeadResult nelder_mead(F&& f, const Eigen::Vector2d& start, const Eigen::Vector2d& step, int max_iterations,
                             double tolerance) {
  std::array<Eigen::Vector2d, 3> x = {start, start + Eigen::Vector2d(step.x(), 0.0),
                                      start + Eigen::Vector2d(0.0, step.y())};
  std::array<double, 3> v = {f(x[0]), f(x[1]), f(x[2])};
  int it = 0;
  for (; it < max_iterations; ++it) {
    std::array<int, 3> o = {0, 1, 2};
    std::sort(o.begin(), o.end(), [&](int a, int b) { return v[a] < v[b]; });
    const int best = o[0], mid = o[1], worst = o[2];
    if (std::abs(v[worst] - v[best]) <= tolerance * (std::abs(v[best]) + tolerance)) break;

    const Eigen::Vector2d centroid = 0.5 * (x[best] + x[mid]);
    const Eigen::Vector2d reflected = centroid + (centroid - x[worst]);
    const double fr = f(reflected);
    if (fr < v[best]) {
      const Eigen::Vector2d expanded = centroid + 2.0 * (centroid - x[worst]);
      const double fe = f(expanded);
      if (fe < fr) {
        x[worst] = expanded;
        v[worst] = fe;
      } else {
        x[worst] = reflected;
        v[worst] = fr;
      }
    } else if (fr < v[mid]) {
      x[worst] = reflected;
      v[worst] = fr;
    } else {
      const bool outside = fr < v[worst];
      const Eigen::Vector2d contracted =
          outside ? centroid + 0.5 * (reflected - centroid) : centroid + 0.5 * (x[worst] - centroid);
      const double fc = f(contracted);
      if (fc < (outside ? fr : v[worst])) {
        x[worst] = contracted;
        v[worst] = fc;
      } else {
        for (int k : {mid, worst}) {
          x[k] = x[best] + 0.5 * (x[k] - x[best]);
          v[k] = f(x[k]);
        }
      }
    }
  }
  const auto m = std::min_element(v.begin(), v.end()) - v.begin();
  return {x[m], v[m], it};
}

}  // namespace tangle
