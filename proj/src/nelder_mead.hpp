#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

#include "blepi/linalg.hpp"

namespace blepi::detail {

struct SimplexResult {
  Vector x;
  double value = 0.0;
};

/// Nelder-Mead maximization with restarts around the incumbent.
inline SimplexResult nelder_mead_max(const std::function<double(const Vector&)>& f, Vector start,
                                     double initial_step, int restarts = 6, int max_iter = 4000,
                                     double ftol = 1e-15) {
  const Eigen::Index dim = start.size();
  SimplexResult best{start, f(start)};
  double step = initial_step;
  for (int round = 0; round < restarts; ++round) {
    std::vector<Vector> pts{best.x};
    for (Eigen::Index i = 0; i < dim; ++i) {
      Vector p = best.x;
      p(i) += step;
      pts.push_back(p);
    }
    std::vector<double> vals;
    for (const auto& p : pts) vals.push_back(f(p));
    std::vector<std::size_t> order(pts.size());
    for (int it = 0; it < max_iter; ++it) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
      const std::size_t hi = order.front(), lo = order.back(), second = order[order.size() - 2];
      if (std::abs(vals[hi] - vals[lo]) <= ftol * (1.0 + std::abs(vals[hi]))) break;
      Vector centroid = Vector::Zero(dim);
      for (std::size_t q = 0; q + 1 < order.size(); ++q) centroid += pts[order[q]];
      centroid /= static_cast<double>(dim);
      const Vector reflected = centroid + (centroid - pts[lo]);
      const double fr = f(reflected);
      if (fr > vals[hi]) {
        const Vector expanded = centroid + 2.0 * (centroid - pts[lo]);
        const double fe = f(expanded);
        if (fe > fr) { pts[lo] = expanded; vals[lo] = fe; }
        else { pts[lo] = reflected; vals[lo] = fr; }
      } else if (fr > vals[second]) {
        pts[lo] = reflected;
        vals[lo] = fr;
      } else {
        const Vector contracted = fr > vals[lo] ? Vector(centroid + 0.5 * (reflected - centroid))
                                                : Vector(centroid + 0.5 * (pts[lo] - centroid));
        const double fc = f(contracted);
        if (fc > std::max(fr, vals[lo])) {
          pts[lo] = contracted;
          vals[lo] = fc;
        } else {
          for (std::size_t q = 1; q < order.size(); ++q) {
            pts[order[q]] = pts[hi] + 0.5 * (pts[order[q]] - pts[hi]);
            vals[order[q]] = f(pts[order[q]]);
          }
        }
      }
    }
    const auto top = std::max_element(vals.begin(), vals.end()) - vals.begin();
    const bool improved = vals[top] > best.value + 1e-15 * (1.0 + std::abs(best.value));
    if (vals[top] >= best.value) best = {pts[top], vals[top]};
    step *= improved ? 0.5 : 0.25;
  }
  return best;
}

}  // namespace blepi::detail
