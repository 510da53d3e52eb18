#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>

namespace specdiff {

template <typename Scalar, int Dim>
struct SimplexResult {
  Eigen::Matrix<Scalar, Dim, 1> x;
  Scalar value = std::numeric_limits<Scalar>::infinity();
  int evaluations = 0;
  bool stopped_early = false;  ///< the stop predicate fired
};

template <typename Scalar>
struct SimplexOptions {
  int max_evals = 200;
  Scalar initial_step = Scalar(0.1);  ///< per-coordinate offset of the start simplex
  Scalar f_tol = Scalar(1e-10);       ///< spread of vertex values
  Scalar x_tol = Scalar(1e-10);       ///< simplex diameter
};

/// Nelder-Mead simplex minimisation (standard coefficients 1, 2, 1/2, 1/2).
/// `stop(x, f)` is checked after each evaluation; when it returns true the
/// search ends at that point.
template <typename Scalar, int Dim, class F, class Stop>
SimplexResult<Scalar, Dim> nelder_mead(F&& f, const Eigen::Matrix<Scalar, Dim, 1>& x0,
                                       const SimplexOptions<Scalar>& opts, Stop&& stop) {
  using Vec = Eigen::Matrix<Scalar, Dim, 1>;
  const Eigen::Index n = x0.size();
  SimplexResult<Scalar, Dim> best;
  best.x = x0;

  bool done = false;
  auto eval = [&](const Vec& x) {
    const Scalar v = f(x);
    ++best.evaluations;
    if (v < best.value) {
      best.value = v;
      best.x = x;
    }
    if (!done && stop(x, v)) {
      done = true;
      best.stopped_early = true;
      best.value = v;
      best.x = x;
    }
    return v;
  };

  std::vector<Vec> pts(static_cast<std::size_t>(n + 1), x0);
  std::vector<Scalar> vals(static_cast<std::size_t>(n + 1));
  vals[0] = eval(x0);
  for (Eigen::Index i = 0; i < n && !done; ++i) {
    pts[i + 1](i) += opts.initial_step;
    vals[i + 1] = eval(pts[i + 1]);
  }

  std::vector<std::size_t> order(pts.size());
  while (!done && best.evaluations < opts.max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const std::size_t lo = order.front(), hi = order.back(), second = order[order.size() - 2];

    Scalar diameter = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) diameter = std::max(diameter, (pts[i] - pts[lo]).norm());
    if (vals[hi] - vals[lo] <= opts.f_tol && diameter <= opts.x_tol) break;

    Vec centroid = Vec::Zero(n);
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (i != hi) centroid += pts[i];
    centroid /= Scalar(n);

    const Vec xr = centroid + (centroid - pts[hi]);
    const Scalar fr = eval(xr);
    if (done) break;
    if (fr < vals[lo]) {
      const Vec xe = centroid + Scalar(2) * (centroid - pts[hi]);
      const Scalar fe = eval(xe);
      if (fe < fr) {
        pts[hi] = xe;
        vals[hi] = fe;
      } else {
        pts[hi] = xr;
        vals[hi] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[hi] = xr;
      vals[hi] = fr;
      continue;
    }
    const bool outside = fr < vals[hi];
    const Vec xc = outside ? Vec(centroid + Scalar(0.5) * (xr - centroid))
                           : Vec(centroid + Scalar(0.5) * (pts[hi] - centroid));
    const Scalar fc = eval(xc);
    if (done) break;
    if (fc < (outside ? fr : vals[hi])) {
      pts[hi] = xc;
      vals[hi] = fc;
      continue;
    }
    for (std::size_t i = 0; i < pts.size() && !done; ++i) {
      if (i == lo) continue;
      pts[i] = pts[lo] + Scalar(0.5) * (pts[i] - pts[lo]);
      vals[i] = eval(pts[i]);
    }
  }
  return best;
}

template <typename Scalar, int Dim, class F>
SimplexResult<Scalar, Dim> nelder_mead(F&& f, const Eigen::Matrix<Scalar, Dim, 1>& x0,
                                       const SimplexOptions<Scalar>& opts = {}) {
  return nelder_mead(std::forward<F>(f), x0, opts, [](const auto&, Scalar) { return false; });
}

}  // namespace specdiff
