#include "specdiff/interpolation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "specdiff/errors.hpp"

namespace specdiff {

namespace {

double end_slope(double h0, double h1, double del0, double del1) {
  double d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
  if (d * del0 <= 0.0) return 0.0;
  if (del0 * del1 < 0.0 && std::abs(d) > std::abs(3.0 * del0)) d = 3.0 * del0;
  return d;
}

}  // namespace

Pchip::Pchip(Eigen::VectorXd x, Eigen::VectorXd y) : x_(std::move(x)), y_(std::move(y)) {
  const Eigen::Index n = x_.size();
  if (n < 2 || y_.size() != n) throw InvalidInput("interpolation needs at least two (x, y) nodes");
  for (Eigen::Index i = 1; i < n; ++i)
    if (!(x_(i) > x_(i - 1))) throw InvalidInput("interpolation nodes must be strictly increasing");
  if (!y_.allFinite()) throw InvalidInput("interpolation values must be finite");

  d_ = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd h = x_.tail(n - 1) - x_.head(n - 1);
  const Eigen::VectorXd del = (y_.tail(n - 1) - y_.head(n - 1)).cwiseQuotient(h);
  if (n == 2) {
    d_.setConstant(del(0));
    return;
  }
  for (Eigen::Index k = 1; k < n - 1; ++k) {
    if (del(k - 1) * del(k) <= 0.0) continue;
    const double w1 = 2.0 * h(k) + h(k - 1);
    const double w2 = h(k) + 2.0 * h(k - 1);
    d_(k) = (w1 + w2) / (w1 / del(k - 1) + w2 / del(k));
  }
  d_(0) = end_slope(h(0), h(1), del(0), del(1));
  d_(n - 1) = end_slope(h(n - 2), h(n - 3), del(n - 2), del(n - 3));
}

double Pchip::operator()(double x) const {
  const Eigen::Index n = x_.size();
  if (x <= x_(0)) return y_(0);
  if (x >= x_(n - 1)) return y_(n - 1);
  const auto it = std::upper_bound(x_.data(), x_.data() + n, x);
  const Eigen::Index k = (it - x_.data()) - 1;
  const double h = x_(k + 1) - x_(k);
  const double t = (x - x_(k)) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_(k) + (t3 - 2 * t2 + t) * h * d_(k) + (-2 * t3 + 3 * t2) * y_(k + 1) +
         (t3 - t2) * h * d_(k + 1);
}

BisectionResult bisect(const std::function<double(double)>& f, double a, double b, double rel_tol, int max_iter) {
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return {a, 0};
  if (fb == 0.0) return {b, 0};
  if ((fa > 0) == (fb > 0))
    throw InvalidInput(fmt::format("root not bracketed on [{}, {}] (f = {}, {})", a, b, fa, fb));
  BisectionResult r;
  while (r.iterations < max_iter && std::abs(b - a) > rel_tol * std::max(std::abs(a), std::abs(b))) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    ++r.iterations;
    if (fm == 0.0) {
      a = b = m;
      break;
    }
    if ((fm > 0) == (fa > 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  r.root = 0.5 * (a + b);
  return r;
}

}  // namespace specdiff
