#pragma once

#include <functional>

#include <Eigen/Core>

namespace specdiff {

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes,
/// three-point end conditions). Monotone data gives a monotone curve.
/// Outside the node range the end values are held constant.
class Pchip {
 public:
  Pchip() = default;
  Pchip(Eigen::VectorXd x, Eigen::VectorXd y);

  double operator()(double x) const;
  double lower() const { return x_(0); }
  double upper() const { return x_(x_.size() - 1); }
  const Eigen::VectorXd& nodes() const { return x_; }
  const Eigen::VectorXd& values() const { return y_; }

 private:
  Eigen::VectorXd x_, y_, d_;
};

struct BisectionResult {
  double root = 0.0;
  int iterations = 0;
};

/// Root of f on [a, b] with f(a), f(b) of opposite sign (or one of them 0),
/// to |b - a| <= rel_tol * max(|a|, |b|). Throws InvalidInput when not bracketed.
BisectionResult bisect(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-4,
                       int max_iter = 200);

}  // namespace specdiff
