#pragma once

#include <span>
#include <vector>

#include "meir/image.hpp"

namespace meir {

// Smoothed cubic B-spline representation of an image at scale theta.
//
// Coefficients minimize ||B c - samples||^2 + theta ||M c||^2 where B
// collocates the tensor-product cubic B-spline basis at the cell centers and
// M stacks the second-difference operator along each axis. theta = 0 is the
// plain interpolating fit. Evaluation outside the domain is exactly zero with
// zero gradient; inside, edge coefficients are replicated so constants are
// reproduced everywhere for every theta.
class Interpolant {
 public:
  struct Eval {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
  };

  Interpolant() = default;
  Interpolant(int nx, int ny, Rect domain, double theta,
              std::vector<double> coefficients);

  Eval eval(const Point& p) const;
  void eval_batch(std::span<const Point> pts, std::vector<double>& values,
                  std::vector<Point>& gradients) const;
  std::vector<double> values_at(std::span<const Point> pts) const;

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double theta() const { return theta_; }
  const Rect& domain() const { return domain_; }
  const std::vector<double>& coefficients() const { return coef_; }

 private:
  int nx_ = 0;
  int ny_ = 0;
  Rect domain_ = unit_square();
  double theta_ = 0.0;
  std::vector<double> coef_;
};

Interpolant build_interpolant(const ScalarImage& img, double theta);

// Centered cubic B-spline and its derivative (support (-2, 2)).
double bspline3(double t);
double bspline3_deriv(double t);

}  // namespace meir
