#include "meir/interpolant.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <map>
#include <memory>
#include <tuple>

#include "meir/errors.hpp"

namespace meir {

double bspline3(double t) {
  const double a = std::abs(t);
  if (a < 1.0) return (4.0 - 6.0 * a * a + 3.0 * a * a * a) / 6.0;
  if (a < 2.0) {
    const double d = 2.0 - a;
    return d * d * d / 6.0;
  }
  return 0.0;
}

double bspline3_deriv(double t) {
  const double a = std::abs(t);
  double d;
  if (a < 1.0)
    d = a * (3.0 * a - 4.0) / 2.0;
  else if (a < 2.0)
    d = -(2.0 - a) * (2.0 - a) / 2.0;
  else
    return 0.0;
  return t < 0.0 ? -d : d;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;

int clamp_index(int j, int n) { return j < 0 ? 0 : (j >= n ? n - 1 : j); }

// Collocation matrix of the tensor-product basis at the cell centers, with
// out-of-range coefficients folded onto the nearest edge coefficient.
SpMat collocation_matrix(int nx, int ny) {
  const int n = nx * ny;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(n) * 9);
  // At integer offsets only b(-1), b(0), b(1) are nonzero.
  const double w[3] = {bspline3(-1.0), bspline3(0.0), bspline3(1.0)};
  for (int i2 = 0; i2 < ny; ++i2) {
    for (int i1 = 0; i1 < nx; ++i1) {
      const int row = i2 * nx + i1;
      for (int o2 = -1; o2 <= 1; ++o2) {
        const int j2 = clamp_index(i2 + o2, ny);
        for (int o1 = -1; o1 <= 1; ++o1) {
          const int j1 = clamp_index(i1 + o1, nx);
          trips.emplace_back(row, j2 * nx + j1, w[o1 + 1] * w[o2 + 1]);
        }
      }
    }
  }
  SpMat B(n, n);
  B.setFromTriplets(trips.begin(), trips.end());
  return B;
}

// Second differences along one axis; rows only for interior positions.
SpMat second_difference(int nx, int ny, int axis) {
  const int n = nx * ny;
  const int len = axis == 0 ? nx : ny;
  const int other = axis == 0 ? ny : nx;
  std::vector<Eigen::Triplet<double>> trips;
  int row = 0;
  for (int k = 0; k < other; ++k) {
    for (int i = 1; i + 1 < len; ++i) {
      const auto at = [&](int p) {
        return axis == 0 ? k * nx + p : p * nx + k;
      };
      trips.emplace_back(row, at(i - 1), 1.0);
      trips.emplace_back(row, at(i), -2.0);
      trips.emplace_back(row, at(i + 1), 1.0);
      ++row;
    }
  }
  SpMat M(row, n);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

struct GridOperators {
  SpMat B;
  SpMat BtB;
  SpMat penalty;  // M1^T M1 + M2^T M2
  std::map<double, std::unique_ptr<Eigen::SimplicialLLT<SpMat>>> factors;
};

GridOperators& operators_for(int nx, int ny) {
  thread_local std::map<std::pair<int, int>, std::unique_ptr<GridOperators>>
      cache;
  auto& slot = cache[{nx, ny}];
  if (!slot) {
    auto ops = std::make_unique<GridOperators>();
    ops->B = collocation_matrix(nx, ny);
    ops->BtB = SpMat(ops->B.transpose() * ops->B);
    const SpMat m1 = second_difference(nx, ny, 0);
    const SpMat m2 = second_difference(nx, ny, 1);
    ops->penalty = SpMat(m1.transpose() * m1) + SpMat(m2.transpose() * m2);
    slot = std::move(ops);
  }
  return *slot;
}

}  // namespace

Interpolant::Interpolant(int nx, int ny, Rect domain, double theta,
                         std::vector<double> coefficients)
    : nx_(nx), ny_(ny), domain_(domain), theta_(theta),
      coef_(std::move(coefficients)) {
  if (static_cast<int>(coef_.size()) != nx_ * ny_)
    throw ContractError("Interpolant: coefficient count mismatch");
}

Interpolant build_interpolant(const ScalarImage& img, double theta) {
  if (theta < 0.0) throw ContractError("build_interpolant: theta must be >= 0");
  const int nx = img.width(), ny = img.height();
  auto& ops = operators_for(nx, ny);
  auto& factor = ops.factors[theta];
  if (!factor) {
    SpMat system = ops.BtB;
    if (theta > 0.0) system += SpMat(theta * ops.penalty);
    factor = std::make_unique<Eigen::SimplicialLLT<SpMat>>();
    factor->compute(system);
    if (factor->info() != Eigen::Success)
      throw InternalError("build_interpolant: normal system not SPD");
  }
  const Eigen::Map<const Eigen::VectorXd> y(img.samples().data(),
                                            img.samples().size());
  Eigen::VectorXd rhs = ops.B.transpose() * y;
  Eigen::VectorXd c = factor->solve(rhs);
  return Interpolant(nx, ny, img.domain(), theta,
                     std::vector<double>(c.data(), c.data() + c.size()));
}

Interpolant::Eval Interpolant::eval(const Point& p) const {
  Eval out;
  if (!domain_.contains(p)) return out;
  const double h1 = domain_.width() / nx_;
  const double h2 = domain_.height() / ny_;
  const double xi1 = (p.x1 - domain_.x_min) / h1 - 0.5;
  const double xi2 = (p.x2 - domain_.y_min) / h2 - 0.5;
  const int k1 = static_cast<int>(std::floor(xi1));
  const int k2 = static_cast<int>(std::floor(xi2));

  double w1[4], dw1[4], w2[4], dw2[4];
  int j1[4], j2[4];
  for (int o = 0; o < 4; ++o) {
    const int ja = k1 - 1 + o;
    const int jb = k2 - 1 + o;
    w1[o] = bspline3(xi1 - ja);
    dw1[o] = bspline3_deriv(xi1 - ja);
    w2[o] = bspline3(xi2 - jb);
    dw2[o] = bspline3_deriv(xi2 - jb);
    j1[o] = clamp_index(ja, nx_);
    j2[o] = clamp_index(jb, ny_);
  }
  double v = 0.0, g1 = 0.0, g2 = 0.0;
  for (int b = 0; b < 4; ++b) {
    const double* row = coef_.data() + static_cast<size_t>(j2[b]) * nx_;
    double rv = 0.0, rg = 0.0;
    for (int a = 0; a < 4; ++a) {
      const double cab = row[j1[a]];
      rv += cab * w1[a];
      rg += cab * dw1[a];
    }
    v += rv * w2[b];
    g1 += rg * w2[b];
    g2 += rv * dw2[b];
  }
  out.value = v;
  out.d1 = g1 / h1;
  out.d2 = g2 / h2;
  return out;
}

void Interpolant::eval_batch(std::span<const Point> pts,
                             std::vector<double>& values,
                             std::vector<Point>& gradients) const {
  values.resize(pts.size());
  gradients.resize(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    const Eval e = eval(pts[i]);
    values[i] = e.value;
    gradients[i] = Point{e.d1, e.d2};
  }
}

std::vector<double> Interpolant::values_at(std::span<const Point> pts) const {
  std::vector<double> values(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) values[i] = eval(pts[i]).value;
  return values;
}

}  // namespace meir
