#include "meir/transform.hpp"

#include <cmath>
#include <complex>

#include "meir/errors.hpp"

namespace meir {

RigidLikeParams RigidLikeParams::inverse() const {
  const double s = omega[0];
  if (s == 0.0) throw ContractError("RigidLikeParams: zero scale has no inverse");
  // y = s R x + t  =>  x = (1/s) R(-a) (y - t)
  const double a = omega[1];
  const double c = std::cos(-a), sn = std::sin(-a);
  const double tx = omega[2], ty = omega[3];
  RigidLikeParams inv;
  inv.omega[0] = 1.0 / s;
  inv.omega[1] = -a;
  inv.omega[2] = -(c * tx - sn * ty) / s;
  inv.omega[3] = -(sn * tx + c * ty) / s;
  return inv;
}

Point apply_rigid(const RigidLikeParams& w, const Point& p) {
  const double c = std::cos(w.omega[1]), s = std::sin(w.omega[1]);
  return Point{w.omega[0] * (c * p.x1 - s * p.x2) + w.omega[2],
               w.omega[0] * (s * p.x1 + c * p.x2) + w.omega[3]};
}

std::vector<Point> apply_rigid(const RigidLikeParams& w,
                               std::span<const Point> pts) {
  std::vector<Point> out(pts.size());
  const double c = std::cos(w.omega[1]), s = std::sin(w.omega[1]);
  for (size_t i = 0; i < pts.size(); ++i)
    out[i] = Point{w.omega[0] * (c * pts[i].x1 - s * pts[i].x2) + w.omega[2],
                   w.omega[0] * (s * pts[i].x1 + c * pts[i].x2) + w.omega[3]};
  return out;
}

DisplacementField DisplacementField::zero(const Grid& g) {
  DisplacementField u;
  u.grid = g;
  u.u1.assign(g.size(), 0.0);
  u.u2.assign(g.size(), 0.0);
  return u;
}

std::vector<Point> apply_displacement(const DisplacementField& u) {
  return apply_displacement(u, u.grid.points);
}

std::vector<Point> apply_displacement(const DisplacementField& u,
                                      std::span<const Point> pts) {
  if (pts.size() != u.u1.size() || pts.size() != u.u2.size())
    throw ContractError("apply_displacement: point count mismatch with grid");
  std::vector<Point> out(pts.size());
  for (size_t i = 0; i < pts.size(); ++i)
    out[i] = Point{pts[i].x1 - u.u1[i], pts[i].x2 - u.u2[i]};
  return out;
}

DisplacementField rigid_to_displacement(const RigidLikeParams& w,
                                        const Grid& grid) {
  DisplacementField u;
  u.grid = grid;
  u.u1.resize(grid.size());
  u.u2.resize(grid.size());
  const double c = std::cos(w.omega[1]), s = std::sin(w.omega[1]);
  for (int j = 0; j < grid.size(); ++j) {
    const Point& x = grid.points[j];
    const double p1 = w.omega[0] * (c * x.x1 - s * x.x2) + w.omega[2];
    const double p2 = w.omega[0] * (s * x.x1 + c * x.x2) + w.omega[3];
    u.u1[j] = x.x1 - p1;
    u.u2[j] = x.x2 - p2;
  }
  return u;
}

ScalarImage warp_image(const Interpolant& itp, std::span<const Point> phi_points,
                       const Grid& grid) {
  if (static_cast<int>(phi_points.size()) != grid.size())
    throw ContractError("warp_image: point count mismatch with grid");
  std::vector<double> samples(phi_points.size());
  for (size_t j = 0; j < phi_points.size(); ++j)
    samples[j] = itp.eval(phi_points[j]).value;
  return ScalarImage(grid.nx, grid.ny, std::move(samples), grid.domain);
}

RigidLikeParams closest_rigid_like(const DisplacementField& u) {
  const auto& pts = u.grid.points;
  const size_t n = pts.size();
  if (n < 3) throw ContractError("closest_rigid_like: need >= 3 grid points");

  double mx1 = 0, mx2 = 0, my1 = 0, my2 = 0;
  for (size_t j = 0; j < n; ++j) {
    mx1 += pts[j].x1;
    mx2 += pts[j].x2;
    my1 += pts[j].x1 - u.u1[j];
    my2 += pts[j].x2 - u.u2[j];
  }
  mx1 /= n; mx2 /= n; my1 /= n; my2 /= n;

  // Complex cross-covariance of the centered sets.
  std::complex<double> cross(0.0, 0.0);
  double xnorm2 = 0.0;
  for (size_t j = 0; j < n; ++j) {
    const std::complex<double> xc(pts[j].x1 - mx1, pts[j].x2 - mx2);
    const std::complex<double> yc(pts[j].x1 - u.u1[j] - my1,
                                  pts[j].x2 - u.u2[j] - my2);
    cross += yc * std::conj(xc);
    xnorm2 += std::norm(xc);
  }
  if (xnorm2 == 0.0)
    throw EstimationError("closest_rigid_like: degenerate point set");

  RigidLikeParams w;
  w.omega[0] = std::abs(cross) / xnorm2;
  w.omega[1] = std::arg(cross);
  const double c = std::cos(w.omega[1]), s = std::sin(w.omega[1]);
  w.omega[2] = my1 - w.omega[0] * (c * mx1 - s * mx2);
  w.omega[3] = my2 - w.omega[0] * (s * mx1 + c * mx2);
  return w;
}

Point sample_displacement(const DisplacementField& u, const Point& p) {
  const Grid& g = u.grid;
  // Fractional cell coordinates; clamp to the cell-center hull.
  double f1 = (p.x1 - g.domain.x_min) / g.h1 - 0.5;
  double f2 = (p.x2 - g.domain.y_min) / g.h2 - 0.5;
  f1 = std::clamp(f1, 0.0, static_cast<double>(g.nx - 1));
  f2 = std::clamp(f2, 0.0, static_cast<double>(g.ny - 1));
  const int i1 = std::min(static_cast<int>(f1), g.nx - 2 >= 0 ? g.nx - 2 : 0);
  const int i2 = std::min(static_cast<int>(f2), g.ny - 2 >= 0 ? g.ny - 2 : 0);
  const double a = f1 - i1, b = f2 - i2;
  const auto idx = [&](int x, int y) { return y * g.nx + x; };
  const int x1 = std::min(i1 + 1, g.nx - 1), y1 = std::min(i2 + 1, g.ny - 1);
  const double w00 = (1 - a) * (1 - b), w10 = a * (1 - b);
  const double w01 = (1 - a) * b, w11 = a * b;
  return Point{
      w00 * u.u1[idx(i1, i2)] + w10 * u.u1[idx(x1, i2)] +
          w01 * u.u1[idx(i1, y1)] + w11 * u.u1[idx(x1, y1)],
      w00 * u.u2[idx(i1, i2)] + w10 * u.u2[idx(x1, i2)] +
          w01 * u.u2[idx(i1, y1)] + w11 * u.u2[idx(x1, y1)]};
}

DisplacementField compose_displacements(const DisplacementField& a,
                                        const DisplacementField& b) {
  if (a.grid.size() != b.grid.size())
    throw ContractError("compose_displacements: grid mismatch");
  DisplacementField out = DisplacementField::zero(b.grid);
  for (int j = 0; j < b.grid.size(); ++j) {
    const Point& x = b.grid.points[j];
    const Point yb{x.x1 - b.u1[j], x.x2 - b.u2[j]};
    const Point ua = sample_displacement(a, yb);
    out.u1[j] = x.x1 - (yb.x1 - ua.x1);
    out.u2[j] = x.x2 - (yb.x2 - ua.x2);
  }
  return out;
}

}  // namespace meir
