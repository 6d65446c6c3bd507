#pragma once

#include <array>
#include <span>
#include <vector>

#include "meir/image.hpp"
#include "meir/interpolant.hpp"

namespace meir {

// Rigid-like 4-parameter transform: x -> w0 * R(w1) * x + (w2, w3).
// w0 is the uniform scale, w1 the rotation angle in radians, w2/w3 the
// translations in domain units.
struct RigidLikeParams {
  std::array<double, 4> omega{1.0, 0.0, 0.0, 0.0};

  static RigidLikeParams identity() { return {}; }
  double scale() const { return omega[0]; }
  double angle() const { return omega[1]; }
  double tx() const { return omega[2]; }
  double ty() const { return omega[3]; }

  RigidLikeParams inverse() const;
};

Point apply_rigid(const RigidLikeParams& w, const Point& p);
std::vector<Point> apply_rigid(const RigidLikeParams& w,
                               std::span<const Point> pts);

// Nonparametric displacement on a grid; the induced map is phi(x) = x - u(x).
struct DisplacementField {
  Grid grid;
  std::vector<double> u1;
  std::vector<double> u2;

  static DisplacementField zero(const Grid& g);
  int size() const { return grid.size(); }
};

// phi(x_j) = x_j - u(x_j) for every grid point.
std::vector<Point> apply_displacement(const DisplacementField& u);
std::vector<Point> apply_displacement(const DisplacementField& u,
                                      std::span<const Point> pts);

// u(x) = x - phi_w(x) sampled on the grid, so that apply_displacement
// reproduces apply_rigid exactly at the grid points.
DisplacementField rigid_to_displacement(const RigidLikeParams& w,
                                        const Grid& grid);

// Samples the interpolant at the mapped points; one output sample per grid
// point, zero where the map leaves the domain.
ScalarImage warp_image(const Interpolant& itp, std::span<const Point> phi_points,
                       const Grid& grid);

// Least-squares projection of phi = Id - u onto the rigid-like family.
// Solved in closed form through the complex cross-covariance of the centered
// point sets.
RigidLikeParams closest_rigid_like(const DisplacementField& u);

// Bilinear sampling of a displacement field at an arbitrary point, with
// clamped (nearest-cell) extension outside the grid.
Point sample_displacement(const DisplacementField& u, const Point& p);

// Grid-sampled composition of two registration maps: the returned field v
// satisfies x - v(x) = phi_a(phi_b(x)), with phi_a evaluated by bilinear
// interpolation of `a` at the targets of `b`.
DisplacementField compose_displacements(const DisplacementField& a,
                                        const DisplacementField& b);

}  // namespace meir
