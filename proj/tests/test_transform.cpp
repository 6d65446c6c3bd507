#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "meir/errors.hpp"
#include "meir/objective.hpp"
#include "meir/synth.hpp"
#include "meir/transform.hpp"
#include "support.hpp"

using namespace meir;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double fit_objective(const DisplacementField& u, const RigidLikeParams& w) {
  double acc = 0.0;
  for (int j = 0; j < u.grid.size(); ++j) {
    const Point& x = u.grid.points[j];
    const Point target{x.x1 - u.u1[j], x.x2 - u.u2[j]};
    const Point mapped = apply_rigid(w, x);
    acc += (target.x1 - mapped.x1) * (target.x1 - mapped.x1) +
           (target.x2 - mapped.x2) * (target.x2 - mapped.x2);
  }
  return acc;
}

// Brute-force search over (scale, angle) with the optimal translation per
// candidate taken from the centroids.
RigidLikeParams brute_force_fit(const DisplacementField& u) {
  const auto& pts = u.grid.points;
  const int n = u.grid.size();
  double mx1 = 0, mx2 = 0, my1 = 0, my2 = 0;
  for (int j = 0; j < n; ++j) {
    mx1 += pts[j].x1;
    mx2 += pts[j].x2;
    my1 += pts[j].x1 - u.u1[j];
    my2 += pts[j].x2 - u.u2[j];
  }
  mx1 /= n; mx2 /= n; my1 /= n; my2 /= n;

  RigidLikeParams best;
  double best_obj = std::numeric_limits<double>::infinity();
  double s_lo = 0.5, s_hi = 1.5, a_lo = -0.8, a_hi = 0.8;
  for (int level = 0; level < 4; ++level) {
    RigidLikeParams level_best = best;
    for (int is = 0; is <= 40; ++is)
      for (int ia = 0; ia <= 40; ++ia) {
        RigidLikeParams w;
        w.omega[0] = s_lo + (s_hi - s_lo) * is / 40.0;
        w.omega[1] = a_lo + (a_hi - a_lo) * ia / 40.0;
        const double c = std::cos(w.omega[1]), sn = std::sin(w.omega[1]);
        w.omega[2] = my1 - w.omega[0] * (c * mx1 - sn * mx2);
        w.omega[3] = my2 - w.omega[0] * (sn * mx1 + c * mx2);
        const double obj = fit_objective(u, w);
        if (obj < best_obj) {
          best_obj = obj;
          level_best = w;
        }
      }
    best = level_best;
    const double ds = (s_hi - s_lo) / 40.0, da = (a_hi - a_lo) / 40.0;
    s_lo = best.omega[0] - 2 * ds; s_hi = best.omega[0] + 2 * ds;
    a_lo = best.omega[1] - 2 * da; a_hi = best.omega[1] + 2 * da;
  }
  return best;
}

}  // namespace

TEST_CASE("apply_rigid basics") {
  const Point a = apply_rigid(RigidLikeParams::identity(), Point{0.3, 0.7});
  CHECK(a.x1 == doctest::Approx(0.3));
  CHECK(a.x2 == doctest::Approx(0.7));

  RigidLikeParams quarter;
  quarter.omega[1] = std::numbers::pi / 2;
  const Point b = apply_rigid(quarter, Point{1.0, 0.0});
  CHECK(b.x1 == doctest::Approx(0.0).epsilon(1e-15).scale(1.0));
  CHECK(b.x2 == doctest::Approx(1.0));

  RigidLikeParams w;
  w.omega = {2.0, 0.0, 0.5, 0.0};
  const Point c = apply_rigid(w, Point{1.0, 1.0});
  CHECK(c.x1 == doctest::Approx(2.5));
  CHECK(c.x2 == doctest::Approx(2.0));
}

TEST_CASE("analytic inverse undoes the transform") {
  std::mt19937_64 gen(41);
  for (int k = 0; k < 20; ++k) {
    RigidLikeParams w;
    w.omega = {test::rand_in(gen, 0.3, 2.5), test::rand_in(gen, -3, 3),
               test::rand_in(gen, -1, 1), test::rand_in(gen, -1, 1)};
    const RigidLikeParams inv = w.inverse();
    const Point x{test::rand01(gen), test::rand01(gen)};
    const Point back = apply_rigid(inv, apply_rigid(w, x));
    CHECK(std::abs(back.x1 - x.x1) < 1e-12);
    CHECK(std::abs(back.x2 - x.x2) < 1e-12);
  }
}

TEST_CASE("apply_displacement and rigid_to_displacement agree with apply_rigid") {
  const Grid g = cell_centered_grid(8, 8);
  const DisplacementField zero = DisplacementField::zero(g);
  const auto unchanged = apply_displacement(zero);
  for (int j = 0; j < g.size(); ++j) {
    CHECK(unchanged[j].x1 == g.points[j].x1);
    CHECK(unchanged[j].x2 == g.points[j].x2);
  }

  DisplacementField shift = DisplacementField::zero(g);
  for (auto& v : shift.u1) v = 0.1;
  const auto shifted = apply_displacement(shift);
  CHECK(shifted[0].x1 == doctest::Approx(g.points[0].x1 - 0.1));
  CHECK(shifted[0].x2 == doctest::Approx(g.points[0].x2));

  std::mt19937_64 gen(43);
  RigidLikeParams w;
  w.omega = {1.2, 0.4, -0.05, 0.08};
  const DisplacementField u = rigid_to_displacement(w, g);
  const auto via_field = apply_displacement(u);
  const auto via_rigid = apply_rigid(w, g.points);
  for (int j = 0; j < g.size(); ++j) {
    CHECK(std::abs(via_field[j].x1 - via_rigid[j].x1) < 1e-14);
    CHECK(std::abs(via_field[j].x2 - via_rigid[j].x2) < 1e-14);
  }

  DisplacementField bad = DisplacementField::zero(g);
  bad.u1.pop_back();
  CHECK_THROWS_AS(apply_displacement(bad), ContractError);
}

TEST_CASE("rigid_to_displacement special cases") {
  const Grid g = cell_centered_grid(4, 4);
  const DisplacementField id = rigid_to_displacement(RigidLikeParams::identity(), g);
  for (int j = 0; j < g.size(); ++j) {
    CHECK(id.u1[j] == 0.0);
    CHECK(id.u2[j] == 0.0);
  }
  RigidLikeParams tr;
  tr.omega = {1.0, 0.0, 0.2, -0.3};
  const DisplacementField u = rigid_to_displacement(tr, g);
  for (int j = 0; j < g.size(); ++j) {
    CHECK(u.u1[j] == doctest::Approx(-0.2));
    CHECK(u.u2[j] == doctest::Approx(0.3));
  }
}

TEST_CASE("warp_image identity and outside-domain behaviour") {
  std::mt19937_64 gen(47);
  const ScalarImage img = test::random_image(gen, 16);
  const Interpolant itp = build_interpolant(img, 0.0);
  const Grid g = cell_centered_grid(16, 16);

  const ScalarImage same = warp_image(itp, g.points, g);
  for (int j = 0; j < g.size(); ++j)
    CHECK(std::abs(same.samples()[j] - img.samples()[j]) < 1e-8);

  std::vector<Point> outside(g.points.size(), Point{5.0, 5.0});
  const ScalarImage zeros = warp_image(itp, outside, g);
  for (double v : zeros.samples()) CHECK(v == 0.0);

  std::vector<Point> short_list(3);
  CHECK_THROWS_AS(warp_image(itp, short_list, g), ContractError);
}

TEST_CASE("warp round trip through a rotation") {
  const ScalarImage img = make_texture(99, 32);
  const Interpolant itp = build_interpolant(img, 0.0);
  const Grid g = cell_centered_grid(32, 32);

  // Rotate about the domain center and back.
  const double ang = 15.0 * kDeg;
  const Point c{0.5, 0.5};
  const auto rot = [&](double a, const Point& p) {
    const double dx = p.x1 - c.x1, dy = p.x2 - c.x2;
    return Point{c.x1 + std::cos(a) * dx - std::sin(a) * dy,
                 c.x2 + std::sin(a) * dx + std::cos(a) * dy};
  };
  std::vector<Point> fwd(g.points.size());
  for (size_t j = 0; j < fwd.size(); ++j) fwd[j] = rot(ang, g.points[j]);
  const ScalarImage warped = warp_image(itp, fwd, g);

  const Interpolant warped_itp = build_interpolant(warped, 0.0);
  std::vector<Point> bwd(g.points.size());
  for (size_t j = 0; j < bwd.size(); ++j) bwd[j] = rot(-ang, g.points[j]);
  const ScalarImage back = warp_image(warped_itp, bwd, g);

  // Per-pixel oracle on the interior: both rotations stay inside there.
  double mae = 0.0;
  int count = 0;
  for (int i2 = 8; i2 < 24; ++i2)
    for (int i1 = 8; i1 < 24; ++i1) {
      mae += std::abs(back.at(i1, i2) - img.at(i1, i2));
      ++count;
    }
  mae /= count;
  CHECK(mae < 2e-3);
}

TEST_CASE("closest_rigid_like recovers exact rigid fields") {
  const Grid g = cell_centered_grid(16, 16);
  const DisplacementField zero = DisplacementField::zero(g);
  const RigidLikeParams id = closest_rigid_like(zero);
  CHECK(id.omega[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(id.omega[1]) < 1e-14);
  CHECK(std::abs(id.omega[2]) < 1e-14);
  CHECK(std::abs(id.omega[3]) < 1e-14);

  RigidLikeParams w;
  w.omega = {1.4, 20.0 * kDeg, 0.1, -0.05};
  const RigidLikeParams fit = closest_rigid_like(rigid_to_displacement(w, g));
  for (int k = 0; k < 4; ++k)
    CHECK(std::abs(fit.omega[k] - w.omega[k]) < 1e-10);
}

TEST_CASE("closest_rigid_like matches brute-force search on smooth fields") {
  const Grid g = cell_centered_grid(12, 12);
  DisplacementField u = DisplacementField::zero(g);
  for (int j = 0; j < g.size(); ++j) {
    const Point& x = g.points[j];
    u.u1[j] = 0.05 * std::sin(3.0 * x.x1) * std::cos(2.0 * x.x2) + 0.02 * x.x2;
    u.u2[j] = -0.04 * std::cos(2.5 * x.x1) + 0.03 * x.x1 * x.x2;
  }
  const RigidLikeParams closed = closest_rigid_like(u);
  const RigidLikeParams brute = brute_force_fit(u);
  CHECK(fit_objective(u, closed) <= fit_objective(u, brute) + 1e-6);
}

TEST_CASE("closest_rigid_like translation equivariance") {
  const Grid g = cell_centered_grid(10, 10);
  DisplacementField u = DisplacementField::zero(g);
  std::mt19937_64 gen(53);
  for (int j = 0; j < g.size(); ++j) {
    u.u1[j] = 0.1 * test::rand01(gen);
    u.u2[j] = 0.1 * test::rand01(gen);
  }
  const RigidLikeParams base = closest_rigid_like(u);
  DisplacementField shifted = u;
  for (int j = 0; j < g.size(); ++j) {
    shifted.u1[j] += 0.07;
    shifted.u2[j] -= 0.04;
  }
  const RigidLikeParams moved = closest_rigid_like(shifted);
  CHECK(moved.omega[0] == doctest::Approx(base.omega[0]).epsilon(1e-12));
  CHECK(moved.omega[1] == doctest::Approx(base.omega[1]).epsilon(1e-12));
  CHECK(moved.omega[2] == doctest::Approx(base.omega[2] - 0.07).epsilon(1e-10));
  CHECK(moved.omega[3] == doctest::Approx(base.omega[3] + 0.04).epsilon(1e-10));
}

TEST_CASE("closest_rigid_like degenerate inputs") {
  Grid g;
  g.nx = 2;
  g.ny = 2;
  g.domain = unit_square();
  g.h1 = g.h2 = 0.5;
  g.points.assign(4, Point{0.5, 0.5});  // all identical
  DisplacementField u;
  u.grid = g;
  u.u1.assign(4, 0.0);
  u.u2.assign(4, 0.0);
  CHECK_THROWS_AS(closest_rigid_like(u), EstimationError);

  Grid tiny = cell_centered_grid(2, 1);
  DisplacementField small;
  small.grid = tiny;
  small.u1.assign(2, 0.0);
  small.u2.assign(2, 0.0);
  CHECK_THROWS_AS(closest_rigid_like(small), ContractError);
}

TEST_CASE("compose_displacements matches analytic composition of rigid maps") {
  const Grid g = cell_centered_grid(32, 32);
  RigidLikeParams wa, wb;
  wa.omega = {1.05, 8.0 * kDeg, 0.02, -0.01};
  wb.omega = {0.97, -5.0 * kDeg, -0.015, 0.02};
  const DisplacementField ua = rigid_to_displacement(wa, g);
  const DisplacementField ub = rigid_to_displacement(wb, g);
  const DisplacementField comp = compose_displacements(ua, ub);

  // phi_comp = phi_a(phi_b(x)); bilinear sampling is exact for affine fields
  // away from the clamped border.
  for (int i2 = 2; i2 < 30; ++i2)
    for (int i1 = 2; i1 < 30; ++i1) {
      const int j = i2 * 32 + i1;
      const Point expect =
          apply_rigid(wa, apply_rigid(wb, g.points[j]));
      CHECK(std::abs(g.points[j].x1 - comp.u1[j] - expect.x1) < 1e-11);
      CHECK(std::abs(g.points[j].x2 - comp.u2[j] - expect.x2) < 1e-11);
    }
}
