#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "meir/errors.hpp"
#include "meir/solver.hpp"
#include "meir/synth.hpp"
#include "support.hpp"

using namespace meir;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Ladder oracle: first step of {1, beta, ...} satisfying the Armijo test.
std::pair<double, bool> ladder_oracle(const std::function<double(double)>& f,
                                      double base, double slope,
                                      const SolverConfig& cfg) {
  double s = 1.0;
  for (int k = 0; k <= cfg.armijo_max_backtracks; ++k) {
    if (f(s) <= base + cfg.armijo_c1 * s * slope) return {s, true};
    s *= cfg.armijo_beta;
  }
  return {s / cfg.armijo_beta, false};
}

}  // namespace

TEST_CASE("armijo accepts the exact Newton step on a quadratic") {
  const auto f = [](double s) { return 0.5 * (1.0 - s) * (1.0 - s); };
  const SolverConfig cfg;
  const ArmijoResult res = armijo_search(f, f(0.0), -1.0, cfg);
  CHECK(res.accepted);
  CHECK(res.step == 1.0);
}

TEST_CASE("armijo rejects when sufficient decrease is unreachable") {
  const double base = 2.0;
  const auto f = [&](double) { return base; };  // flat
  SolverConfig cfg;
  cfg.armijo_max_backtracks = 6;
  const ArmijoResult res = armijo_search(f, base, -1e-6, cfg);
  CHECK_FALSE(res.accepted);
}

TEST_CASE("armijo matches the direct ladder oracle") {
  SolverConfig cfg;
  cfg.armijo_beta = 0.5;
  cfg.armijo_c1 = 1e-4;
  const auto f = [](double s) { return (1.0 - s) * (1.0 - s) + 0.3 * s * s; };
  const double slope = -2.0;  // f'(0)
  const auto [expect_step, expect_ok] = ladder_oracle(f, f(0.0), slope, cfg);
  const ArmijoResult res = armijo_search(f, f(0.0), slope, cfg);
  CHECK(res.accepted == expect_ok);
  CHECK(res.step == doctest::Approx(expect_step));
}

TEST_CASE("armijo requires a descent direction") {
  const auto f = [](double s) { return s; };
  CHECK_THROWS_AS(armijo_search(f, 0.0, 0.5, SolverConfig{}), ContractError);
}

TEST_CASE("parametric solve: identical images stay at identity") {
  const ScalarImage img = make_texture(5, 32);
  const Interpolant itp = build_interpolant(img, 0.0);
  const Grid g = cell_centered_grid(32, 32);
  const auto [w, trace] = solve_parametric(itp, itp, g,
                                           RigidLikeParams::identity(),
                                           SolverConfig::parametric_defaults());
  for (int k = 0; k < 4; ++k)
    CHECK(std::abs(w.omega[k] - RigidLikeParams::identity().omega[k]) < 1e-9);
  CHECK(trace.converged);
  CHECK(trace.stop_reason == StopReason::Gradient);
  CHECK(trace.iterates.front().objective < 1e-12);
}

TEST_CASE("parametric gradient matches finite differences") {
  const ScalarImage img = make_texture(9, 16);
  const Interpolant r_itp = build_interpolant(img, 1.0);
  const ScalarImage img2 = make_texture(10, 16);
  const Interpolant t_itp = build_interpolant(img2, 1.0);
  const Grid g = cell_centered_grid(16, 16);

  std::mt19937_64 gen(79);
  for (int trial = 0; trial < 5; ++trial) {
    RigidLikeParams w;
    w.omega = {test::rand_in(gen, 0.9, 1.1), test::rand_in(gen, -0.2, 0.2),
               test::rand_in(gen, -0.05, 0.05), test::rand_in(gen, -0.05, 0.05)};
    const ParametricObjective obj =
        parametric_objective(r_itp, t_itp, g, w, false);
    const double h = 1e-6;
    for (int k = 0; k < 4; ++k) {
      RigidLikeParams wp = w, wm = w;
      wp.omega[k] += h;
      wm.omega[k] -= h;
      const double fd = (parametric_objective(r_itp, t_itp, g, wp, false).value -
                         parametric_objective(r_itp, t_itp, g, wm, false).value) /
                        (2 * h);
      CHECK(std::abs(obj.gradient[k] - fd) / (1.0 + std::abs(fd)) <= 1e-4);
    }
  }
}

TEST_CASE("parametric solve is exact in one step for pure translation of a linear image") {
  // Linear intensity ramp; evaluate on an interior subgrid so the spline is
  // exactly linear at every probed point.
  const int n = 32;
  std::vector<double> ramp(static_cast<size_t>(n) * n);
  const Grid full = cell_centered_grid(n, n);
  for (int j = 0; j < full.size(); ++j)
    ramp[j] = 0.2 + 0.5 * full.points[j].x1 + 0.3 * full.points[j].x2;
  const ScalarImage img(n, n, std::move(ramp));
  const Interpolant itp = build_interpolant(img, 0.0);

  const Grid inner = cell_centered_grid(16, 16, Rect{0.35, 0.35, 0.65, 0.65});
  const Point t_true{0.02, -0.015};
  // Reference R(x) = I(x + t); registering T = I against it should find
  // phi(x) = x + t.
  std::vector<double> shifted(static_cast<size_t>(n) * n);
  for (int j = 0; j < full.size(); ++j)
    shifted[j] = 0.2 + 0.5 * (full.points[j].x1 + t_true.x1) +
                 0.3 * (full.points[j].x2 + t_true.x2);
  const Interpolant r_itp = build_interpolant(ScalarImage(n, n, std::move(shifted)), 0.0);

  SolverConfig cfg;
  const auto [w, trace] =
      solve_parametric(r_itp, itp, inner, RigidLikeParams::identity(), cfg);
  // One Gauss-Newton step lands on a global minimizer of the quadratic
  // objective.
  REQUIRE(trace.iterates.size() >= 2);
  CHECK(trace.iterates[1].objective < 1e-12);
  // A single linear image only pins the map along its intensity gradient;
  // check agreement with phi(x) = x + t in that direction.
  for (const Point& x : inner.points) {
    const Point mapped = apply_rigid(w, x);
    const double along = 0.5 * (mapped.x1 - x.x1 - t_true.x1) +
                         0.3 * (mapped.x2 - x.x2 - t_true.x2);
    CHECK(std::abs(along) < 1e-6);
  }
}

TEST_CASE("parametric solve recovers a known transform at theta 0") {
  const ScalarImage base = make_texture(13, 64);
  const ScalarImage padded = pad_image(base, 0.25);
  const Interpolant tpl_itp = build_interpolant(padded, 0.0);
  const Grid g = cell_centered_grid(64, 64);

  RigidLikeParams truth;
  truth.omega = {1.05, 10.0 * kDeg, 0.02, -0.01};
  // Reference(x) = Template(phi_truth(x)), so the solve recovers phi_truth.
  const ScalarImage ref =
      warp_image(tpl_itp, apply_rigid(truth, g.points), g);
  const Interpolant ref_itp = build_interpolant(ref, 0.0);

  // Start near the truth (the multiscale pipeline provides that in practice).
  RigidLikeParams w0;
  w0.omega = {1.0, 8.0 * kDeg, 0.0, 0.0};
  const auto [w, trace] = solve_parametric(ref_itp, tpl_itp, g, w0,
                                           SolverConfig::parametric_defaults());
  CHECK(std::abs(w.omega[0] - truth.omega[0]) <= 0.01);
  CHECK(std::abs(w.omega[1] - truth.omega[1]) <= 0.5 * kDeg);
}

TEST_CASE("elastic solve: identical images return a zero field") {
  const ScalarImage img = make_texture(21, 16);
  const Interpolant itp = build_interpolant(img, 0.0);
  const Grid g = cell_centered_grid(16, 16);
  const ElasticConfig ecfg{10.0, 0.0, 1.0};
  const auto [u, trace] =
      solve_elastic(itp, itp, g, DisplacementField::zero(g), ecfg,
                    SolverConfig::elastic_defaults());
  CHECK(trace.stop_reason == StopReason::Gradient);
  for (int j = 0; j < g.size(); ++j) {
    CHECK(std::abs(u.u1[j]) < 1e-10);
    CHECK(std::abs(u.u2[j]) < 1e-10);
  }
}

TEST_CASE("elastic solve: huge alpha pins the field to zero energy") {
  const ScalarImage a = make_texture(31, 16);
  const ScalarImage b = make_texture(32, 16);
  const Grid g = cell_centered_grid(16, 16);
  const ElasticConfig ecfg{1e6, 0.0, 1.0};
  const auto [u, trace] = solve_elastic(
      build_interpolant(a, 0.0), build_interpolant(b, 0.0), g,
      DisplacementField::zero(g), ecfg, SolverConfig::elastic_defaults());
  CHECK(elastic_energy(u, ecfg) <= 1e-6);
}

TEST_CASE("elastic objective gradient matches directional finite differences") {
  const ScalarImage a = make_texture(41, 16);
  const ScalarImage b = make_texture(42, 16);
  const Interpolant r_itp = build_interpolant(a, 1.0);
  const Interpolant t_itp = build_interpolant(b, 1.0);
  const Grid g = cell_centered_grid(16, 16);
  const ElasticConfig ecfg{10.0, 0.0, 1.0};

  std::mt19937_64 gen(83);
  DisplacementField u = DisplacementField::zero(g);
  for (int j = 0; j < g.size(); ++j) {
    u.u1[j] = 0.01 * (test::rand01(gen) - 0.5);
    u.u2[j] = 0.01 * (test::rand01(gen) - 0.5);
  }
  const ElasticObjective obj = elastic_objective(r_itp, t_itp, g, u, ecfg);

  const auto value_at = [&](const DisplacementField& v) {
    return elastic_objective(r_itp, t_itp, g, v, ecfg).value;
  };
  for (int d = 0; d < 10; ++d) {
    DisplacementField dir = DisplacementField::zero(g);
    for (int j = 0; j < g.size(); ++j) {
      dir.u1[j] = test::rand01(gen) - 0.5;
      dir.u2[j] = test::rand01(gen) - 0.5;
    }
    double analytic = 0.0;
    for (int j = 0; j < g.size(); ++j)
      analytic += obj.grad1[j] * dir.u1[j] + obj.grad2[j] * dir.u2[j];

    const double eps = 1e-6;
    DisplacementField up = u, um = u;
    for (int j = 0; j < g.size(); ++j) {
      up.u1[j] += eps * dir.u1[j];
      up.u2[j] += eps * dir.u2[j];
      um.u1[j] -= eps * dir.u1[j];
      um.u2[j] -= eps * dir.u2[j];
    }
    const double fd = (value_at(up) - value_at(um)) / (2 * eps);
    CHECK(std::abs(analytic - fd) / (1.0 + std::abs(fd)) <= 1e-4);
  }
}

TEST_CASE("accepted iterates never increase the objective") {
  const ScalarImage a = make_texture(51, 32);
  const ScalarImage b = make_texture(52, 32);
  const Grid g = cell_centered_grid(32, 32);
  const auto check_trace = [](const SolverTrace& trace) {
    for (size_t i = 1; i < trace.iterates.size(); ++i)
      CHECK(trace.iterates[i].objective <= trace.iterates[i - 1].objective);
  };
  const auto [w, ptrace] = solve_parametric(
      build_interpolant(a, 10.0), build_interpolant(b, 10.0), g,
      RigidLikeParams::identity(), SolverConfig::parametric_defaults());
  check_trace(ptrace);
  const auto [u, etrace] = solve_elastic(
      build_interpolant(a, 1.0), build_interpolant(b, 1.0), g,
      DisplacementField::zero(g), ElasticConfig{10.0, 0.0, 1.0},
      SolverConfig::elastic_defaults());
  check_trace(etrace);
}

TEST_CASE("solve_elastic rejects alpha = 0") {
  const ScalarImage a = make_texture(61, 8);
  const Grid g = cell_centered_grid(8, 8);
  CHECK_THROWS_AS(
      solve_elastic(build_interpolant(a, 0.0), build_interpolant(a, 0.0), g,
                    DisplacementField::zero(g), ElasticConfig{0.0, 0.0, 1.0},
                    SolverConfig::elastic_defaults()),
      ContractError);
}
