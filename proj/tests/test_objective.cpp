#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>

#include "meir/errors.hpp"
#include "meir/objective.hpp"
#include "support.hpp"

using namespace meir;

namespace {

DisplacementField random_field(std::mt19937_64& gen, int n, double amp = 0.2) {
  const Grid g = cell_centered_grid(n, n);
  DisplacementField u = DisplacementField::zero(g);
  for (int j = 0; j < g.size(); ++j) {
    u.u1[j] = amp * (test::rand01(gen) - 0.5);
    u.u2[j] = amp * (test::rand01(gen) - 0.5);
  }
  return u;
}

double field_dot(const DisplacementField& a, const DisplacementField& b) {
  double acc = 0.0;
  for (size_t j = 0; j < a.u1.size(); ++j)
    acc += a.u1[j] * b.u1[j] + a.u2[j] * b.u2[j];
  return acc;
}

// Dense forward-difference matrix along an axis with the last difference row
// replicated; independent of the production stencil code.
Eigen::MatrixXd dense_diff(int n, int axis, double h) {
  const int N = n * n;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N, N);
  const auto idx = [&](int i1, int i2) { return i2 * n + i1; };
  for (int i2 = 0; i2 < n; ++i2)
    for (int i1 = 0; i1 < n; ++i1) {
      const int row = idx(i1, i2);
      int a = i1, b = i2;
      if (axis == 0)
        a = std::min(i1, n - 2);
      else
        b = std::min(i2, n - 2);
      const int lo = idx(axis == 0 ? a : i1, axis == 0 ? i2 : b);
      const int hi = idx(axis == 0 ? a + 1 : i1, axis == 0 ? i2 : b + 1);
      D(row, lo) -= 1.0 / h;
      D(row, hi) += 1.0 / h;
    }
  return D;
}

}  // namespace

TEST_CASE("ssd examples") {
  const std::vector<double> zeros{0, 0, 0, 0};
  CHECK(ssd(zeros, zeros, 0.25) == 0.0);

  for (int n : {7, 16, 128}) {
    const std::vector<double> r(static_cast<size_t>(n) * n, 0.0);
    const std::vector<double> t(static_cast<size_t>(n) * n, 1.0);
    CHECK(ssd(r, t, 1.0 / (n * n)) == doctest::Approx(0.5).epsilon(1e-14));
  }

  const std::vector<double> t{1, 2, 3, 4};
  CHECK(ssd(zeros, t, 0.25) == doctest::Approx(3.75).epsilon(1e-15));

  const std::vector<double> shorter{1, 2};
  CHECK_THROWS_AS(ssd(zeros, shorter, 1.0), ContractError);
  CHECK_THROWS_AS(ssd(zeros, zeros, 0.0), ContractError);
}

TEST_CASE("ndm examples and scale awareness") {
  std::mt19937_64 gen(61);
  const ScalarImage r = test::random_image(gen, 12);
  CHECK(ndm(r, r) == 0.0);

  ScalarImage doubled = r;
  for (auto& v : doubled.samples()) v *= 2.0;
  CHECK(ndm(r, doubled) == doctest::Approx(1.0).epsilon(1e-14));

  for (double c : {-0.5, 0.3, 2.0}) {
    ScalarImage scaled = r;
    for (auto& v : scaled.samples()) v *= (1.0 + c);
    CHECK(ndm(r, scaled) == doctest::Approx(std::abs(c)).epsilon(1e-12));
  }

  const ScalarImage zero = ScalarImage::constant(12, 12, 0.0);
  CHECK_THROWS_AS(ndm(zero, r), UndefinedMeasureError);
  const ScalarImage other = ScalarImage::constant(8, 8, 0.5);
  CHECK_THROWS_AS(ndm(r, other), ContractError);
}

TEST_CASE("elastic energy analytic values") {
  const ElasticConfig cfg{1.0, 0.0, 1.0};  // alpha unused here
  for (int n : {8, 16, 32}) {
    const Grid g = cell_centered_grid(n, n);
    DisplacementField zero = DisplacementField::zero(g);
    CHECK(elastic_energy(zero, cfg) == 0.0);

    DisplacementField ux = DisplacementField::zero(g);
    for (int j = 0; j < g.size(); ++j) ux.u1[j] = g.points[j].x1;
    CHECK(elastic_energy(ux, cfg) == doctest::Approx(1.0).epsilon(1e-12));

    DisplacementField uy = DisplacementField::zero(g);
    for (int j = 0; j < g.size(); ++j) uy.u1[j] = g.points[j].x2;
    CHECK(elastic_energy(uy, cfg) == doctest::Approx(0.5).epsilon(1e-12));
  }
  ElasticConfig bad;
  bad.mu = -1.0;
  CHECK_THROWS_AS(elastic_energy(DisplacementField::zero(cell_centered_grid(4, 4)), bad),
                  ContractError);
}

TEST_CASE("elastic operator: nullspace, symmetry, energy consistency") {
  std::mt19937_64 gen(67);
  const ElasticConfig cfg{1.0, 0.3, 0.8};

  const Grid g = cell_centered_grid(8, 8);
  DisplacementField constant = DisplacementField::zero(g);
  for (int j = 0; j < g.size(); ++j) {
    constant.u1[j] = 0.7;
    constant.u2[j] = -0.2;
  }
  const DisplacementField ac = elastic_operator_apply(constant, cfg);
  for (int j = 0; j < g.size(); ++j) {
    CHECK(std::abs(ac.u1[j]) < 1e-14);
    CHECK(std::abs(ac.u2[j]) < 1e-14);
  }

  for (int k = 0; k < 5; ++k) {
    const DisplacementField u = random_field(gen, 8);
    const DisplacementField v = random_field(gen, 8);
    const double uv = field_dot(v, elastic_operator_apply(u, cfg));
    const double vu = field_dot(u, elastic_operator_apply(v, cfg));
    CHECK(uv == doctest::Approx(vu).epsilon(1e-12));
    CHECK(0.5 * field_dot(u, elastic_operator_apply(u, cfg)) ==
          doctest::Approx(elastic_energy(u, cfg)).epsilon(1e-12));
    // PSD via Rayleigh quotient.
    CHECK(field_dot(u, elastic_operator_apply(u, cfg)) >= -1e-12);
  }
}

TEST_CASE("elastic operator matches dense matrix oracle on 8x8") {
  const int n = 8;
  const ElasticConfig cfg{1.0, 0.4, 1.3};
  const Grid g = cell_centered_grid(n, n);
  const int N = n * n;
  const Eigen::MatrixXd D1 = dense_diff(n, 0, g.h1);
  const Eigen::MatrixXd D2 = dense_diff(n, 1, g.h2);

  // A as 2N x 2N blocks.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * N, 2 * N);
  const double lm = cfg.lambda + cfg.mu;
  A.topLeftCorner(N, N) =
      lm * D1.transpose() * D1 + cfg.mu * (D1.transpose() * D1 + D2.transpose() * D2);
  A.topRightCorner(N, N) = lm * D1.transpose() * D2;
  A.bottomLeftCorner(N, N) = lm * D2.transpose() * D1;
  A.bottomRightCorner(N, N) =
      lm * D2.transpose() * D2 + cfg.mu * (D1.transpose() * D1 + D2.transpose() * D2);
  A *= g.cell_area();

  std::mt19937_64 gen(71);
  for (int k = 0; k < 3; ++k) {
    const DisplacementField u = random_field(gen, n);
    Eigen::VectorXd uv(2 * N);
    for (int j = 0; j < N; ++j) {
      uv(j) = u.u1[j];
      uv(N + j) = u.u2[j];
    }
    const Eigen::VectorXd expect = A * uv;
    const DisplacementField got = elastic_operator_apply(u, cfg);
    for (int j = 0; j < N; ++j) {
      CHECK(got.u1[j] == doctest::Approx(expect(j)).epsilon(1e-12).scale(1.0));
      CHECK(got.u2[j] ==
            doctest::Approx(expect(N + j)).epsilon(1e-12).scale(1.0));
    }
    CHECK(elastic_energy(u, cfg) ==
          doctest::Approx(0.5 * uv.dot(A * uv)).epsilon(1e-12));
  }
}

TEST_CASE("elastic operator is linear") {
  std::mt19937_64 gen(73);
  const ElasticConfig cfg{1.0, 0.0, 1.0};
  const DisplacementField u = random_field(gen, 6);
  const DisplacementField v = random_field(gen, 6);
  DisplacementField lin = u;
  for (int j = 0; j < lin.grid.size(); ++j) {
    lin.u1[j] = 2.0 * u.u1[j] - 3.0 * v.u1[j];
    lin.u2[j] = 2.0 * u.u2[j] - 3.0 * v.u2[j];
  }
  const DisplacementField a_lin = elastic_operator_apply(lin, cfg);
  const DisplacementField au = elastic_operator_apply(u, cfg);
  const DisplacementField av = elastic_operator_apply(v, cfg);
  for (int j = 0; j < lin.grid.size(); ++j) {
    CHECK(a_lin.u1[j] ==
          doctest::Approx(2 * au.u1[j] - 3 * av.u1[j]).epsilon(1e-12).scale(1.0));
    CHECK(a_lin.u2[j] ==
          doctest::Approx(2 * au.u2[j] - 3 * av.u2[j]).epsilon(1e-12).scale(1.0));
  }
}
