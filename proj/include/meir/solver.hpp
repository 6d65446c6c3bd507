#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "meir/image.hpp"
#include "meir/interpolant.hpp"
#include "meir/objective.hpp"
#include "meir/transform.hpp"

namespace meir {

// Gauss-Newton stopping and line-search knobs. grad_tolerance and
// objective_tolerance are relative: thresholds scale with (1 + |J0|) where J0
// is the initial objective value.
struct SolverConfig {
  int max_iterations = 50;
  double grad_tolerance = 1e-6;
  double step_tolerance = 1e-6;
  double objective_tolerance = 1e-6;
  double armijo_beta = 0.5;
  double armijo_c1 = 1e-4;
  int armijo_max_backtracks = 10;
  int cg_max_iterations = 50;
  double cg_tolerance = 1e-2;

  static SolverConfig parametric_defaults() { return {}; }
  static SolverConfig elastic_defaults() {
    SolverConfig c;
    c.max_iterations = 30;
    return c;
  }
};

enum class StopReason {
  Gradient,
  Step,
  ObjectiveChange,
  MaxIterations,
  LineSearchFailure,
};

std::string to_string(StopReason r);

struct SolverTrace {
  struct Iterate {
    int index = 0;
    double objective = 0.0;
    double gradient_norm = 0.0;
    double step = 0.0;
  };
  std::vector<Iterate> iterates;
  bool converged = false;
  StopReason stop_reason = StopReason::MaxIterations;
  std::vector<std::string> notes;
};

struct ArmijoResult {
  double step = 1.0;
  bool accepted = false;
  double value = 0.0;  // objective at the returned step
};

// Backtracks over {1, beta, beta^2, ...} until the sufficient-decrease
// condition f(s) <= base + c1 * s * slope holds. `slope` must be negative.
ArmijoResult armijo_search(const std::function<double(double)>& objective,
                           double base_value, double directional_derivative,
                           const SolverConfig& cfg);

// Value, gradient and Gauss-Newton normal matrix of the parametric SSD
// objective J(w) = 0.5 * cell_area * sum (T(phi_w(x_j)) - R(x_j))^2.
struct ParametricObjective {
  double value = 0.0;
  std::array<double, 4> gradient{};
  std::array<std::array<double, 4>, 4> normal{};
};
ParametricObjective parametric_objective(const Interpolant& r_itp,
                                         const Interpolant& t_itp,
                                         const Grid& grid,
                                         const RigidLikeParams& w,
                                         bool with_normal = true);

std::pair<RigidLikeParams, SolverTrace> solve_parametric(
    const Interpolant& r_itp, const Interpolant& t_itp, const Grid& grid,
    const RigidLikeParams& w0, const SolverConfig& cfg);

// Value and gradient of the elastic objective
// F(u) = 0.5 * cell_area * sum (T(x_j - u_j) - R(x_j))^2 + alpha * S(u - b)
// where b is an optional base field (null means b = 0). Regularizing the
// deviation from the affine pre-registration keeps large rigid-like motion
// from being penalized away.
struct ElasticObjective {
  double value = 0.0;
  std::vector<double> grad1;
  std::vector<double> grad2;
};
ElasticObjective elastic_objective(const Interpolant& r_itp,
                                   const Interpolant& t_itp, const Grid& grid,
                                   const DisplacementField& u,
                                   const ElasticConfig& ecfg,
                                   const DisplacementField* base = nullptr);

std::pair<DisplacementField, SolverTrace> solve_elastic(
    const Interpolant& r_itp, const Interpolant& t_itp, const Grid& grid,
    const DisplacementField& u0, const ElasticConfig& ecfg,
    const SolverConfig& cfg, const DisplacementField* base = nullptr);

}  // namespace meir
