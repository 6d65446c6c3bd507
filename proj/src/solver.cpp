#include "meir/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "meir/errors.hpp"

namespace meir {

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::Gradient: return "gradient";
    case StopReason::Step: return "step";
    case StopReason::ObjectiveChange: return "objective-change";
    case StopReason::MaxIterations: return "max-iterations";
    case StopReason::LineSearchFailure: return "line-search-failure";
  }
  return "unknown";
}

ArmijoResult armijo_search(const std::function<double(double)>& objective,
                           double base_value, double directional_derivative,
                           const SolverConfig& cfg) {
  if (!(directional_derivative < 0.0))
    throw ContractError("armijo_search: direction is not a descent direction");
  double step = 1.0;
  double value = 0.0;
  for (int k = 0; k <= cfg.armijo_max_backtracks; ++k) {
    value = objective(step);
    if (value <= base_value + cfg.armijo_c1 * step * directional_derivative)
      return ArmijoResult{step, true, value};
    step *= cfg.armijo_beta;
  }
  return ArmijoResult{step / cfg.armijo_beta, false, value};
}

namespace {

// 2x4 Jacobian of phi_w at x, columns (d/dw0, d/dw1, d/dw2, d/dw3).
struct RigidJacobian {
  double c, s, w0;
  void columns(const Point& x, double out1[4], double out2[4]) const {
    out1[0] = c * x.x1 - s * x.x2;
    out2[0] = s * x.x1 + c * x.x2;
    out1[1] = w0 * (-s * x.x1 - c * x.x2);
    out2[1] = w0 * (c * x.x1 - s * x.x2);
    out1[2] = 1.0;
    out2[2] = 0.0;
    out1[3] = 0.0;
    out2[3] = 1.0;
  }
};

ParametricObjective parametric_objective_impl(
    const Interpolant& t_itp, const Grid& grid,
    const std::vector<double>& r_vals, const RigidLikeParams& w,
    bool with_normal) {
  ParametricObjective out;
  const double area = grid.cell_area();
  RigidJacobian jac{std::cos(w.omega[1]), std::sin(w.omega[1]), w.omega[0]};

  double acc = 0.0;
  for (int j = 0; j < grid.size(); ++j) {
    const Point& x = grid.points[j];
    const Point phi{w.omega[0] * (jac.c * x.x1 - jac.s * x.x2) + w.omega[2],
                    w.omega[0] * (jac.s * x.x1 + jac.c * x.x2) + w.omega[3]};
    const Interpolant::Eval e = t_itp.eval(phi);
    const double r = e.value - r_vals[j];
    acc += r * r;

    double c1[4], c2[4];
    jac.columns(x, c1, c2);
    double a[4];
    for (int k = 0; k < 4; ++k) a[k] = e.d1 * c1[k] + e.d2 * c2[k];
    for (int k = 0; k < 4; ++k) out.gradient[k] += r * a[k];
    if (with_normal)
      for (int k = 0; k < 4; ++k)
        for (int l = k; l < 4; ++l) out.normal[k][l] += a[k] * a[l];
  }
  out.value = 0.5 * area * acc;
  for (int k = 0; k < 4; ++k) out.gradient[k] *= area;
  if (with_normal) {
    for (int k = 0; k < 4; ++k)
      for (int l = k; l < 4; ++l) {
        out.normal[k][l] *= area;
        out.normal[l][k] = out.normal[k][l];
      }
  }
  return out;
}

double parametric_value(const Interpolant& t_itp, const Grid& grid,
                        const std::vector<double>& r_vals,
                        const RigidLikeParams& w) {
  RigidJacobian jac{std::cos(w.omega[1]), std::sin(w.omega[1]), w.omega[0]};
  double acc = 0.0;
  for (int j = 0; j < grid.size(); ++j) {
    const Point& x = grid.points[j];
    const Point phi{w.omega[0] * (jac.c * x.x1 - jac.s * x.x2) + w.omega[2],
                    w.omega[0] * (jac.s * x.x1 + jac.c * x.x2) + w.omega[3]};
    const double r = t_itp.eval(phi).value - r_vals[j];
    acc += r * r;
  }
  return 0.5 * grid.cell_area() * acc;
}

}  // namespace

ParametricObjective parametric_objective(const Interpolant& r_itp,
                                         const Interpolant& t_itp,
                                         const Grid& grid,
                                         const RigidLikeParams& w,
                                         bool with_normal) {
  const std::vector<double> r_vals = r_itp.values_at(grid.points);
  return parametric_objective_impl(t_itp, grid, r_vals, w, with_normal);
}

std::pair<RigidLikeParams, SolverTrace> solve_parametric(
    const Interpolant& r_itp, const Interpolant& t_itp, const Grid& grid,
    const RigidLikeParams& w0, const SolverConfig& cfg) {
  const std::vector<double> r_vals = r_itp.values_at(grid.points);
  RigidLikeParams w = w0;
  SolverTrace trace;

  ParametricObjective obj =
      parametric_objective_impl(t_itp, grid, r_vals, w, true);
  const double j0 = obj.value;
  const double tol_g = cfg.grad_tolerance * (1.0 + std::abs(j0));
  const double tol_f = cfg.objective_tolerance * (1.0 + std::abs(j0));
  trace.iterates.push_back({0, obj.value, 0.0, 0.0});

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    Eigen::Vector4d g(obj.gradient.data());
    const double gnorm = g.norm();
    trace.iterates.back().gradient_norm = gnorm;
    if (gnorm <= tol_g) {
      trace.converged = true;
      trace.stop_reason = StopReason::Gradient;
      return {w, trace};
    }

    Eigen::Matrix4d H;
    for (int k = 0; k < 4; ++k)
      for (int l = 0; l < 4; ++l) H(k, l) = obj.normal[k][l];
    Eigen::Vector4d delta = H.ldlt().solve(-g);
    if (!delta.allFinite() || g.dot(delta) >= 0.0) {
      H += 1e-10 * Eigen::Matrix4d::Identity();
      delta = H.ldlt().solve(-g);
      trace.notes.push_back("regularized singular normal matrix");
      if (!delta.allFinite() || g.dot(delta) >= 0.0) {
        delta = -g;  // steepest descent fallback
        trace.notes.push_back("fell back to steepest descent");
      }
    }
    const double slope = g.dot(delta);

    const auto line_objective = [&](double s) {
      RigidLikeParams trial = w;
      for (int k = 0; k < 4; ++k) trial.omega[k] += s * delta(k);
      return parametric_value(t_itp, grid, r_vals, trial);
    };
    const ArmijoResult ls = armijo_search(line_objective, obj.value, slope, cfg);
    if (!ls.accepted) {
      trace.stop_reason = StopReason::LineSearchFailure;
      return {w, trace};
    }

    double wmax = 0.0, dmax = 0.0;
    for (int k = 0; k < 4; ++k) {
      wmax = std::max(wmax, std::abs(w.omega[k]));
      dmax = std::max(dmax, std::abs(ls.step * delta(k)));
    }
    const double prev_value = obj.value;
    for (int k = 0; k < 4; ++k) w.omega[k] += ls.step * delta(k);
    obj = parametric_objective_impl(t_itp, grid, r_vals, w, true);
    trace.iterates.push_back({it, obj.value, 0.0, ls.step});

    if (dmax <= cfg.step_tolerance * (1.0 + wmax)) {
      trace.converged = true;
      trace.stop_reason = StopReason::Step;
      return {w, trace};
    }
    if (std::abs(prev_value - obj.value) <= tol_f) {
      trace.converged = true;
      trace.stop_reason = StopReason::ObjectiveChange;
      return {w, trace};
    }
  }
  trace.stop_reason = StopReason::MaxIterations;
  return {w, trace};
}

namespace {

struct ElasticEvalData {
  std::vector<double> residual;
  std::vector<Point> t_grad;  // image gradient at x - u
};

DisplacementField deviation(const DisplacementField& u,
                            const DisplacementField* base) {
  if (!base) return u;
  DisplacementField d = u;
  for (size_t j = 0; j < d.u1.size(); ++j) {
    d.u1[j] -= base->u1[j];
    d.u2[j] -= base->u2[j];
  }
  return d;
}

double elastic_value(const Interpolant& t_itp, const Grid& grid,
                     const std::vector<double>& r_vals,
                     const DisplacementField& u, const ElasticConfig& ecfg,
                     const DisplacementField* base) {
  double acc = 0.0;
  for (int j = 0; j < grid.size(); ++j) {
    const Point p{grid.points[j].x1 - u.u1[j], grid.points[j].x2 - u.u2[j]};
    const double r = t_itp.eval(p).value - r_vals[j];
    acc += r * r;
  }
  return 0.5 * grid.cell_area() * acc +
         ecfg.alpha * elastic_energy(deviation(u, base), ecfg);
}

double elastic_full(const Interpolant& t_itp, const Grid& grid,
                    const std::vector<double>& r_vals,
                    const DisplacementField& u, const ElasticConfig& ecfg,
                    const DisplacementField* base, ElasticEvalData& data) {
  data.residual.resize(grid.size());
  data.t_grad.resize(grid.size());
  double acc = 0.0;
  for (int j = 0; j < grid.size(); ++j) {
    const Point p{grid.points[j].x1 - u.u1[j], grid.points[j].x2 - u.u2[j]};
    const Interpolant::Eval e = t_itp.eval(p);
    data.residual[j] = e.value - r_vals[j];
    data.t_grad[j] = Point{e.d1, e.d2};
    acc += data.residual[j] * data.residual[j];
  }
  return 0.5 * grid.cell_area() * acc +
         ecfg.alpha * elastic_energy(deviation(u, base), ecfg);
}

}  // namespace

ElasticObjective elastic_objective(const Interpolant& r_itp,
                                   const Interpolant& t_itp, const Grid& grid,
                                   const DisplacementField& u,
                                   const ElasticConfig& ecfg,
                                   const DisplacementField* base) {
  const std::vector<double> r_vals = r_itp.values_at(grid.points);
  ElasticEvalData data;
  ElasticObjective out;
  out.value = elastic_full(t_itp, grid, r_vals, u, ecfg, base, data);
  const DisplacementField au =
      elastic_operator_apply(deviation(u, base), ecfg);
  const double area = grid.cell_area();
  out.grad1.resize(grid.size());
  out.grad2.resize(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    out.grad1[j] =
        -area * data.residual[j] * data.t_grad[j].x1 + ecfg.alpha * au.u1[j];
    out.grad2[j] =
        -area * data.residual[j] * data.t_grad[j].x2 + ecfg.alpha * au.u2[j];
  }
  return out;
}

std::pair<DisplacementField, SolverTrace> solve_elastic(
    const Interpolant& r_itp, const Interpolant& t_itp, const Grid& grid,
    const DisplacementField& u0, const ElasticConfig& ecfg,
    const SolverConfig& cfg, const DisplacementField* base) {
  if (!(ecfg.alpha > 0.0))
    throw ContractError("solve_elastic: alpha must be positive");
  if (u0.grid.size() != grid.size())
    throw ContractError("solve_elastic: u0 grid mismatch");
  if (base && base->grid.size() != grid.size())
    throw ContractError("solve_elastic: base grid mismatch");

  const std::vector<double> r_vals = r_itp.values_at(grid.points);
  const double area = grid.cell_area();
  const int n = grid.size();

  DisplacementField u = u0;
  u.grid = grid;
  SolverTrace trace;

  ElasticEvalData data;
  double value = elastic_full(t_itp, grid, r_vals, u, ecfg, base, data);
  const double j0 = value;
  const double tol_g = cfg.grad_tolerance * (1.0 + std::abs(j0));
  const double tol_f = cfg.objective_tolerance * (1.0 + std::abs(j0));
  trace.iterates.push_back({0, value, 0.0, 0.0});

  // Normal operator (J^T J + alpha A) applied matrix-free.
  const auto apply_normal = [&](const DisplacementField& v,
                                DisplacementField& out) {
    out = elastic_operator_apply(v, ecfg);
    for (int j = 0; j < n; ++j) {
      const double jv =
          data.t_grad[j].x1 * v.u1[j] + data.t_grad[j].x2 * v.u2[j];
      out.u1[j] = ecfg.alpha * out.u1[j] + area * jv * data.t_grad[j].x1;
      out.u2[j] = ecfg.alpha * out.u2[j] + area * jv * data.t_grad[j].x2;
    }
  };

  const auto dot = [n](const DisplacementField& a, const DisplacementField& b) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += a.u1[j] * b.u1[j] + a.u2[j] * b.u2[j];
    return acc;
  };

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    // Gradient of the full objective at u.
    DisplacementField au = elastic_operator_apply(deviation(u, base), ecfg);
    DisplacementField grad = DisplacementField::zero(grid);
    for (int j = 0; j < n; ++j) {
      grad.u1[j] =
          -area * data.residual[j] * data.t_grad[j].x1 + ecfg.alpha * au.u1[j];
      grad.u2[j] =
          -area * data.residual[j] * data.t_grad[j].x2 + ecfg.alpha * au.u2[j];
    }
    const double gnorm = std::sqrt(dot(grad, grad));
    trace.iterates.back().gradient_norm = gnorm;
    if (gnorm <= tol_g) {
      trace.converged = true;
      trace.stop_reason = StopReason::Gradient;
      return {u, trace};
    }

    // CG on (J^T J + alpha A) delta = -grad.
    DisplacementField delta = DisplacementField::zero(grid);
    DisplacementField res = grad;  // b - H*0 with b = -grad, negated once below
    for (int j = 0; j < n; ++j) {
      res.u1[j] = -grad.u1[j];
      res.u2[j] = -grad.u2[j];
    }
    DisplacementField p = res;
    DisplacementField hp = DisplacementField::zero(grid);
    double rr = dot(res, res);
    const double rr0 = rr;
    bool cg_broke = false;
    const int cg_cap = std::max(1, cfg.cg_max_iterations);
    for (int k = 0; k < cg_cap; ++k) {
      if (std::sqrt(rr) <= cfg.cg_tolerance * std::sqrt(rr0)) break;
      apply_normal(p, hp);
      const double php = dot(p, hp);
      if (!(php > 0.0)) {
        cg_broke = true;
        break;
      }
      const double alpha_cg = rr / php;
      for (int j = 0; j < n; ++j) {
        delta.u1[j] += alpha_cg * p.u1[j];
        delta.u2[j] += alpha_cg * p.u2[j];
        res.u1[j] -= alpha_cg * hp.u1[j];
        res.u2[j] -= alpha_cg * hp.u2[j];
      }
      const double rr_new = dot(res, res);
      const double beta = rr_new / rr;
      rr = rr_new;
      for (int j = 0; j < n; ++j) {
        p.u1[j] = res.u1[j] + beta * p.u1[j];
        p.u2[j] = res.u2[j] + beta * p.u2[j];
      }
    }
    double slope = dot(grad, delta);
    if (cg_broke || !(slope < 0.0)) {
      // Steepest descent for this iteration.
      for (int j = 0; j < n; ++j) {
        delta.u1[j] = -grad.u1[j];
        delta.u2[j] = -grad.u2[j];
      }
      slope = -gnorm * gnorm;
      trace.notes.push_back("cg fallback to steepest descent");
    }

    const auto line_objective = [&](double s) {
      DisplacementField trial = u;
      for (int j = 0; j < n; ++j) {
        trial.u1[j] += s * delta.u1[j];
        trial.u2[j] += s * delta.u2[j];
      }
      return elastic_value(t_itp, grid, r_vals, trial, ecfg, base);
    };
    const ArmijoResult ls = armijo_search(line_objective, value, slope, cfg);
    if (!ls.accepted) {
      trace.stop_reason = StopReason::LineSearchFailure;
      return {u, trace};
    }

    double umax = 0.0, dmax = 0.0;
    for (int j = 0; j < n; ++j) {
      umax = std::max({umax, std::abs(u.u1[j]), std::abs(u.u2[j])});
      dmax = std::max({dmax, std::abs(ls.step * delta.u1[j]),
                       std::abs(ls.step * delta.u2[j])});
    }
    const double prev_value = value;
    for (int j = 0; j < n; ++j) {
      u.u1[j] += ls.step * delta.u1[j];
      u.u2[j] += ls.step * delta.u2[j];
    }
    value = elastic_full(t_itp, grid, r_vals, u, ecfg, base, data);
    trace.iterates.push_back({it, value, 0.0, ls.step});

    if (dmax <= cfg.step_tolerance * (1.0 + umax)) {
      trace.converged = true;
      trace.stop_reason = StopReason::Step;
      return {u, trace};
    }
    if (std::abs(prev_value - value) <= tol_f) {
      trace.converged = true;
      trace.stop_reason = StopReason::ObjectiveChange;
      return {u, trace};
    }
  }
  trace.stop_reason = StopReason::MaxIterations;
  return {u, trace};
}

}  // namespace meir
