#include "meir/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "meir/errors.hpp"

namespace meir {

std::string to_string(Method m) {
  switch (m) {
    case Method::Mpir: return "mpir";
    case Method::Meir: return "meir";
    case Method::MeirIterated: return "meir-iterated";
  }
  return "unknown";
}

void RegistrationConfig::validate() const {
  if (grid_n < 16 || (grid_n & (grid_n - 1)) != 0)
    throw ContractError("RegistrationConfig: grid_n must be a power of two >= 16");
  if (schedule.thetas.empty())
    throw ContractError("RegistrationConfig: empty scale schedule");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ScaleReport report_from(const SolverTrace& trace, double theta, int step) {
  ScaleReport rep;
  rep.step = step;
  rep.theta = theta;
  rep.objective_before = trace.iterates.front().objective;
  rep.objective_after = trace.iterates.back().objective;
  rep.iterations = static_cast<int>(trace.iterates.size()) - 1;
  rep.converged = trace.converged;
  rep.stop_reason = trace.stop_reason;
  for (size_t i = 1; i < trace.iterates.size(); ++i)
    if (trace.iterates[i].objective > trace.iterates[i - 1].objective)
      rep.objective_monotone = false;
  return rep;
}

void check_same_layout(const ScalarImage& r, const ScalarImage& t) {
  if (r.width() != t.width() || r.height() != t.height())
    throw ContractError("registration: images must share the grid");
}

ScalarImage to_working_resolution(const ScalarImage& img, int n) {
  if (img.width() == n && img.height() == n) return img;
  return resample_area(img, n, n);
}

// The configured alpha follows the 8-bit intensity convention of the elastic
// registration literature; samples here live in [0,1], so the weight is
// rescaled to keep the data/regularizer balance.
ElasticConfig solver_elastic_config(const ElasticConfig& cfg) {
  ElasticConfig out = cfg;
  out.alpha = cfg.alpha / (255.0 * 255.0);
  return out;
}

}  // namespace

RigidLikeParams two_level_prereg(const ScalarImage& r, const ScalarImage& t,
                                 const RegistrationConfig& cfg,
                                 std::vector<ScaleReport>* log) {
  cfg.validate();
  if (cfg.grid_n < 32)
    throw ContractError("two_level_prereg: grid_n must be >= 32");
  const double theta0 = cfg.schedule.thetas.front();

  const ScalarImage r_full = to_working_resolution(r, cfg.grid_n);
  const ScalarImage t_full = to_working_resolution(t, cfg.grid_n);
  const ScalarImage r_half = downsample(r_full, 2);
  const ScalarImage t_half = downsample(t_full, 2);

  const Grid coarse = cell_centered_grid(cfg.grid_n / 2, cfg.grid_n / 2,
                                         r_full.domain());
  auto [w_coarse, trace_coarse] = solve_parametric(
      build_interpolant(r_half, theta0), build_interpolant(t_half, theta0),
      coarse, RigidLikeParams::identity(), cfg.parametric_solver);
  if (log) log->push_back(report_from(trace_coarse, theta0, 1));

  const Grid fine = cell_centered_grid(cfg.grid_n, cfg.grid_n, r_full.domain());
  auto [w_fine, trace_fine] = solve_parametric(
      build_interpolant(r_full, theta0), build_interpolant(t_full, theta0),
      fine, w_coarse, cfg.parametric_solver);
  if (log) log->push_back(report_from(trace_fine, theta0, 1));
  return w_fine;
}

RegistrationResult run_mpir(const ScalarImage& r, const ScalarImage& t,
                            const RegistrationConfig& cfg) {
  cfg.validate();
  check_same_layout(r, t);
  const auto start = Clock::now();

  const ScalarImage rw = to_working_resolution(r, cfg.grid_n);
  const ScalarImage tw = to_working_resolution(t, cfg.grid_n);
  const Grid grid = cell_centered_grid(cfg.grid_n, cfg.grid_n, rw.domain());

  RegistrationResult res;
  res.method = Method::Mpir;
  RigidLikeParams w = RigidLikeParams::identity();
  for (double theta : cfg.schedule.thetas) {
    const Interpolant r_itp = build_interpolant(rw, theta);
    const Interpolant t_itp = build_interpolant(tw, theta);
    auto [w_next, trace] =
        solve_parametric(r_itp, t_itp, grid, w, cfg.parametric_solver);
    w = w_next;
    res.per_scale.push_back(report_from(trace, theta, 1));
    if (trace.stop_reason == StopReason::LineSearchFailure)
      res.any_scale_failed = true;
  }

  const Interpolant t0 = build_interpolant(tw, 0.0);
  res.final_rigid = w;
  res.final_displacement = rigid_to_displacement(w, grid);
  res.warped_template =
      warp_image(t0, apply_rigid(w, grid.points), grid);
  res.ndm = ndm(rw, res.warped_template);
  res.wall_time_seconds = seconds_since(start);
  return res;
}

RegistrationResult run_meir(const ScalarImage& r, const ScalarImage& t,
                            const RegistrationConfig& cfg) {
  cfg.validate();
  check_same_layout(r, t);
  if (!(cfg.elastic.alpha > 0.0))
    throw ContractError("run_meir: elastic.alpha must be positive");
  const auto start = Clock::now();

  const ScalarImage rw = to_working_resolution(r, cfg.grid_n);
  const ScalarImage tw = to_working_resolution(t, cfg.grid_n);
  const Grid grid = cell_centered_grid(cfg.grid_n, cfg.grid_n, rw.domain());
  const double theta0 = cfg.schedule.thetas.front();

  RegistrationResult res;
  res.method = Method::Meir;

  // Affine pre-registration at the coarsest scale.
  RigidLikeParams w0 = RigidLikeParams::identity();
  if (cfg.prereg_two_level) {
    w0 = two_level_prereg(rw, tw, cfg, &res.per_scale);
  } else {
    auto [w, trace] = solve_parametric(build_interpolant(rw, theta0),
                                       build_interpolant(tw, theta0), grid,
                                       RigidLikeParams::identity(),
                                       cfg.parametric_solver);
    w0 = w;
    res.per_scale.push_back(report_from(trace, theta0, 1));
  }

  // The elastic term penalizes the deviation from the pre-registration, so
  // large rigid-like motion recovered above is not regularized away.
  const ElasticConfig ecfg = solver_elastic_config(cfg.elastic);
  const DisplacementField u_ref = rigid_to_displacement(w0, grid);
  DisplacementField u = u_ref;
  for (double theta : cfg.schedule.thetas) {
    const Interpolant r_itp = build_interpolant(rw, theta);
    const Interpolant t_itp = build_interpolant(tw, theta);
    auto [u_next, trace] = solve_elastic(r_itp, t_itp, grid, u, ecfg,
                                         cfg.elastic_solver, &u_ref);
    u = std::move(u_next);
    res.per_scale.push_back(report_from(trace, theta, 1));
    if (trace.stop_reason == StopReason::LineSearchFailure)
      res.any_scale_failed = true;
  }

  const Interpolant t0 = build_interpolant(tw, 0.0);
  res.final_displacement = u;
  res.final_rigid = closest_rigid_like(u);
  res.warped_template = warp_image(t0, apply_displacement(u), grid);
  res.ndm = ndm(rw, res.warped_template);
  res.wall_time_seconds = seconds_since(start);
  return res;
}

RegistrationResult run_meir_iterated(const ScalarImage& r, const ScalarImage& t,
                                     const RegistrationConfig& cfg) {
  const auto start = Clock::now();
  const ScalarImage rw = to_working_resolution(r, cfg.grid_n);
  const ScalarImage tw = to_working_resolution(t, cfg.grid_n);

  RegistrationResult step1 = run_meir(rw, tw, cfg);
  RegistrationResult step2 = run_meir(rw, step1.warped_template, cfg);

  RegistrationResult res;
  res.method = Method::MeirIterated;
  res.per_scale = step1.per_scale;
  for (ScaleReport rep : step2.per_scale) {
    rep.step = 2;
    res.per_scale.push_back(rep);
  }
  res.any_scale_failed = step1.any_scale_failed || step2.any_scale_failed;

  // Step 2 refines an already registered pair; keep it only when it helps.
  if (step2.ndm <= step1.ndm) {
    res.warped_template = step2.warped_template;
    res.final_displacement = compose_displacements(step1.final_displacement,
                                                   step2.final_displacement);
    res.final_rigid = cfg.pose_from_step2_only
                          ? step2.final_rigid
                          : closest_rigid_like(res.final_displacement);
    res.ndm = step2.ndm;
  } else {
    res.warped_template = step1.warped_template;
    res.final_displacement = step1.final_displacement;
    res.final_rigid = step1.final_rigid;
    res.ndm = step1.ndm;
  }
  res.wall_time_seconds = seconds_since(start);
  return res;
}

Pose extract_pose(const RegistrationResult& res) {
  const RigidLikeParams w = res.method == Method::Mpir
                                ? res.final_rigid
                                : closest_rigid_like(res.final_displacement);
  Pose pose;
  pose.scale = w.omega[0];
  pose.rotation_degrees = w.omega[1] * 180.0 / std::numbers::pi;
  pose.tx = w.omega[2];
  pose.ty = w.omega[3];
  return pose;
}

NdmCurve run_speed_curve(const std::vector<ScalarImage>& frames, Method method,
                         const RegistrationConfig& cfg, int jobs) {
  if (frames.size() < 2)
    throw ContractError("run_speed_curve: need at least two frames");
  const int pairs = static_cast<int>(frames.size()) - 1;
  NdmCurve curve;
  curve.pairs.resize(pairs);

  const auto run_pair = [&](int k) {
    NdmCurve::Entry entry;
    entry.template_index = k;
    try {
      // Template is frame k, reference the frame after it.
      RegistrationResult res;
      switch (method) {
        case Method::Mpir: res = run_mpir(frames[k + 1], frames[k], cfg); break;
        case Method::Meir: res = run_meir(frames[k + 1], frames[k], cfg); break;
        case Method::MeirIterated:
          res = run_meir_iterated(frames[k + 1], frames[k], cfg);
          break;
      }
      entry.ndm = res.ndm;
      entry.flagged = res.any_scale_failed;
    } catch (const std::exception&) {
      entry.ndm = std::numeric_limits<double>::quiet_NaN();
      entry.flagged = true;
    }
    curve.pairs[k] = entry;
  };

  if (jobs <= 1) {
    for (int k = 0; k < pairs; ++k) run_pair(k);
  } else {
    std::atomic<int> next{0};
    const int workers = std::min(jobs, pairs);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int wi = 0; wi < workers; ++wi)
      threads.emplace_back([&] {
        for (int k = next.fetch_add(1); k < pairs; k = next.fetch_add(1))
          run_pair(k);
      });
    for (auto& th : threads) th.join();
  }
  return curve;
}

Method select_method(double ndm_mpir, double ndm_meir,
                     double comparability_factor) {
  if (!std::isfinite(ndm_mpir) || !std::isfinite(ndm_meir))
    throw ContractError("select_method: NDM values must be finite");
  return ndm_mpir <= comparability_factor * ndm_meir ? Method::Mpir
                                                     : Method::Meir;
}

}  // namespace meir
