#pragma once

#include <string>
#include <vector>

#include "meir/image.hpp"
#include "meir/objective.hpp"
#include "meir/solver.hpp"
#include "meir/transform.hpp"

namespace meir {

enum class Method { Mpir, Meir, MeirIterated };
std::string to_string(Method m);

struct RegistrationConfig {
  ScaleSchedule schedule = default_schedule();
  int grid_n = 128;  // power of two >= 16
  ElasticConfig elastic;
  SolverConfig parametric_solver = SolverConfig::parametric_defaults();
  SolverConfig elastic_solver = SolverConfig::elastic_defaults();
  bool prereg_two_level = false;
  bool iterate_twice = true;
  // Pose for iterated MEIR is fit to the composed map by default; set to
  // take the step-2 field alone instead.
  bool pose_from_step2_only = false;

  void validate() const;
};

struct ScaleReport {
  int step = 1;  // 1 or 2 for iterated MEIR
  double theta = 0.0;
  double objective_before = 0.0;
  double objective_after = 0.0;
  int iterations = 0;
  bool converged = false;
  bool objective_monotone = true;  // accepted iterates non-increasing
  StopReason stop_reason = StopReason::MaxIterations;
};

struct RegistrationResult {
  Method method = Method::Mpir;
  std::vector<ScaleReport> per_scale;
  DisplacementField final_displacement;
  RigidLikeParams final_rigid;
  double ndm = 0.0;
  ScalarImage warped_template;
  double wall_time_seconds = 0.0;
  bool any_scale_failed = false;
};

struct Pose {
  double scale = 1.0;
  double rotation_degrees = 0.0;
  double tx = 0.0;
  double ty = 0.0;
};

struct NdmCurve {
  struct Entry {
    int template_index = 0;
    double ndm = 0.0;
    bool flagged = false;
  };
  std::vector<Entry> pairs;
};

// Rigid-like search at every scale (alpha = 0); coarse-to-fine warm start.
RegistrationResult run_mpir(const ScalarImage& r, const ScalarImage& t,
                            const RegistrationConfig& cfg);

// Affine pre-registration at the coarsest scale, then elastic registration
// over the full schedule, each scale warm-started from the previous one.
RegistrationResult run_meir(const ScalarImage& r, const ScalarImage& t,
                            const RegistrationConfig& cfg);

// MEIR applied twice: step 2 re-registers the reference against the step-1
// warped template; the reported field is the grid-sampled composition.
RegistrationResult run_meir_iterated(const ScalarImage& r, const ScalarImage& t,
                                     const RegistrationConfig& cfg);

// Pre-registration solved first on a half-resolution grid, then refined at
// full resolution.
RigidLikeParams two_level_prereg(const ScalarImage& r, const ScalarImage& t,
                                 const RegistrationConfig& cfg,
                                 std::vector<ScaleReport>* log = nullptr);

Pose extract_pose(const RegistrationResult& res);

// NDM between each consecutive pair (template = frame k, reference = frame
// k+1). Pairs are registered independently; `jobs` > 1 parallelizes.
NdmCurve run_speed_curve(const std::vector<ScalarImage>& frames, Method method,
                         const RegistrationConfig& cfg, int jobs = 1);

// MPIR when the two measures are comparable (within `comparability_factor`),
// MEIR otherwise.
Method select_method(double ndm_mpir, double ndm_meir,
                     double comparability_factor = 1.5);

}  // namespace meir
