#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "meir/image.hpp"
#include "meir/pipeline.hpp"

namespace meir {

enum class SynthKind { Rigid, Elastic, RigidElastic };

struct SynthSpec {
  SynthKind kind = SynthKind::Rigid;
  double scale = 1.0;
  double rotation_degrees = 0.0;
  double elastic_intensity = 0.0;  // max displacement in units of the cell size
  std::uint64_t seed = 0;
  double smoothing_sigma = 5.0;  // grid cells
  double pad_margin = 0.25;
};

struct RigidSynthResult {
  ScalarImage image;
  double true_scale = 1.0;
  double true_rotation_degrees = 0.0;
  bool content_escaped = false;
};

struct ElasticSynthResult {
  ScalarImage image;
  std::vector<Point> perturbed_grid;
  std::vector<Point> perturbation;  // perturbed_grid - regular grid
};

// Pads by pad_margin, then resamples through the inverse of the rigid-like
// map taken about the domain center, so the output is exactly I(phi^-1(x)).
RigidSynthResult make_rigid_synthetic(const ScalarImage& img,
                                      const SynthSpec& spec);

// Seeded uniform noise per component, Gaussian-smoothed (truncated at 3
// sigma, replicated boundaries), centered to zero mean and scaled so the
// largest displacement magnitude equals intensity * h; the image is then
// interpolated on the perturbed grid.
ElasticSynthResult make_elastic_synthetic(const ScalarImage& img,
                                          const SynthSpec& spec);

// Pad + rigid + elastic according to spec.kind; ground truth pose recorded.
struct SyntheticFrame {
  ScalarImage reference;  // padded original
  ScalarImage image;      // transformed version
  double true_scale = 1.0;
  double true_rotation_degrees = 0.0;
};
SyntheticFrame make_synthetic(const ScalarImage& img, const SynthSpec& spec);

enum class BenchCase { I, II, III, IV };
enum class SweepParam { Intensity, Rotation, Scale };

BenchCase parse_bench_case(const std::string& s);
SweepParam default_sweep_param(BenchCase c);
std::vector<double> default_sweep(BenchCase c, SweepParam p);

struct BenchmarkConfig {
  BenchCase bench_case = BenchCase::I;
  std::vector<double> sweep;  // empty selects default_sweep
  SweepParam sweep_param = SweepParam::Intensity;
  double fixed_rotation_degrees = 20.0;
  double fixed_scale = 1.4;
  double elastic_intensity = 5.0;
  double smoothing_sigma = 5.0;
  double pad_margin = 0.25;
  std::uint64_t seed = 1;
  int jobs = 1;
  RegistrationConfig reg;
};

struct BenchmarkRow {
  std::string label;
  double sweep_value = 0.0;
  double ndm_meir = 0.0;
  double ndm_mpir = 0.0;
  double scale_err_meir = 0.0;
  double scale_err_mpir = 0.0;
  double rot_err_meir_deg = 0.0;
  double rot_err_mpir_deg = 0.0;
  int pairs = 0;
  int failures = 0;
};

// Synthesizes one frame per (input frame, sweep value), registers with both
// MEIR (iterated) and MPIR, and aggregates mean NDM / mean absolute pose
// errors per sweep value. The elastic deformation of a frame depends only on
// (seed, frame index), not on the sweep value.
std::vector<BenchmarkRow> run_benchmark(const std::vector<ScalarImage>& frames,
                                        const BenchmarkConfig& cfg);

// Deterministic smooth random texture; stands in for real frames in tests
// and demos.
ScalarImage make_texture(std::uint64_t seed, int n);

// splitmix64-based combine used to derive per-frame seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace meir
