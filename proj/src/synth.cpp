#include "meir/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <thread>

#include "meir/errors.hpp"
#include "meir/interpolant.hpp"

namespace meir {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in [0,1) from the top 53 bits; identical across platforms.
double rand01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Separable Gaussian smoothing, kernel truncated at 3 sigma, replicated
// boundaries.
void gaussian_smooth(std::vector<double>& v, int nx, int ny, double sigma) {
  if (sigma <= 0.0) return;
  const int half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * half + 1);
  double ksum = 0.0;
  for (int k = -half; k <= half; ++k) {
    kernel[k + half] = std::exp(-0.5 * k * k / (sigma * sigma));
    ksum += kernel[k + half];
  }
  for (double& w : kernel) w /= ksum;

  std::vector<double> tmp(v.size());
  for (int i2 = 0; i2 < ny; ++i2)
    for (int i1 = 0; i1 < nx; ++i1) {
      double acc = 0.0;
      for (int k = -half; k <= half; ++k) {
        const int j = std::clamp(i1 + k, 0, nx - 1);
        acc += kernel[k + half] * v[i2 * nx + j];
      }
      tmp[i2 * nx + i1] = acc;
    }
  for (int i2 = 0; i2 < ny; ++i2)
    for (int i1 = 0; i1 < nx; ++i1) {
      double acc = 0.0;
      for (int k = -half; k <= half; ++k) {
        const int j = std::clamp(i2 + k, 0, ny - 1);
        acc += kernel[k + half] * tmp[j * nx + i1];
      }
      v[i2 * nx + i1] = acc;
    }
}

double wrap_degrees(double d) {
  while (d > 180.0) d -= 360.0;
  while (d <= -180.0) d += 360.0;
  return d;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x51aa97c1ULL));
}

ScalarImage make_texture(std::uint64_t seed, int n) {
  std::mt19937_64 gen(splitmix64(seed));
  const size_t count = static_cast<size_t>(n) * n;
  std::vector<double> coarse(count), fine(count);
  for (auto& v : coarse) v = rand01(gen);
  for (auto& v : fine) v = rand01(gen);
  gaussian_smooth(coarse, n, n, std::max(3.0, n / 16.0));
  gaussian_smooth(fine, n, n, std::max(1.5, n / 48.0));

  std::vector<double> tex(count);
  for (size_t i = 0; i < count; ++i) tex[i] = coarse[i] + 0.6 * fine[i];
  const auto [lo_it, hi_it] = std::minmax_element(tex.begin(), tex.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  // Smooth circular falloff keeps content inside the domain under the
  // benchmark's scale sweep.
  for (int i2 = 0; i2 < n; ++i2)
    for (int i1 = 0; i1 < n; ++i1) {
      const double x = (i1 + 0.5) / n - 0.5;
      const double y = (i2 + 0.5) / n - 0.5;
      const double r = std::sqrt(x * x + y * y);
      const double mask = 1.0 / (1.0 + std::exp((r - 0.38) / 0.03));
      double& v = tex[static_cast<size_t>(i2) * n + i1];
      v = (0.05 + 0.9 * (v - lo) / (range > 0 ? range : 1.0)) * mask;
    }
  return ScalarImage(n, n, std::move(tex), unit_square());
}

RigidSynthResult make_rigid_synthetic(const ScalarImage& img,
                                      const SynthSpec& spec) {
  if (spec.kind == SynthKind::Elastic)
    throw ContractError("make_rigid_synthetic: spec.kind excludes rigid");
  const ScalarImage padded = pad_image(img, spec.pad_margin);
  RigidSynthResult out;
  out.true_scale = spec.scale;
  out.true_rotation_degrees = spec.rotation_degrees;

  const double angle = spec.rotation_degrees * std::numbers::pi / 180.0;
  if (spec.scale == 1.0 && angle == 0.0) {
    out.image = padded;
    return out;
  }

  // phi centered at c: phi(x) = s R (x - c) + c; resample through phi^{-1}.
  const Rect dom = padded.domain();
  const Point c{0.5 * (dom.x_min + dom.x_max), 0.5 * (dom.y_min + dom.y_max)};
  const double ci = std::cos(-angle), si = std::sin(-angle);
  const double inv_s = 1.0 / spec.scale;

  const Grid grid = cell_centered_grid(padded.width(), padded.height(), dom);
  const Interpolant itp = build_interpolant(padded, 0.0);
  std::vector<double> samples(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    const double dx = grid.points[j].x1 - c.x1;
    const double dy = grid.points[j].x2 - c.x2;
    const Point pre{c.x1 + inv_s * (ci * dx - si * dy),
                    c.x2 + inv_s * (si * dx + ci * dy)};
    samples[j] = itp.eval(pre).value;
  }
  out.image = ScalarImage(grid.nx, grid.ny, std::move(samples), dom);

  // Forward-map the content corners to see whether anything leaves Omega.
  const double m = spec.pad_margin;
  const double cs = std::cos(angle), sn = std::sin(angle);
  for (const Point& corner :
       {Point{m, m}, Point{1.0 - m, m}, Point{m, 1.0 - m},
        Point{1.0 - m, 1.0 - m}}) {
    const double dx = corner.x1 - c.x1, dy = corner.x2 - c.x2;
    const Point fwd{c.x1 + spec.scale * (cs * dx - sn * dy),
                    c.x2 + spec.scale * (sn * dx + cs * dy)};
    if (!dom.contains(fwd)) out.content_escaped = true;
  }
  return out;
}

ElasticSynthResult make_elastic_synthetic(const ScalarImage& img,
                                          const SynthSpec& spec) {
  if (spec.elastic_intensity < 0.0)
    throw ContractError("make_elastic_synthetic: intensity must be >= 0");
  const int nx = img.width(), ny = img.height();
  const Grid grid = cell_centered_grid(nx, ny, img.domain());

  ElasticSynthResult out;
  out.perturbation.assign(grid.size(), Point{0.0, 0.0});
  out.perturbed_grid = grid.points;
  if (spec.elastic_intensity == 0.0) {
    out.image = img;
    return out;
  }

  std::mt19937_64 gen(splitmix64(spec.seed));
  std::vector<double> p1(grid.size()), p2(grid.size());
  for (auto& v : p1) v = rand01(gen);
  for (auto& v : p2) v = rand01(gen);
  gaussian_smooth(p1, nx, ny, spec.smoothing_sigma);
  gaussian_smooth(p2, nx, ny, spec.smoothing_sigma);

  double m1 = 0.0, m2 = 0.0;
  for (int j = 0; j < grid.size(); ++j) {
    m1 += p1[j];
    m2 += p2[j];
  }
  m1 /= grid.size();
  m2 /= grid.size();
  double maxmag = 0.0;
  for (int j = 0; j < grid.size(); ++j) {
    p1[j] -= m1;
    p2[j] -= m2;
    maxmag = std::max(maxmag, std::hypot(p1[j], p2[j]));
  }
  const double target = spec.elastic_intensity * grid.h1;
  const double scale = maxmag > 0.0 ? target / maxmag : 0.0;

  const Interpolant itp = build_interpolant(img, 0.0);
  std::vector<double> samples(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    out.perturbation[j] = Point{p1[j] * scale, p2[j] * scale};
    out.perturbed_grid[j] = Point{grid.points[j].x1 + out.perturbation[j].x1,
                                  grid.points[j].x2 + out.perturbation[j].x2};
    samples[j] = itp.eval(out.perturbed_grid[j]).value;
  }
  out.image = ScalarImage(nx, ny, std::move(samples), img.domain());
  return out;
}

SyntheticFrame make_synthetic(const ScalarImage& img, const SynthSpec& spec) {
  SyntheticFrame out;
  out.reference = pad_image(img, spec.pad_margin);
  ScalarImage cur = out.reference;

  if (spec.kind != SynthKind::Elastic) {
    SynthSpec rigid = spec;
    rigid.pad_margin = 0.0;  // already padded
    cur = make_rigid_synthetic(cur, rigid).image;
    out.true_scale = spec.scale;
    out.true_rotation_degrees = spec.rotation_degrees;
  }
  if (spec.kind != SynthKind::Rigid && spec.elastic_intensity > 0.0)
    cur = make_elastic_synthetic(cur, spec).image;

  out.image = cur;
  return out;
}

BenchCase parse_bench_case(const std::string& s) {
  if (s == "i" || s == "1") return BenchCase::I;
  if (s == "ii" || s == "2") return BenchCase::II;
  if (s == "iii" || s == "3") return BenchCase::III;
  if (s == "iv" || s == "4") return BenchCase::IV;
  throw ContractError("unknown benchmark case: " + s);
}

SweepParam default_sweep_param(BenchCase c) {
  switch (c) {
    case BenchCase::I: return SweepParam::Intensity;
    case BenchCase::II: return SweepParam::Rotation;
    case BenchCase::III: return SweepParam::Scale;
    case BenchCase::IV: return SweepParam::Scale;
  }
  return SweepParam::Intensity;
}

std::vector<double> default_sweep(BenchCase c, SweepParam p) {
  switch (c) {
    case BenchCase::I: return {5.0};
    case BenchCase::II: return {5, 10, 15, 20, 25, 30};
    case BenchCase::III: return {0.4, 0.6, 0.8, 1.2, 1.4};
    case BenchCase::IV:
      return p == SweepParam::Rotation
                 ? std::vector<double>{5, 10, 15, 20, 25, 30}
                 : std::vector<double>{0.4, 0.6, 0.8, 1.2, 1.4, 1.6};
  }
  return {};
}

namespace {

struct PairOutcome {
  bool ok = false;
  double ndm_meir = 0, ndm_mpir = 0;
  double serr_meir = 0, serr_mpir = 0;
  double rerr_meir = 0, rerr_mpir = 0;
};

SynthSpec spec_for(const BenchmarkConfig& cfg, double sweep_value,
                   std::uint64_t frame_seed) {
  SynthSpec spec;
  spec.pad_margin = cfg.pad_margin;
  spec.smoothing_sigma = cfg.smoothing_sigma;
  spec.seed = frame_seed;
  spec.elastic_intensity = cfg.elastic_intensity;
  switch (cfg.bench_case) {
    case BenchCase::I:
      spec.kind = SynthKind::Elastic;
      if (cfg.sweep_param == SweepParam::Intensity)
        spec.elastic_intensity = sweep_value;
      break;
    case BenchCase::II:
      spec.kind = SynthKind::RigidElastic;
      spec.rotation_degrees = sweep_value;
      break;
    case BenchCase::III:
      spec.kind = SynthKind::RigidElastic;
      spec.scale = sweep_value;
      break;
    case BenchCase::IV:
      spec.kind = SynthKind::RigidElastic;
      if (cfg.sweep_param == SweepParam::Rotation) {
        spec.rotation_degrees = sweep_value;
        spec.scale = cfg.fixed_scale;
      } else {
        spec.scale = sweep_value;
        spec.rotation_degrees = cfg.fixed_rotation_degrees;
      }
      break;
  }
  return spec;
}

std::string label_for(const BenchmarkConfig& cfg, double v) {
  const char* name = cfg.sweep_param == SweepParam::Intensity ? "intensity"
                     : cfg.sweep_param == SweepParam::Rotation ? "rotation"
                                                               : "scale";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s=%g", name, v);
  return buf;
}

}  // namespace

std::vector<BenchmarkRow> run_benchmark(const std::vector<ScalarImage>& frames,
                                        const BenchmarkConfig& cfg) {
  if (frames.empty()) throw ContractError("run_benchmark: no frames");
  const std::vector<double> sweep =
      cfg.sweep.empty() ? default_sweep(cfg.bench_case, cfg.sweep_param)
                        : cfg.sweep;
  if (sweep.empty()) throw ContractError("run_benchmark: empty sweep");

  const int nf = static_cast<int>(frames.size());
  const int ns = static_cast<int>(sweep.size());
  std::vector<PairOutcome> outcomes(static_cast<size_t>(nf) * ns);

  const auto run_task = [&](int task) {
    const int si = task / nf;
    const int fi = task % nf;
    PairOutcome& o = outcomes[task];
    try {
      const SynthSpec spec =
          spec_for(cfg, sweep[si], mix_seed(cfg.seed, fi));
      const SyntheticFrame synth = make_synthetic(frames[fi], spec);
      const RegistrationResult meir =
          run_meir_iterated(synth.reference, synth.image, cfg.reg);
      const RegistrationResult mpir =
          run_mpir(synth.reference, synth.image, cfg.reg);
      const Pose pm = extract_pose(meir);
      const Pose pp = extract_pose(mpir);
      o.ndm_meir = meir.ndm;
      o.ndm_mpir = mpir.ndm;
      o.serr_meir = std::abs(pm.scale - synth.true_scale);
      o.serr_mpir = std::abs(pp.scale - synth.true_scale);
      o.rerr_meir = std::abs(
          wrap_degrees(pm.rotation_degrees - synth.true_rotation_degrees));
      o.rerr_mpir = std::abs(
          wrap_degrees(pp.rotation_degrees - synth.true_rotation_degrees));
      o.ok = true;
    } catch (const std::exception&) {
      o.ok = false;
    }
  };

  const int total = nf * ns;
  if (cfg.jobs <= 1) {
    for (int task = 0; task < total; ++task) run_task(task);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> threads;
    const int workers = std::min(cfg.jobs, total);
    threads.reserve(workers);
    for (int wi = 0; wi < workers; ++wi)
      threads.emplace_back([&] {
        for (int t = next.fetch_add(1); t < total; t = next.fetch_add(1))
          run_task(t);
      });
    for (auto& th : threads) th.join();
  }

  std::vector<BenchmarkRow> rows;
  rows.reserve(ns);
  for (int si = 0; si < ns; ++si) {
    BenchmarkRow row;
    row.label = label_for(cfg, sweep[si]);
    row.sweep_value = sweep[si];
    for (int fi = 0; fi < nf; ++fi) {
      const PairOutcome& o = outcomes[static_cast<size_t>(si) * nf + fi];
      if (!o.ok) {
        ++row.failures;
        continue;
      }
      row.ndm_meir += o.ndm_meir;
      row.ndm_mpir += o.ndm_mpir;
      row.scale_err_meir += o.serr_meir;
      row.scale_err_mpir += o.serr_mpir;
      row.rot_err_meir_deg += o.rerr_meir;
      row.rot_err_mpir_deg += o.rerr_mpir;
      ++row.pairs;
    }
    if (row.pairs > 0) {
      row.ndm_meir /= row.pairs;
      row.ndm_mpir /= row.pairs;
      row.scale_err_meir /= row.pairs;
      row.scale_err_mpir /= row.pairs;
      row.rot_err_meir_deg /= row.pairs;
      row.rot_err_mpir_deg /= row.pairs;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace meir
