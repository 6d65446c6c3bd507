// meir - multiscale elastic image registration for frame sequences.
//
// Subcommands: register, speed, bench, synth. All outputs land in --out
// together with a plain-text run manifest; reruns with the same seed are
// byte-identical apart from manifest timestamps.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "meir/errors.hpp"
#include "meir/image.hpp"
#include "meir/image_io.hpp"
#include "meir/pipeline.hpp"
#include "meir/report.hpp"
#include "meir/synth.hpp"

namespace fs = std::filesystem;
using namespace meir;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIngest = 2;
constexpr int kExitSolver = 3;

struct CommonOpts {
  std::string method = "meir";
  std::vector<double> scales = {100.0, 10.0, 1.0, 0.0};
  double alpha = 10.0;
  double mu = 1.0;
  double lambda = 0.0;
  int grid = 128;
  bool two_level = false;
  int iterate = 2;
  std::uint64_t seed = 1;
  std::string out = "meir-out";
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_method = true) {
  if (with_method)
    cmd->add_option("--method", o.method, "Registration method")
        ->check(CLI::IsMember({"mpir", "meir"}));
  cmd->add_option("--scales", o.scales,
                  "Decreasing smoothing scales (last may be 0)")
      ->delimiter(',');
  cmd->add_option("--alpha", o.alpha, "Elastic regularization weight");
  cmd->add_option("--mu", o.mu, "Lame constant mu");
  cmd->add_option("--lambda", o.lambda, "Lame constant lambda");
  cmd->add_option("--grid", o.grid, "Working grid resolution (power of two)");
  cmd->add_flag("--two-level", o.two_level,
                "Two-level (half then full resolution) pre-registration");
  cmd->add_option("--iterate", o.iterate, "MEIR passes (1 or 2)")
      ->check(CLI::IsMember({1, 2}));
  cmd->add_option("--seed", o.seed, "Seed for synthetic deformations");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--jobs", o.jobs, "Parallel registrations");
}

RegistrationConfig to_reg_config(const CommonOpts& o) {
  RegistrationConfig cfg;
  cfg.schedule = make_schedule(o.scales);
  cfg.grid_n = o.grid;
  cfg.elastic = ElasticConfig{o.alpha, o.lambda, o.mu};
  cfg.prereg_two_level = o.two_level;
  cfg.iterate_twice = o.iterate == 2;
  return cfg;
}

Method resolve_method(const CommonOpts& o) {
  if (o.method == "mpir") return Method::Mpir;
  return o.iterate == 2 ? Method::MeirIterated : Method::Meir;
}

std::vector<std::pair<std::string, std::string>> config_entries(
    const CommonOpts& o) {
  std::string scales;
  for (size_t i = 0; i < o.scales.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", o.scales[i]);
    scales += buf;
    if (i + 1 < o.scales.size()) scales += ",";
  }
  return {{"method", o.method},
          {"scales", scales},
          {"alpha", format_fixed(o.alpha)},
          {"mu", format_fixed(o.mu)},
          {"lambda", format_fixed(o.lambda)},
          {"grid", std::to_string(o.grid)},
          {"two_level", o.two_level ? "1" : "0"},
          {"iterate", std::to_string(o.iterate)},
          {"jobs", std::to_string(o.jobs)}};
}

std::vector<std::string> list_frames(const std::string& dir) {
  std::vector<std::string> paths;
  if (!fs::is_directory(dir))
    throw IngestError("not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".pgm" || ext == ".ppm")
      paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  return paths;
}

ScalarImage difference_image(const ScalarImage& a, const ScalarImage& b) {
  std::vector<double> d(a.samples().size());
  for (size_t i = 0; i < d.size(); ++i)
    d[i] = std::abs(a.samples()[i] - b.samples()[i]);
  return ScalarImage(a.width(), a.height(), std::move(d), a.domain());
}

RunManifest start_manifest(const std::string& command, const CommonOpts& o) {
  RunManifest m;
  m.command = command;
  m.config = config_entries(o);
  m.seed = std::to_string(o.seed);
  m.tool_version = MEIR_VERSION;
  m.started_at = iso_timestamp_now();
  return m;
}

int cmd_register(const std::string& ref_path, const std::string& tpl_path,
                 const CommonOpts& o) {
  RunManifest manifest = start_manifest("register", o);
  manifest.inputs = {ref_path, tpl_path};
  fs::create_directories(o.out);

  const ScalarImage ref = load_frame(ref_path, o.grid);
  const ScalarImage tpl = load_frame(tpl_path, o.grid);
  const RegistrationConfig cfg = to_reg_config(o);

  RegistrationResult res;
  switch (resolve_method(o)) {
    case Method::Mpir: res = run_mpir(ref, tpl, cfg); break;
    case Method::Meir: res = run_meir(ref, tpl, cfg); break;
    case Method::MeirIterated: res = run_meir_iterated(ref, tpl, cfg); break;
  }
  const Pose pose = extract_pose(res);

  const std::string result_csv = (fs::path(o.out) / "result.csv").string();
  write_csv(result_csv,
            {"method", "ndm", "scale", "rotation_deg", "tx", "ty",
             "wall_seconds", "failed_scales"},
            {{to_string(res.method), format_fixed(res.ndm),
              format_fixed(pose.scale), format_fixed(pose.rotation_degrees),
              format_fixed(pose.tx), format_fixed(pose.ty),
              format_fixed(res.wall_time_seconds),
              res.any_scale_failed ? "1" : "0"}});

  std::vector<std::vector<std::string>> trace_rows;
  for (const ScaleReport& rep : res.per_scale)
    trace_rows.push_back({std::to_string(rep.step), format_fixed(rep.theta),
                          format_fixed(rep.objective_before),
                          format_fixed(rep.objective_after),
                          std::to_string(rep.iterations),
                          to_string(rep.stop_reason),
                          rep.converged ? "1" : "0"});
  const std::string trace_csv = (fs::path(o.out) / "trace.csv").string();
  write_csv(trace_csv,
            {"step", "theta", "objective_before", "objective_after",
             "iterations", "stop_reason", "converged"},
            trace_rows);

  const std::string warped_png = (fs::path(o.out) / "warped.png").string();
  write_png_gray(warped_png, res.warped_template);
  const std::string diff_png = (fs::path(o.out) / "difference.png").string();
  write_png_gray(diff_png, difference_image(resample_area(ref, o.grid, o.grid),
                                            res.warped_template));
  const std::string grid_svg = (fs::path(o.out) / "grid.svg").string();
  write_svg_deformed_grid(grid_svg, res.final_displacement,
                          std::max(1, o.grid / 32));

  manifest.outputs = {result_csv, trace_csv, warped_png, diff_png, grid_svg};
  manifest.finished_at = iso_timestamp_now();
  write_manifest((fs::path(o.out) / "manifest.txt").string(), manifest);

  std::cout << "ndm=" << format_fixed(res.ndm)
            << " scale=" << format_fixed(pose.scale)
            << " rotation_deg=" << format_fixed(pose.rotation_degrees)
            << " wall=" << format_fixed(res.wall_time_seconds) << "s\n";
  return 0;
}

int cmd_speed(const std::string& frames_dir, bool both, const CommonOpts& o) {
  RunManifest manifest = start_manifest("speed", o);
  fs::create_directories(o.out);

  const std::vector<std::string> paths = list_frames(frames_dir);
  if (paths.size() < 2)
    throw IngestError("speed: need at least two frames in " + frames_dir);
  manifest.inputs = paths;

  std::vector<ScalarImage> frames;
  frames.reserve(paths.size());
  for (const auto& p : paths) frames.push_back(load_frame(p, o.grid));

  const RegistrationConfig cfg = to_reg_config(o);
  const Method primary = resolve_method(o);
  const NdmCurve curve = run_speed_curve(frames, primary, cfg, o.jobs);
  NdmCurve mpir_curve;
  if (both && primary != Method::Mpir)
    mpir_curve = run_speed_curve(frames, Method::Mpir, cfg, o.jobs);

  std::vector<std::string> header = {"pair_index", "template_frame",
                                     "reference_frame",
                                     primary == Method::Mpir ? "ndm_mpir"
                                                             : "ndm_meir"};
  if (!mpir_curve.pairs.empty()) header.push_back("ndm_mpir");
  header.push_back("flagged");

  std::vector<std::vector<std::string>> rows;
  PlotSeries series_a{primary == Method::Mpir ? "mpir" : "meir", {}};
  PlotSeries series_b{"mpir", {}};
  for (size_t k = 0; k < curve.pairs.size(); ++k) {
    std::vector<std::string> row = {
        std::to_string(k), fs::path(paths[k]).filename().string(),
        fs::path(paths[k + 1]).filename().string(),
        format_fixed(curve.pairs[k].ndm)};
    series_a.points.emplace_back(static_cast<double>(k), curve.pairs[k].ndm);
    if (!mpir_curve.pairs.empty()) {
      row.push_back(format_fixed(mpir_curve.pairs[k].ndm));
      series_b.points.emplace_back(static_cast<double>(k),
                                   mpir_curve.pairs[k].ndm);
    }
    row.push_back(curve.pairs[k].flagged ? "1" : "0");
    rows.push_back(std::move(row));
  }

  const std::string curve_csv = (fs::path(o.out) / "curve.csv").string();
  write_csv(curve_csv, header, rows);
  std::vector<PlotSeries> series{series_a};
  if (!series_b.points.empty()) series.push_back(series_b);
  const std::string curve_svg = (fs::path(o.out) / "curve.svg").string();
  write_svg_curve(curve_svg, series, "pair index", "NDM");

  manifest.outputs = {curve_csv, curve_svg};
  manifest.finished_at = iso_timestamp_now();
  write_manifest((fs::path(o.out) / "manifest.txt").string(), manifest);
  std::cout << "wrote " << curve_csv << " (" << rows.size() << " pairs)\n";
  return 0;
}

int cmd_bench(const std::string& frames_dir, const std::string& case_name,
              std::vector<double> sweep, const std::string& sweep_param,
              double intensity, double fixed_rotation, double fixed_scale,
              int textures, const CommonOpts& o) {
  RunManifest manifest = start_manifest("bench", o);
  fs::create_directories(o.out);

  std::vector<ScalarImage> frames;
  if (textures > 0) {
    for (int i = 0; i < textures; ++i)
      frames.push_back(make_texture(mix_seed(o.seed, 1000 + i), o.grid));
    manifest.inputs = {"textures:" + std::to_string(textures)};
  } else {
    const std::vector<std::string> paths = list_frames(frames_dir);
    if (paths.empty()) throw IngestError("bench: no frames in " + frames_dir);
    manifest.inputs = paths;
    for (const auto& p : paths) frames.push_back(load_frame(p, o.grid));
  }

  BenchmarkConfig bcfg;
  bcfg.bench_case = parse_bench_case(case_name);
  bcfg.sweep_param = sweep_param.empty()
                         ? default_sweep_param(bcfg.bench_case)
                         : (sweep_param == "rotation" ? SweepParam::Rotation
                            : sweep_param == "scale"  ? SweepParam::Scale
                                                      : SweepParam::Intensity);
  bcfg.sweep = std::move(sweep);
  bcfg.elastic_intensity = intensity;
  bcfg.fixed_rotation_degrees = fixed_rotation;
  bcfg.fixed_scale = fixed_scale;
  bcfg.seed = o.seed;
  bcfg.jobs = o.jobs;
  bcfg.reg = to_reg_config(o);

  const std::vector<BenchmarkRow> rows = run_benchmark(frames, bcfg);

  std::vector<std::vector<std::string>> csv_rows;
  for (const auto& r : rows)
    csv_rows.push_back({r.label, format_fixed(r.ndm_meir),
                        format_fixed(r.ndm_mpir),
                        format_fixed(r.scale_err_meir),
                        format_fixed(r.scale_err_mpir),
                        format_fixed(r.rot_err_meir_deg),
                        format_fixed(r.rot_err_mpir_deg),
                        std::to_string(r.pairs), std::to_string(r.failures)});
  const std::string bench_csv =
      (fs::path(o.out) / ("bench_" + case_name + ".csv")).string();
  write_csv(bench_csv,
            {"sweep", "ndm_meir", "ndm_mpir", "scale_err_meir",
             "scale_err_mpir", "rot_err_meir_deg", "rot_err_mpir_deg",
             "pairs", "failures"},
            csv_rows);

  manifest.outputs = {bench_csv};
  manifest.finished_at = iso_timestamp_now();
  write_manifest((fs::path(o.out) / "manifest.txt").string(), manifest);
  std::cout << "wrote " << bench_csv << " (" << rows.size() << " rows)\n";
  return 0;
}

int cmd_synth(const std::string& input, const std::string& kind, double scale,
              double rotation, double intensity, double sigma, double margin,
              int texture_n, const CommonOpts& o) {
  RunManifest manifest = start_manifest("synth", o);
  fs::create_directories(o.out);

  ScalarImage frame = texture_n > 0 ? make_texture(o.seed, o.grid)
                                    : load_frame(input, o.grid);
  manifest.inputs = {texture_n > 0 ? "texture" : input};

  SynthSpec spec;
  spec.kind = kind == "rigid" ? SynthKind::Rigid
              : kind == "elastic" ? SynthKind::Elastic
                                  : SynthKind::RigidElastic;
  spec.scale = scale;
  spec.rotation_degrees = rotation;
  spec.elastic_intensity = intensity;
  spec.smoothing_sigma = sigma;
  spec.pad_margin = margin;
  spec.seed = o.seed;

  const SyntheticFrame result = make_synthetic(frame, spec);
  const std::string ref_png = (fs::path(o.out) / "reference.png").string();
  const std::string tpl_png = (fs::path(o.out) / "template.png").string();
  write_png_gray(ref_png, result.reference);
  write_png_gray(tpl_png, result.image);
  const std::string truth_csv = (fs::path(o.out) / "truth.csv").string();
  write_csv(truth_csv, {"kind", "scale", "rotation_deg", "intensity", "seed"},
            {{kind, format_fixed(result.true_scale),
              format_fixed(result.true_rotation_degrees),
              format_fixed(intensity), std::to_string(o.seed)}});

  manifest.outputs = {ref_png, tpl_png, truth_csv};
  manifest.finished_at = iso_timestamp_now();
  write_manifest((fs::path(o.out) / "manifest.txt").string(), manifest);
  std::cout << "wrote " << ref_png << " and " << tpl_png << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale elastic image registration for frame sequences"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value file");

  CommonOpts opts;

  std::string ref_path, tpl_path;
  CLI::App* reg = app.add_subcommand("register", "Register a frame pair");
  reg->add_option("reference", ref_path, "Reference frame")->required();
  reg->add_option("template", tpl_path, "Template frame")->required();
  add_common(reg, opts);

  std::string frames_dir;
  bool both = false;
  CLI::App* speed = app.add_subcommand(
      "speed", "NDM curve over consecutive frames in a directory");
  speed->add_option("frames", frames_dir, "Directory of frames")->required();
  speed->add_flag("--both", both, "Also compute the MPIR curve");
  add_common(speed, opts);

  std::string case_name = "i", sweep_param;
  std::vector<double> sweep;
  double intensity = 5.0, fixed_rotation = 20.0, fixed_scale = 1.4;
  int textures = 0;
  std::string bench_dir;
  CLI::App* bench = app.add_subcommand(
      "bench", "Synthetic-deformation benchmark with ground-truth errors");
  bench->add_option("frames", bench_dir, "Directory of frames (optional with --textures)");
  bench->add_option("--case", case_name, "Benchmark case: i, ii, iii or iv")
      ->check(CLI::IsMember({"i", "ii", "iii", "iv"}));
  bench->add_option("--sweep", sweep, "Sweep values")->delimiter(',');
  bench->add_option("--sweep-param", sweep_param,
                    "Swept parameter: intensity, rotation or scale")
      ->check(CLI::IsMember({"", "intensity", "rotation", "scale"}));
  bench->add_option("--intensity", intensity, "Elastic intensity (cells)");
  bench->add_option("--fixed-rotation", fixed_rotation,
                    "Fixed rotation for case iv scale sweeps");
  bench->add_option("--fixed-scale", fixed_scale,
                    "Fixed scale for case iv rotation sweeps");
  bench->add_option("--textures", textures,
                    "Generate this many texture frames instead of reading files");
  add_common(bench, opts, false);

  std::string synth_input, synth_kind = "rigid+elastic";
  double synth_scale = 1.0, synth_rotation = 0.0, synth_intensity = 0.0;
  double synth_sigma = 5.0, synth_margin = 0.25;
  int synth_texture = 0;
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate a synthetic reference/template pair");
  synth->add_option("input", synth_input, "Input frame (optional with --texture)");
  synth->add_option("--kind", synth_kind, "rigid, elastic or rigid+elastic")
      ->check(CLI::IsMember({"rigid", "elastic", "rigid+elastic"}));
  synth->add_option("--scale", synth_scale, "Scale factor");
  synth->add_option("--rotation", synth_rotation, "Rotation in degrees");
  synth->add_option("--intensity", synth_intensity, "Elastic intensity (cells)");
  synth->add_option("--sigma", synth_sigma, "Gaussian smoothing (cells)");
  synth->add_option("--margin", synth_margin, "Zero-padding margin fraction");
  synth->add_flag("--texture", synth_texture, "Use a generated texture");
  add_common(synth, opts, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (reg->parsed()) return cmd_register(ref_path, tpl_path, opts);
    if (speed->parsed()) return cmd_speed(frames_dir, both, opts);
    if (bench->parsed())
      return cmd_bench(bench_dir, case_name, sweep, sweep_param, intensity,
                       fixed_rotation, fixed_scale, textures, opts);
    if (synth->parsed())
      return cmd_synth(synth_input, synth_kind, synth_scale, synth_rotation,
                       synth_intensity, synth_sigma, synth_margin,
                       synth_texture, opts);
  } catch (const IngestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIngest;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitUsage;
}
