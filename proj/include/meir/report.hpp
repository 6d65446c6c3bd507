#pragma once

#include <string>
#include <utility>
#include <vector>

#include "meir/transform.hpp"

namespace meir {

// Fixed 6-decimal formatting so CSV diffs are meaningful.
std::string format_fixed(double v);

void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

struct PlotSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Standalone SVG polyline plot, one polyline per series.
void write_svg_curve(const std::string& path,
                     const std::vector<PlotSeries>& series,
                     const std::string& x_label, const std::string& y_label);

// Draws grid lines mapped through phi = Id - u.
void write_svg_deformed_grid(const std::string& path,
                             const DisplacementField& u, int stride = 4);

struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  std::vector<std::pair<std::string, std::string>> config;
  std::string seed;
  std::string tool_version;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;
};

void write_manifest(const std::string& path, const RunManifest& m);
std::string iso_timestamp_now();

}  // namespace meir
