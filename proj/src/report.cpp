#include "meir/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include "meir/errors.hpp"

namespace meir {

std::string format_fixed(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write file: " + path);
  for (size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows)
    for (size_t i = 0; i < row.size(); ++i)
      out << row[i] << (i + 1 < row.size() ? "," : "\n");
}

namespace {

struct Bounds {
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -std::numeric_limits<double>::infinity();
  double y_lo = std::numeric_limits<double>::infinity();
  double y_hi = -std::numeric_limits<double>::infinity();

  void add(double x, double y) {
    x_lo = std::min(x_lo, x);
    x_hi = std::max(x_hi, x);
    y_lo = std::min(y_lo, y);
    y_hi = std::max(y_hi, y);
  }
  void pad() {
    if (x_hi <= x_lo) x_hi = x_lo + 1.0;
    if (y_hi <= y_lo) y_hi = y_lo + 1.0;
  }
};

const char* kSeriesColors[] = {"#1f77b4", "#2ca02c", "#d62728", "#9467bd"};

}  // namespace

void write_svg_curve(const std::string& path,
                     const std::vector<PlotSeries>& series,
                     const std::string& x_label, const std::string& y_label) {
  const int w = 720, h = 480, margin = 56;
  Bounds b;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) b.add(x, y);
  if (series.empty() || !std::isfinite(b.x_lo)) b = Bounds{0, 1, 0, 1};
  b.pad();

  const auto px = [&](double x) {
    return margin + (x - b.x_lo) / (b.x_hi - b.x_lo) * (w - 2 * margin);
  };
  const auto py = [&](double y) {
    return h - margin - (y - b.y_lo) / (b.y_hi - b.y_lo) * (h - 2 * margin);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
      << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\""
      << w - 2 * margin << "\" height=\"" << h - 2 * margin
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  svg << "<text x=\"" << w / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\" font-size=\"14\">" << x_label
      << "</text>\n";
  svg << "<text x=\"16\" y=\"" << h / 2
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 "
         "16 "
      << h / 2 << ")\">" << y_label << "</text>\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g / %.4g", b.y_lo, b.y_hi);
  svg << "<text x=\"" << margin << "\" y=\"" << margin - 8
      << "\" font-size=\"12\" fill=\"#444\">y range: " << buf << "</text>\n";

  int color = 0;
  for (const auto& s : series) {
    svg << "<polyline fill=\"none\" stroke=\""
        << kSeriesColors[color % 4] << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : s.points) svg << px(x) << "," << py(y) << " ";
    svg << "\"/>\n";
    svg << "<text x=\"" << w - margin - 8 << "\" y=\""
        << margin + 18 + 16 * color << "\" text-anchor=\"end\" font-size=\"12\" fill=\""
        << kSeriesColors[color % 4] << "\">" << s.name << "</text>\n";
    ++color;
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw IngestError("cannot write file: " + path);
  out << svg.str();
}

void write_svg_deformed_grid(const std::string& path,
                             const DisplacementField& u, int stride) {
  const Grid& g = u.grid;
  const int w = 560, h = 560, margin = 20;
  const auto px = [&](double x) {
    return margin + (x - g.domain.x_min) / g.domain.width() * (w - 2 * margin);
  };
  const auto py = [&](double y) {
    return h - margin -
           (y - g.domain.y_min) / g.domain.height() * (h - 2 * margin);
  };
  const auto phi = [&](int i1, int i2) {
    const int j = i2 * g.nx + i1;
    return Point{g.points[j].x1 - u.u1[j], g.points[j].x2 - u.u2[j]};
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int i2 = 0; i2 < g.ny; i2 += stride) {
    svg << "<polyline fill=\"none\" stroke=\"#3465a4\" stroke-width=\"0.8\" "
           "points=\"";
    for (int i1 = 0; i1 < g.nx; ++i1) {
      const Point p = phi(i1, i2);
      svg << px(p.x1) << "," << py(p.x2) << " ";
    }
    svg << "\"/>\n";
  }
  for (int i1 = 0; i1 < g.nx; i1 += stride) {
    svg << "<polyline fill=\"none\" stroke=\"#3465a4\" stroke-width=\"0.8\" "
           "points=\"";
    for (int i2 = 0; i2 < g.ny; ++i2) {
      const Point p = phi(i1, i2);
      svg << px(p.x1) << "," << py(p.x2) << " ";
    }
    svg << "\"/>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw IngestError("cannot write file: " + path);
  out << svg.str();
}

void write_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write file: " + path);
  out << "command=" << m.command << "\n";
  for (const auto& in : m.inputs) out << "input=" << in << "\n";
  for (const auto& [k, v] : m.config) out << k << "=" << v << "\n";
  out << "seed=" << m.seed << "\n";
  out << "version=" << m.tool_version << "\n";
  out << "started=" << m.started_at << "\n";
  out << "finished=" << m.finished_at << "\n";
  for (const auto& o : m.outputs) out << "output=" << o << "\n";
}

std::string iso_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc;
  gmtime_r(&tt, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace meir
