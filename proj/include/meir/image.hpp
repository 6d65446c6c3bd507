#pragma once

#include <string>
#include <vector>

namespace meir {

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
};

// Axis-aligned rectangle in domain coordinates.
struct Rect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 1.0;
  double y_max = 1.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  bool contains(const Point& p) const {
    return p.x1 >= x_min && p.x1 <= x_max && p.x2 >= y_min && p.x2 <= y_max;
  }
};

inline Rect unit_square() { return Rect{0.0, 0.0, 1.0, 1.0}; }

// Grayscale intensity field sampled on a regular cell-centered grid.
// Samples are row-major with x1 fastest: samples[i2 * width + i1].
class ScalarImage {
 public:
  ScalarImage() = default;
  ScalarImage(int width, int height, std::vector<double> samples,
              Rect domain = unit_square());
  static ScalarImage constant(int width, int height, double value,
                              Rect domain = unit_square());

  int width() const { return width_; }
  int height() const { return height_; }
  const Rect& domain() const { return domain_; }
  const std::vector<double>& samples() const { return samples_; }
  std::vector<double>& samples() { return samples_; }

  double at(int i1, int i2) const { return samples_[i2 * width_ + i1]; }
  double& at(int i1, int i2) { return samples_[i2 * width_ + i1]; }
  double sum() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> samples_;
  Rect domain_ = unit_square();
};

// Cell-centered grid over a rectangle. Point j, with j = i2*nx + i1, sits at
// (x_min + (i1+1/2)h1, y_min + (i2+1/2)h2).
struct Grid {
  int nx = 0;
  int ny = 0;
  Rect domain;
  double h1 = 0.0;
  double h2 = 0.0;
  std::vector<Point> points;

  int size() const { return nx * ny; }
  double cell_area() const { return h1 * h2; }
};

Grid cell_centered_grid(int nx, int ny, Rect domain = unit_square());

// Decreasing ladder of smoothing scales; the last entry may be 0.
struct ScaleSchedule {
  std::vector<double> thetas;
};

ScaleSchedule make_schedule(std::vector<double> thetas);
inline ScaleSchedule default_schedule() {
  return make_schedule({100.0, 10.0, 1.0, 0.0});
}

// Area-weighted resampling to a new sample count (exact block averaging when
// the ratio is an integer).
ScalarImage resample_area(const ScalarImage& img, int out_width, int out_height);

// Shrinks the content into the central (1 - 2*margin) fraction of the domain
// and fills the border band with zeros. Sample count is unchanged.
ScalarImage pad_image(const ScalarImage& img, double margin_fraction);

// Downsample by an integer factor with block averaging (used by the two-level
// pre-registration path).
ScalarImage downsample(const ScalarImage& img, int factor);

// Reads an 8-bit PNG/PGM/PPM raster, converts to luminance in [0,1] and
// resamples to target_n x target_n over the unit square. Non-square inputs
// are resampled anyway and a warning is recorded when `warnings` is given.
ScalarImage load_frame(const std::string& path, int target_n,
                       std::vector<std::string>* warnings = nullptr);

}  // namespace meir
