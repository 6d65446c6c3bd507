#include "meir/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "meir/errors.hpp"
#include "meir/image_io.hpp"

namespace meir {

ScalarImage::ScalarImage(int width, int height, std::vector<double> samples,
                         Rect domain)
    : width_(width), height_(height), samples_(std::move(samples)),
      domain_(domain) {
  if (width_ <= 0 || height_ <= 0)
    throw ContractError("ScalarImage: dimensions must be positive");
  if (static_cast<int>(samples_.size()) != width_ * height_)
    throw ContractError("ScalarImage: sample count must equal width*height");
  if (domain_.width() <= 0.0 || domain_.height() <= 0.0)
    throw ContractError("ScalarImage: domain sides must be positive");
  for (double v : samples_)
    if (!std::isfinite(v))
      throw ContractError("ScalarImage: samples must be finite");
}

ScalarImage ScalarImage::constant(int width, int height, double value,
                                  Rect domain) {
  return ScalarImage(width, height,
                     std::vector<double>(static_cast<size_t>(width) * height,
                                         value),
                     domain);
}

double ScalarImage::sum() const {
  return std::accumulate(samples_.begin(), samples_.end(), 0.0);
}

Grid cell_centered_grid(int nx, int ny, Rect domain) {
  if (nx < 1 || ny < 1)
    throw ContractError("cell_centered_grid: nx, ny must be >= 1");
  Grid g;
  g.nx = nx;
  g.ny = ny;
  g.domain = domain;
  g.h1 = domain.width() / nx;
  g.h2 = domain.height() / ny;
  g.points.resize(static_cast<size_t>(nx) * ny);
  for (int i2 = 0; i2 < ny; ++i2)
    for (int i1 = 0; i1 < nx; ++i1)
      g.points[static_cast<size_t>(i2) * nx + i1] =
          Point{domain.x_min + (i1 + 0.5) * g.h1,
                domain.y_min + (i2 + 0.5) * g.h2};
  return g;
}

ScaleSchedule make_schedule(std::vector<double> thetas) {
  if (thetas.empty())
    throw ContractError("ScaleSchedule: at least one scale required");
  for (size_t i = 0; i < thetas.size(); ++i) {
    if (thetas[i] < 0.0)
      throw ContractError("ScaleSchedule: scales must be nonnegative");
    if (i > 0 && thetas[i] >= thetas[i - 1])
      throw ContractError("ScaleSchedule: scales must be strictly decreasing");
  }
  return ScaleSchedule{std::move(thetas)};
}

namespace {

// Overlap of [a0,a1) with the footprint of source cell k (cells [k,k+1) in
// source index coordinates).
double overlap(double a0, double a1, int k) {
  double lo = std::max(a0, static_cast<double>(k));
  double hi = std::min(a1, static_cast<double>(k + 1));
  return std::max(0.0, hi - lo);
}

}  // namespace

ScalarImage resample_area(const ScalarImage& img, int out_width,
                          int out_height) {
  if (out_width < 1 || out_height < 1)
    throw ContractError("resample_area: output size must be positive");
  const int sw = img.width(), sh = img.height();
  const double rx = static_cast<double>(sw) / out_width;
  const double ry = static_cast<double>(sh) / out_height;
  std::vector<double> out(static_cast<size_t>(out_width) * out_height, 0.0);
  for (int oy = 0; oy < out_height; ++oy) {
    const double y0 = oy * ry, y1 = (oy + 1) * ry;
    const int ky0 = std::max(0, static_cast<int>(std::floor(y0)));
    const int ky1 = std::min(sh - 1, static_cast<int>(std::ceil(y1)) - 1);
    for (int ox = 0; ox < out_width; ++ox) {
      const double x0 = ox * rx, x1 = (ox + 1) * rx;
      const int kx0 = std::max(0, static_cast<int>(std::floor(x0)));
      const int kx1 = std::min(sw - 1, static_cast<int>(std::ceil(x1)) - 1);
      double acc = 0.0, wsum = 0.0;
      for (int ky = ky0; ky <= ky1; ++ky) {
        const double wy = overlap(y0, y1, ky);
        if (wy <= 0.0) continue;
        for (int kx = kx0; kx <= kx1; ++kx) {
          const double wx = overlap(x0, x1, kx);
          if (wx <= 0.0) continue;
          acc += wx * wy * img.at(kx, ky);
          wsum += wx * wy;
        }
      }
      out[static_cast<size_t>(oy) * out_width + ox] =
          wsum > 0.0 ? acc / wsum : 0.0;
    }
  }
  return ScalarImage(out_width, out_height, std::move(out), img.domain());
}

ScalarImage pad_image(const ScalarImage& img, double margin_fraction) {
  if (margin_fraction < 0.0 || margin_fraction >= 0.5)
    throw ContractError("pad_image: margin_fraction must be in [0, 0.5)");
  if (margin_fraction == 0.0) return img;
  const int w = img.width(), h = img.height();
  const double m = margin_fraction;
  const double shrink = 1.0 - 2.0 * m;
  // Content occupies sample-space rectangle [m*w, (1-m)*w) x [m*h, (1-m)*h).
  std::vector<double> out(static_cast<size_t>(w) * h, 0.0);
  const double cx0 = m * w, cx1 = (1.0 - m) * w;
  const double cy0 = m * h, cy1 = (1.0 - m) * h;
  for (int oy = 0; oy < h; ++oy) {
    for (int ox = 0; ox < w; ++ox) {
      // Intersection of this output cell with the content rectangle.
      const double ix0 = std::max(static_cast<double>(ox), cx0);
      const double ix1 = std::min(static_cast<double>(ox + 1), cx1);
      const double iy0 = std::max(static_cast<double>(oy), cy0);
      const double iy1 = std::min(static_cast<double>(oy + 1), cy1);
      if (ix1 <= ix0 || iy1 <= iy0) continue;
      // Map back to source sample space and area-average over the preimage.
      const double sx0 = (ix0 - cx0) / shrink, sx1 = (ix1 - cx0) / shrink;
      const double sy0 = (iy0 - cy0) / shrink, sy1 = (iy1 - cy0) / shrink;
      const int kx0 = std::max(0, static_cast<int>(std::floor(sx0)));
      const int kx1 = std::min(w - 1, static_cast<int>(std::ceil(sx1)) - 1);
      const int ky0 = std::max(0, static_cast<int>(std::floor(sy0)));
      const int ky1 = std::min(h - 1, static_cast<int>(std::ceil(sy1)) - 1);
      double acc = 0.0, wsum = 0.0;
      for (int ky = ky0; ky <= ky1; ++ky) {
        const double wy = overlap(sy0, sy1, ky);
        if (wy <= 0.0) continue;
        for (int kx = kx0; kx <= kx1; ++kx) {
          const double wx = overlap(sx0, sx1, kx);
          if (wx <= 0.0) continue;
          acc += wx * wy * img.at(kx, ky);
          wsum += wx * wy;
        }
      }
      const double mean = wsum > 0.0 ? acc / wsum : 0.0;
      // Scale by the covered fraction of the output cell so the border
      // transition is a partial-coverage average against zero.
      out[static_cast<size_t>(oy) * w + ox] =
          mean * (ix1 - ix0) * (iy1 - iy0);
    }
  }
  return ScalarImage(w, h, std::move(out), img.domain());
}

ScalarImage downsample(const ScalarImage& img, int factor) {
  if (factor < 1 || img.width() % factor != 0 || img.height() % factor != 0)
    throw ContractError("downsample: factor must divide both dimensions");
  return resample_area(img, img.width() / factor, img.height() / factor);
}

ScalarImage load_frame(const std::string& path, int target_n,
                       std::vector<std::string>* warnings) {
  if (target_n < 1)
    throw ContractError("load_frame: target_n must be positive");
  Raster raster = read_raster(path);
  if (raster.width != raster.height && warnings)
    warnings->push_back("non-square input " + std::to_string(raster.width) +
                        "x" + std::to_string(raster.height) +
                        " resampled to square");
  std::vector<double> gray = raster_to_gray01(raster);
  ScalarImage img(raster.width, raster.height, std::move(gray), unit_square());
  if (img.width() == target_n && img.height() == target_n) return img;
  return resample_area(img, target_n, target_n);
}

}  // namespace meir
