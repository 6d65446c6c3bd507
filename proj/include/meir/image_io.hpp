#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meir/image.hpp"

namespace meir {

// Decoded 8-bit raster, row-major, `channels` interleaved (1=gray, 3=RGB).
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;
};

// Reads PGM (P2/P5), PPM (P3/P6) or PNG (8-bit gray/RGB/palette/alpha).
Raster read_raster(const std::string& path);

// Luminance conversion with weights (0.299, 0.587, 0.114), scaled to [0,1].
std::vector<double> raster_to_gray01(const Raster& r);

// Writers clamp samples to [0,1] and quantize to 8 bits.
void write_pgm(const std::string& path, const ScalarImage& img);
void write_png_gray(const std::string& path, const ScalarImage& img);

}  // namespace meir
