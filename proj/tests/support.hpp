#pragma once

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "meir/image.hpp"

namespace meir::test {

inline double rand01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double rand_in(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * rand01(g);
}

// Random image with enough structure for gradient checks.
inline ScalarImage random_image(std::mt19937_64& g, int n) {
  std::vector<double> s(static_cast<size_t>(n) * n);
  for (auto& v : s) v = rand01(g);
  return ScalarImage(n, n, std::move(s));
}

// Scratch directory unique to the process; removed lazily by the OS.
inline std::filesystem::path scratch_dir() {
  static const std::filesystem::path dir = [] {
    auto d = std::filesystem::temp_directory_path() /
             ("meir_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

}  // namespace meir::test
