#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "synloc/errors.hpp"

namespace synloc {

// Image with normalized pixels in [0,1]. Row-major, channel-interleaved.
// Immutable by convention once constructed; operations return new rasters.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> pixels;

  Raster() = default;
  Raster(int w, int h, int c, float fill = 0.0f);

  float at(int row, int col, int ch = 0) const {
    return pixels[index(row, col, ch)];
  }
  float& at(int row, int col, int ch = 0) { return pixels[index(row, col, ch)]; }

  std::size_t index(int row, int col, int ch) const {
    return (static_cast<std::size_t>(row) * width + col) * channels + ch;
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }

  // Throws Errc::bad_config / out_of_range when an invariant is violated.
  void validate() const;
};

// Per-pixel ground-truth labels: 1 = synthetic, 0 = pristine.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;

  BinaryMask() = default;
  BinaryMask(int w, int h, std::uint8_t fill = 0);

  std::uint8_t at(int row, int col) const {
    return labels[static_cast<std::size_t>(row) * width + col];
  }
  std::uint8_t& at(int row, int col) {
    return labels[static_cast<std::size_t>(row) * width + col];
  }

  std::int64_t count_ones() const;
  void validate() const;
};

// Real-valued per-pixel map in [0,1] (the estimated tampering heatmap).
// Stored as doubles so downstream aggregation checks hold to 1e-12; the
// on-disk format is 32-bit (see image_io.hpp).
struct FloatMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  FloatMap() = default;
  FloatMap(int w, int h, double fill = 0.0);

  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * width + col];
  }
  double& at(int row, int col) {
    return values[static_cast<std::size_t>(row) * width + col];
  }

  void validate() const;
};

// All-zero mask with the square [top, top+side) x [left, left+side) set to 1.
BinaryMask mask_from_rect(int width, int height, int top, int left, int side);

}  // namespace synloc
