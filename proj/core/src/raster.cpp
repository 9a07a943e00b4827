#include "synloc/raster.hpp"

#include <numeric>
#include <string>

namespace synloc {

Raster::Raster(int w, int h, int c, float fill)
    : width(w),
      height(h),
      channels(c),
      pixels(static_cast<std::size_t>(w) * h * c, fill) {
  validate();
}

void Raster::validate() const {
  if (width < 1 || height < 1)
    fail(Errc::bad_config, "raster dimensions must be at least 1x1");
  if (channels != 1 && channels != 3)
    fail(Errc::bad_config, "raster must have 1 or 3 channels");
  if (pixels.size() != static_cast<std::size_t>(width) * height * channels)
    fail(Errc::dimension_mismatch, "raster buffer length does not match dimensions");
  for (float v : pixels)
    if (!(v >= 0.0f && v <= 1.0f))
      fail(Errc::out_of_range, "raster pixel outside [0,1]: " + std::to_string(v));
}

BinaryMask::BinaryMask(int w, int h, std::uint8_t fill)
    : width(w), height(h), labels(static_cast<std::size_t>(w) * h, fill) {
  validate();
}

std::int64_t BinaryMask::count_ones() const {
  return std::accumulate(labels.begin(), labels.end(), std::int64_t{0});
}

void BinaryMask::validate() const {
  if (width < 1 || height < 1)
    fail(Errc::bad_config, "mask dimensions must be at least 1x1");
  if (labels.size() != static_cast<std::size_t>(width) * height)
    fail(Errc::dimension_mismatch, "mask buffer length does not match dimensions");
  for (std::uint8_t v : labels)
    if (v != 0 && v != 1)
      fail(Errc::non_binary_value, "mask label not in {0,1}: " + std::to_string(v));
}

FloatMap::FloatMap(int w, int h, double fill)
    : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {
  validate();
}

void FloatMap::validate() const {
  if (width < 1 || height < 1)
    fail(Errc::bad_config, "float map dimensions must be at least 1x1");
  if (values.size() != static_cast<std::size_t>(width) * height)
    fail(Errc::dimension_mismatch, "float map buffer length does not match dimensions");
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0))
      fail(Errc::out_of_range, "float map value outside [0,1]: " + std::to_string(v));
}

BinaryMask mask_from_rect(int width, int height, int top, int left, int side) {
  if (side < 1) fail(Errc::out_of_range, "rectangle side must be at least 1");
  if (top < 0 || left < 0 || top + side > height || left + side > width)
    fail(Errc::out_of_bounds,
         "rectangle [" + std::to_string(top) + "," + std::to_string(left) +
             "]+" + std::to_string(side) + " exceeds " + std::to_string(width) +
             "x" + std::to_string(height));
  BinaryMask m(width, height, 0);
  for (int r = top; r < top + side; ++r)
    for (int c = left; c < left + side; ++c) m.at(r, c) = 1;
  return m;
}

}  // namespace synloc
