#pragma once

#include <filesystem>

#include "synloc/raster.hpp"

namespace synloc {

// Reads an 8-bit grayscale or RGB image (PNG, or binary PGM/PPM with
// maxval 255). Bytes map to [0,1] as v/255. 16-bit files, palette/alpha
// PNGs and ASCII PNMs are rejected.
Raster read_image(const std::filesystem::path& path);

// Writes an 8-bit PNG (grayscale for 1 channel, RGB for 3). Quantization
// is round(v*255), half away from zero.
void write_image(const Raster& image, const std::filesystem::path& path);

// Masks are 8-bit grayscale PNGs holding only bytes {0, 255}. Any other
// byte value is an error that reports the value and pixel position.
BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const BinaryMask& mask, const std::filesystem::path& path);

// HMAP v1: ASCII header "HMAP 1 <width> <height>\n" followed by
// width*height row-major 32-bit little-endian IEEE-754 floats.
// write-then-read round-trips bit-exactly at 32-bit precision.
void write_floatmap(const FloatMap& map, const std::filesystem::path& path);
FloatMap read_floatmap(const std::filesystem::path& path);

// Grayscale 8-bit PNG visualization, byte = round(value*255).
void write_floatmap_png(const FloatMap& map, const std::filesystem::path& path);

}  // namespace synloc
