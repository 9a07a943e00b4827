#pragma once

#include <vector>

#include "synloc/raster.hpp"
#include "synloc/rng.hpp"

namespace synloc {

// Stochastic training-time augmentation. Every transform fires
// independently with its own probability; apply_augment() runs them in
// the field order below. All transforms preserve dimensions and channel
// count and clamp output to [0,1].
struct AugmentConfig {
  double p_hflip = 0.5;
  double p_vflip = 0.5;
  double p_rot90 = 0.5;
  double p_hist_eq = 0.5;
  double p_blur = 0.5;
  double p_brightness_contrast = 0.5;
  double p_color_jitter = 0.5;  // RGB inputs only; skipped on grayscale
  double p_rescale = 0.5;
  double p_jpeg = 0.8;

  int jpeg_quality_min = 40;
  int jpeg_quality_max = 100;
  double scale_min = 0.5;
  double scale_max = 1.5;
  std::vector<int> blur_kernels{3, 5, 7};
  double brightness_delta = 0.2;  // draws are uniform in [-delta, +delta]
  double contrast_delta = 0.2;
  double saturation_delta = 0.2;
  double hue_delta = 0.2;

  void validate() const;
};

Raster apply_augment(const Raster& patch, const AugmentConfig& cfg, Rng& rng);

Raster flip_horizontal(const Raster& img);
Raster flip_vertical(const Raster& img);

// Rotates by quarter_turns * 90 degrees counterclockwise. Non-square
// inputs only support quarter_turns == 2 (dims must be preserved).
Raster rotate90(const Raster& img, int quarter_turns);

// Per-channel 256-bin CDF remap: out = cdf(bin(v)). Monotone in input
// values up to ties; a constant image maps to a constant image.
Raster hist_equalize(const Raster& img);

// Normalized box filter, odd kernel, mirror padding.
Raster box_blur(const Raster& img, int kernel);

// out = (v - 0.5) * (1 + contrast) + 0.5 + brightness, clamped.
Raster adjust_brightness_contrast(const Raster& img, double brightness,
                                  double contrast);

// HSV saturation scale (1 + saturation) and hue shift (wrapping). 3-channel
// inputs only.
Raster color_jitter(const Raster& img, double saturation, double hue);

// Bilinear resize (half-pixel centers), used by rescale_roundtrip.
Raster resize_bilinear(const Raster& img, int out_width, int out_height);

// Bilinear resize to round(dim * factor) and back to the original size.
Raster rescale_roundtrip(const Raster& img, double factor);

// Compression-artifact simulation: per channel (YCbCr for RGB), 8x8
// blockwise DCT-II, quantization by the standard luminance table scaled
// with the IJG quality rule, dequantization, inverse DCT, clamp. No
// entropy coding. Dimensions not divisible by 8 are mirror-padded
// internally and cropped back.
Raster jpeg_roundtrip(const Raster& img, int quality);

}  // namespace synloc
