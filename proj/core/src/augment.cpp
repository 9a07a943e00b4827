#include "synloc/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace synloc {

namespace {

constexpr double kPi = 3.14159265358979323846;

float clamp01(double v) {
  return static_cast<float>(std::min(1.0, std::max(0.0, v)));
}

void check_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0))
    fail(Errc::bad_config, std::string(name) + " probability outside [0,1]");
}

// Mirror index into [0, n): ... 2 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
int mirror(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -1 - i;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

// --- RGB <-> HSV on [0,1] floats -------------------------------------------

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d <= 0.0) {
    h = 0.0;
    return;
  }
  if (mx == r)
    h = std::fmod((g - b) / d, 6.0);
  else if (mx == g)
    h = (b - r) / d + 2.0;
  else
    h = (r - g) / d + 4.0;
  h /= 6.0;
  if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  h = h - std::floor(h);
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r1 = 0, g1 = 0, b1 = 0;
  if (hp < 1)      { r1 = c; g1 = x; }
  else if (hp < 2) { r1 = x; g1 = c; }
  else if (hp < 3) { g1 = c; b1 = x; }
  else if (hp < 4) { g1 = x; b1 = c; }
  else if (hp < 5) { r1 = x; b1 = c; }
  else             { r1 = c; b1 = x; }
  const double m = v - c;
  r = r1 + m;
  g = g1 + m;
  b = b1 + m;
}

// --- 8x8 DCT-II machinery for the compression simulator --------------------

struct DctTables {
  double cosine[8][8];  // cosine[u][x] = cos((2x+1) u pi / 16)
  double cu[8];
  DctTables() {
    for (int u = 0; u < 8; ++u) {
      cu[u] = u == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
      for (int x = 0; x < 8; ++x)
        cosine[u][x] = std::cos((2.0 * x + 1.0) * u * kPi / 16.0);
    }
  }
};

const DctTables& dct_tables() {
  static const DctTables t;
  return t;
}

// Annex-K luminance quantization table.
constexpr int kLumaQuant[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};

std::array<double, 64> quant_table(int quality) {
  const double scale =
      quality < 50 ? 5000.0 / quality : 200.0 - 2.0 * quality;
  std::array<double, 64> t;
  for (int i = 0; i < 64; ++i)
    t[i] = std::max(1.0, std::round(kLumaQuant[i] * scale / 100.0));
  return t;
}

void dct8x8(const double in[8][8], double out[8][8]) {
  const DctTables& t = dct_tables();
  double tmp[8][8];  // tmp[u][y] = sum_x in[x][y] cos[u][x]
  for (int u = 0; u < 8; ++u)
    for (int y = 0; y < 8; ++y) {
      double acc = 0.0;
      for (int x = 0; x < 8; ++x) acc += in[x][y] * t.cosine[u][x];
      tmp[u][y] = acc;
    }
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      double acc = 0.0;
      for (int y = 0; y < 8; ++y) acc += tmp[u][y] * t.cosine[v][y];
      out[u][v] = 0.25 * t.cu[u] * t.cu[v] * acc;
    }
}

void idct8x8(const double in[8][8], double out[8][8]) {
  const DctTables& t = dct_tables();
  double tmp[8][8];  // tmp[x][v] = sum_u cu[u] in[u][v] cos[u][x]
  for (int x = 0; x < 8; ++x)
    for (int v = 0; v < 8; ++v) {
      double acc = 0.0;
      for (int u = 0; u < 8; ++u) acc += t.cu[u] * in[u][v] * t.cosine[u][x];
      tmp[x][v] = acc;
    }
  for (int x = 0; x < 8; ++x)
    for (int y = 0; y < 8; ++y) {
      double acc = 0.0;
      for (int v = 0; v < 8; ++v) acc += t.cu[v] * tmp[x][v] * t.cosine[v][y];
      out[x][y] = 0.25 * acc;
    }
}

// Quantization round-trip of one plane given in byte scale (0..255,
// centered at 128 inside the transform). Plane dims already multiples of 8.
void jpeg_plane(std::vector<double>& plane, int width, int height,
                const std::array<double, 64>& qt) {
  double block[8][8], coef[8][8], rec[8][8];
  for (int by = 0; by < height; by += 8)
    for (int bx = 0; bx < width; bx += 8) {
      for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 8; ++y)
          block[x][y] = plane[static_cast<std::size_t>(by + x) * width + bx + y] -
                        128.0;
      dct8x8(block, coef);
      for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
          const double q = qt[u * 8 + v];
          coef[u][v] = std::round(coef[u][v] / q) * q;
        }
      idct8x8(coef, rec);
      for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 8; ++y)
          plane[static_cast<std::size_t>(by + x) * width + bx + y] =
              rec[x][y] + 128.0;
    }
}

}  // namespace

void AugmentConfig::validate() const {
  check_prob(p_hflip, "h-flip");
  check_prob(p_vflip, "v-flip");
  check_prob(p_rot90, "rot90");
  check_prob(p_hist_eq, "hist-eq");
  check_prob(p_blur, "blur");
  check_prob(p_brightness_contrast, "brightness/contrast");
  check_prob(p_color_jitter, "color-jitter");
  check_prob(p_rescale, "rescale");
  check_prob(p_jpeg, "jpeg");
  if (jpeg_quality_min < 40 || jpeg_quality_max > 100 ||
      jpeg_quality_min > jpeg_quality_max)
    fail(Errc::bad_config, "jpeg quality bounds must satisfy 40 <= min <= max <= 100");
  if (!(scale_min >= 0.5 && scale_max <= 1.5 && scale_min <= scale_max))
    fail(Errc::bad_config, "scale bounds must satisfy 0.5 <= min <= max <= 1.5");
  if (blur_kernels.empty())
    fail(Errc::bad_config, "blur kernel set must not be empty");
  for (int k : blur_kernels)
    if (k < 3 || k % 2 == 0)
      fail(Errc::bad_config, "blur kernels must be odd and >= 3");
  if (brightness_delta < 0 || contrast_delta < 0 || saturation_delta < 0 ||
      hue_delta < 0)
    fail(Errc::bad_config, "jitter deltas must be non-negative");
}

Raster flip_horizontal(const Raster& img) {
  Raster out = img;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int ch = 0; ch < img.channels; ++ch)
        out.at(r, c, ch) = img.at(r, img.width - 1 - c, ch);
  return out;
}

Raster flip_vertical(const Raster& img) {
  Raster out = img;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int ch = 0; ch < img.channels; ++ch)
        out.at(r, c, ch) = img.at(img.height - 1 - r, c, ch);
  return out;
}

Raster rotate90(const Raster& img, int quarter_turns) {
  int k = ((quarter_turns % 4) + 4) % 4;
  if (k == 0) return img;
  if (img.width != img.height && k != 2)
    fail(Errc::shape_mismatch,
         "90/270-degree rotation of a non-square raster changes dimensions");
  Raster out = img;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int ch = 0; ch < img.channels; ++ch) {
        float v;
        if (k == 1)  // counterclockwise
          v = img.at(c, img.width - 1 - r, ch);
        else if (k == 2)
          v = img.at(img.height - 1 - r, img.width - 1 - c, ch);
        else
          v = img.at(img.height - 1 - c, r, ch);
        out.at(r, c, ch) = v;
      }
  return out;
}

Raster hist_equalize(const Raster& img) {
  Raster out = img;
  const std::size_t n = img.pixel_count();
  const auto bin = [](float v) {
    return std::min<long>(255, std::max<long>(0, std::lround(v * 255.0f)));
  };
  for (int ch = 0; ch < img.channels; ++ch) {
    std::array<std::int64_t, 256> hist{};
    for (std::size_t i = 0; i < n; ++i)
      hist[bin(img.pixels[i * img.channels + ch])]++;
    std::array<double, 256> cdf{};
    std::int64_t run = 0;
    for (int b = 0; b < 256; ++b) {
      run += hist[b];
      cdf[b] = static_cast<double>(run) / static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i)
      out.pixels[i * img.channels + ch] =
          clamp01(cdf[bin(img.pixels[i * img.channels + ch])]);
  }
  return out;
}

Raster box_blur(const Raster& img, int kernel) {
  if (kernel < 3 || kernel % 2 == 0)
    fail(Errc::out_of_range, "blur kernel must be odd and >= 3");
  const int half = kernel / 2;
  // Separable pass: rows then columns, 64-bit accumulation.
  Raster tmp = img;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int ch = 0; ch < img.channels; ++ch) {
        double acc = 0.0;
        for (int d = -half; d <= half; ++d)
          acc += img.at(r, mirror(c + d, img.width), ch);
        tmp.at(r, c, ch) = static_cast<float>(acc / kernel);
      }
  Raster out = img;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int ch = 0; ch < img.channels; ++ch) {
        double acc = 0.0;
        for (int d = -half; d <= half; ++d)
          acc += tmp.at(mirror(r + d, img.height), c, ch);
        out.at(r, c, ch) = clamp01(acc / kernel);
      }
  return out;
}

Raster adjust_brightness_contrast(const Raster& img, double brightness,
                                  double contrast) {
  Raster out = img;
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    out.pixels[i] =
        clamp01((img.pixels[i] - 0.5) * (1.0 + contrast) + 0.5 + brightness);
  return out;
}

Raster color_jitter(const Raster& img, double saturation, double hue) {
  if (img.channels != 3)
    fail(Errc::shape_mismatch, "color jitter requires a 3-channel raster");
  Raster out = img;
  const std::size_t n = img.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    double h, s, v;
    rgb_to_hsv(img.pixels[i * 3], img.pixels[i * 3 + 1], img.pixels[i * 3 + 2],
               h, s, v);
    h += hue;
    s = std::min(1.0, std::max(0.0, s * (1.0 + saturation)));
    double r, g, b;
    hsv_to_rgb(h, s, v, r, g, b);
    out.pixels[i * 3] = clamp01(r);
    out.pixels[i * 3 + 1] = clamp01(g);
    out.pixels[i * 3 + 2] = clamp01(b);
  }
  return out;
}

Raster resize_bilinear(const Raster& img, int out_width, int out_height) {
  if (out_width < 1 || out_height < 1)
    fail(Errc::out_of_range, "resize target must be at least 1x1");
  Raster out;
  out.width = out_width;
  out.height = out_height;
  out.channels = img.channels;
  out.pixels.resize(static_cast<std::size_t>(out_width) * out_height *
                    img.channels);
  const double sx = static_cast<double>(img.width) / out_width;
  const double sy = static_cast<double>(img.height) / out_height;
  for (int r = 0; r < out_height; ++r) {
    double fy = (r + 0.5) * sy - 0.5;
    fy = std::min(std::max(fy, 0.0), static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int c = 0; c < out_width; ++c) {
      double fx = (c + 0.5) * sx - 0.5;
      fx = std::min(std::max(fx, 0.0), static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < img.channels; ++ch) {
        const double top =
            (1.0 - wx) * img.at(y0, x0, ch) + wx * img.at(y0, x1, ch);
        const double bot =
            (1.0 - wx) * img.at(y1, x0, ch) + wx * img.at(y1, x1, ch);
        out.at(r, c, ch) = clamp01((1.0 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

Raster rescale_roundtrip(const Raster& img, double factor) {
  if (!(factor >= 0.5 && factor <= 1.5))
    fail(Errc::out_of_range,
         "rescale factor " + std::to_string(factor) + " outside [0.5, 1.5]");
  const int w = std::max(1, static_cast<int>(std::lround(img.width * factor)));
  const int h = std::max(1, static_cast<int>(std::lround(img.height * factor)));
  return resize_bilinear(resize_bilinear(img, w, h), img.width, img.height);
}

Raster jpeg_roundtrip(const Raster& img, int quality) {
  if (quality < 40 || quality > 100)
    fail(Errc::out_of_range,
         "jpeg quality " + std::to_string(quality) + " outside [40, 100]");
  const auto qt = quant_table(quality);

  const int pw = (img.width + 7) / 8 * 8;
  const int ph = (img.height + 7) / 8 * 8;

  // Gather channels as byte-scale planes (YCbCr for RGB), mirror-padded.
  const int planes = img.channels;
  std::vector<std::vector<double>> plane(
      planes, std::vector<double>(static_cast<std::size_t>(pw) * ph));
  for (int r = 0; r < ph; ++r)
    for (int c = 0; c < pw; ++c) {
      const int sr = mirror(r, img.height);
      const int sc = mirror(c, img.width);
      const std::size_t o = static_cast<std::size_t>(r) * pw + c;
      if (planes == 1) {
        plane[0][o] = img.at(sr, sc, 0) * 255.0;
      } else {
        const double R = img.at(sr, sc, 0) * 255.0;
        const double G = img.at(sr, sc, 1) * 255.0;
        const double B = img.at(sr, sc, 2) * 255.0;
        plane[0][o] = 0.299 * R + 0.587 * G + 0.114 * B;
        plane[1][o] = -0.168736 * R - 0.331264 * G + 0.5 * B + 128.0;
        plane[2][o] = 0.5 * R - 0.418688 * G - 0.081312 * B + 128.0;
      }
    }

  for (int p = 0; p < planes; ++p) jpeg_plane(plane[p], pw, ph, qt);

  Raster out = img;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      const std::size_t o = static_cast<std::size_t>(r) * pw + c;
      if (planes == 1) {
        out.at(r, c, 0) = clamp01(plane[0][o] / 255.0);
      } else {
        const double Y = plane[0][o];
        const double Cb = plane[1][o] - 128.0;
        const double Cr = plane[2][o] - 128.0;
        out.at(r, c, 0) = clamp01((Y + 1.402 * Cr) / 255.0);
        out.at(r, c, 1) = clamp01((Y - 0.344136 * Cb - 0.714136 * Cr) / 255.0);
        out.at(r, c, 2) = clamp01((Y + 1.772 * Cb) / 255.0);
      }
    }
  return out;
}

Raster apply_augment(const Raster& patch, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  Raster cur = patch;
  if (rng.uniform() < cfg.p_hflip) cur = flip_horizontal(cur);
  if (rng.uniform() < cfg.p_vflip) cur = flip_vertical(cur);
  if (rng.uniform() < cfg.p_rot90) {
    const int k = cur.width == cur.height
                      ? static_cast<int>(rng.uniform_int(1, 3))
                      : 2;
    cur = rotate90(cur, k);
  }
  if (rng.uniform() < cfg.p_hist_eq) cur = hist_equalize(cur);
  if (rng.uniform() < cfg.p_blur) {
    const int pick =
        static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(
                                                cfg.blur_kernels.size()) -
                                                1));
    cur = box_blur(cur, cfg.blur_kernels[pick]);
  }
  if (rng.uniform() < cfg.p_brightness_contrast) {
    const double b = rng.uniform(-cfg.brightness_delta, cfg.brightness_delta);
    const double c = rng.uniform(-cfg.contrast_delta, cfg.contrast_delta);
    cur = adjust_brightness_contrast(cur, b, c);
  }
  if (cur.channels == 3 && rng.uniform() < cfg.p_color_jitter) {
    const double s = rng.uniform(-cfg.saturation_delta, cfg.saturation_delta);
    const double h = rng.uniform(-cfg.hue_delta, cfg.hue_delta);
    cur = color_jitter(cur, s, h);
  }
  if (rng.uniform() < cfg.p_rescale) {
    const double f = rng.uniform(cfg.scale_min, cfg.scale_max);
    cur = rescale_roundtrip(cur, f);
  }
  if (rng.uniform() < cfg.p_jpeg) {
    const int q = static_cast<int>(
        rng.uniform_int(cfg.jpeg_quality_min, cfg.jpeg_quality_max));
    cur = jpeg_roundtrip(cur, q);
  }
  return cur;
}

}  // namespace synloc
