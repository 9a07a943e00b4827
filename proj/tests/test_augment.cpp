#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "synloc/augment.hpp"
#include "synloc/rng.hpp"
#include "test_helpers.hpp"

using namespace synloc;

namespace {

double mean_abs_diff(const Raster& a, const Raster& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i)
    acc += std::fabs(static_cast<double>(a.pixels[i]) - b.pixels[i]);
  return acc / static_cast<double>(a.pixels.size());
}

double max_abs_diff(const Raster& a, const Raster& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i)
    worst = std::max(worst,
                     std::fabs(static_cast<double>(a.pixels[i]) - b.pixels[i]));
  return worst;
}

AugmentConfig all_off() {
  AugmentConfig cfg;
  cfg.p_hflip = cfg.p_vflip = cfg.p_rot90 = cfg.p_hist_eq = cfg.p_blur = 0.0;
  cfg.p_brightness_contrast = cfg.p_color_jitter = cfg.p_rescale = 0.0;
  cfg.p_jpeg = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("apply_augment with zero probabilities is the identity") {
  Rng data_rng(1);
  const Raster img = testutil::random_raster(data_rng, 16, 16, 3);
  Rng stream(5);
  const Raster out = apply_augment(img, all_off(), stream);
  CHECK(out.pixels == img.pixels);
}

TEST_CASE("horizontal flip is an involution") {
  Rng data_rng(2);
  const Raster img = testutil::random_raster(data_rng, 12, 8, 1);
  AugmentConfig cfg = all_off();
  cfg.p_hflip = 1.0;
  Rng s1(9), s2(9);
  const Raster once = apply_augment(img, cfg, s1);
  const Raster twice = apply_augment(once, cfg, s2);
  CHECK(twice.pixels == img.pixels);
  CHECK(once.pixels != img.pixels);
}

TEST_CASE("flips and rotations permute pixel values") {
  Rng data_rng(3);
  const Raster img = testutil::random_raster(data_rng, 10, 10, 1);
  for (const Raster& t :
       {flip_horizontal(img), flip_vertical(img), rotate90(img, 1),
        rotate90(img, 2), rotate90(img, 3)}) {
    std::vector<float> a = img.pixels, b = t.pixels;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
  // rotating four quarters returns the original
  CHECK(rotate90(rotate90(rotate90(rotate90(img, 1), 1), 1), 1).pixels ==
        img.pixels);
  const Raster wide = testutil::random_raster(data_rng, 12, 6, 1);
  CHECK_THROWS_AS(rotate90(wide, 1), Error);
  CHECK_NOTHROW(rotate90(wide, 2));
}

TEST_CASE("augmentation streams are deterministic") {
  Rng data_rng(4);
  const Raster img = testutil::random_raster(data_rng, 16, 16, 1);
  AugmentConfig cfg;  // defaults: everything stochastic
  Rng s1(1234), s2(1234), s3(77);
  const Raster a = apply_augment(img, cfg, s1);
  const Raster b = apply_augment(img, cfg, s2);
  CHECK(a.pixels == b.pixels);
  const Raster c = apply_augment(img, cfg, s3);
  CHECK(a.pixels != c.pixels);  // seeds differ, draw paths differ
}

TEST_CASE("apply_augment preserves shape and range") {
  Rng data_rng(6);
  AugmentConfig cfg;
  for (int iter = 0; iter < 12; ++iter) {
    const int c = iter % 2 == 0 ? 1 : 3;
    const Raster img = testutil::random_raster(data_rng, 20, 12, c);
    Rng stream(100 + iter);
    const Raster out = apply_augment(img, cfg, stream);
    CHECK(out.width == img.width);
    CHECK(out.height == img.height);
    CHECK(out.channels == img.channels);
    CHECK_NOTHROW(out.validate());
  }
}

TEST_CASE("hist_equalize") {
  SUBCASE("constant image stays constant") {
    const Raster flat(8, 8, 1, 0.37f);
    const Raster out = hist_equalize(flat);
    for (float v : out.pixels) CHECK(v == out.pixels[0]);
  }

  SUBCASE("two-level image maps to its CDF values") {
    Raster img(4, 2, 1);
    for (int i = 0; i < 8; ++i) img.pixels[i] = i % 2 == 0 ? 0.25f : 0.75f;
    const Raster out = hist_equalize(img);
    for (int i = 0; i < 8; ++i)
      CHECK(out.pixels[i] == (img.pixels[i] == 0.25f ? 0.5f : 1.0f));
  }

  SUBCASE("monotone in input values") {
    Rng rng(8);
    const Raster img = testutil::random_raster(rng, 24, 24, 1);
    const Raster out = hist_equalize(img);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
      for (std::size_t j = i + 1; j < std::min(img.pixels.size(), i + 40); ++j) {
        if (img.pixels[i] < img.pixels[j]) CHECK(out.pixels[i] <= out.pixels[j]);
        if (img.pixels[i] == img.pixels[j]) CHECK(out.pixels[i] == out.pixels[j]);
      }
  }
}

TEST_CASE("box_blur") {
  const Raster flat(9, 9, 1, 0.6f);
  for (int k : {3, 5, 7}) {
    const Raster out = box_blur(flat, k);
    for (float v : out.pixels) CHECK(v == doctest::Approx(0.6f).epsilon(1e-6));
  }
  CHECK_THROWS_AS(box_blur(flat, 4), Error);
  CHECK_THROWS_AS(box_blur(flat, 1), Error);

  // blurring shrinks local extremes
  Raster spike(9, 9, 1, 0.0f);
  spike.at(4, 4) = 1.0f;
  const Raster out = box_blur(spike, 3);
  CHECK(out.at(4, 4) == doctest::Approx(1.0 / 9.0).epsilon(1e-6));
}

TEST_CASE("brightness/contrast and color jitter") {
  Raster img(2, 1, 1);
  img.pixels = {0.3f, 0.9f};
  const Raster out = adjust_brightness_contrast(img, 0.1, 0.2);
  CHECK(out.pixels[0] == doctest::Approx((0.3 - 0.5) * 1.2 + 0.5 + 0.1));
  CHECK(out.pixels[1] == doctest::Approx(std::min(1.0, (0.9 - 0.5) * 1.2 + 0.6)));

  CHECK_THROWS_AS(color_jitter(img, 0.1, 0.1), Error);

  Rng rng(10);
  const Raster rgb = testutil::random_raster(rng, 6, 6, 3);
  const Raster jit = color_jitter(rgb, 0.15, -0.1);
  CHECK(jit.channels == 3);
  CHECK_NOTHROW(jit.validate());
  // value channel (max of rgb) is preserved by pure hue/saturation moves
  for (int i = 0; i < 36; ++i) {
    const float vin = std::max({rgb.pixels[i * 3], rgb.pixels[i * 3 + 1],
                                rgb.pixels[i * 3 + 2]});
    const float vout = std::max({jit.pixels[i * 3], jit.pixels[i * 3 + 1],
                                 jit.pixels[i * 3 + 2]});
    CHECK(vout == doctest::Approx(vin).epsilon(1e-5));
  }
}

TEST_CASE("rescale_roundtrip") {
  Rng rng(11);
  const Raster img = testutil::random_raster(rng, 16, 16, 1);

  SUBCASE("factor 1 is the identity up to interpolation residue") {
    CHECK(max_abs_diff(rescale_roundtrip(img, 1.0), img) <= 1e-6);
  }

  SUBCASE("output dimensions always match the input") {
    for (double f : {0.5, 0.77, 1.25, 1.5}) {
      const Raster out = rescale_roundtrip(img, f);
      CHECK(out.width == img.width);
      CHECK(out.height == img.height);
    }
  }

  SUBCASE("downscale attenuates content above half-Nyquist") {
    Raster checker(16, 16, 1);
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c)
        checker.at(r, c) = (r + c) % 2 == 0 ? 0.9f : 0.1f;
    const Raster out = rescale_roundtrip(checker, 0.5);
    const double before = oracle::high_band_energy(checker, 4);
    const double after = oracle::high_band_energy(out, 4);
    CHECK(after < before);
  }

  CHECK_THROWS_AS(rescale_roundtrip(img, 0.4), Error);
  CHECK_THROWS_AS(rescale_roundtrip(img, 1.6), Error);
}

TEST_CASE("jpeg_roundtrip") {
  Rng rng(12);

  SUBCASE("quality bounds") {
    const Raster img = testutil::random_raster(rng, 8, 8, 1);
    CHECK_THROWS_AS(jpeg_roundtrip(img, 39), Error);
    CHECK_THROWS_AS(jpeg_roundtrip(img, 101), Error);
  }

  SUBCASE("quality 100 is near-lossless") {
    double worst = 0.0;
    for (int i = 0; i < 40; ++i) {
      const Raster img = testutil::random_raster(rng, 32, 32, 1);
      worst = std::max(worst, max_abs_diff(jpeg_roundtrip(img, 100), img));
    }
    CHECK(worst <= 2.0 / 255.0);
  }

  SUBCASE("constant blocks survive any quality") {
    for (int q : {40, 50, 75, 100}) {
      const Raster flat(16, 16, 1, 0.62f);
      const Raster out = jpeg_roundtrip(flat, q);
      float lo = 1.0f, hi = 0.0f;
      for (float v : out.pixels) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      CHECK(hi - lo <= 1e-9f);  // still constant
      const double bound = (q >= 50 ? 1.0 : 1.25) / 255.0 + 1e-9;
      CHECK(std::fabs(out.pixels[0] - 0.62) <= bound);
    }
  }

  SUBCASE("distortion decreases with quality, ringing at a step edge") {
    Raster edge(32, 32, 1, 0.1f);
    for (int r = 0; r < 32; ++r)
      for (int c = 16; c < 32; ++c) edge.at(r, c) = 0.9f;
    const double low = mean_abs_diff(jpeg_roundtrip(edge, 40), edge);
    const double high = mean_abs_diff(jpeg_roundtrip(edge, 90), edge);
    CHECK(low > high);

    std::vector<double> means;
    const Raster img = testutil::random_raster(rng, 24, 24, 1);
    for (int q : {40, 60, 80, 100})
      means.push_back(mean_abs_diff(jpeg_roundtrip(img, q), img));
    CHECK(std::is_sorted(means.rbegin(), means.rend()));
  }

  SUBCASE("dimensions not divisible by 8 are padded and cropped back") {
    const Raster img = testutil::random_raster(rng, 20, 12, 1);
    const Raster out = jpeg_roundtrip(img, 80);
    CHECK(out.width == 20);
    CHECK(out.height == 12);
    CHECK_NOTHROW(out.validate());
  }

  SUBCASE("rgb goes through the luma transform and back") {
    const Raster img = testutil::random_raster(rng, 16, 16, 3);
    const Raster out = jpeg_roundtrip(img, 100);
    CHECK(out.channels == 3);
    CHECK(max_abs_diff(out, img) <= 4.0 / 255.0);  // color transform adds a little
    CHECK_NOTHROW(out.validate());
  }
}
