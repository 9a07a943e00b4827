#pragma once

// Test-only reference implementations. Deliberately naive and independent
// of the library's computation paths: per-pixel scans instead of
// accumulators, O(n^2) pair counting instead of rank sums, full threshold
// re-evaluation instead of sweeps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "synloc/raster.hpp"
#include "synloc/scoring.hpp"

namespace oracle {

struct HeatmapTally {
  synloc::FloatMap mean;
  std::vector<std::int64_t> counts;
};

// Per-pixel mean of covering patch scores by scanning every score for
// every pixel.
inline HeatmapTally heatmap_bruteforce(int width, int height,
                                       const std::vector<synloc::PatchScore>& scores,
                                       int patch) {
  HeatmapTally out;
  out.mean = synloc::FloatMap(width, height, 0.0);
  out.counts.assign(static_cast<std::size_t>(width) * height, 0);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      double sum = 0.0;
      std::int64_t n = 0;
      for (const synloc::PatchScore& s : scores) {
        if (r >= s.top && r < s.top + patch && c >= s.left && c < s.left + patch) {
          sum += s.score;
          n += 1;
        }
      }
      out.counts[static_cast<std::size_t>(r) * width + c] = n;
      out.mean.at(r, c) = n > 0 ? sum / static_cast<double>(n) : 0.0;
    }
  return out;
}

// AUC by exhaustive positive/negative pair counting, ties worth 1/2.
inline double auc_paircount(std::span<const double> scores,
                            std::span<const std::uint8_t> labels) {
  double wins = 0.0, ties = 0.0;
  std::int64_t n0 = 0, n1 = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 0) {
      ++n0;
      continue;
    }
    ++n1;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        ties += 1.0;
    }
  }
  return (wins + 0.5 * ties) /
         (static_cast<double>(n0) * static_cast<double>(n1));
}

struct BaPoint {
  double ba = 0.0;
  double tau = 0.0;
};

// Max balanced accuracy by re-counting TP/TN from scratch at every unique
// score value (classification rule: score >= tau), smallest maximizer.
inline BaPoint max_ba_exhaustive(std::span<const double> scores,
                                 std::span<const std::uint8_t> labels) {
  std::vector<double> taus(scores.begin(), scores.end());
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  taus.push_back(std::nextafter(taus.back(), 2.0));

  std::int64_t n0 = 0, n1 = 0;
  for (std::uint8_t l : labels) (l ? n1 : n0)++;

  BaPoint best{-1.0, 0.0};
  for (double tau : taus) {
    std::int64_t tp = 0, tn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (labels[i] == 1 && scores[i] >= tau) ++tp;
      if (labels[i] == 0 && scores[i] < tau) ++tn;
    }
    const double ba = 0.5 * (static_cast<double>(tp) / n1 +
                             static_cast<double>(tn) / n0);
    if (ba > best.ba) best = {ba, tau};
  }
  return best;
}

// One DFT coefficient magnitude of a grayscale raster, direct evaluation.
inline double dft_mag(const synloc::Raster& img, int u, int v) {
  double re = 0.0, im = 0.0;
  const double wu = 2.0 * 3.14159265358979323846 * u / img.height;
  const double wv = 2.0 * 3.14159265358979323846 * v / img.width;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      const double phase = wu * r + wv * c;
      re += img.at(r, c) * std::cos(phase);
      im -= img.at(r, c) * std::sin(phase);
    }
  return std::sqrt(re * re + im * im);
}

// Spectral energy at frequencies above the given band (max of the folded
// frequency indices exceeding `band`), brute-force DFT.
inline double high_band_energy(const synloc::Raster& img, int band) {
  double energy = 0.0;
  for (int u = 0; u < img.height; ++u)
    for (int v = 0; v < img.width; ++v) {
      const int fu = std::min(u, img.height - u);
      const int fv = std::min(v, img.width - v);
      if (std::max(fu, fv) <= band) continue;
      const double m = dft_mag(img, u, v);
      energy += m * m;
    }
  return energy;
}

// Upper chi-square quantile via the Wilson-Hilferty cube approximation.
inline double chi2_critical(int dof, double z_upper) {
  const double a = 2.0 / (9.0 * dof);
  const double t = 1.0 - a + z_upper * std::sqrt(a);
  return dof * t * t * t;
}

}  // namespace oracle
