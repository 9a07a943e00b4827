#pragma once

#include <cstdint>
#include <vector>

#include "synloc/raster.hpp"
#include "synloc/scoring.hpp"

namespace synloc {

// Per-pixel running sum and coverage count for overlap averaging.
// Accumulation order does not change the finalized map: counts are
// integers and sums are 64-bit.
class Accumulator {
 public:
  Accumulator(int width, int height);

  // sum += score over the patch extent, count += 1 over the extent.
  void add(const PatchScore& score, int patch_size);

  int width() const { return width_; }
  int height() const { return height_; }
  double sum_at(int row, int col) const {
    return sum_[static_cast<std::size_t>(row) * width_ + col];
  }
  std::int64_t count_at(int row, int col) const {
    return count_[static_cast<std::size_t>(row) * width_ + col];
  }

  // Element-wise addition of another accumulator (for per-worker merges).
  void merge(const Accumulator& other);

  // H = sum/count where covered; 0 (pristine) on uncovered pixels.
  FloatMap finalize() const;

 private:
  friend class DiffAccumulator;

  int width_, height_;
  std::vector<double> sum_;
  std::vector<std::int64_t> count_;
};

// Same contract as Accumulator with O(1) work per patch: four corner
// updates into 2D difference arrays, materialized by prefix sums in
// resolve(). Counts match Accumulator bit-for-bit; sums to 1e-12.
class DiffAccumulator {
 public:
  DiffAccumulator(int width, int height);
  void add(const PatchScore& score, int patch_size);
  Accumulator resolve() const;
  FloatMap finalize() const { return resolve().finalize(); }

 private:
  int width_, height_;
  std::vector<double> sum_diff_;
  std::vector<std::int64_t> count_diff_;
};

// label 1 iff H(r,c) >= tau (ties classify as synthetic).
BinaryMask threshold_map(const FloatMap& heatmap, double tau);

}  // namespace synloc
