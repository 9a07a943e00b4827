#include "synloc/heatmap.hpp"

#include <string>

namespace synloc {

namespace {

void check_extent(int width, int height, const PatchScore& s, int patch_size) {
  if (patch_size < 1 || s.top < 0 || s.left < 0 || s.top + patch_size > height ||
      s.left + patch_size > width)
    fail(Errc::out_of_bounds,
         "patch extent (" + std::to_string(s.top) + "," +
             std::to_string(s.left) + ")+" + std::to_string(patch_size) +
             " exceeds " + std::to_string(width) + "x" + std::to_string(height));
  if (!(s.score >= 0.0 && s.score <= 1.0))
    fail(Errc::out_of_range, "patch score outside [0,1]");
}

}  // namespace

Accumulator::Accumulator(int width, int height)
    : width_(width),
      height_(height),
      sum_(static_cast<std::size_t>(width) * height, 0.0),
      count_(static_cast<std::size_t>(width) * height, 0) {
  if (width < 1 || height < 1)
    fail(Errc::bad_config, "accumulator dimensions must be at least 1x1");
}

void Accumulator::add(const PatchScore& s, int patch_size) {
  check_extent(width_, height_, s, patch_size);
  for (int r = s.top; r < s.top + patch_size; ++r) {
    const std::size_t row = static_cast<std::size_t>(r) * width_;
    for (int c = s.left; c < s.left + patch_size; ++c) {
      sum_[row + c] += s.score;
      count_[row + c] += 1;
    }
  }
}

void Accumulator::merge(const Accumulator& other) {
  if (other.width_ != width_ || other.height_ != height_)
    fail(Errc::dimension_mismatch, "accumulator dimensions differ in merge");
  for (std::size_t i = 0; i < sum_.size(); ++i) {
    sum_[i] += other.sum_[i];
    count_[i] += other.count_[i];
  }
}

FloatMap Accumulator::finalize() const {
  FloatMap map(width_, height_, 0.0);
  for (std::size_t i = 0; i < sum_.size(); ++i)
    if (count_[i] > 0) {
      // scores are in [0,1] so the mean is too; min() absorbs the last-ulp
      // rounding that dense mixes of near-1.0 scores can accumulate
      const double mean = sum_[i] / static_cast<double>(count_[i]);
      map.values[i] = mean < 1.0 ? mean : 1.0;
    }
  return map;
}

DiffAccumulator::DiffAccumulator(int width, int height)
    : width_(width),
      height_(height),
      sum_diff_(static_cast<std::size_t>(width + 1) * (height + 1), 0.0),
      count_diff_(static_cast<std::size_t>(width + 1) * (height + 1), 0) {
  if (width < 1 || height < 1)
    fail(Errc::bad_config, "accumulator dimensions must be at least 1x1");
}

void DiffAccumulator::add(const PatchScore& s, int patch_size) {
  check_extent(width_, height_, s, patch_size);
  const std::size_t stride = static_cast<std::size_t>(width_) + 1;
  const std::size_t r0 = static_cast<std::size_t>(s.top);
  const std::size_t r1 = r0 + patch_size;
  const std::size_t c0 = static_cast<std::size_t>(s.left);
  const std::size_t c1 = c0 + patch_size;
  sum_diff_[r0 * stride + c0] += s.score;
  sum_diff_[r0 * stride + c1] -= s.score;
  sum_diff_[r1 * stride + c0] -= s.score;
  sum_diff_[r1 * stride + c1] += s.score;
  count_diff_[r0 * stride + c0] += 1;
  count_diff_[r0 * stride + c1] -= 1;
  count_diff_[r1 * stride + c0] -= 1;
  count_diff_[r1 * stride + c1] += 1;
}

Accumulator DiffAccumulator::resolve() const {
  Accumulator acc(width_, height_);
  const std::size_t stride = static_cast<std::size_t>(width_) + 1;
  // 2D prefix sums: vertical running totals per column, swept along rows.
  std::vector<double> col_sum(stride, 0.0);
  std::vector<std::int64_t> col_count(stride, 0);
  for (int r = 0; r < height_; ++r) {
    double run_s = 0.0;
    std::int64_t run_c = 0;
    for (int c = 0; c < width_; ++c) {
      col_sum[c] += sum_diff_[static_cast<std::size_t>(r) * stride + c];
      col_count[c] += count_diff_[static_cast<std::size_t>(r) * stride + c];
      run_s += col_sum[c];
      run_c += col_count[c];
      acc.sum_[static_cast<std::size_t>(r) * width_ + c] = run_s;
      acc.count_[static_cast<std::size_t>(r) * width_ + c] = run_c;
    }
  }
  return acc;
}

BinaryMask threshold_map(const FloatMap& heatmap, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0))
    fail(Errc::out_of_range,
         "threshold " + std::to_string(tau) + " outside [0,1]");
  heatmap.validate();
  BinaryMask mask(heatmap.width, heatmap.height, 0);
  for (std::size_t i = 0; i < heatmap.values.size(); ++i)
    mask.labels[i] = heatmap.values[i] >= tau ? 1 : 0;
  return mask;
}

}  // namespace synloc
