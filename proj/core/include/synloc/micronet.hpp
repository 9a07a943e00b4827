#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "synloc/raster.hpp"
#include "synloc/rng.hpp"

namespace synloc {

// Small convolutional binary classifier:
//   conv 3x3 pad 1 (channels -> 8) -> ReLU -> maxpool 2
//   conv 3x3 pad 1 (8 -> 16)       -> ReLU -> maxpool 2
//   flatten -> dense (16 * (P/4)^2 -> 2) -> softmax
// Score is the class-1 (synthetic) probability. All arithmetic is 64-bit;
// parameters quantize to 32-bit at checkpoint boundaries.
struct NetShape {
  int patch_size = 32;
  int channels = 1;

  static constexpr int conv1_maps = 8;
  static constexpr int conv2_maps = 16;
  static constexpr int kernel = 3;

  int pooled_side() const { return patch_size / 4; }
  int flat_dim() const { return conv2_maps * pooled_side() * pooled_side(); }

  std::size_t conv1_w_size() const {
    return static_cast<std::size_t>(conv1_maps) * channels * kernel * kernel;
  }
  std::size_t conv2_w_size() const {
    return static_cast<std::size_t>(conv2_maps) * conv1_maps * kernel * kernel;
  }
  std::size_t dense_w_size() const {
    return static_cast<std::size_t>(2) * flat_dim();
  }

  void validate() const;
  bool operator==(const NetShape&) const = default;
};

// Parameter (or gradient) tensors. Kernel layout [out][in][ky][kx],
// dense layout [class][feature].
struct NetParams {
  NetShape shape;
  std::vector<double> conv1_w, conv1_b;
  std::vector<double> conv2_w, conv2_b;
  std::vector<double> dense_w, dense_b;

  static NetParams zeros(const NetShape& shape);
  static NetParams he_uniform(const NetShape& shape, std::uint64_t seed);

  std::size_t param_count() const;

  // Tensors in checkpoint order: conv1_w, conv1_b, conv2_w, conv2_b,
  // dense_w, dense_b.
  std::array<std::vector<double>*, 6> tensors();
  std::array<const std::vector<double>*, 6> tensors() const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::int64_t step = 0;
  NetParams m, v;  // first/second moment estimates, zero-initialized

  static AdamState init(const NetShape& shape);
};

// One bias-corrected Adam update; increments the step count.
void adam_step(NetParams& params, const NetParams& grads, AdamState& state,
               double learning_rate, const AdamConfig& cfg = {});

struct LabeledPatch {
  Raster patch;
  std::uint8_t label = 0;  // 0 = real, 1 = synthetic
};

// Class-1 probability for one patch.
double forward(const NetParams& params, const Raster& patch);

// Both softmax components (sanity checks want the pair).
std::array<double, 2> forward_probs(const NetParams& params,
                                    const Raster& patch);

// Mean cross-entropy over the batch; gradients (same shapes as params)
// are written into grads. Fixed 25-sample chunking keeps the reduction
// order, and therefore the result, independent of the worker count.
double loss_and_grads(const NetParams& params,
                      std::span<const LabeledPatch> batch, NetParams& grads,
                      int workers = 1);

struct TrainConfig {
  int batch_size = 250;  // class-balanced: batch_size/2 per class
  double learning_rate = 1e-3;
  AdamConfig adam;
  double plateau_factor = 0.1;
  int plateau_patience = 10;
  double min_learning_rate = 1e-8;
  int early_stop_patience = 50;
  int max_epochs = 1000;
  double train_fraction = 0.64;
  double val_fraction = 0.16;
  double test_fraction = 0.20;
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double learning_rate = 0.0;
  double val_balanced_accuracy = 0.0;
};

struct SplitIndices {
  std::vector<int> train, val, test;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_val_loss = std::numeric_limits<double>::infinity();
  int epochs_run = 0;
  bool early_stopped = false;
};

struct TrainResult {
  NetParams params;  // parameters at the best validation loss
  TrainHistory history;
  SplitIndices split;
};

// Optional per-sample augmentation hook; the Rng is a stream derived from
// (train seed, epoch, sample index) so results do not depend on workers.
using AugmentFn = std::function<Raster(const Raster&, Rng&)>;

// Deterministic training loop: seeded He-uniform init, stratified
// 64/16/20 split, class-balanced batches, Adam, reduce-on-plateau
// scheduler with a learning-rate floor, early stopping on stale
// validation loss.
TrainResult train(const std::vector<LabeledPatch>& dataset,
                  const TrainConfig& cfg, const AugmentFn& augment = nullptr);

// Analytic-vs-central-difference comparison over every parameter on a
// seeded random batch (h = 1e-5); returns the max relative error with
// denominator max(|a|, |b|, 1e-8).
double grad_check(std::uint64_t seed, int patch_size, int channels = 1);

// MNET v1 checkpoint: ASCII header "MNET 1 <P> <channels>\n", then the
// tensors in NetParams::tensors() order as 32-bit little-endian floats.
void save_checkpoint(const NetParams& params, const std::filesystem::path& path);
NetParams load_checkpoint(const std::filesystem::path& path);

}  // namespace synloc
