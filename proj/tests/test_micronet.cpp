#include <cmath>

#include "doctest.h"
#include "synloc/augment.hpp"
#include "synloc/micronet.hpp"
#include "synloc/rng.hpp"
#include "test_helpers.hpp"

using namespace synloc;

namespace {

// Central differences over one tensor, computed from batch losses only —
// independent of the analytic backward pass it is used to check.
std::vector<double> fd_tensor(NetParams params,
                              const std::vector<LabeledPatch>& batch,
                              int tensor_index, double h = 1e-5) {
  NetParams scratch = NetParams::zeros(params.shape);
  auto tensors = params.tensors();
  std::vector<double>& tv = *tensors[tensor_index];
  std::vector<double> fd(tv.size());
  for (std::size_t i = 0; i < tv.size(); ++i) {
    const double saved = tv[i];
    tv[i] = saved + h;
    const double lp = loss_and_grads(params, batch, scratch, 1);
    tv[i] = saved - h;
    const double lm = loss_and_grads(params, batch, scratch, 1);
    tv[i] = saved;
    fd[i] = (lp - lm) / (2.0 * h);
  }
  return fd;
}

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-8});
}

std::vector<LabeledPatch> random_batch(std::uint64_t seed, int n, int p, int c) {
  Rng rng(seed);
  std::vector<LabeledPatch> batch;
  for (int i = 0; i < n; ++i) {
    Raster patch(p, p, c);
    for (float& v : patch.pixels) v = static_cast<float>(rng.uniform());
    batch.push_back({std::move(patch), static_cast<std::uint8_t>(i % 2)});
  }
  return batch;
}

// Two-class toy task: class 0 is a dark constant patch, class 1 a bright one.
std::vector<LabeledPatch> constant_task(int per_class, int p) {
  std::vector<LabeledPatch> data;
  Rng rng(55);
  for (int i = 0; i < per_class; ++i) {
    const float lo = 0.2f + 0.02f * static_cast<float>(rng.uniform());
    const float hi = 0.8f + 0.02f * static_cast<float>(rng.uniform());
    data.push_back({Raster(p, p, 1, lo), 0});
    data.push_back({Raster(p, p, 1, hi), 1});
  }
  return data;
}

}  // namespace

TEST_CASE("zero parameters score 0.5 and softmax sums to one") {
  const NetShape shape{8, 1};
  const NetParams zeros = NetParams::zeros(shape);
  Rng rng(1);
  const Raster patch = testutil::random_raster(rng, 8, 8, 1);
  CHECK(forward(zeros, patch) == 0.5);

  for (int i = 0; i < 10; ++i) {
    const NetParams params = NetParams::he_uniform(shape, 100 + i);
    const Raster p = testutil::random_raster(rng, 8, 8, 1);
    const auto probs = forward_probs(params, p);
    CHECK(std::fabs(probs[0] + probs[1] - 1.0) <= 1e-12);
    CHECK(probs[1] >= 0.0);
    CHECK(probs[1] <= 1.0);
  }
}

TEST_CASE("forward matches a hand computation on identity-like kernels") {
  // P = 4 net: after two 2x2 pools the spatial side is 1, flat dim 16.
  const NetShape shape{4, 1};
  NetParams p = NetParams::zeros(shape);
  p.conv1_w[4] = 1.0;   // map 0, channel 0, center tap
  p.conv1_b[0] = 0.05;
  p.conv2_w[4] = 1.0;   // map 0, input map 0, center tap
  p.conv2_b[0] = -0.02;
  p.dense_w[shape.flat_dim() + 0] = 2.0;  // class 1 weight on flat feature 0
  p.dense_b[1] = 0.1;

  Raster patch(4, 4, 1);
  for (int i = 0; i < 16; ++i)
    patch.pixels[i] = static_cast<float>(i + 1) / 16.0f;

  // conv1 map0 = patch + 0.05 (identity kernel), ReLU keeps it, 2x2 pool
  // takes quadrant maxima {6,8,14,16}/16 + 0.05; conv2 map0 subtracts 0.02;
  // the final pool takes the max, 16/16 + 0.05 - 0.02 = 1.03; the other 15
  // maps hold -0.02 pre-ReLU and pool to 0.
  const double flat0 = static_cast<double>(patch.pixels[15]) + 0.05 - 0.02;
  const double z1 = 2.0 * flat0 + 0.1;
  const double expected = std::exp(z1) / (1.0 + std::exp(z1));
  CHECK(forward(p, patch) == doctest::Approx(expected).epsilon(1e-12));

  Raster wrong(8, 8, 1, 0.5f);
  CHECK_THROWS_AS(forward(p, wrong), Error);
}

TEST_CASE("loss on known cases") {
  const NetShape shape{8, 1};
  const auto batch = random_batch(3, 4, 8, 1);

  SUBCASE("equal logits give ln 2") {
    NetParams grads = NetParams::zeros(shape);
    const double loss = loss_and_grads(NetParams::zeros(shape), batch, grads);
    CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  }

  SUBCASE("confident correct predictions give near-zero loss") {
    // Bias the correct class hugely for a single-sample batch.
    NetParams p = NetParams::zeros(shape);
    p.dense_b[1] = 40.0;
    std::vector<LabeledPatch> ones = {batch[1]};  // label 1
    NetParams grads = NetParams::zeros(shape);
    CHECK(loss_and_grads(p, ones, grads) <= 1e-12);
  }

  SUBCASE("empty batch is an error") {
    NetParams grads = NetParams::zeros(shape);
    std::vector<LabeledPatch> empty;
    CHECK_THROWS_AS(loss_and_grads(NetParams::zeros(shape), empty, grads), Error);
  }
}

TEST_CASE("gradients match central differences") {
  CHECK(grad_check(7, 8) < 1e-4);
  CHECK(grad_check(1234, 8) < 1e-4);
}

TEST_CASE("independent finite-difference check with negative control") {
  const NetShape shape{8, 1};
  const NetParams params = NetParams::he_uniform(shape, 99);
  const auto batch = random_batch(21, 4, 8, 1);

  NetParams analytic = NetParams::zeros(shape);
  loss_and_grads(params, batch, analytic, 1);

  // conv2 weights, straight comparison
  const auto fd = fd_tensor(params, batch, 2);
  double worst = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i)
    worst = std::max(worst, rel_err(analytic.conv2_w[i], fd[i]));
  CHECK(worst < 1e-4);

  // negative control: doubling the analytic conv2 gradient must blow up
  double corrupted_worst = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i)
    corrupted_worst = std::max(corrupted_worst, rel_err(2.0 * analytic.conv2_w[i], fd[i]));
  CHECK(corrupted_worst > 1e-2);
}

TEST_CASE("zero-weight net passes the gradient comparison") {
  const NetShape shape{8, 1};
  const NetParams zeros = NetParams::zeros(shape);
  const auto batch = random_batch(5, 4, 8, 1);
  NetParams analytic = NetParams::zeros(shape);
  loss_and_grads(zeros, batch, analytic, 1);
  for (int t = 0; t < 6; ++t) {
    const auto fd = fd_tensor(zeros, batch, t);
    const auto& av = *analytic.tensors()[t];
    for (std::size_t i = 0; i < fd.size(); ++i)
      CHECK(rel_err(av[i], fd[i]) < 1e-4);
  }
}

TEST_CASE("workers do not change the loss or gradients") {
  const NetShape shape{8, 1};
  const NetParams params = NetParams::he_uniform(shape, 5);
  const auto batch = random_batch(8, 60, 8, 1);
  NetParams g1 = NetParams::zeros(shape);
  NetParams g4 = NetParams::zeros(shape);
  const double l1 = loss_and_grads(params, batch, g1, 1);
  const double l4 = loss_and_grads(params, batch, g4, 4);
  CHECK(l1 == l4);
  auto t1 = g1.tensors();
  auto t4 = g4.tensors();
  for (int t = 0; t < 6; ++t) CHECK(*t1[t] == *t4[t]);
}

TEST_CASE("adam_step") {
  const NetShape shape{8, 1};

  SUBCASE("zero gradient leaves parameters untouched") {
    NetParams p = NetParams::he_uniform(shape, 3);
    const NetParams before = p;
    AdamState st = AdamState::init(shape);
    adam_step(p, NetParams::zeros(shape), st, 1e-3);
    CHECK(p.conv1_w == before.conv1_w);
    CHECK(p.dense_w == before.dense_w);
    CHECK(st.step == 1);
  }

  SUBCASE("first step moves by about lr for unit gradient") {
    NetParams p = NetParams::zeros(shape);
    NetParams g = NetParams::zeros(shape);
    g.conv1_b[0] = 1.0;
    AdamState st = AdamState::init(shape);
    adam_step(p, g, st, 1e-3);
    const double delta = -p.conv1_b[0];
    CHECK(delta == doctest::Approx(1e-3).epsilon(1e-7));
    CHECK(delta < 1e-3);  // epsilon shaves a hair off
    CHECK(p.conv1_b[1] == 0.0);
  }

  SUBCASE("moments follow the geometric series on constant gradients") {
    NetParams p = NetParams::zeros(shape);
    NetParams g = NetParams::zeros(shape);
    const double grad = 0.37;
    g.dense_b[0] = grad;
    AdamState st = AdamState::init(shape);
    AdamConfig cfg;
    const int steps = 50;
    for (int i = 0; i < steps; ++i) adam_step(p, g, st, 1e-4, cfg);
    const double expect_m = grad * (1.0 - std::pow(cfg.beta1, steps));
    const double expect_v = grad * grad * (1.0 - std::pow(cfg.beta2, steps));
    CHECK(st.m.dense_b[0] == doctest::Approx(expect_m).epsilon(1e-12));
    CHECK(st.v.dense_b[0] == doctest::Approx(expect_v).epsilon(1e-12));
    // bias-corrected first moment converges to the gradient itself
    CHECK(st.m.dense_b[0] / (1.0 - std::pow(cfg.beta1, steps)) ==
          doctest::Approx(grad).epsilon(1e-12));
  }

  SUBCASE("shape mismatch") {
    NetParams p = NetParams::zeros(shape);
    AdamState st = AdamState::init(shape);
    CHECK_THROWS_AS(adam_step(p, NetParams::zeros(NetShape{12, 1}), st, 1e-3),
                    Error);
  }
}

TEST_CASE("training solves a linearly separable task") {
  const auto data = constant_task(40, 8);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_epochs = 20;
  cfg.seed = 2024;
  const TrainResult result = train(data, cfg);

  bool hit = false;
  for (const EpochStats& e : result.history.epochs)
    if (e.val_balanced_accuracy == 1.0) hit = true;
  CHECK(hit);
  CHECK(result.history.best_epoch >= 1);

  // the returned parameters separate held-out test samples
  int correct = 0;
  for (int idx : result.split.test) {
    const double s = forward(result.params, data[idx].patch);
    if ((s >= 0.5) == (data[idx].label == 1)) ++correct;
  }
  CHECK(correct == static_cast<int>(result.split.test.size()));
}

TEST_CASE("training is deterministic given the seed") {
  const auto data = constant_task(30, 8);
  TrainConfig cfg;
  cfg.batch_size = 6;
  cfg.max_epochs = 5;
  cfg.seed = 7;
  const TrainResult a = train(data, cfg);
  const TrainResult b = train(data, cfg);
  REQUIRE(a.history.epochs.size() == b.history.epochs.size());
  for (std::size_t i = 0; i < a.history.epochs.size(); ++i) {
    CHECK(a.history.epochs[i].train_loss == b.history.epochs[i].train_loss);
    CHECK(a.history.epochs[i].val_loss == b.history.epochs[i].val_loss);
  }
  CHECK(a.params.conv1_w == b.params.conv1_w);
  CHECK(a.params.dense_w == b.params.dense_w);
  CHECK(a.split.train == b.split.train);

  const auto dir = testutil::scratch_dir("micronet_det");
  save_checkpoint(a.params, dir / "a.mnet");
  save_checkpoint(b.params, dir / "b.mnet");
  CHECK(testutil::slurp(dir / "a.mnet") == testutil::slurp(dir / "b.mnet"));
}

TEST_CASE("early stopping fires after the patience window") {
  const auto data = constant_task(30, 8);
  TrainConfig cfg;
  cfg.batch_size = 6;
  cfg.seed = 3;
  cfg.max_epochs = 100;
  cfg.early_stop_patience = 12;
  cfg.plateau_patience = 4;
  // a learning rate far below one ulp of any parameter freezes the net,
  // so the validation loss can never improve after the first epoch
  cfg.learning_rate = 1e-300;
  cfg.min_learning_rate = 1e-320;
  const TrainResult r = train(data, cfg);
  CHECK(r.history.early_stopped);
  CHECK(r.history.best_epoch == 1);
  CHECK(r.history.epochs_run == 1 + cfg.early_stop_patience);

  // scheduler: learning rate non-increasing, floored, reduced at least once
  double prev = cfg.learning_rate;
  bool reduced = false;
  for (const EpochStats& e : r.history.epochs) {
    CHECK(e.learning_rate <= prev);
    CHECK(e.learning_rate >= cfg.min_learning_rate);
    if (e.learning_rate < prev) reduced = true;
    prev = e.learning_rate;
  }
  CHECK(reduced);
}

TEST_CASE("training input validation") {
  TrainConfig cfg;
  cfg.batch_size = 6;

  std::vector<LabeledPatch> single;
  for (int i = 0; i < 20; ++i) single.push_back({Raster(8, 8, 1, 0.5f), 0});
  CHECK_THROWS_AS(train(single, cfg), Error);
  try {
    train(single, cfg);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::single_class);
  }

  const auto tiny = constant_task(3, 8);  // 1 training sample per class
  TrainConfig big = cfg;
  big.batch_size = 250;
  CHECK_THROWS_AS(train(tiny, big), Error);

  std::vector<LabeledPatch> empty;
  CHECK_THROWS_AS(train(empty, cfg), Error);

  TrainConfig bad = cfg;
  bad.batch_size = 7;
  CHECK_THROWS_AS(train(constant_task(30, 8), bad), Error);
  bad = cfg;
  bad.train_fraction = 0.9;  // fractions no longer sum to one
  CHECK_THROWS_AS(train(constant_task(30, 8), bad), Error);
}

TEST_CASE("checkpoints round trip at 32-bit precision") {
  const auto dir = testutil::scratch_dir("micronet_ckpt");
  const NetParams params = NetParams::he_uniform(NetShape{8, 1}, 42);
  save_checkpoint(params, dir / "net.mnet");

  const std::string bytes = testutil::slurp(dir / "net.mnet");
  CHECK(bytes.substr(0, 9) == "MNET 1 8 ");

  const NetParams loaded = load_checkpoint(dir / "net.mnet");
  CHECK(loaded.shape == params.shape);
  auto lt = loaded.tensors();
  auto pt = params.tensors();
  for (int t = 0; t < 6; ++t) {
    REQUIRE(lt[t]->size() == pt[t]->size());
    for (std::size_t i = 0; i < lt[t]->size(); ++i)
      CHECK(static_cast<float>((*lt[t])[i]) == static_cast<float>((*pt[t])[i]));
  }

  // saving the loaded params reproduces the file byte for byte
  save_checkpoint(loaded, dir / "net2.mnet");
  CHECK(testutil::slurp(dir / "net2.mnet") == bytes);

  // corrupt header and payload
  {
    std::ofstream out(dir / "bad.mnet", std::ios::binary);
    out << "MNOT 1 8 1\n";
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.mnet"), Error);
  {
    std::ofstream out(dir / "short.mnet", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 8));
  }
  try {
    load_checkpoint(dir / "short.mnet");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::dimension_mismatch);
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.mnet"), Error);
}

TEST_CASE("augmented training keeps flip agreement and learns the toy signal") {
  // Small surrogate set: class 1 carries a +-0.02 checkerboard residual.
  Rng rng(31);
  std::vector<LabeledPatch> data;
  for (int i = 0; i < 120; ++i) {
    Raster real(16, 16, 1);
    for (float& v : real.pixels)
      v = static_cast<float>(0.6 + 0.05 * rng.gaussian());
    Raster synth = real;
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c)
        synth.at(r, c) = std::min(
            1.0f, std::max(0.0f, synth.at(r, c) +
                                     ((r + c) % 2 == 0 ? 0.02f : -0.02f)));
    data.push_back({std::move(real), 0});
    data.push_back({std::move(synth), 1});
  }

  TrainConfig cfg;
  cfg.batch_size = 20;
  cfg.max_epochs = 12;
  cfg.seed = 11;
  cfg.workers = 2;
  AugmentConfig aug;  // the full stochastic pipeline
  const AugmentFn aug_fn = [&aug](const Raster& p, Rng& stream) {
    return apply_augment(p, aug, stream);
  };
  const TrainResult r = train(data, cfg, aug_fn);
  CHECK(r.history.epochs_run >= 1);

  double flip_gap = 0.0;
  int n_val = 0;
  for (int idx : r.split.val) {
    const double a = forward(r.params, data[idx].patch);
    const double b = forward(r.params, flip_horizontal(data[idx].patch));
    flip_gap += std::fabs(a - b);
    ++n_val;
  }
  CHECK(flip_gap / n_val <= 0.35);
}
