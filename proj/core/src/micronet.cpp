#include "synloc/micronet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "synloc/parallel.hpp"

namespace synloc {

namespace {

constexpr int K = NetShape::kernel;  // 3
constexpr std::size_t kGradChunk = 25;

// Scratch activations for one sample. Planar layout [map][y][x].
struct Workspace {
  std::vector<double> input;      // C x P x P
  std::vector<double> conv1_out;  // 8 x P x P (pre-ReLU)
  std::vector<double> pool1_out;  // 8 x (P/2)^2
  std::vector<int> pool1_arg;     // flat index into the conv1 grid
  std::vector<double> conv2_out;  // 16 x (P/2)^2 (pre-ReLU)
  std::vector<double> pool2_out;  // 16 x (P/4)^2  == dense input
  std::vector<int> pool2_arg;
  std::array<double, 2> logits{};
  std::array<double, 2> probs{};

  // backward scratch
  std::vector<double> d_conv1;
  std::vector<double> d_pool1;
  std::vector<double> d_conv2;
  std::vector<double> d_flat;

  explicit Workspace(const NetShape& s) {
    const int p = s.patch_size;
    const int h = p / 2;
    const int q = p / 4;
    input.resize(static_cast<std::size_t>(s.channels) * p * p);
    conv1_out.resize(static_cast<std::size_t>(NetShape::conv1_maps) * p * p);
    pool1_out.resize(static_cast<std::size_t>(NetShape::conv1_maps) * h * h);
    pool1_arg.resize(pool1_out.size());
    conv2_out.resize(static_cast<std::size_t>(NetShape::conv2_maps) * h * h);
    pool2_out.resize(static_cast<std::size_t>(NetShape::conv2_maps) * q * q);
    pool2_arg.resize(pool2_out.size());
    d_conv1.resize(conv1_out.size());
    d_pool1.resize(pool1_out.size());
    d_conv2.resize(conv2_out.size());
    d_flat.resize(pool2_out.size());
  }
};

void load_input(const Raster& patch, const NetShape& s, std::vector<double>& in) {
  const int p = s.patch_size;
  for (int c = 0; c < s.channels; ++c)
    for (int y = 0; y < p; ++y)
      for (int x = 0; x < p; ++x)
        in[(static_cast<std::size_t>(c) * p + y) * p + x] = patch.at(y, x, c);
}

// 3x3 convolution, zero padding 1, stride 1.
void conv_forward(const double* in, int in_maps, int side, const double* w,
                  const double* b, int out_maps, double* out) {
  const std::size_t plane = static_cast<std::size_t>(side) * side;
  for (int o = 0; o < out_maps; ++o) {
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) {
        double acc = b[o];
        for (int c = 0; c < in_maps; ++c) {
          const double* wk = w + (static_cast<std::size_t>(o) * in_maps + c) * K * K;
          const double* ip = in + c * plane;
          for (int ky = 0; ky < K; ++ky) {
            const int iy = y + ky - 1;
            if (iy < 0 || iy >= side) continue;
            for (int kx = 0; kx < K; ++kx) {
              const int ix = x + kx - 1;
              if (ix < 0 || ix >= side) continue;
              acc += wk[ky * K + kx] * ip[static_cast<std::size_t>(iy) * side + ix];
            }
          }
        }
        out[(static_cast<std::size_t>(o) * side + y) * side + x] = acc;
      }
  }
}

// ReLU followed by 2x2 max pooling (stride 2). arg records the flat index
// of the chosen cell in the pre-pool grid; ties keep the first in scan order.
void relu_pool_forward(const double* in, int maps, int side, double* out,
                       int* arg) {
  const int os = side / 2;
  const std::size_t plane = static_cast<std::size_t>(side) * side;
  for (int m = 0; m < maps; ++m)
    for (int y = 0; y < os; ++y)
      for (int x = 0; x < os; ++x) {
        double best = -1.0;
        int best_idx = -1;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t idx =
                m * plane + static_cast<std::size_t>(2 * y + dy) * side +
                (2 * x + dx);
            const double v = in[idx] > 0.0 ? in[idx] : 0.0;
            if (v > best) {
              best = v;
              best_idx = static_cast<int>(idx);
            }
          }
        out[(static_cast<std::size_t>(m) * os + y) * os + x] = best;
        arg[(static_cast<std::size_t>(m) * os + y) * os + x] = best_idx;
      }
}

void check_finite(const double* v, std::size_t n, const char* layer) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(v[i]))
      fail(Errc::non_finite,
           std::string("non-finite value in layer '") + layer + "'");
}

void forward_sample(const NetParams& p, const Raster& patch, Workspace& ws,
                    bool finite_checks) {
  const NetShape& s = p.shape;
  if (patch.width != s.patch_size || patch.height != s.patch_size ||
      patch.channels != s.channels)
    fail(Errc::shape_mismatch,
         "patch " + std::to_string(patch.width) + "x" +
             std::to_string(patch.height) + "x" + std::to_string(patch.channels) +
             " does not match net input " + std::to_string(s.patch_size) + "x" +
             std::to_string(s.patch_size) + "x" + std::to_string(s.channels));
  const int P = s.patch_size;
  const int H = P / 2;

  load_input(patch, s, ws.input);
  conv_forward(ws.input.data(), s.channels, P, p.conv1_w.data(),
               p.conv1_b.data(), NetShape::conv1_maps, ws.conv1_out.data());
  if (finite_checks) check_finite(ws.conv1_out.data(), ws.conv1_out.size(), "conv1");
  relu_pool_forward(ws.conv1_out.data(), NetShape::conv1_maps, P,
                    ws.pool1_out.data(), ws.pool1_arg.data());
  conv_forward(ws.pool1_out.data(), NetShape::conv1_maps, H, p.conv2_w.data(),
               p.conv2_b.data(), NetShape::conv2_maps, ws.conv2_out.data());
  if (finite_checks) check_finite(ws.conv2_out.data(), ws.conv2_out.size(), "conv2");
  relu_pool_forward(ws.conv2_out.data(), NetShape::conv2_maps, H,
                    ws.pool2_out.data(), ws.pool2_arg.data());

  const int F = s.flat_dim();
  for (int k = 0; k < 2; ++k) {
    double acc = p.dense_b[k];
    const double* w = p.dense_w.data() + static_cast<std::size_t>(k) * F;
    for (int i = 0; i < F; ++i) acc += w[i] * ws.pool2_out[i];
    ws.logits[k] = acc;
  }
  if (finite_checks) check_finite(ws.logits.data(), 2, "dense");

  const double m = std::max(ws.logits[0], ws.logits[1]);
  const double e0 = std::exp(ws.logits[0] - m);
  const double e1 = std::exp(ws.logits[1] - m);
  ws.probs[0] = e0 / (e0 + e1);
  ws.probs[1] = e1 / (e0 + e1);
}

// Accumulates raw (unscaled) gradients for one sample into g.
void backward_sample(const NetParams& p, Workspace& ws, int label,
                     NetParams& g) {
  const NetShape& s = p.shape;
  const int P = s.patch_size;
  const int H = P / 2;
  const int F = s.flat_dim();

  const double dlogit[2] = {ws.probs[0] - (label == 0 ? 1.0 : 0.0),
                            ws.probs[1] - (label == 1 ? 1.0 : 0.0)};

  // dense
  std::fill(ws.d_flat.begin(), ws.d_flat.end(), 0.0);
  for (int k = 0; k < 2; ++k) {
    g.dense_b[k] += dlogit[k];
    double* gw = g.dense_w.data() + static_cast<std::size_t>(k) * F;
    const double* w = p.dense_w.data() + static_cast<std::size_t>(k) * F;
    for (int i = 0; i < F; ++i) {
      gw[i] += dlogit[k] * ws.pool2_out[i];
      ws.d_flat[i] += w[i] * dlogit[k];
    }
  }

  // pool2 + ReLU backward into d_conv2
  std::fill(ws.d_conv2.begin(), ws.d_conv2.end(), 0.0);
  for (std::size_t i = 0; i < ws.d_flat.size(); ++i) {
    const int idx = ws.pool2_arg[i];
    if (ws.conv2_out[idx] > 0.0) ws.d_conv2[idx] += ws.d_flat[i];
  }

  // conv2 backward: bias/weight grads and upstream gradient into d_pool1
  std::fill(ws.d_pool1.begin(), ws.d_pool1.end(), 0.0);
  const std::size_t plane_h = static_cast<std::size_t>(H) * H;
  for (int o = 0; o < NetShape::conv2_maps; ++o)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < H; ++x) {
        const double d = ws.d_conv2[o * plane_h + static_cast<std::size_t>(y) * H + x];
        if (d == 0.0) continue;
        g.conv2_b[o] += d;
        for (int c = 0; c < NetShape::conv1_maps; ++c) {
          double* gw = g.conv2_w.data() +
                       (static_cast<std::size_t>(o) * NetShape::conv1_maps + c) * K * K;
          const double* w = p.conv2_w.data() +
                            (static_cast<std::size_t>(o) * NetShape::conv1_maps + c) * K * K;
          const double* in = ws.pool1_out.data() + c * plane_h;
          double* din = ws.d_pool1.data() + c * plane_h;
          for (int ky = 0; ky < K; ++ky) {
            const int iy = y + ky - 1;
            if (iy < 0 || iy >= H) continue;
            for (int kx = 0; kx < K; ++kx) {
              const int ix = x + kx - 1;
              if (ix < 0 || ix >= H) continue;
              gw[ky * K + kx] += d * in[static_cast<std::size_t>(iy) * H + ix];
              din[static_cast<std::size_t>(iy) * H + ix] += d * w[ky * K + kx];
            }
          }
        }
      }

  // pool1 + ReLU backward into d_conv1
  std::fill(ws.d_conv1.begin(), ws.d_conv1.end(), 0.0);
  for (std::size_t i = 0; i < ws.d_pool1.size(); ++i) {
    const int idx = ws.pool1_arg[i];
    if (ws.conv1_out[idx] > 0.0) ws.d_conv1[idx] += ws.d_pool1[i];
  }

  // conv1 backward: bias/weight grads only (input gradient unused)
  const std::size_t plane_p = static_cast<std::size_t>(P) * P;
  for (int o = 0; o < NetShape::conv1_maps; ++o)
    for (int y = 0; y < P; ++y)
      for (int x = 0; x < P; ++x) {
        const double d = ws.d_conv1[o * plane_p + static_cast<std::size_t>(y) * P + x];
        if (d == 0.0) continue;
        g.conv1_b[o] += d;
        for (int c = 0; c < s.channels; ++c) {
          double* gw = g.conv1_w.data() +
                       (static_cast<std::size_t>(o) * s.channels + c) * K * K;
          const double* in = ws.input.data() + c * plane_p;
          for (int ky = 0; ky < K; ++ky) {
            const int iy = y + ky - 1;
            if (iy < 0 || iy >= P) continue;
            for (int kx = 0; kx < K; ++kx) {
              const int ix = x + kx - 1;
              if (ix < 0 || ix >= P) continue;
              gw[ky * K + kx] += d * in[static_cast<std::size_t>(iy) * P + ix];
            }
          }
        }
      }
}

double sample_loss(const Workspace& ws, int label) {
  const double p = std::max(ws.probs[label], 1e-300);
  return -std::log(p);
}

void add_scaled(NetParams& dst, const NetParams& src, double scale) {
  auto d = dst.tensors();
  auto s = src.tensors();
  for (std::size_t t = 0; t < d.size(); ++t) {
    auto& dv = *d[t];
    const auto& sv = *s[t];
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] += scale * sv[i];
  }
}

void scale_params(NetParams& p, double scale) {
  for (auto* t : p.tensors())
    for (double& v : *t) v *= scale;
}

// Fisher-Yates with our deterministic generator.
void shuffle_indices(std::vector<int>& v, Rng rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

struct EvalStats {
  double loss_sum = 0.0;
  std::int64_t correct_pos = 0, correct_neg = 0;
  std::int64_t n_pos = 0, n_neg = 0;
};

// Forward-only pass over a subset; deterministic for any worker count.
EvalStats evaluate_subset(const NetParams& params,
                          const std::vector<LabeledPatch>& dataset,
                          const std::vector<int>& indices, int workers) {
  const std::size_t n_chunks = (indices.size() + kGradChunk - 1) / kGradChunk;
  std::vector<EvalStats> partial(n_chunks);
  parallel_chunks(indices.size(), kGradChunk, workers,
                  [&](std::size_t begin, std::size_t end) {
                    Workspace ws(params.shape);
                    EvalStats st;
                    for (std::size_t i = begin; i < end; ++i) {
                      const LabeledPatch& s = dataset[indices[i]];
                      forward_sample(params, s.patch, ws, true);
                      st.loss_sum += sample_loss(ws, s.label);
                      if (s.label == 1) {
                        st.n_pos++;
                        if (ws.probs[1] >= 0.5) st.correct_pos++;
                      } else {
                        st.n_neg++;
                        if (ws.probs[1] < 0.5) st.correct_neg++;
                      }
                    }
                    partial[begin / kGradChunk] = st;
                  });
  EvalStats total;
  for (const EvalStats& st : partial) {
    total.loss_sum += st.loss_sum;
    total.correct_pos += st.correct_pos;
    total.correct_neg += st.correct_neg;
    total.n_pos += st.n_pos;
    total.n_neg += st.n_neg;
  }
  return total;
}

}  // namespace

void NetShape::validate() const {
  if (patch_size < 4 || patch_size % 4 != 0)
    fail(Errc::bad_config, "net patch_size must be >= 4 and divisible by 4, got " +
                               std::to_string(patch_size));
  if (channels != 1 && channels != 3)
    fail(Errc::bad_config, "net channels must be 1 or 3");
}

NetParams NetParams::zeros(const NetShape& shape) {
  shape.validate();
  NetParams p;
  p.shape = shape;
  p.conv1_w.assign(shape.conv1_w_size(), 0.0);
  p.conv1_b.assign(NetShape::conv1_maps, 0.0);
  p.conv2_w.assign(shape.conv2_w_size(), 0.0);
  p.conv2_b.assign(NetShape::conv2_maps, 0.0);
  p.dense_w.assign(shape.dense_w_size(), 0.0);
  p.dense_b.assign(2, 0.0);
  return p;
}

NetParams NetParams::he_uniform(const NetShape& shape, std::uint64_t seed) {
  NetParams p = zeros(shape);
  Rng rng(seed);
  const auto init = [&rng](std::vector<double>& w, int fan_in) {
    const double limit = std::sqrt(6.0 / fan_in);
    for (double& v : w) v = rng.uniform(-limit, limit);
  };
  init(p.conv1_w, shape.channels * K * K);
  init(p.conv2_w, NetShape::conv1_maps * K * K);
  init(p.dense_w, shape.flat_dim());
  return p;
}

std::size_t NetParams::param_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += t->size();
  return n;
}

std::array<std::vector<double>*, 6> NetParams::tensors() {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &dense_w, &dense_b};
}

std::array<const std::vector<double>*, 6> NetParams::tensors() const {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &dense_w, &dense_b};
}

AdamState AdamState::init(const NetShape& shape) {
  AdamState st;
  st.m = NetParams::zeros(shape);
  st.v = NetParams::zeros(shape);
  return st;
}

void adam_step(NetParams& params, const NetParams& grads, AdamState& state,
               double learning_rate, const AdamConfig& cfg) {
  if (params.shape != grads.shape || params.shape != state.m.shape)
    fail(Errc::shape_mismatch, "adam_step: parameter/gradient/state shapes differ");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  auto pt = params.tensors();
  auto gt = grads.tensors();
  auto mt = state.m.tensors();
  auto vt = state.v.tensors();
  for (std::size_t t = 0; t < pt.size(); ++t) {
    auto& p = *pt[t];
    const auto& g = *gt[t];
    auto& m = *mt[t];
    auto& v = *vt[t];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

double forward(const NetParams& params, const Raster& patch) {
  return forward_probs(params, patch)[1];
}

std::array<double, 2> forward_probs(const NetParams& params,
                                    const Raster& patch) {
  Workspace ws(params.shape);
  forward_sample(params, patch, ws, false);
  return ws.probs;
}

double loss_and_grads(const NetParams& params,
                      std::span<const LabeledPatch> batch, NetParams& grads,
                      int workers) {
  if (batch.empty()) fail(Errc::empty_input, "loss_and_grads: empty batch");
  for (const LabeledPatch& s : batch)
    if (s.label > 1)
      fail(Errc::out_of_range, "label must be 0 or 1");

  grads = NetParams::zeros(params.shape);
  const std::size_t n_chunks = (batch.size() + kGradChunk - 1) / kGradChunk;
  std::vector<NetParams> partial_grads;
  partial_grads.reserve(n_chunks);
  for (std::size_t c = 0; c < n_chunks; ++c)
    partial_grads.push_back(NetParams::zeros(params.shape));
  std::vector<double> partial_loss(n_chunks, 0.0);

  parallel_chunks(batch.size(), kGradChunk, workers,
                  [&](std::size_t begin, std::size_t end) {
                    const std::size_t chunk = begin / kGradChunk;
                    Workspace ws(params.shape);
                    for (std::size_t i = begin; i < end; ++i) {
                      forward_sample(params, batch[i].patch, ws, true);
                      partial_loss[chunk] += sample_loss(ws, batch[i].label);
                      backward_sample(params, ws, batch[i].label,
                                      partial_grads[chunk]);
                    }
                  });

  double loss_sum = 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t c = 0; c < n_chunks; ++c) {
    loss_sum += partial_loss[c];
    add_scaled(grads, partial_grads[c], inv_n);
  }
  const double loss = loss_sum * inv_n;
  if (!std::isfinite(loss)) fail(Errc::non_finite, "non-finite value in layer 'loss'");
  return loss;
}

void TrainConfig::validate() const {
  if (batch_size < 2 || batch_size % 2 != 0)
    fail(Errc::bad_config, "batch_size must be even and >= 2 (class-balanced batches)");
  if (!(learning_rate > 0.0)) fail(Errc::bad_config, "learning_rate must be positive");
  if (!(min_learning_rate > 0.0))
    fail(Errc::bad_config, "min_learning_rate must be positive");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0))
    fail(Errc::bad_config, "plateau_factor must be in (0,1)");
  if (plateau_patience < 1 || early_stop_patience < 1)
    fail(Errc::bad_config, "patience values must be >= 1");
  if (max_epochs < 1) fail(Errc::bad_config, "max_epochs must be >= 1");
  if (workers < 1) fail(Errc::bad_config, "workers must be >= 1");
  if (train_fraction < 0 || val_fraction < 0 || test_fraction < 0 ||
      std::fabs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9)
    fail(Errc::bad_config, "split fractions must be non-negative and sum to 1");
}

TrainResult train(const std::vector<LabeledPatch>& dataset,
                  const TrainConfig& cfg, const AugmentFn& augment) {
  cfg.validate();
  if (dataset.empty()) fail(Errc::empty_input, "train: empty dataset");

  const Raster& first = dataset.front().patch;
  if (first.width != first.height)
    fail(Errc::shape_mismatch, "training patches must be square");
  NetShape shape{first.width, first.channels};
  shape.validate();
  std::vector<int> class_idx[2];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const LabeledPatch& s = dataset[i];
    if (s.label > 1) fail(Errc::out_of_range, "label must be 0 or 1");
    if (s.patch.width != shape.patch_size || s.patch.height != shape.patch_size ||
        s.patch.channels != shape.channels)
      fail(Errc::shape_mismatch, "training patches must share dimensions");
    class_idx[s.label].push_back(static_cast<int>(i));
  }
  if (class_idx[0].empty() || class_idx[1].empty())
    fail(Errc::single_class, "train: dataset must contain both classes");

  const Rng master(cfg.seed);
  SplitIndices split;
  std::vector<int> train_by_class[2];
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<int> idx = class_idx[cls];
    shuffle_indices(idx, master.child(1 + cls));
    const auto n = static_cast<std::int64_t>(idx.size());
    const auto n_train = static_cast<std::int64_t>(
        std::floor(cfg.train_fraction * static_cast<double>(n)));
    const auto n_val = static_cast<std::int64_t>(
        std::floor(cfg.val_fraction * static_cast<double>(n)));
    train_by_class[cls].assign(idx.begin(), idx.begin() + n_train);
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + n_train);
    split.val.insert(split.val.end(), idx.begin() + n_train,
                     idx.begin() + n_train + n_val);
    split.test.insert(split.test.end(), idx.begin() + n_train + n_val, idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());

  const int half_batch = cfg.batch_size / 2;
  for (int cls = 0; cls < 2; ++cls)
    if (static_cast<int>(train_by_class[cls].size()) < half_batch)
      fail(Errc::bad_config,
           "batch of " + std::to_string(cfg.batch_size) +
               " needs at least " + std::to_string(half_batch) +
               " training samples of class " + std::to_string(cls) + ", have " +
               std::to_string(train_by_class[cls].size()));
  bool val_has[2] = {false, false};
  for (int i : split.val) val_has[dataset[i].label] = true;
  if (!val_has[0] || !val_has[1])
    fail(Errc::bad_config,
         "validation split must contain both classes; enlarge the dataset or "
         "the validation fraction");

  NetParams params = NetParams::he_uniform(shape, master.child(0).seed());
  AdamState adam = AdamState::init(shape);
  NetParams grads = NetParams::zeros(shape);
  double lr = cfg.learning_rate;

  TrainResult result;
  result.split = split;
  NetParams best_params = params;
  int plateau_count = 0;
  int stale_count = 0;

  const std::uint64_t aug_base = std::uint64_t{1} << 32;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<int> order0 = train_by_class[0];
    std::vector<int> order1 = train_by_class[1];
    shuffle_indices(order0, master.child(16 + 2 * static_cast<std::uint64_t>(epoch)));
    shuffle_indices(order1, master.child(17 + 2 * static_cast<std::uint64_t>(epoch)));
    const int n_batches =
        static_cast<int>(std::min(order0.size(), order1.size())) / half_batch;

    double train_loss_sum = 0.0;
    for (int b = 0; b < n_batches; ++b) {
      std::vector<LabeledPatch> batch;
      batch.reserve(cfg.batch_size);
      for (int cls = 0; cls < 2; ++cls) {
        const auto& order = cls == 0 ? order0 : order1;
        for (int k = 0; k < half_batch; ++k) {
          const int idx = order[static_cast<std::size_t>(b) * half_batch + k];
          LabeledPatch s = dataset[idx];
          if (augment) {
            Rng stream = master.child(aug_base +
                                      static_cast<std::uint64_t>(epoch) *
                                          dataset.size() +
                                      static_cast<std::uint64_t>(idx));
            s.patch = augment(s.patch, stream);
          }
          batch.push_back(std::move(s));
        }
      }
      train_loss_sum += loss_and_grads(params, batch, grads, cfg.workers);
      adam_step(params, grads, adam, lr, cfg.adam);
    }

    const EvalStats val = evaluate_subset(params, dataset, split.val, cfg.workers);
    const double val_loss = val.loss_sum / static_cast<double>(split.val.size());
    const double val_ba =
        0.5 * (static_cast<double>(val.correct_pos) / val.n_pos +
               static_cast<double>(val.correct_neg) / val.n_neg);

    result.history.epochs.push_back({epoch,
                                     train_loss_sum / std::max(1, n_batches),
                                     val_loss, lr, val_ba});
    result.history.epochs_run = epoch;

    if (val_loss < result.history.best_val_loss) {
      result.history.best_val_loss = val_loss;
      result.history.best_epoch = epoch;
      best_params = params;
      plateau_count = 0;
      stale_count = 0;
    } else {
      plateau_count++;
      stale_count++;
    }
    if (plateau_count >= cfg.plateau_patience) {
      lr = std::max(lr * cfg.plateau_factor, cfg.min_learning_rate);
      plateau_count = 0;
    }
    if (stale_count >= cfg.early_stop_patience) {
      result.history.early_stopped = true;
      break;
    }
  }

  result.params = std::move(best_params);
  return result;
}

double grad_check(std::uint64_t seed, int patch_size, int channels) {
  if (patch_size < 8)
    fail(Errc::bad_config, "grad_check patch_size must be >= 8");
  NetShape shape{patch_size, channels};
  shape.validate();
  const Rng master(seed);
  NetParams params = NetParams::he_uniform(shape, master.child(0).seed());

  std::vector<LabeledPatch> batch;
  for (int i = 0; i < 4; ++i) {
    Rng stream = master.child(1 + static_cast<std::uint64_t>(i));
    Raster patch(patch_size, patch_size, channels);
    for (float& v : patch.pixels) v = static_cast<float>(stream.uniform());
    batch.push_back({std::move(patch), static_cast<std::uint8_t>(i % 2)});
  }

  NetParams analytic = NetParams::zeros(shape);
  loss_and_grads(params, batch, analytic, 1);

  NetParams scratch = NetParams::zeros(shape);
  const double h = 1e-5;
  double max_rel = 0.0;
  auto pt = params.tensors();
  auto at = analytic.tensors();
  for (std::size_t t = 0; t < pt.size(); ++t) {
    auto& pv = *pt[t];
    const auto& av = *at[t];
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double saved = pv[i];
      pv[i] = saved + h;
      const double lp = loss_and_grads(params, batch, scratch, 1);
      pv[i] = saved - h;
      const double lm = loss_and_grads(params, batch, scratch, 1);
      pv[i] = saved;
      const double fd = (lp - lm) / (2.0 * h);
      const double denom = std::max({std::fabs(av[i]), std::fabs(fd), 1e-8});
      max_rel = std::max(max_rel, std::fabs(av[i] - fd) / denom);
    }
  }
  return max_rel;
}

namespace {

void put_f32_le(std::string& out, double v) {
  const float f = static_cast<float>(v);
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  out.push_back(static_cast<char>(bits & 0xff));
  out.push_back(static_cast<char>((bits >> 8) & 0xff));
  out.push_back(static_cast<char>((bits >> 16) & 0xff));
  out.push_back(static_cast<char>((bits >> 24) & 0xff));
}

}  // namespace

void save_checkpoint(const NetParams& params, const std::filesystem::path& path) {
  params.shape.validate();
  std::string payload = "MNET 1 " + std::to_string(params.shape.patch_size) +
                        " " + std::to_string(params.shape.channels) + "\n";
  for (const auto* t : params.tensors())
    for (double v : *t) put_f32_le(payload, v);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::unwritable_path, "cannot write " + path.string());
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) fail(Errc::unwritable_path, "write failed: " + path.string());
}

NetParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::file_missing, "no such file: " + path.string());
  std::string header;
  if (!std::getline(in, header)) fail(Errc::bad_magic, "empty checkpoint file");
  std::istringstream hs(header);
  std::string tag;
  int version = 0, patch_size = 0, channels = 0;
  hs >> tag >> version >> patch_size >> channels;
  if (tag != "MNET" || version != 1 || hs.fail())
    fail(Errc::bad_magic, "bad MNET header: '" + header + "'");
  NetShape shape{patch_size, channels};
  shape.validate();

  NetParams params = NetParams::zeros(shape);
  const std::size_t n = params.param_count();
  std::vector<unsigned char> raw(n * 4);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    fail(Errc::dimension_mismatch, "checkpoint payload shorter than expected");
  char extra;
  if (in.read(&extra, 1))
    fail(Errc::dimension_mismatch, "checkpoint payload longer than expected");

  std::size_t off = 0;
  for (auto* t : params.tensors())
    for (double& v : *t) {
      std::uint32_t bits = static_cast<std::uint32_t>(raw[off]) |
                           (static_cast<std::uint32_t>(raw[off + 1]) << 8) |
                           (static_cast<std::uint32_t>(raw[off + 2]) << 16) |
                           (static_cast<std::uint32_t>(raw[off + 3]) << 24);
      float f;
      std::memcpy(&f, &bits, 4);
      if (!std::isfinite(f))
        fail(Errc::non_finite, "non-finite parameter in checkpoint");
      v = static_cast<double>(f);
      off += 4;
    }
  return params;
}

}  // namespace synloc
