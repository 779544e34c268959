#include "drivenet/cnn.hpp"

#include <cmath>
#include <cstdint>
#include <exception>
#include <ostream>
#include <string>
#include <utility>

#include "drivenet/error.hpp"

namespace drivenet {

namespace {

int argmax_first(const Tensor& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.numel()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

void check_even_positive(int v, const char* what) {
  if (v <= 0 || v % 2 != 0)
    throw ShapeError(std::string("cnn arch: ") + what + " must be positive and even, got " +
                     std::to_string(v));
}

// Global max over each channel's grid; ties keep the first position in
// row-major order. idx stores the within-channel offset.
void global_max_pool(const Tensor& in, Tensor& out, std::vector<int32_t>& idx) {
  const int c = in.dim(0);
  const int64_t hw = static_cast<int64_t>(in.dim(1)) * in.dim(2);
  idx.assign(static_cast<size_t>(c), 0);
  for (int ch = 0; ch < c; ++ch) {
    const float* p = in.ptr() + ch * hw;
    int64_t best = 0;
    for (int64_t i = 1; i < hw; ++i)
      if (p[i] > p[best]) best = i;
    out[ch] = p[best];
    idx[static_cast<size_t>(ch)] = static_cast<int32_t>(best);
  }
}

void check_image(const CnnArch& arch, const Tensor& image) {
  if (image.ndim() != 3 || image.dim(0) != 1 || image.dim(1) != arch.in_h ||
      image.dim(2) != arch.in_w)
    throw ShapeError("cnn: image must be [1, " + std::to_string(arch.in_h) + ", " +
                     std::to_string(arch.in_w) + "], got " + image.shape_str());
}

Tensor he_tensor(Rng& rng, std::vector<int> shape, int fan_in) {
  Tensor t(std::move(shape));
  const double std_dev = std::sqrt(2.0 / fan_in);
  for (int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<float>(rng.normal() * std_dev);
  return t;
}

}  // namespace

void CnnArch::validate() const {
  if (in_h <= 0 || in_w <= 0 || conv1_out <= 0 || conv1_k <= 0 || conv2_out <= 0 ||
      conv2_k <= 0 || feature_width <= 0 || n_classes <= 0)
    throw ShapeError("cnn arch: all dimensions must be positive");
  check_even_positive(in_h - conv1_k + 1, "conv1 output height");
  check_even_positive(in_w - conv1_k + 1, "conv1 output width");
  check_even_positive((in_h - conv1_k + 1) / 2 - conv2_k + 1, "conv2 output height");
  check_even_positive((in_w - conv1_k + 1) / 2 - conv2_k + 1, "conv2 output width");
}

std::vector<std::pair<const char*, Tensor*>> named_params(DriveNetCnn& m) {
  return {{"conv1_w", &m.conv1_w},     {"conv1_b", &m.conv1_b},
          {"conv2_w", &m.conv2_w},     {"conv2_b", &m.conv2_b},
          {"conv1x1_w", &m.conv1x1_w}, {"conv1x1_b", &m.conv1x1_b},
          {"head_w", &m.head_w},       {"head_b", &m.head_b}};
}

std::vector<std::pair<const char*, const Tensor*>> named_params(const DriveNetCnn& m) {
  return {{"conv1_w", &m.conv1_w},     {"conv1_b", &m.conv1_b},
          {"conv2_w", &m.conv2_w},     {"conv2_b", &m.conv2_b},
          {"conv1x1_w", &m.conv1x1_w}, {"conv1x1_b", &m.conv1x1_b},
          {"head_w", &m.head_w},       {"head_b", &m.head_b}};
}

DriveNetCnn build_model(const CnnArch& arch, uint64_t seed) {
  arch.validate();
  DriveNetCnn m;
  m.arch = arch;
  m.rng_seed = seed;

  Rng rng(seed);
  m.conv1_w = he_tensor(rng, {arch.conv1_out, 1, arch.conv1_k, arch.conv1_k},
                        arch.conv1_k * arch.conv1_k);
  m.conv2_w = he_tensor(rng, {arch.conv2_out, arch.conv1_out, arch.conv2_k, arch.conv2_k},
                        arch.conv1_out * arch.conv2_k * arch.conv2_k);
  m.conv1x1_w = he_tensor(rng, {arch.feature_width, arch.conv2_out, 1, 1}, arch.conv2_out);
  m.head_w = he_tensor(rng, {arch.n_classes, arch.feature_width}, arch.feature_width);
  m.conv1_b = Tensor({arch.conv1_out});
  m.conv2_b = Tensor({arch.conv2_out});
  m.conv1x1_b = Tensor({arch.feature_width});
  m.head_b = Tensor({arch.n_classes});
  return m;
}

DriveNetCnn build_model(uint64_t seed) { return build_model(CnnArch{}, seed); }

int64_t param_count(const DriveNetCnn& model) {
  int64_t n = 0;
  for (const auto& [name, t] : named_params(model)) n += t->numel();
  return n;
}

CnnOutput forward(const DriveNetCnn& model, const Tensor& image, bool training, Rng* rng) {
  check_image(model.arch, image);
  Tensor x = conv2d_forward(image, model.conv1_w, model.conv1_b);
  x = maxpool2x2_forward(x).output;
  x = conv2d_forward(x, model.conv2_w, model.conv2_b);
  x = maxpool2x2_forward(x).output;
  x = relu(x);
  x = conv2d_forward(x, model.conv1x1_w, model.conv1x1_b);
  x = relu(x);
  if (training) x = dropout(x, model.dropout_rate, rng, true).output;

  Tensor pooled({model.arch.feature_width});
  std::vector<int32_t> gmp_idx;
  global_max_pool(x, pooled, gmp_idx);
  if (training) pooled = dropout(pooled, model.dropout_rate, rng, true).output;

  CnnOutput out;
  out.logits = dense_forward(pooled, model.head_w, model.head_b);
  out.features = std::move(pooled);
  return out;
}

ForwardCache forward_cached(const DriveNetCnn& model, const Tensor& image, bool training,
                            Rng* rng) {
  check_image(model.arch, image);
  ForwardCache c;
  c.input = image;
  c.a1 = conv2d_forward(c.input, model.conv1_w, model.conv1_b);
  PoolResult p1 = maxpool2x2_forward(c.a1);
  c.p1 = std::move(p1.output);
  c.idx1 = std::move(p1.argmax);
  c.a2 = conv2d_forward(c.p1, model.conv2_w, model.conv2_b);
  PoolResult p2 = maxpool2x2_forward(c.a2);
  c.p2 = std::move(p2.output);
  c.idx2 = std::move(p2.argmax);
  c.r1 = relu(c.p2);
  c.a3 = conv2d_forward(c.r1, model.conv1x1_w, model.conv1x1_b);
  c.r2 = relu(c.a3);
  c.drop_map = dropout(c.r2, model.dropout_rate, rng, training);
  c.d1 = c.drop_map.output;
  c.pooled = Tensor({model.arch.feature_width});
  global_max_pool(c.d1, c.pooled, c.gmp_idx);
  c.drop_vec = dropout(c.pooled, model.dropout_rate, rng, training);
  c.d2 = c.drop_vec.output;
  c.logits = dense_forward(c.d2, model.head_w, model.head_b);
  return c;
}

CnnGrads::CnnGrads(const DriveNetCnn& m)
    : conv1_w(m.conv1_w.shape),
      conv1_b(m.conv1_b.shape),
      conv2_w(m.conv2_w.shape),
      conv2_b(m.conv2_b.shape),
      conv1x1_w(m.conv1x1_w.shape),
      conv1x1_b(m.conv1x1_b.shape),
      head_w(m.head_w.shape),
      head_b(m.head_b.shape) {}

std::vector<Tensor*> CnnGrads::tensors() {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &conv1x1_w, &conv1x1_b, &head_w, &head_b};
}

void CnnGrads::add(const CnnGrads& other) {
  Tensor* mine[] = {&conv1_w, &conv1_b, &conv2_w, &conv2_b,
                    &conv1x1_w, &conv1x1_b, &head_w, &head_b};
  const Tensor* theirs[] = {&other.conv1_w, &other.conv1_b, &other.conv2_w, &other.conv2_b,
                            &other.conv1x1_w, &other.conv1x1_b, &other.head_w, &other.head_b};
  for (int k = 0; k < 8; ++k)
    for (int64_t i = 0; i < mine[k]->numel(); ++i) (*mine[k])[i] += (*theirs[k])[i];
}

void CnnGrads::scale(float s) {
  for (Tensor* t : tensors())
    for (int64_t i = 0; i < t->numel(); ++i) (*t)[i] *= s;
}

CnnGrads backward(const DriveNetCnn& model, const ForwardCache& cache,
                  const Tensor& grad_logits) {
  CnnGrads g(model);

  DenseGrads hg = dense_backward(cache.d2, model.head_w, grad_logits);
  g.head_w = std::move(hg.weights);
  g.head_b = std::move(hg.bias);

  Tensor grad_pooled = dropout_backward(cache.drop_vec, hg.input);

  // global max pool routes each channel's gradient to its argmax cell
  Tensor grad_d1(cache.d1.shape);
  const int64_t hw = static_cast<int64_t>(cache.d1.dim(1)) * cache.d1.dim(2);
  for (int ch = 0; ch < cache.d1.dim(0); ++ch)
    grad_d1[ch * hw + cache.gmp_idx[static_cast<size_t>(ch)]] = grad_pooled[ch];

  Tensor grad_r2 = dropout_backward(cache.drop_map, grad_d1);
  Tensor grad_a3 = relu_backward(cache.a3, grad_r2);

  Conv2dGrads c3 = conv2d_backward(cache.r1, model.conv1x1_w, grad_a3);
  g.conv1x1_w = std::move(c3.kernels);
  g.conv1x1_b = std::move(c3.bias);

  Tensor grad_p2 = relu_backward(cache.p2, c3.input);
  Tensor grad_a2 = maxpool2x2_backward(cache.idx2, grad_p2);

  Conv2dGrads c2 = conv2d_backward(cache.p1, model.conv2_w, grad_a2);
  g.conv2_w = std::move(c2.kernels);
  g.conv2_b = std::move(c2.bias);

  Tensor grad_a1 = maxpool2x2_backward(cache.idx1, c2.input);

  Conv2dGrads c1 = conv2d_backward(cache.input, model.conv1_w, grad_a1);
  g.conv1_w = std::move(c1.kernels);
  g.conv1_b = std::move(c1.bias);
  return g;
}

TrainLog train(DriveNetCnn& model, const std::vector<Tensor>& images,
               const std::vector<int>& labels, const TrainConfig& cfg,
               std::ostream* progress) {
  if (images.empty()) throw ValueError("cnn train: empty dataset");
  if (images.size() != labels.size())
    throw ValueError("cnn train: " + std::to_string(images.size()) + " images vs " +
                     std::to_string(labels.size()) + " labels");
  if (cfg.epochs <= 0 || cfg.batch_size <= 0)
    throw ValueError("cnn train: epochs and batch_size must be positive");
  if (!(cfg.dropout >= 0.0f && cfg.dropout < 1.0f))
    throw ValueError("cnn train: dropout must be in [0,1)");
  const int64_t n = static_cast<int64_t>(images.size());
  for (int64_t i = 0; i < n; ++i) {
    check_image(model.arch, images[static_cast<size_t>(i)]);
    const int lab = labels[static_cast<size_t>(i)];
    if (lab < 0 || lab >= model.arch.n_classes)
      throw ValueError("cnn train: label " + std::to_string(lab) + " at index " +
                       std::to_string(i) + " outside 0.." +
                       std::to_string(model.arch.n_classes - 1));
  }

  model.dropout_rate = cfg.dropout;

  auto params = named_params(model);
  std::vector<AdamState> opt;
  opt.reserve(params.size());
  for (auto& [name, t] : params) opt.push_back(AdamState::init(t->shape, cfg.adam));

  // Independent streams: one for the epoch shuffle, one that deals a dropout
  // seed per image in batch order. Per-image work then owns a private Rng, so
  // results cannot depend on thread scheduling.
  Rng shuffle_rng(derive_seed(cfg.seed, 0));
  Rng mask_seed_rng(derive_seed(cfg.seed, 1));

  std::vector<int64_t> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;

  const int bmax = static_cast<int>(std::min<int64_t>(cfg.batch_size, n));
  std::vector<CnnGrads> slots;
  slots.reserve(static_cast<size_t>(bmax));
  for (int i = 0; i < bmax; ++i) slots.emplace_back(model);
  std::vector<uint64_t> seeds(static_cast<size_t>(bmax));
  std::vector<float> losses(static_cast<size_t>(bmax));

  TrainLog log;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;

    for (int64_t start = 0, batch = 0; start < n; start += cfg.batch_size, ++batch) {
      const int bsz = static_cast<int>(std::min<int64_t>(cfg.batch_size, n - start));
      for (int i = 0; i < bsz; ++i) seeds[static_cast<size_t>(i)] = mask_seed_rng.next_u64();

      std::exception_ptr failure;
#pragma omp parallel for schedule(static)
      for (int i = 0; i < bsz; ++i) {
        try {
          const int64_t s = order[static_cast<size_t>(start + i)];
          Rng drop_rng(seeds[static_cast<size_t>(i)]);
          ForwardCache cache =
              forward_cached(model, images[static_cast<size_t>(s)], true, &drop_rng);
          SoftmaxLoss sl =
              softmax_cross_entropy(cache.logits, labels[static_cast<size_t>(s)]);
          losses[static_cast<size_t>(i)] = sl.loss;
          slots[static_cast<size_t>(i)] = backward(model, cache, sl.grad_logits);
        } catch (...) {
#pragma omp critical
          if (!failure) failure = std::current_exception();
        }
      }
      if (failure) std::rethrow_exception(failure);

      double batch_loss = 0.0;
      for (int i = 0; i < bsz; ++i) batch_loss += losses[static_cast<size_t>(i)];
      if (!std::isfinite(batch_loss))
        throw Error("cnn train: non-finite loss in epoch " + std::to_string(epoch) +
                    ", batch " + std::to_string(batch));
      loss_sum += batch_loss;

      // fixed-order reduction, then the mean gradient drives one Adam step
      CnnGrads acc(model);
      for (int i = 0; i < bsz; ++i) acc.add(slots[static_cast<size_t>(i)]);
      acc.scale(1.0f / static_cast<float>(bsz));
      std::vector<Tensor*> gts = acc.tensors();
      for (size_t k = 0; k < params.size(); ++k)
        adam_step(*params[k].second, *gts[k], opt[k]);
    }

    int64_t correct = 0;
#pragma omp parallel for schedule(static) reduction(+ : correct)
    for (int64_t i = 0; i < n; ++i) {
      CnnOutput out = forward(model, images[static_cast<size_t>(i)], false, nullptr);
      if (argmax_first(out.logits) == labels[static_cast<size_t>(i)]) ++correct;
    }

    log.mean_loss.push_back(loss_sum / static_cast<double>(n));
    log.train_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(n));
    if (progress)
      (*progress) << "epoch " << (epoch + 1) << "/" << cfg.epochs
                  << " loss=" << log.mean_loss.back()
                  << " train_acc=" << log.train_accuracy.back() << "\n";
  }
  return log;
}

FeatureMatrix extract_features(const DriveNetCnn& model, const std::vector<Tensor>& images) {
  const int64_t n = static_cast<int64_t>(images.size());
  for (const Tensor& img : images) check_image(model.arch, img);

  FeatureMatrix out(n, model.arch.feature_width);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    CnnOutput o = forward(model, images[static_cast<size_t>(i)], false, nullptr);
    float* row = out.row(i);
    for (int j = 0; j < model.arch.feature_width; ++j) row[j] = o.features[j];
  }
  return out;
}

}  // namespace drivenet
