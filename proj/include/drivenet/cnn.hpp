#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "drivenet/adam.hpp"
#include "drivenet/feature_matrix.hpp"
#include "drivenet/kernels.hpp"
#include "drivenet/rng.hpp"
#include "drivenet/tensor.hpp"

namespace drivenet {

// Layer geometry of the two-conv network. Defaults give the production
// classifier (1×48×64 input → 128-d features → 10 classes); tests substitute
// smaller geometries so finite-difference checks stay fast.
struct CnnArch {
  int in_h = 48;
  int in_w = 64;
  int conv1_out = 32;
  int conv1_k = 5;
  int conv2_out = 64;
  int conv2_k = 5;
  int feature_width = 128;
  int n_classes = 10;

  // Throws ShapeError unless every conv output is positive and every pooled
  // dimension even (48×64 → 44×60 → 22×30 → 18×26 → 9×13 with the defaults).
  void validate() const;

  // spatial grid after conv1 → pool → conv2 → pool
  int grid_h() const { return ((in_h - conv1_k + 1) / 2 - conv2_k + 1) / 2; }
  int grid_w() const { return ((in_w - conv1_k + 1) / 2 - conv2_k + 1) / 2; }
};

struct DriveNetCnn {
  CnnArch arch;
  float dropout_rate = 0.5f;
  uint64_t rng_seed = 0;

  Tensor conv1_w, conv1_b;      // conv1_out×1×k×k, conv1_out
  Tensor conv2_w, conv2_b;      // conv2_out×conv1_out×k×k
  Tensor conv1x1_w, conv1x1_b;  // feature_width×conv2_out×1×1
  Tensor head_w, head_b;        // n_classes×feature_width
};

// Stable (name, tensor) view over the learned parameters; the order doubles
// as the optimizer-state and serialization order.
std::vector<std::pair<const char*, Tensor*>> named_params(DriveNetCnn& model);
std::vector<std::pair<const char*, const Tensor*>> named_params(const DriveNetCnn& model);

// Fan-in-scaled Gaussian weights (std = sqrt(2/fan_in)), zero biases,
// deterministic per seed.
DriveNetCnn build_model(const CnnArch& arch, uint64_t seed);
DriveNetCnn build_model(uint64_t seed);

int64_t param_count(const DriveNetCnn& model);

struct CnnOutput {
  Tensor logits;    // n_classes
  Tensor features;  // feature_width; the vector the classifier head consumed
};

// training=true applies dropout to the 1×1-conv feature map and to the pooled
// vector, and requires an rng; inference consumes no randomness.
CnnOutput forward(const DriveNetCnn& model, const Tensor& image,
                  bool training = false, Rng* rng = nullptr);

// Every intermediate the backward pass needs.
struct ForwardCache {
  Tensor input;
  Tensor a1, p1;       // conv1 out, pooled
  Tensor a2, p2;       // conv2 out, pooled
  Tensor r1;           // relu(p2)
  Tensor a3, r2;       // 1×1 conv out, relu
  Tensor d1;           // dropout over r2 (training only; else r2)
  Tensor pooled;       // global max pool of d1
  Tensor d2;           // dropout over pooled (training only; else pooled)
  Tensor logits;
  std::vector<int32_t> idx1, idx2;  // maxpool argmaxes
  std::vector<int32_t> gmp_idx;     // global-max argmax per channel
  DropoutResult drop_map, drop_vec;
};

ForwardCache forward_cached(const DriveNetCnn& model, const Tensor& image,
                            bool training, Rng* rng);

struct CnnGrads {
  Tensor conv1_w, conv1_b, conv2_w, conv2_b, conv1x1_w, conv1x1_b, head_w, head_b;

  explicit CnnGrads(const DriveNetCnn& model);
  std::vector<Tensor*> tensors();  // same order as named_params
  void add(const CnnGrads& other);
  void scale(float s);
};

CnnGrads backward(const DriveNetCnn& model, const ForwardCache& cache,
                  const Tensor& grad_logits);

struct TrainConfig {
  int epochs = 50;
  int batch_size = 128;
  AdamConfig adam;  // alpha 0.001, beta1 0.9, beta2 0.99, epsilon 1e-8
  float dropout = 0.5f;
  uint64_t seed = 0;
};

struct TrainLog {
  std::vector<double> mean_loss;       // mean per-image training loss, per epoch
  std::vector<double> train_accuracy;  // inference-mode accuracy on the train set
};

// Seeded-shuffle mini-batch Adam training. The final partial batch is
// trained. Identical seed + data ⇒ bit-identical weights, independent of
// thread count. `progress`, when non-null, gets one line per epoch.
TrainLog train(DriveNetCnn& model, const std::vector<Tensor>& images,
               const std::vector<int>& labels, const TrainConfig& cfg,
               std::ostream* progress = nullptr);

// Inference-mode features, one row per image.
FeatureMatrix extract_features(const DriveNetCnn& model,
                               const std::vector<Tensor>& images);

}  // namespace drivenet
