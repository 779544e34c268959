#include "drivenet/adam.hpp"

#include <cmath>
#include <string>

#include "drivenet/error.hpp"

namespace drivenet {

AdamState AdamState::init(const std::vector<int>& shape, const AdamConfig& cfg) {
  AdamState s{Tensor(shape), Tensor(shape), 0, cfg};
  return s;
}

void adam_step(Tensor& params, const Tensor& grads, AdamState& state) {
  require_same_shape(params, grads, "adam_step params/grads");
  require_same_shape(params, state.m, "adam_step params/m");
  require_same_shape(params, state.v, "adam_step params/v");

  state.t += 1;
  const double b1 = state.cfg.beta1;
  const double b2 = state.cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  const double alpha = state.cfg.alpha;
  const double eps = state.cfg.epsilon;

  float* p = params.ptr();
  float* m = state.m.ptr();
  float* v = state.v.ptr();
  const float* g = grads.ptr();
  const int64_t n = params.numel();

  // Moments are stored as f32 but each element update runs in double so the
  // tiny epsilon and the bias corrections keep their full precision.
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    const double gi = g[i];
    const double mi = b1 * m[i] + (1.0 - b1) * gi;
    const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
    m[i] = static_cast<float>(mi);
    v[i] = static_cast<float>(vi);
    const double mhat = mi / bc1;
    const double vhat = vi / bc2;
    p[i] = static_cast<float>(p[i] - alpha * mhat / (std::sqrt(vhat) + eps));
  }
}

}  // namespace drivenet
