// Times the OpenMP kernels against their serial reference twins on the
// production layer shapes. Not a ctest target — run it by hand:
//   ./build/bench/drivenet_bench [reps]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include "drivenet/kernels.hpp"
#include "drivenet/rng.hpp"

using drivenet::Rng;
using drivenet::Tensor;

namespace {

Tensor random_tensor(Rng& rng, std::vector<int> shape) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

double time_ms(int reps, const std::function<void()>& fn) {
  fn();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, double flop, double serial_ms, double parallel_ms) {
  std::printf("%-22s %10.3f ms %10.3f ms %8.2fx %9.2f GFLOP/s\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms, flop / (parallel_ms * 1e6));
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 20;
  Rng rng(7);

  std::printf("%-22s %13s %13s %9s %13s\n", "kernel", "serial", "openmp", "speedup",
              "throughput");

  {
    Tensor in = random_tensor(rng, {1, 48, 64});
    Tensor k = random_tensor(rng, {32, 1, 5, 5});
    Tensor b = random_tensor(rng, {32});
    const double flop = 2.0 * 32 * 44 * 60 * 25;
    const double s = time_ms(reps, [&] { drivenet::serial::conv2d_forward(in, k, b); });
    const double p = time_ms(reps, [&] { drivenet::conv2d_forward(in, k, b); });
    report("conv 32x5x5x1", flop, s, p);
  }
  {
    Tensor in = random_tensor(rng, {32, 22, 30});
    Tensor k = random_tensor(rng, {64, 32, 5, 5});
    Tensor b = random_tensor(rng, {64});
    const double flop = 2.0 * 64 * 18 * 26 * 32 * 25;
    const double s = time_ms(reps, [&] { drivenet::serial::conv2d_forward(in, k, b); });
    const double p = time_ms(reps, [&] { drivenet::conv2d_forward(in, k, b); });
    report("conv 64x5x5x32", flop, s, p);
  }
  {
    Tensor in = random_tensor(rng, {64, 9, 13});
    Tensor k = random_tensor(rng, {128, 64, 1, 1});
    Tensor b = random_tensor(rng, {128});
    const double flop = 2.0 * 128 * 9 * 13 * 64;
    const double s = time_ms(reps, [&] { drivenet::serial::conv2d_forward(in, k, b); });
    const double p = time_ms(reps, [&] { drivenet::conv2d_forward(in, k, b); });
    report("conv 128x1x1x64", flop, s, p);
  }
  {
    Tensor in = random_tensor(rng, {32, 44, 60});
    const double flop = 3.0 * 32 * 22 * 30;  // 3 compares per window
    const double s = time_ms(reps, [&] { drivenet::serial::maxpool2x2_forward(in); });
    const double p = time_ms(reps, [&] { drivenet::maxpool2x2_forward(in); });
    report("maxpool 32x44x60", flop, s, p);
  }
  {
    Tensor in = random_tensor(rng, {64, 18, 26});
    const double flop = static_cast<double>(in.numel());
    const double s = time_ms(reps, [&] { drivenet::serial::relu(in); });
    const double p = time_ms(reps, [&] { drivenet::relu(in); });
    report("relu 64x18x26", flop, s, p);
  }
  {
    Tensor in = random_tensor(rng, {128});
    Tensor w = random_tensor(rng, {10, 128});
    Tensor b = random_tensor(rng, {10});
    const double flop = 2.0 * 10 * 128;
    const double s = time_ms(reps, [&] { drivenet::serial::dense_forward(in, w, b); });
    const double p = time_ms(reps, [&] { drivenet::dense_forward(in, w, b); });
    report("dense 10x128", flop, s, p);
  }
  {
    // backward pass of the heavyweight layer
    Tensor in = random_tensor(rng, {32, 22, 30});
    Tensor k = random_tensor(rng, {64, 32, 5, 5});
    Tensor g = random_tensor(rng, {64, 18, 26});
    const double flop = 2.0 * 2.0 * 64 * 18 * 26 * 32 * 25;
    const double s = time_ms(reps, [&] { drivenet::serial::conv2d_backward(in, k, g); });
    const double p = time_ms(reps, [&] { drivenet::conv2d_backward(in, k, g); });
    report("conv2 backward", flop, s, p);
  }
  return 0;
}
