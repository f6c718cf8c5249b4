#include <chrono>
#include <cstdio>

#include "mfrc/reservoir_batch.hpp"

using namespace mfrc;
using Clock = std::chrono::steady_clock;

int main() {
  ReservoirConfig cfg;
  cfg.seed = 42;
  cfg.rho = 0.7;
  ReservoirMatrices mat = build_matrices(cfg);
  const int W = 8;
  RowMat x = RowMat::Random(cfg.n_neurons, W);
  RowMat y(cfg.n_neurons, W);
  const int reps = 20000;

  auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) detail::spmm(mat.m, x.data(), y.data(), W);
  auto t1 = Clock::now();
  std::printf("spmm w=8: %.2f us (all lanes)\n",
              1e6 * std::chrono::duration<double>(t1 - t0).count() / reps);

  Eigen::ArrayXd scratch;
  t0 = Clock::now();
  for (int i = 0; i < reps; ++i) detail::tanh_inplace(y.data(), y.size(), scratch);
  t1 = Clock::now();
  std::printf("tanh 8000: %.2f us\n",
              1e6 * std::chrono::duration<double>(t1 - t0).count() / reps);

  RowMat k1 = RowMat::Random(cfg.n_neurons, W), tmp(cfg.n_neurons, W);
  t0 = Clock::now();
  for (int i = 0; i < reps; ++i) tmp = x + 0.005 * k1;
  t1 = Clock::now();
  std::printf("axpy 8000: %.2f us\n",
              1e6 * std::chrono::duration<double>(t1 - t0).count() / reps);

  t0 = Clock::now();
  for (int i = 0; i < reps; ++i) tmp = 10.0 * (y - x);
  t1 = Clock::now();
  std::printf("scale-sub 8000: %.2f us\n",
              1e6 * std::chrono::duration<double>(t1 - t0).count() / reps);
  return 0;
}
