// Phase timing inside an 8-lane closed-loop eval.
#include <chrono>
#include <cstdio>

#include "mfrc/reservoir_batch.hpp"
#include "mfrc/training.hpp"

using namespace mfrc;
using Clock = std::chrono::steady_clock;
static double us(Clock::time_point a, Clock::time_point b, int reps) {
  return 1e6 * std::chrono::duration<double>(b - a).count() / reps;
}

int main() {
  ReservoirConfig cfg;
  cfg.seed = 42;
  cfg.rho = 0.7;
  ReservoirMatrices mat = build_matrices(cfg);
  const int W = 8;
  const Eigen::Index n = cfg.n_neurons;
  RowMat state = RowMat::Random(n, W) * 0.3, z(n, W), out(n, W), u = RowMat::Random(3, W);
  RowMat win_sig = cfg.sigma * mat.w_in;
  Eigen::MatrixXd w_out = Eigen::MatrixXd::Random(3, 2 * n) * 0.01;
  RowMat w_copy = w_out;
  Eigen::ArrayXd scratch;
  const int reps = 20000;

  auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i)
    detail::spmm_bias(mat.m, state.data(), z.data(), win_sig.data(), u.data(), 3, W);
  auto t1 = Clock::now();
  std::printf("spmm_bias:   %.2f us\n", us(t0, t1, reps));

  t0 = Clock::now();
  for (int i = 0; i < reps; ++i)
    detail::tanh_leak(z.data(), state.data(), out.data(), z.size(), cfg.gamma, scratch);
  t1 = Clock::now();
  std::printf("tanh_leak:   %.2f us\n", us(t0, t1, reps));

  // shared readout loop as in ReservoirBatch::readout_of
  RowMat uu(3, W);
  t0 = Clock::now();
  for (int rep = 0; rep < reps; ++rep) {
    uu.setZero();
    for (Eigen::Index d = 0; d < 3; ++d) {
      const double* w1 = w_copy.data() + d * 2 * n;
      const double* w2 = w1 + n;
      double* ur = uu.data() + d * W;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double* rr = state.data() + i * W;
        const double a = w1[i], b = w2[i];
        for (int l = 0; l < W; ++l) {
          const double x = rr[l];
          ur[l] += (a + b * x) * x;
        }
      }
    }
  }
  t1 = Clock::now();
  std::printf("readout:     %.2f us\n", us(t0, t1, reps));

  RowMat r_ = state, k1 = z, k2 = out, k3 = state, k4 = z, tmp(n, W);
  t0 = Clock::now();
  for (int i = 0; i < reps; ++i) {
    tmp = r_ + 0.005 * k1;
    tmp = r_ + 0.005 * k2;
    tmp = r_ + 0.01 * k3;
    r_ += (0.01 / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!r_.allFinite()) return 1;
    r_ = state;
  }
  t1 = Clock::now();
  std::printf("rk4 combine: %.2f us\n", us(t0, t1, reps));
  return 0;
}
