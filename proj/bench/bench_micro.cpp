// Micro-breakdown of one reservoir derivative evaluation.
#include <chrono>
#include <cstdio>

#include "mfrc/reservoir.hpp"

using namespace mfrc;
using Clock = std::chrono::steady_clock;

int main() {
  ReservoirConfig cfg;
  cfg.seed = 42;
  cfg.rho = 0.7;
  ReservoirMatrices mat = build_matrices(cfg);
  Eigen::VectorXd r = Eigen::VectorXd::Random(cfg.n_neurons) * 0.5;
  Eigen::VectorXd z(cfg.n_neurons), out(cfg.n_neurons), u = Eigen::VectorXd::Random(3);
  const int reps = 20000;

  auto t0 = Clock::now();
  double acc = 0;
  for (int i = 0; i < reps; ++i) {
    z.noalias() = mat.m * r;
    acc += z[0];
  }
  auto t1 = Clock::now();
  std::printf("spmv:        %.2f us  (acc %.3f)\n",
              1e6 * std::chrono::duration<double>(t1 - t0).count() / reps, acc);

  t0 = Clock::now();
  for (int i = 0; i < reps; ++i) {
    out = z.array().tanh();
    acc += out[0];
  }
  t1 = Clock::now();
  std::printf("tanh (eigen): %.2f us\n", 1e6 * std::chrono::duration<double>(t1 - t0).count() / reps);

  t0 = Clock::now();
  for (int i = 0; i < reps; ++i) {
    // tanh via vectorized exp: sign(x) * (1 - e) / (1 + e), e = exp(-2|x|)
    Eigen::ArrayXd e = (-2.0 * z.array().abs()).exp();
    out = z.array().sign() * (1.0 - e) / (1.0 + e);
    acc += out[0];
  }
  t1 = Clock::now();
  std::printf("tanh (exp):   %.2f us\n", 1e6 * std::chrono::duration<double>(t1 - t0).count() / reps);

  t0 = Clock::now();
  for (int i = 0; i < reps; ++i) {
    z.noalias() = mat.m * r;
    z.noalias() += cfg.sigma * (mat.w_in * u);
    out = cfg.gamma * (z.array().tanh() - r.array());
    acc += out[0];
  }
  t1 = Clock::now();
  std::printf("full rhs:     %.2f us  (acc %.3f)\n",
              1e6 * std::chrono::duration<double>(t1 - t0).count() / reps, acc);
  return 0;
}
