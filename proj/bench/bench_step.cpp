// Timing harness for the hot paths: listening/prediction steps, Gram
// accumulation, the ridge solve, and spectral-radius estimation at the
// production size N = 1000. Not a test; run manually to gauge a machine.
#include <chrono>
#include <cstdio>

#include "mfrc/reservoir.hpp"
#include "mfrc/systems.hpp"
#include "mfrc/training.hpp"

using namespace mfrc;
using Clock = std::chrono::steady_clock;

static double secs(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

int main() {
  ReservoirConfig cfg;
  cfg.seed = 42;
  cfg.rho = 0.7;

  auto t0 = Clock::now();
  const GuanParams guan;
  TimeSeries src = integrate_guan(guan, {1, 1, 1}, 0.0, cfg.t_train, cfg.tau);
  auto t1 = Clock::now();
  std::printf("source integrate [0,%g]: %.3f s\n", cfg.t_train, secs(t0, t1));

  t0 = Clock::now();
  ReservoirMatrices mat = build_matrices(cfg);
  t1 = Clock::now();
  std::printf("build matrices (incl. spectral radius): %.3f s, nnz=%ld\n", secs(t0, t1),
              static_cast<long>(mat.m.nonZeros()));

  t0 = Clock::now();
  double sr = spectral_radius(mat.m);
  t1 = Clock::now();
  std::printf("spectral radius of scaled M: %.9f (%.3f s)\n", sr, secs(t0, t1));

  Eigen::VectorXd r0 = Eigen::VectorXd::Zero(cfg.n_neurons);
  t0 = Clock::now();
  GramAccumulator acc(cfg.feature_dim(), cfg.dim_in);
  Eigen::VectorXd r_end;
  listen_scan(cfg, mat, src, r0, cfg.t_train, [&](Eigen::Index k, const Eigen::VectorXd& r) {
    const double t = static_cast<double>(k) * cfg.tau;
    if (t >= cfg.t_listen - 1e-9) acc.add(r, src.samples.col(k));
    if (k == static_cast<Eigen::Index>(std::llround(cfg.t_train / cfg.tau))) r_end = r;
  });
  GramBlocks gb = acc.finish();
  t1 = Clock::now();
  const double listen_steps = cfg.t_train / cfg.tau;
  std::printf("listen+gram over [0,%g]: %.3f s (%.1f us/step incl. gram), cols=%ld\n",
              cfg.t_train, secs(t0, t1), 1e6 * secs(t0, t1) / listen_steps,
              static_cast<long>(gb.cols));

  t0 = Clock::now();
  Readout w = ridge_solve_from_grams(gb, cfg.beta_reg);
  t1 = Clock::now();
  std::printf("ridge solve 2Nx2N: %.3f s (residual %.2e)\n", secs(t0, t1),
              w.prov.solve_residual);

  t0 = Clock::now();
  PredictResult pr = predict(cfg, mat, w.w_out, r_end, cfg.t_predict);
  t1 = Clock::now();
  const double pred_steps = cfg.t_predict / cfg.tau;
  std::printf("predict over [0,%g]: %.3f s (%.1f us/step)\n", cfg.t_predict, secs(t0, t1),
              1e6 * secs(t0, t1) / pred_steps);
  std::printf("  u_hat final: %.4f %.4f %.4f\n", pr.u_hat.samples(0, pr.u_hat.size() - 1),
              pr.u_hat.samples(1, pr.u_hat.size() - 1), pr.u_hat.samples(2, pr.u_hat.size() - 1));
  return 0;
}
