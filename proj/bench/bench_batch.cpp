// Lane-batched hot-path timings at the production size.
#include <chrono>
#include <cstdio>

#include "mfrc/reservoir_batch.hpp"
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
  ReservoirMatrices mat = build_matrices(cfg);
  const GuanParams guan;
  TimeSeries src1 = integrate_guan(guan, {1, 1, 1}, 0.0, cfg.t_train, cfg.tau);
  TimeSeries src2 = integrate_guan(guan, {1, 1, -1}, 0.0, cfg.t_train, cfg.tau);

  // open loop, 2 lanes, fused gram accumulation
  {
    ReservoirBatch batch(cfg, mat, 2);
    batch.set_inputs({&src1, &src2});
    GramAccumulator acc1(cfg.feature_dim(), cfg.dim_in);
    GramAccumulator acc2(cfg.feature_dim(), cfg.dim_in);
    const auto steps = static_cast<Eigen::Index>(std::llround(cfg.t_train / cfg.tau));
    const auto first = static_cast<Eigen::Index>(std::llround(cfg.t_listen / cfg.tau));
    Eigen::VectorXd r(cfg.n_neurons);
    auto t0 = Clock::now();
    for (Eigen::Index k = 0; k < steps; ++k) {
      batch.step(static_cast<double>(k) * cfg.tau);
      if (k + 1 >= first) {
        batch.extract_lane(0, r);
        acc1.add(r, src1.samples.col(k + 1));
        batch.extract_lane(1, r);
        acc2.add(r, src2.samples.col(k + 1));
      }
    }
    GramBlocks g1 = acc1.finish();
    GramBlocks g2 = acc2.finish();
    auto t1 = Clock::now();
    std::printf("listen+gram 2 lanes: %.3f s (%.1f us/step for the pair), cols %ld/%ld\n",
                secs(t0, t1), 1e6 * secs(t0, t1) / static_cast<double>(steps),
                static_cast<long>(g1.cols), static_cast<long>(g2.cols));

    auto ts = Clock::now();
    Readout w1 = ridge_solve_from_grams(g1, cfg.beta_reg);
    Readout w2 = ridge_solve_from_grams(g2, cfg.beta_reg);
    auto te = Clock::now();
    std::printf("2 ridge solves: %.3f s (residuals %.1e %.1e)\n", secs(ts, te),
                w1.prov.solve_residual, w2.prov.solve_residual);

    // closed loop: shared readout, 8 lanes
    for (int lanes : {1, 2, 8}) {
      ReservoirBatch pb(cfg, mat, lanes);
      std::vector<const Eigen::MatrixXd*> ws(static_cast<size_t>(lanes), &w1.w_out);
      pb.set_readouts(ws);
      Eigen::VectorXd rf = Eigen::VectorXd::Constant(cfg.n_neurons, 0.1);
      for (int l = 0; l < lanes; ++l) pb.set_state(l, rf);
      const int psteps = 5000;
      t0 = Clock::now();
      for (int k = 0; k < psteps; ++k) pb.step(0.0);
      t1 = Clock::now();
      std::printf("predict shared-readout %d lanes: %.1f us/step (%.1f us/step/lane)\n", lanes,
                  1e6 * secs(t0, t1) / psteps, 1e6 * secs(t0, t1) / psteps / lanes);
    }
    // closed loop: per-lane readouts, 8 lanes
    {
      const int lanes = 8;
      ReservoirBatch pb(cfg, mat, lanes);
      std::vector<const Eigen::MatrixXd*> ws;
      for (int l = 0; l < lanes; ++l) ws.push_back(l % 2 ? &w2.w_out : &w1.w_out);
      pb.set_readouts(ws);
      Eigen::VectorXd rf = Eigen::VectorXd::Constant(cfg.n_neurons, 0.1);
      for (int l = 0; l < lanes; ++l) pb.set_state(l, rf);
      const int psteps = 5000;
      auto ta = Clock::now();
      for (int k = 0; k < psteps; ++k) pb.step(0.0);
      auto tb = Clock::now();
      std::printf("predict per-lane readouts %d lanes: %.1f us/step (%.1f us/step/lane)\n",
                  lanes, 1e6 * secs(ta, tb) / psteps, 1e6 * secs(ta, tb) / psteps / lanes);
    }
  }
  return 0;
}
