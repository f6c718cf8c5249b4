#pragma once

#include <functional>
#include <vector>

#include "mfrc/pipeline.hpp"

namespace mfrc {

/// Inclusive range with fixed step; value i is lo + i*step.
struct AxisSpec {
  double lo = 0.0, hi = 0.0, step = 0.0;
  std::vector<double> values() const;
};

AxisSpec parse_axis(const std::string& s);  // "lo:hi:step"

/// Grid experiment description. `deltas` switches to timescale mode
/// ((Delta, rho)-plane at fixed alpha, Case I only).
struct GridSpec {
  CaseId case_id = CaseId::I;
  AxisSpec alphas{0.0, 1.0, 0.02};
  AxisSpec rhos{0.1, 1.1, 0.05};
  AxisSpec deltas{};               // empty unless timescale mode
  double timescale_alpha = 0.5;
  ReservoirConfig config;
  int workers = 0;                 // 0 = hardware concurrency

  void validate() const;
};

struct CellResult {
  BehaviorLabel label;
  bool failed = false;
  std::string error;
};

/// Row-major grid of labels: index (i_rho, j_alpha) -> cells[i_rho * n_alpha + j_alpha].
struct LabelGrid {
  std::vector<double> rhos, alphas;
  std::vector<CellResult> cells;
  const CellResult& at(size_t i_rho, size_t j_alpha) const {
    return cells[i_rho * alphas.size() + j_alpha];
  }
};

/// Full (alpha, rho) classification for both prediction ICs. Per rho the
/// matrices are built and both sources listened to once (cached Gram blocks);
/// per alpha only the ridge system is re-solved. Per-cell failures are
/// recorded in the cell, never abort the grid. Deterministic for any worker
/// count: work items and batch composition are fixed by the spec alone.
std::pair<LabelGrid, LabelGrid> sweep_alpha_rho(const GridSpec& spec);

/// True where both ICs reconstructed their attractor.
std::vector<uint8_t> multifunctional_region(const LabelGrid& g1, const LabelGrid& g2);

struct TimescaleResult {
  std::vector<double> deltas, rhos;
  std::vector<uint8_t> mask;  // row-major (i_delta, j_rho)
  LabelGrid grid_ic1, grid_ic2;  // flattened over (delta x rho), alpha axis = deltas
};

/// Multifunctionality mask in the (Delta, rho)-plane at fixed alpha; the A1
/// source is regenerated per Delta with the rescaled right-hand side.
TimescaleResult sweep_timescale(const GridSpec& spec);

struct EpsilonCurves {
  std::vector<double> alphas;
  std::vector<double> eps_s1, eps_s2;      // epsilon_S(alpha)
  double theta_task_1 = 0.0, theta_task_2 = 0.0;
};

/// epsilon_S(alpha) for both attractors at fixed rho (error ratio of the
/// blended readout against the task-specific one, t* from the config).
EpsilonCurves sweep_alpha_error(CaseId case_id, double rho, const AxisSpec& alphas,
                                const ReservoirConfig& cfg, int workers = 0);

/// Closed-loop predictions for many (readout, initial state) pairs sharing
/// one matrix draw, grouped into fixed batches; returns u_hat series.
std::vector<TimeSeries> batch_predict_uhat(const ReservoirConfig& cfg,
                                           const ReservoirMatrices& mat,
                                           const std::vector<const Eigen::MatrixXd*>& readouts,
                                           const std::vector<const Eigen::VectorXd*>& r0s,
                                           double horizon, int workers);

/// Deterministic work runner: executes fn(i) for i in [0, n) on `workers`
/// threads; items are claimed atomically but results must be written to
/// per-index slots by the caller. Exceptions are captured and rethrown.
void run_indexed(Eigen::Index n, int workers, const std::function<void(Eigen::Index)>& fn);

/// Worker-count resolution: explicit value, else MFRC_WORKERS, else hardware.
int resolve_workers(int requested);

}  // namespace mfrc
