#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mfrc/reservoir.hpp"
#include "mfrc/timeseries.hpp"

namespace mfrc {

/// Regression data: X columns are feature-mapped reservoir states q(r(t)),
/// Y columns the target inputs u(t), one column per tau grid point of the
/// training window. Column timestamps are metadata only.
struct TrainingSet {
  Eigen::MatrixXd x;  // 2N x T
  Eigen::MatrixXd y;  // D x T
  std::vector<double> col_times;
};

struct ReadoutProvenance {
  std::string kind;      // "task:<name>" or "blended"
  std::string case_id;   // "I", "II", "III" (empty when built from raw data)
  double alpha = -1.0;   // blending weight; -1 for task-specific
  double rho = 0.0;
  double sigma = 0.0;
  double beta = 0.0;
  uint64_t seed = 0;
  double solve_residual = 0.0;  // relative normal-equation residual
};

/// Trained output matrix W_out (D x 2N) plus provenance.
struct Readout {
  Eigen::MatrixXd w_out;
  ReadoutProvenance prov;
};

/// Accumulated normal-equation blocks: g = X X^T, c = Y X^T. These are the
/// per-rho cache payload for sweeps (alpha only rescales and re-solves).
struct GramBlocks {
  Eigen::MatrixXd g;  // 2N x 2N
  Eigen::MatrixXd c;  // D x 2N
  Eigen::Index cols = 0;
};

/// Collect (q(r(t)), u(t)) column pairs over the closed window
/// [w_start, w_end] from an already-recorded trajectory. Grids must align.
TrainingSet harvest(const ReservoirTrajectory& traj, const TimeSeries& input,
                    double w_start, double w_end);

/// W_out = Y X^T (X X^T + beta I)^{-1} via Cholesky with one step of
/// iterative refinement; never forms an explicit inverse. beta = 0 is
/// allowed but errors out if X X^T is singular.
Readout ridge_solve(const TrainingSet& ts, double beta);
Readout ridge_solve_from_grams(const GramBlocks& gb, double beta);

/// Weighted concatenation (alpha ts1 | (1-alpha) ts2) with the same random
/// column permutation applied jointly to X and Y. The ridge solution is
/// permutation-invariant; the shuffle is kept to mirror the training recipe
/// and is covered by a property test.
TrainingSet blend(const TrainingSet& ts1, const TrainingSet& ts2, double alpha,
                  uint64_t shuffle_seed);

/// Streaming equivalents for the memory-lean path:
/// blend_grams(a, b, alpha) == grams of blend(ts_a, ts_b, alpha).
GramBlocks grams_of(const TrainingSet& ts);
GramBlocks blend_grams(const GramBlocks& a, const GramBlocks& b, double alpha);

/// Build Gram blocks during a listen pass without storing the trajectory.
/// Buffers feature columns in blocks and applies symmetric rank updates; the
/// accumulation order is fixed, so results are bit-reproducible.
class GramAccumulator {
public:
  GramAccumulator(Eigen::Index feature_dim, Eigen::Index target_dim, Eigen::Index block = 256);
  void add(const Eigen::VectorXd& r, const Eigen::VectorXd& u);
  GramBlocks finish();

private:
  void flush();
  Eigen::MatrixXd g_, c_, xbuf_, ybuf_;
  Eigen::Index fill_ = 0;
  Eigen::Index total_ = 0;
};

}  // namespace mfrc
