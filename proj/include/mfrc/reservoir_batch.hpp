#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mfrc/reservoir.hpp"

namespace mfrc {

/// Row-major state block: row i holds component i of every lane, so the
/// sparse matrix product vectorizes across lanes with unit-stride loads.
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Integrates several independent reservoir copies in lockstep. All lanes
/// share M, W_in and the scalar parameters; inputs (open loop) or readout
/// matrices (closed loop) may differ per lane. Lane arithmetic is
/// independent, so a lane's trajectory does not depend on what the other
/// lanes carry. Used by sweeps, the acceptance harness and random-IC
/// detection, where many runs share one matrix draw.
class ReservoirBatch {
public:
  ReservoirBatch(const ReservoirConfig& cfg, const ReservoirMatrices& mat, int lanes);

  int lanes() const { return lanes_; }
  const ReservoirConfig& config() const { return cfg_; }

  /// N x lanes state block (extra pad lanes, if any, are hidden).
  Eigen::Block<RowMat> states() { return r_.leftCols(lanes_); }
  void set_state(int lane, const Eigen::VectorXd& r0);
  Eigen::VectorXd state(int lane) const;

  /// Open loop: per-lane input series (all on the tau grid from t = 0).
  void set_inputs(std::vector<const TimeSeries*> inputs);

  /// Closed loop: per-lane readout matrices (D x 2N); pass the same pointer
  /// for every lane to hit the shared-readout fast path.
  void set_readouts(std::vector<const Eigen::MatrixXd*> w_outs);

  /// Advance every lane by one RK4 step of length tau from time t
  /// (t only matters in open loop, for the input interpolation).
  void step(double t);

  /// Readout W_out q(r) of every lane into u (D x lanes). Closed loop only.
  void readout_now(RowMat& u) const;

  /// Time derivative of every lane at the current state (N x lanes).
  void derivatives_now(RowMat& out);

  /// Lane column of the last state (contiguous copy).
  void extract_lane(int lane, Eigen::VectorXd& out) const;

  /// Time derivative of lane 0 at an arbitrary state (closed loop only);
  /// the stationarity residual of fixed-point candidates comes from here.
  Eigen::VectorXd derivative_at(const Eigen::VectorXd& r);

  bool all_finite() const { return r_.allFinite(); }

private:
  void rhs(double t, const RowMat& state, RowMat& out);
  void readout_of(const RowMat& state, RowMat& u) const;

  ReservoirConfig cfg_;
  const ReservoirMatrices* mat_;
  int lanes_ = 0;
  int width_ = 0;  // padded lane count: 1, 2, 4 or a multiple of 8
  bool closed_loop_ = false;
  std::vector<const TimeSeries*> inputs_;
  std::vector<const Eigen::MatrixXd*> w_outs_;
  bool shared_readout_ = false;
  // row-major copies of the readouts for contiguous per-lane dot products
  std::vector<RowMat> w_copy_;
  RowMat win_sig_;  // sigma * W_in, row-major

  RowMat r_, k1_, k2_, k3_, k4_, tmp_, z_;
  mutable RowMat u_;                      // D x width
  mutable Eigen::ArrayXd ework_;          // tanh scratch
  mutable Eigen::VectorXd lane_scratch_, lane_sq_;
};

namespace detail {
/// y = M x with x, y row-major N x width blocks; per-lane accumulation
/// order equals the CSR storage order for every width.
void spmm(const SpMat& m, const double* x, double* y, int width);
/// y = M x + W u with W row-major N x dim_u and u row-major dim_u x width.
void spmm_bias(const SpMat& m, const double* x, double* y, const double* win_sig,
               const double* u, int dim_u, int width);
/// Elementwise tanh via vectorized exp; same formula for every element.
void tanh_inplace(double* z, Eigen::Index n, Eigen::ArrayXd& scratch);
/// out = gamma * (tanh(z) - r), fused.
void tanh_leak(const double* z, const double* r, double* out, Eigen::Index n, double gamma,
               Eigen::ArrayXd& scratch);
}  // namespace detail

}  // namespace mfrc
