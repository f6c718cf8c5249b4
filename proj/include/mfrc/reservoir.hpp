#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cmath>
#include <cstdint>
#include <functional>

#include "mfrc/errors.hpp"
#include "mfrc/timeseries.hpp"

namespace mfrc {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// All scalar hyperparameters of the reservoir computer plus the master seed.
/// Defaults follow the reference setup: N = 1000 neurons, degree-40
/// Erdos-Renyi connectivity, gamma = 10, tau = 0.01, listening to t = 200,
/// training to t = 400, prediction horizon 600.
struct ReservoirConfig {
  int n_neurons = 1000;        // N
  int dim_in = 3;              // D
  double gamma = 10.0;         // time damping
  double rho = 0.7;            // spectral radius of M
  double sigma = 0.2;          // input strength
  double conn_prob = 0.04;     // P
  double tau = 0.01;           // integration step
  double t_listen = 200.0;
  double t_train = 400.0;
  double t_predict = 600.0;    // prediction horizon (prediction runs on its own clock from 0)
  double t_star = 400.0;       // error-sampling window length
  double delta_thresh = 0.35;  // NRMSE threshold for failed reconstruction
  double beta_reg = 1e-2;      // ridge parameter
  uint64_t seed = 1;

  Eigen::Index feature_dim() const { return 2 * static_cast<Eigen::Index>(n_neurons); }
  Eigen::Index train_cols() const {
    return 1 + static_cast<Eigen::Index>(std::llround((t_train - t_listen) / tau));
  }

  void validate() const {
    if (n_neurons < 1) throw ValidationError("ReservoirConfig: N must be >= 1");
    if (dim_in < 1) throw ValidationError("ReservoirConfig: D must be >= 1");
    if (!(tau > 0.0)) throw ValidationError("ReservoirConfig: tau must be > 0");
    if (!(0.0 < t_listen && t_listen < t_train && t_train < t_predict))
      throw ValidationError("ReservoirConfig: need 0 < t_listen < t_train < t_predict");
    if (conn_prob < 0.0 || conn_prob > 1.0)
      throw ValidationError("ReservoirConfig: P must be in [0, 1]");
    if (beta_reg < 0.0) throw ValidationError("ReservoirConfig: beta must be >= 0");
    if (!(delta_thresh > 0.0)) throw ValidationError("ReservoirConfig: delta must be > 0");
    if (!(rho > 0.0)) throw ValidationError("ReservoirConfig: rho must be > 0");
    if (!(gamma > 0.0)) throw ValidationError("ReservoirConfig: gamma must be > 0");
  }
};

/// The fixed random matrices of the reservoir: sparse internal connections M
/// (rescaled to spectral radius rho) and the input matrix W_in with exactly
/// one nonzero per row. Immutable after construction; shared read-only.
struct ReservoirMatrices {
  SpMat m;                 // N x N
  Eigen::MatrixXd w_in;    // N x D
  uint64_t seed = 0;
  double rho = 0.0;
};

/// Reservoir states sampled on the tau grid; column k is r(t0 + k*tau).
struct ReservoirTrajectory {
  double t0 = 0.0;
  double dt = 0.0;
  Eigen::MatrixXd states;  // N x n

  Eigen::Index size() const { return states.cols(); }
  double time_at(Eigen::Index j) const { return t0 + static_cast<double>(j) * dt; }
};

/// |largest eigenvalue| of a square matrix by power iteration. A two-term
/// recurrence fit on consecutive iterates handles the common case of a
/// complex leading pair (where the plain Rayleigh ratio oscillates with
/// period 2). Throws NumericError with the last two estimates on
/// non-convergence.
double spectral_radius(const SpMat& m, double tol = 1e-8, int max_iter = 100000);

/// Erdos-Renyi internal matrix: entries nonzero with probability P, values
/// uniform(-1,1), rescaled so |lambda_max| = rho. Deterministic given
/// (seed, N, P). A numerically zero spectral radius triggers a re-draw
/// (up to 3), then an error.
SpMat build_internal_matrix(const ReservoirConfig& cfg);

/// Input matrix: one nonzero per row, column uniform over D, value
/// uniform(-1,1). Deterministic given seed.
Eigen::MatrixXd build_input_matrix(const ReservoirConfig& cfg);

ReservoirMatrices build_matrices(const ReservoirConfig& cfg);

/// [r; r^2] feature map.
Eigen::VectorXd feature_map(const Eigen::VectorXd& r);

/// Drive the listening reservoir r' = gamma[-r + tanh(M r + sigma W_in u(t))]
/// with RK4 on the tau grid from t = 0 to t_end (default cfg.t_train).
/// u at RK4 half-steps is linearly interpolated between stored samples.
/// States are recorded from `record_from` onward. r0 defaults to zeros.
ReservoirTrajectory listen(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                           const TimeSeries& input, const Eigen::VectorXd& r0,
                           double record_from = 0.0, double t_end = -1.0);

/// Streaming variant: sink(k, r) is invoked at every tau grid point
/// (k = 0 is the initial state). Used to fuse listening with training-set
/// harvesting so full trajectories never need to be stored.
void listen_scan(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                 const TimeSeries& input, const Eigen::VectorXd& r0, double t_end,
                 const std::function<void(Eigen::Index, const Eigen::VectorXd&)>& sink);

struct PredictResult {
  TimeSeries u_hat;            // D x n readout on the tau grid, clock starts at 0
  Eigen::VectorXd r_final;
  ReservoirTrajectory traj;    // empty unless record_states
};

/// Closed-loop prediction r' = gamma[-r + tanh(M r + sigma W_in W_out q(r))]
/// from r0 over [0, horizon]; returns u_hat(t) = W_out q(r(t)) on the tau grid.
PredictResult predict(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                      const Eigen::MatrixXd& w_out, const Eigen::VectorXd& r0,
                      double horizon, bool record_states = false);

/// Streaming variant of predict: sink(k, r, u_hat_k) per grid point; returns
/// false from the sink to stop early (used by attractor detection).
void predict_scan(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                  const Eigen::MatrixXd& w_out, const Eigen::VectorXd& r0, double horizon,
                  const std::function<bool(Eigen::Index, const Eigen::VectorXd&,
                                           const Eigen::VectorXd&)>& sink);

/// Time derivative of the predicting reservoir at state r (stationarity
/// residual of fixed-point candidates is the inf-norm of this).
Eigen::VectorXd predict_rhs(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                            const Eigen::MatrixXd& w_out, const Eigen::VectorXd& r);

}  // namespace mfrc
