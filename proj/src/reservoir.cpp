#include "mfrc/reservoir.hpp"

#include <Eigen/Dense>
#include <vector>

#include "mfrc/reservoir_batch.hpp"
#include "mfrc/rng.hpp"
#include "mfrc/systems.hpp"

namespace mfrc {

double spectral_radius(const SpMat& m, double tol, int max_iter) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw ValidationError("spectral_radius: matrix must be square and nonempty");
  if (m.nonZeros() == 0) return 0.0;
  const Eigen::Index n = m.rows();

  // Restarted Arnoldi (the subspace generalization of power iteration).
  // Random matrices of this kind carry complex leading pairs with nearly
  // degenerate moduli, where plain one- or two-step ratio estimates stall;
  // a small Krylov window separates the cluster and the classic
  // |h_{m+1,m} * y_m| bound certifies the dominant Ritz residual.
  const Eigen::Index krylov = std::min<Eigen::Index>(n, 12);
  rng::Engine eng(rng::derive_seed(0x5eed, "spectral-radius-start"));
  Eigen::VectorXd v0(n);
  for (Eigen::Index i = 0; i < n; ++i) v0[i] = eng.uniform(-1.0, 1.0);
  v0.normalize();

  Eigen::MatrixXd basis(n, krylov + 1);
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(krylov + 1, krylov);
  double est_prev = -1.0;
  int matvecs = 0;

  while (matvecs < max_iter) {
    basis.col(0) = v0;
    Eigen::Index mdim = krylov;
    bool invariant = false;
    for (Eigen::Index j = 0; j < krylov; ++j) {
      Eigen::VectorXd w = m * basis.col(j);
      ++matvecs;
      if (!w.allFinite()) throw NumericError("spectral_radius", "iterate overflow");
      for (int pass = 0; pass < 2; ++pass)  // modified Gram-Schmidt with reorthogonalization
        for (Eigen::Index i = 0; i <= j; ++i) {
          const double h = basis.col(i).dot(w);
          hess(i, j) += h;
          w -= h * basis.col(i);
        }
      const double beta = w.norm();
      hess(j + 1, j) = beta;
      if (beta < 1e-14) {  // exact invariant subspace reached
        mdim = j + 1;
        invariant = true;
        break;
      }
      basis.col(j + 1) = w / beta;
    }

    const Eigen::MatrixXd h_sq = hess.topLeftCorner(mdim, mdim);
    const Eigen::EigenSolver<Eigen::MatrixXd> es(h_sq);
    if (es.info() != Eigen::Success)
      throw NumericError("spectral_radius", "projected eigenproblem failed");
    Eigen::Index top = 0;
    double est = 0.0;
    for (Eigen::Index i = 0; i < mdim; ++i) {
      const double a = std::abs(es.eigenvalues()[i]);
      if (a > est || (a == est && es.eigenvalues()[i].real() >
                                       es.eigenvalues()[top].real())) {
        est = a;
        top = i;
      }
    }
    if (invariant) return est;

    const double beta = hess(mdim, mdim - 1);
    const double ritz_residual = beta * std::abs(es.eigenvectors()(mdim - 1, top));
    const bool stable = est_prev >= 0.0 && std::abs(est - est_prev) <= tol * std::max(est, 1e-300);
    if (stable && ritz_residual <= tol * std::max(est, 1e-300)) return est;
    est_prev = est;

    // restart along the dominant Ritz direction
    const auto y = es.eigenvectors().col(top);
    Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < mdim; ++i)
      next += (y[i].real() + y[i].imag()) * basis.col(i);
    const double nn = next.norm();
    if (nn < 1e-300) {
      for (Eigen::Index i = 0; i < n; ++i) next[i] = eng.uniform(-1.0, 1.0);
      next.normalize();
    } else {
      next /= nn;
    }
    v0 = next;
    hess.setZero();
  }
  throw NumericError("spectral_radius",
                     "no convergence within the matvec budget; last two estimates " +
                         std::to_string(est_prev));
}

SpMat build_internal_matrix(const ReservoirConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = cfg.n_neurons;
  for (int attempt = 0; attempt < 3; ++attempt) {
    rng::Engine eng(rng::derive_seed(cfg.seed, "internal-matrix", static_cast<uint64_t>(attempt)));
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(static_cast<double>(n) * static_cast<double>(n) * cfg.conn_prob * 1.1) + 16);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (eng.bernoulli(cfg.conn_prob)) trips.emplace_back(i, j, eng.uniform(-1.0, 1.0));

    SpMat raw(n, n);
    raw.setFromTriplets(trips.begin(), trips.end());
    raw.makeCompressed();
    if (raw.nonZeros() == 0) continue;

    const double lam = spectral_radius(raw);
    if (lam < 1e-12) continue;  // degenerate draw
    SpMat m = raw * (cfg.rho / lam);
    m.makeCompressed();
    return m;
  }
  throw NumericError("build_internal_matrix",
                     "degenerate draw (zero spectral radius) after 3 attempts");
}

Eigen::MatrixXd build_input_matrix(const ReservoirConfig& cfg) {
  cfg.validate();
  rng::Engine eng(rng::derive_seed(cfg.seed, "input-matrix"));
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(cfg.n_neurons, cfg.dim_in);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    const auto col = static_cast<Eigen::Index>(eng.uniform_index(static_cast<uint64_t>(cfg.dim_in)));
    w(i, col) = eng.uniform(-1.0, 1.0);
  }
  return w;
}

ReservoirMatrices build_matrices(const ReservoirConfig& cfg) {
  ReservoirMatrices mat;
  mat.m = build_internal_matrix(cfg);
  mat.w_in = build_input_matrix(cfg);
  mat.seed = cfg.seed;
  mat.rho = cfg.rho;
  return mat;
}

Eigen::VectorXd feature_map(const Eigen::VectorXd& r) {
  Eigen::VectorXd q(2 * r.size());
  q.head(r.size()) = r;
  q.tail(r.size()) = r.array().square();
  return q;
}

namespace {

void check_reservoir_dims(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                          const Eigen::VectorXd& r0) {
  if (mat.m.rows() != cfg.n_neurons || mat.w_in.rows() != cfg.n_neurons ||
      mat.w_in.cols() != cfg.dim_in)
    throw ValidationError("reservoir: matrix dimensions do not match config");
  if (r0.size() != cfg.n_neurons)
    throw ValidationError("reservoir: initial state has wrong dimension");
}

}  // namespace

void listen_scan(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                 const TimeSeries& input, const Eigen::VectorXd& r0, double t_end,
                 const std::function<void(Eigen::Index, const Eigen::VectorXd&)>& sink) {
  cfg.validate();
  check_reservoir_dims(cfg, mat, r0);
  if (input.dim() != cfg.dim_in) throw ValidationError("listen: input dimension != D");
  const auto n_steps = static_cast<Eigen::Index>(std::llround(t_end / cfg.tau));
  if (input.t_end() < t_end - 1e-9)
    throw ValidationError("listen: input does not cover [0, t_end]");

  ReservoirBatch batch(cfg, mat, 1);
  batch.set_inputs({&input});
  batch.set_state(0, r0);
  Eigen::VectorXd r = r0;
  sink(0, r);
  for (Eigen::Index k = 0; k < n_steps; ++k) {
    batch.step(static_cast<double>(k) * cfg.tau);
    batch.extract_lane(0, r);
    sink(k + 1, r);
  }
}

ReservoirTrajectory listen(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                           const TimeSeries& input, const Eigen::VectorXd& r0,
                           double record_from, double t_end) {
  if (t_end < 0.0) t_end = cfg.t_train;
  const auto first = static_cast<Eigen::Index>(std::llround(record_from / cfg.tau));
  const auto total = static_cast<Eigen::Index>(std::llround(t_end / cfg.tau));

  ReservoirTrajectory traj;
  traj.t0 = static_cast<double>(first) * cfg.tau;
  traj.dt = cfg.tau;
  traj.states.resize(cfg.n_neurons, total - first + 1);
  listen_scan(cfg, mat, input, r0, t_end, [&](Eigen::Index k, const Eigen::VectorXd& r) {
    if (k >= first) traj.states.col(k - first) = r;
  });
  return traj;
}

void predict_scan(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                  const Eigen::MatrixXd& w_out, const Eigen::VectorXd& r0, double horizon,
                  const std::function<bool(Eigen::Index, const Eigen::VectorXd&,
                                           const Eigen::VectorXd&)>& sink) {
  cfg.validate();
  check_reservoir_dims(cfg, mat, r0);
  const auto n_steps = static_cast<Eigen::Index>(std::llround(horizon / cfg.tau));

  ReservoirBatch batch(cfg, mat, 1);
  batch.set_readouts({&w_out});
  batch.set_state(0, r0);
  Eigen::VectorXd r = r0;
  Eigen::VectorXd u_hat(cfg.dim_in);
  RowMat u(cfg.dim_in, 1);
  batch.readout_now(u);
  u_hat = u.col(0);
  if (!sink(0, r, u_hat)) return;
  for (Eigen::Index k = 0; k < n_steps; ++k) {
    batch.step(static_cast<double>(k) * cfg.tau);
    batch.extract_lane(0, r);
    batch.readout_now(u);
    u_hat = u.col(0);
    if (!sink(k + 1, r, u_hat)) return;
  }
}

PredictResult predict(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                      const Eigen::MatrixXd& w_out, const Eigen::VectorXd& r0,
                      double horizon, bool record_states) {
  const auto n = static_cast<Eigen::Index>(std::llround(horizon / cfg.tau)) + 1;
  PredictResult res;
  res.u_hat.t0 = 0.0;
  res.u_hat.dt = cfg.tau;
  res.u_hat.samples.resize(cfg.dim_in, n);
  if (record_states) {
    res.traj.t0 = 0.0;
    res.traj.dt = cfg.tau;
    res.traj.states.resize(cfg.n_neurons, n);
  }
  predict_scan(cfg, mat, w_out, r0, horizon,
               [&](Eigen::Index k, const Eigen::VectorXd& r, const Eigen::VectorXd& u) {
                 res.u_hat.samples.col(k) = u;
                 if (record_states) res.traj.states.col(k) = r;
                 if (k == n - 1) res.r_final = r;
                 return true;
               });
  return res;
}

Eigen::VectorXd predict_rhs(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                            const Eigen::MatrixXd& w_out, const Eigen::VectorXd& r) {
  ReservoirBatch batch(cfg, mat, 1);
  batch.set_readouts({&w_out});
  return batch.derivative_at(r);
}

}  // namespace mfrc
