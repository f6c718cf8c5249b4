#include "mfrc/training.hpp"

#include <Eigen/Cholesky>
#include <numeric>

#include "mfrc/rng.hpp"

namespace mfrc {

TrainingSet harvest(const ReservoirTrajectory& traj, const TimeSeries& input,
                    double w_start, double w_end) {
  if (std::abs(traj.dt - input.dt) > 1e-12)
    throw ValidationError("harvest: trajectory and input grids have different steps");
  const double offset = (traj.t0 - input.t0) / input.dt;
  if (std::abs(offset - std::llround(offset)) > 1e-9)
    throw ValidationError("harvest: trajectory and input grids are misaligned");
  if (w_end < w_start) throw ValidationError("harvest: empty window");

  const auto a_traj = static_cast<Eigen::Index>(std::llround((w_start - traj.t0) / traj.dt));
  const auto a_in = static_cast<Eigen::Index>(std::llround((w_start - input.t0) / input.dt));
  const auto cols = static_cast<Eigen::Index>(std::llround((w_end - w_start) / traj.dt)) + 1;
  if (a_traj < 0 || a_traj + cols > traj.size() || a_in < 0 || a_in + cols > input.size())
    throw ValidationError("harvest: window not covered by trajectory/input");

  const Eigen::Index n = traj.states.rows();
  TrainingSet ts;
  ts.x.resize(2 * n, cols);
  ts.y.resize(input.dim(), cols);
  ts.col_times.resize(static_cast<size_t>(cols));
  for (Eigen::Index j = 0; j < cols; ++j) {
    ts.x.col(j).head(n) = traj.states.col(a_traj + j);
    ts.x.col(j).tail(n) = traj.states.col(a_traj + j).array().square();
    ts.y.col(j) = input.samples.col(a_in + j);
    ts.col_times[static_cast<size_t>(j)] = w_start + static_cast<double>(j) * traj.dt;
  }
  return ts;
}

namespace {

Readout solve_normal_equations(const Eigen::MatrixXd& g, const Eigen::MatrixXd& c, double beta) {
  if (beta < 0.0) throw ValidationError("ridge_solve: beta must be >= 0");
  Eigen::MatrixXd a = g;
  a.diagonal().array() += beta;

  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    if (beta == 0.0)
      throw NumericError("ridge_solve",
                         "X X^T is singular with beta = 0; use beta > 0");
    throw NumericError("ridge_solve", "Cholesky factorization failed");
  }

  const Eigen::MatrixXd rhs = c.transpose();  // 2N x D
  Eigen::MatrixXd z = llt.solve(rhs);
  // One refinement step keeps the normal-equation residual well under the
  // 1e-8 contract even for ill-conditioned Gram matrices.
  Eigen::MatrixXd resid = rhs - a * z;
  z += llt.solve(resid);
  resid.noalias() = rhs - a * z;

  Readout out;
  out.w_out = z.transpose();
  const double denom = rhs.norm();
  out.prov.solve_residual = denom > 0.0 ? resid.norm() / denom : resid.norm();
  out.prov.beta = beta;
  return out;
}

}  // namespace

GramBlocks grams_of(const TrainingSet& ts) {
  if (ts.x.cols() != ts.y.cols())
    throw ValidationError("grams_of: X and Y must have equal column counts");
  GramBlocks gb;
  gb.g = Eigen::MatrixXd::Zero(ts.x.rows(), ts.x.rows());
  gb.g.selfadjointView<Eigen::Lower>().rankUpdate(ts.x);
  gb.g.triangularView<Eigen::StrictlyUpper>() = gb.g.transpose();
  gb.c.noalias() = ts.y * ts.x.transpose();
  gb.cols = ts.x.cols();
  return gb;
}

Readout ridge_solve(const TrainingSet& ts, double beta) {
  const GramBlocks gb = grams_of(ts);
  return solve_normal_equations(gb.g, gb.c, beta);
}

Readout ridge_solve_from_grams(const GramBlocks& gb, double beta) {
  return solve_normal_equations(gb.g, gb.c, beta);
}

TrainingSet blend(const TrainingSet& ts1, const TrainingSet& ts2, double alpha,
                  uint64_t shuffle_seed) {
  if (alpha < 0.0 || alpha > 1.0) throw ValidationError("blend: alpha must be in [0, 1]");
  if (ts1.x.rows() != ts2.x.rows() || ts1.y.rows() != ts2.y.rows())
    throw ValidationError("blend: row counts do not match");

  const Eigen::Index t1 = ts1.x.cols(), t2 = ts2.x.cols();
  TrainingSet out;
  out.x.resize(ts1.x.rows(), t1 + t2);
  out.y.resize(ts1.y.rows(), t1 + t2);
  out.col_times.resize(static_cast<size_t>(t1 + t2));

  // Joint random permutation of the concatenated columns; X/Y pairs stay aligned.
  std::vector<Eigen::Index> perm(static_cast<size_t>(t1 + t2));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  rng::Engine eng(shuffle_seed);
  for (size_t i = perm.size(); i > 1; --i) {
    const auto j = static_cast<size_t>(eng.uniform_index(i));
    std::swap(perm[i - 1], perm[j]);
  }

  for (Eigen::Index dst = 0; dst < t1 + t2; ++dst) {
    const Eigen::Index src = perm[static_cast<size_t>(dst)];
    if (src < t1) {
      out.x.col(dst) = alpha * ts1.x.col(src);
      out.y.col(dst) = alpha * ts1.y.col(src);
      out.col_times[static_cast<size_t>(dst)] =
          src < static_cast<Eigen::Index>(ts1.col_times.size())
              ? ts1.col_times[static_cast<size_t>(src)] : 0.0;
    } else {
      out.x.col(dst) = (1.0 - alpha) * ts2.x.col(src - t1);
      out.y.col(dst) = (1.0 - alpha) * ts2.y.col(src - t1);
      out.col_times[static_cast<size_t>(dst)] =
          src - t1 < static_cast<Eigen::Index>(ts2.col_times.size())
              ? ts2.col_times[static_cast<size_t>(src - t1)] : 0.0;
    }
  }
  return out;
}

GramBlocks blend_grams(const GramBlocks& a, const GramBlocks& b, double alpha) {
  if (a.g.rows() != b.g.rows() || a.c.rows() != b.c.rows())
    throw ValidationError("blend_grams: dimensions do not match");
  const double wa = alpha * alpha, wb = (1.0 - alpha) * (1.0 - alpha);
  GramBlocks out;
  out.g = wa * a.g + wb * b.g;
  out.c = wa * a.c + wb * b.c;
  out.cols = a.cols + b.cols;
  return out;
}

GramAccumulator::GramAccumulator(Eigen::Index feature_dim, Eigen::Index target_dim,
                                 Eigen::Index block)
    : g_(Eigen::MatrixXd::Zero(feature_dim, feature_dim)),
      c_(Eigen::MatrixXd::Zero(target_dim, feature_dim)),
      xbuf_(feature_dim, block),
      ybuf_(target_dim, block) {}

void GramAccumulator::add(const Eigen::VectorXd& r, const Eigen::VectorXd& u) {
  const Eigen::Index n = r.size();
  xbuf_.col(fill_).head(n) = r;
  xbuf_.col(fill_).tail(n) = r.array().square();
  ybuf_.col(fill_) = u;
  ++fill_;
  ++total_;
  if (fill_ == xbuf_.cols()) flush();
}

void GramAccumulator::flush() {
  if (fill_ == 0) return;
  const auto xb = xbuf_.leftCols(fill_);
  g_.selfadjointView<Eigen::Lower>().rankUpdate(xb);
  c_.noalias() += ybuf_.leftCols(fill_) * xb.transpose();
  fill_ = 0;
}

GramBlocks GramAccumulator::finish() {
  flush();
  GramBlocks gb;
  gb.g = g_;
  gb.g.triangularView<Eigen::StrictlyUpper>() = g_.transpose();
  gb.c = c_;
  gb.cols = total_;
  return gb;
}

}  // namespace mfrc
