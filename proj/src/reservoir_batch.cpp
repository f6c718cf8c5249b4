#include "mfrc/reservoir_batch.hpp"

#include <cstring>

namespace mfrc {

namespace detail {

namespace {

// y = M x + bias, where bias(i, w) = sum_d win_sig(i, d) * u(d, w).
// Per-lane accumulation order is fixed (4 interleaved chains folded at the
// end), so results are reproducible; the chains break the single-FMA
// latency bound that otherwise dominates at small widths. DU is the bias
// dimension at compile time (-1 = runtime) so the accumulators stay in
// registers.
template <int W, int DU>
void spmm_bias_fixed(const SpMat& m, const double* __restrict x, double* __restrict y,
                     const double* __restrict win_sig, const double* __restrict u, int dim_u) {
  const int* __restrict outer = m.outerIndexPtr();
  const int* __restrict inner = m.innerIndexPtr();
  const double* __restrict vals = m.valuePtr();
  const Eigen::Index n = m.rows();
  const int du = DU >= 0 ? DU : dim_u;
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc0[W], acc1[W], acc2[W], acc3[W];
    for (int w = 0; w < W; ++w) acc0[w] = acc1[w] = acc2[w] = acc3[w] = 0.0;
    for (int d = 0; d < du; ++d) {
      const double wv = win_sig[i * du + d];
      const double* ud = u + d * W;
      for (int w = 0; w < W; ++w) acc0[w] += wv * ud[w];
    }
    const int pb = outer[i], pe = outer[i + 1];
    int p = pb;
    for (; p + 4 <= pe; p += 4) {
      const double v0 = vals[p], v1 = vals[p + 1], v2 = vals[p + 2], v3 = vals[p + 3];
      const double* x0 = x + static_cast<Eigen::Index>(inner[p]) * W;
      const double* x1 = x + static_cast<Eigen::Index>(inner[p + 1]) * W;
      const double* x2 = x + static_cast<Eigen::Index>(inner[p + 2]) * W;
      const double* x3 = x + static_cast<Eigen::Index>(inner[p + 3]) * W;
      for (int w = 0; w < W; ++w) {
        acc0[w] += v0 * x0[w];
        acc1[w] += v1 * x1[w];
        acc2[w] += v2 * x2[w];
        acc3[w] += v3 * x3[w];
      }
    }
    for (; p < pe; ++p) {
      const double v = vals[p];
      const double* xr = x + static_cast<Eigen::Index>(inner[p]) * W;
      for (int w = 0; w < W; ++w) acc0[w] += v * xr[w];
    }
    double* yr = y + i * W;
    for (int w = 0; w < W; ++w) yr[w] = (acc0[w] + acc1[w]) + (acc2[w] + acc3[w]);
  }
}

template <int W>
void spmm_bias_width(const SpMat& m, const double* x, double* y, const double* win_sig,
                     const double* u, int dim_u) {
  switch (dim_u) {
    case 0: spmm_bias_fixed<W, 0>(m, x, y, win_sig, u, dim_u); return;
    case 3: spmm_bias_fixed<W, 3>(m, x, y, win_sig, u, dim_u); return;
    default: spmm_bias_fixed<W, -1>(m, x, y, win_sig, u, dim_u); return;
  }
}

void spmm_bias_wide(const SpMat& m, const double* __restrict x, double* __restrict y,
                    const double* __restrict win_sig, const double* __restrict u, int dim_u,
                    int width) {
  const int* __restrict outer = m.outerIndexPtr();
  const int* __restrict inner = m.innerIndexPtr();
  const double* __restrict vals = m.valuePtr();
  const Eigen::Index n = m.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    double* __restrict yr = y + static_cast<Eigen::Index>(i) * width;
    std::memset(yr, 0, sizeof(double) * static_cast<size_t>(width));
    for (int d = 0; d < dim_u; ++d) {
      const double wv = win_sig[i * dim_u + d];
      const double* ud = u + d * width;
      for (int w = 0; w < width; ++w) yr[w] += wv * ud[w];
    }
    const int pe = outer[i + 1];
    for (int p = outer[i]; p < pe; ++p) {
      const double v = vals[p];
      const double* xr = x + static_cast<Eigen::Index>(inner[p]) * width;
      for (int w = 0; w < width; ++w) yr[w] += v * xr[w];
    }
  }
}

}  // namespace

void spmm_bias(const SpMat& m, const double* x, double* y, const double* win_sig,
               const double* u, int dim_u, int width) {
  switch (width) {
    case 1: spmm_bias_width<1>(m, x, y, win_sig, u, dim_u); return;
    case 2: spmm_bias_width<2>(m, x, y, win_sig, u, dim_u); return;
    case 4: spmm_bias_width<4>(m, x, y, win_sig, u, dim_u); return;
    case 8: spmm_bias_width<8>(m, x, y, win_sig, u, dim_u); return;
    default: spmm_bias_wide(m, x, y, win_sig, u, dim_u, width); return;
  }
}

void spmm(const SpMat& m, const double* x, double* y, int width) {
  static const double zero[64] = {0.0};
  spmm_bias(m, x, y, zero, zero, 0, width);
}

// out = gamma * (tanh(z) - r), with tanh(z) = copysign((1-e)/(1+e), z),
// e = exp(-2|z|). Monotone, exact at 0, saturates strictly inside (-1, 1).
void tanh_leak(const double* __restrict z, const double* __restrict r, double* __restrict out,
               Eigen::Index n, double gamma, Eigen::ArrayXd& scratch) {
  if (scratch.size() < n) scratch.resize(n);
  double* __restrict e = scratch.data();
  Eigen::Map<Eigen::ArrayXd>(e, n) =
      (Eigen::Map<const Eigen::ArrayXd>(z, n).abs() * -2.0).exp();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double t = std::copysign((1.0 - e[j]) / (1.0 + e[j]), z[j]);
    out[j] = gamma * (t - r[j]);
  }
}

void tanh_inplace(double* z, Eigen::Index n, Eigen::ArrayXd& scratch) {
  if (scratch.size() < n) scratch.resize(n);
  double* __restrict e = scratch.data();
  Eigen::Map<Eigen::ArrayXd>(e, n) =
      (Eigen::Map<const Eigen::ArrayXd>(z, n).abs() * -2.0).exp();
  for (Eigen::Index j = 0; j < n; ++j)
    z[j] = std::copysign((1.0 - e[j]) / (1.0 + e[j]), z[j]);
}

}  // namespace detail

namespace {

int padded_width(int lanes) {
  if (lanes <= 1) return 1;
  if (lanes <= 2) return 2;
  if (lanes <= 4) return 4;
  return (lanes + 7) / 8 * 8;
}

}  // namespace

ReservoirBatch::ReservoirBatch(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                               int lanes)
    : cfg_(cfg), mat_(&mat), lanes_(lanes), width_(padded_width(lanes)) {
  cfg_.validate();
  if (lanes < 1) throw ValidationError("ReservoirBatch: need at least one lane");
  if (mat.m.rows() != cfg.n_neurons || mat.w_in.rows() != cfg.n_neurons)
    throw ValidationError("ReservoirBatch: matrix dimensions do not match config");
  const Eigen::Index n = cfg.n_neurons;
  r_ = RowMat::Zero(n, width_);
  k1_ = k2_ = k3_ = k4_ = tmp_ = z_ = r_;
  u_ = RowMat::Zero(cfg.dim_in, width_);
  win_sig_ = cfg_.sigma * mat.w_in;  // row-major copy for the bias kernel
}

void ReservoirBatch::set_state(int lane, const Eigen::VectorXd& r0) {
  if (lane < 0 || lane >= lanes_) throw ValidationError("ReservoirBatch: bad lane");
  if (r0.size() != cfg_.n_neurons) throw ValidationError("ReservoirBatch: bad state size");
  r_.col(lane) = r0;
}

Eigen::VectorXd ReservoirBatch::state(int lane) const {
  return r_.col(lane);
}

void ReservoirBatch::extract_lane(int lane, Eigen::VectorXd& out) const {
  out = r_.col(lane);
}

void ReservoirBatch::set_inputs(std::vector<const TimeSeries*> inputs) {
  if (static_cast<int>(inputs.size()) != lanes_)
    throw ValidationError("ReservoirBatch: one input per lane required");
  for (const TimeSeries* s : inputs) {
    if (s == nullptr || s->dim() != cfg_.dim_in || std::abs(s->dt - cfg_.tau) > 1e-12 ||
        s->t0 > 0.0)
      throw ValidationError("ReservoirBatch: inputs must cover the tau grid from t = 0");
  }
  inputs_ = std::move(inputs);
  closed_loop_ = false;
}

void ReservoirBatch::set_readouts(std::vector<const Eigen::MatrixXd*> w_outs) {
  if (static_cast<int>(w_outs.size()) != lanes_)
    throw ValidationError("ReservoirBatch: one readout per lane required");
  shared_readout_ = true;
  for (const Eigen::MatrixXd* w : w_outs) {
    if (w == nullptr || w->rows() != cfg_.dim_in || w->cols() != cfg_.feature_dim())
      throw ValidationError("ReservoirBatch: readout must be D x 2N");
    if (!w->allFinite()) throw ValidationError("ReservoirBatch: readout has non-finite entries");
    if (w != w_outs.front()) shared_readout_ = false;
  }
  w_outs_ = std::move(w_outs);
  w_copy_.clear();
  if (shared_readout_) {
    w_copy_.emplace_back(*w_outs_.front());  // row-major copy
  } else {
    w_copy_.reserve(w_outs_.size());
    for (const Eigen::MatrixXd* w : w_outs_) w_copy_.emplace_back(*w);
  }
  lane_scratch_.resize(cfg_.n_neurons);
  lane_sq_.resize(cfg_.n_neurons);
  closed_loop_ = true;
}

void ReservoirBatch::readout_of(const RowMat& state, RowMat& u) const {
  const Eigen::Index n = cfg_.n_neurons;
  const Eigen::Index d_out = cfg_.dim_in;
  u.setZero();
  if (shared_readout_) {
    const RowMat& w = w_copy_.front();
    for (Eigen::Index d = 0; d < d_out; ++d) {
      const double* w1 = w.data() + d * 2 * n;
      const double* w2 = w1 + n;
      double* ur = u.data() + d * width_;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double* rr = state.data() + i * width_;
        const double a = w1[i], b = w2[i];
        for (int l = 0; l < width_; ++l) {
          const double x = rr[l];
          ur[l] += (a + b * x) * x;
        }
      }
    }
    return;
  }
  for (int l = 0; l < lanes_; ++l) {
    const RowMat& w = w_copy_[static_cast<size_t>(l)];
    lane_scratch_ = state.col(l);
    lane_sq_ = lane_scratch_.array().square();
    for (Eigen::Index d = 0; d < d_out; ++d) {
      Eigen::Map<const Eigen::VectorXd> w1(w.data() + d * 2 * n, n);
      Eigen::Map<const Eigen::VectorXd> w2(w.data() + d * 2 * n + n, n);
      u(d, l) = w1.dot(lane_scratch_) + w2.dot(lane_sq_);
    }
  }
}

void ReservoirBatch::readout_now(RowMat& u) const {
  if (!closed_loop_) throw ValidationError("ReservoirBatch: readout_now requires closed loop");
  readout_of(r_, u_);
  u = u_.leftCols(lanes_);
}

void ReservoirBatch::rhs(double t, const RowMat& state, RowMat& out) {
  if (closed_loop_) {
    readout_of(state, u_);
  } else {
    for (int l = 0; l < lanes_; ++l) {
      const TimeSeries& in = *inputs_[static_cast<size_t>(l)];
      const double s = (t - in.t0) / in.dt;
      auto k = static_cast<Eigen::Index>(s);
      if (k >= in.size() - 1) k = in.size() - 2;
      const double frac = s - static_cast<double>(k);
      u_.col(l) = (1.0 - frac) * in.samples.col(k) + frac * in.samples.col(k + 1);
    }
    for (int l = lanes_; l < width_; ++l) u_.col(l).setZero();
  }

  detail::spmm_bias(mat_->m, state.data(), z_.data(), win_sig_.data(), u_.data(),
                    cfg_.dim_in, width_);
  detail::tanh_leak(z_.data(), state.data(), out.data(), z_.size(), cfg_.gamma, ework_);
}

void ReservoirBatch::derivatives_now(RowMat& out) {
  if (!closed_loop_) throw ValidationError("ReservoirBatch: derivatives_now requires closed loop");
  rhs(0.0, r_, k1_);
  out = k1_.leftCols(lanes_);
}

Eigen::VectorXd ReservoirBatch::derivative_at(const Eigen::VectorXd& r) {
  if (!closed_loop_) throw ValidationError("ReservoirBatch: derivative_at requires closed loop");
  tmp_.setZero();
  tmp_.col(0) = r;
  rhs(0.0, tmp_, k1_);
  return k1_.col(0);
}

void ReservoirBatch::step(double t) {
  const double dt = cfg_.tau;
  rhs(t, r_, k1_);
  tmp_ = r_ + (0.5 * dt) * k1_;
  rhs(t + 0.5 * dt, tmp_, k2_);
  tmp_ = r_ + (0.5 * dt) * k2_;
  rhs(t + 0.5 * dt, tmp_, k3_);
  tmp_ = r_ + dt * k3_;
  rhs(t + dt, tmp_, k4_);
  r_ += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  if (!r_.allFinite())
    throw NumericError(closed_loop_ ? "predict" : "listen",
                       "reservoir state blew up at t=" + std::to_string(t + dt));
}

}  // namespace mfrc
