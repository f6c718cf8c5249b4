#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "mfrc/errors.hpp"
#include "mfrc/timeseries.hpp"

namespace mfrc {

using SystemState = Eigen::Vector3d;

/// Parameters of the Guan-type 3-D multistable system. `delta` is the
/// timescale multiplier applied to the whole right-hand side (1 = unmodified).
struct GuanParams {
  double a = 5.0;
  double b = 15.0;
  double c = 3.0;
  double d = 12.0;
  double delta = 1.0;

  void validate() const {
    if (!(delta > 0.0)) throw ValidationError("GuanParams: delta must be > 0");
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || !std::isfinite(d))
      throw ValidationError("GuanParams: parameters must be finite");
  }
};

struct LorenzParams {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;

  void validate() const {
    if (!std::isfinite(sigma) || !std::isfinite(rho) || !std::isfinite(beta))
      throw ValidationError("LorenzParams: parameters must be finite");
  }
};

inline SystemState guan_rhs(const SystemState& x, const GuanParams& p) {
  return p.delta * SystemState(p.a * x[0] - x[1] * x[2] - x[1] + p.d,
                               -p.b * x[1] + x[0] * x[2],
                               -p.c * x[2] + x[0] * x[1]);
}

inline SystemState lorenz_rhs(const SystemState& x, const LorenzParams& p) {
  return {p.sigma * (x[1] - x[0]),
          x[0] * (p.rho - x[2]) - x[1],
          x[0] * x[1] - p.beta * x[2]};
}

/// One classical 4th-order Runge-Kutta step for small fixed-size states.
/// rhs signature: Vec(double t, const Vec& x).
template <class Vec, class Rhs>
Vec rk4_step(Rhs&& rhs, const Vec& x, double t, double dt) {
  if (!(dt > 0.0)) throw ValidationError("rk4_step: dt must be > 0");
  const Vec k1 = rhs(t, x);
  const Vec k2 = rhs(t + 0.5 * dt, Vec(x + (0.5 * dt) * k1));
  const Vec k3 = rhs(t + 0.5 * dt, Vec(x + (0.5 * dt) * k2));
  const Vec k4 = rhs(t + dt, Vec(x + dt * k3));
  Vec out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite())
    throw NumericError("rk4", "non-finite state after step at t=" + std::to_string(t));
  return out;
}

/// Scratch buffers for the allocation-free large-state variant below.
struct Rk4Workspace {
  Eigen::VectorXd k1, k2, k3, k4, tmp;
  explicit Rk4Workspace(Eigen::Index n) : k1(n), k2(n), k3(n), k4(n), tmp(n) {}
};

/// Same RK4 scheme on a large state vector, writing the update in place.
/// rhs signature: void(double t, const VectorXd& x, VectorXd& dxdt).
template <class Rhs>
void rk4_step_inplace(Rhs&& rhs, Eigen::VectorXd& x, double t, double dt, Rk4Workspace& ws) {
  rhs(t, x, ws.k1);
  ws.tmp = x + (0.5 * dt) * ws.k1;
  rhs(t + 0.5 * dt, ws.tmp, ws.k2);
  ws.tmp = x + (0.5 * dt) * ws.k2;
  rhs(t + 0.5 * dt, ws.tmp, ws.k3);
  ws.tmp = x + dt * ws.k3;
  rhs(t + dt, ws.tmp, ws.k4);
  x += (dt / 6.0) * (ws.k1 + 2.0 * ws.k2 + 2.0 * ws.k3 + ws.k4);
}

/// Integrate rhs from ic over [t0, t1] with fixed step dt. (t1-t0)/dt must be
/// an integer within rounding tolerance; the result holds 1 + (t1-t0)/dt
/// samples and the first sample equals ic. Throws NumericError with the
/// blow-up time if the state goes non-finite.
template <class Rhs>
TimeSeries integrate(Rhs&& rhs, const SystemState& ic, double t0, double t1, double dt) {
  if (!(t1 > t0)) throw ValidationError("integrate: need t1 > t0");
  if (!(dt > 0.0)) throw ValidationError("integrate: dt must be > 0");
  const double span = t1 - t0;
  const auto n_steps = static_cast<Eigen::Index>(std::llround(span / dt));
  if (n_steps < 1 || std::abs(span - static_cast<double>(n_steps) * dt) > 1e-9 * std::max(1.0, span))
    throw ValidationError("integrate: (t1-t0)/dt is not an integer");

  TimeSeries out;
  out.t0 = t0;
  out.dt = dt;
  out.samples.resize(3, n_steps + 1);
  SystemState x = ic;
  out.samples.col(0) = x;
  for (Eigen::Index k = 0; k < n_steps; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    try {
      x = rk4_step(rhs, x, t, dt);
    } catch (const NumericError&) {
      throw NumericError("integrate", "trajectory blew up at t=" + std::to_string(t + dt));
    }
    out.samples.col(k + 1) = x;
  }
  return out;
}

inline TimeSeries integrate_guan(const GuanParams& p, const SystemState& ic, double t0,
                                 double t1, double dt) {
  p.validate();
  return integrate([&p](double, const SystemState& x) { return guan_rhs(x, p); }, ic, t0, t1, dt);
}

inline TimeSeries integrate_lorenz(const LorenzParams& p, const SystemState& ic, double t0,
                                   double t1, double dt) {
  p.validate();
  return integrate([&p](double, const SystemState& x) { return lorenz_rhs(x, p); }, ic, t0, t1, dt);
}

}  // namespace mfrc
