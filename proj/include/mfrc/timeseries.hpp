#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "mfrc/errors.hpp"

namespace mfrc {

/// Uniformly sampled multivariate trajectory. Column j of `samples` is the
/// D-dimensional state at time t0 + j*dt. Immutable by convention after
/// construction; shared read-only across workers.
struct TimeSeries {
  double t0 = 0.0;
  double dt = 0.0;
  Eigen::MatrixXd samples;  // D x n

  int dim() const { return static_cast<int>(samples.rows()); }
  Eigen::Index size() const { return samples.cols(); }
  double time_at(Eigen::Index j) const { return t0 + static_cast<double>(j) * dt; }
  double t_end() const { return time_at(size() - 1); }

  void validate() const {
    if (!(dt > 0.0)) throw ValidationError("TimeSeries: dt must be > 0");
    if (samples.cols() < 2) throw ValidationError("TimeSeries: need at least 2 samples");
  }

  /// Nearest grid index for time t; throws if t is off-grid by more than tol.
  Eigen::Index index_of(double t, double tol = 1e-9) const {
    const double s = (t - t0) / dt;
    const auto j = static_cast<Eigen::Index>(std::llround(s));
    if (j < 0 || j >= size() || std::abs(s - static_cast<double>(j)) > tol * std::max(1.0, std::abs(s)))
      throw ValidationError("TimeSeries: time " + std::to_string(t) + " not on sample grid");
    return j;
  }

  /// Closed window [t_start, t_end] as a copy; both endpoints must be grid points.
  TimeSeries segment(double t_start, double t_stop) const {
    const Eigen::Index a = index_of(t_start);
    const Eigen::Index b = index_of(t_stop);
    if (b < a) throw ValidationError("TimeSeries::segment: empty window");
    TimeSeries out;
    out.t0 = time_at(a);
    out.dt = dt;
    out.samples = samples.middleCols(a, b - a + 1);
    return out;
  }

  /// Same samples, clock shifted so the first sample sits at new_t0.
  TimeSeries rebased(double new_t0 = 0.0) const {
    TimeSeries out = *this;
    out.t0 = new_t0;
    return out;
  }
};

}  // namespace mfrc
