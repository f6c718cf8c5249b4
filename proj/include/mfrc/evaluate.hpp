#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mfrc/timeseries.hpp"

namespace mfrc {

/// Per-variable NRMSE over the sampling window plus the average.
struct ErrorReport {
  Eigen::VectorXd per_var;
  double avg = 0.0;
  double w_start = 0.0, w_end = 0.0;
};

/// NRMSE of pred against target over [t_end - t_star, t_end]: per variable,
/// RMS of the pointwise difference normalized by the target's range over the
/// same window; averaged over variables with a plain mean. Errors out when a
/// target variable has zero range (degenerate normalizer).
ErrorReport nrmse(const TimeSeries& pred, const TimeSeries& target, double t_star, double t_end);

/// theta_blend / theta_task: < 1 means the blended readout beat the
/// task-specific one.
double epsilon_ratio(double theta_blend, double theta_task);

struct FixedPointOptions {
  double window = 10.0;       // time units checked for constancy
  double rel_tol = 1e-4;      // fraction of the per-variable full-series range
  double abs_floor = 1e-6;
};

/// Mean state if the series stays within tolerance of it over the trailing
/// window; tolerance is relative to each variable's range over the whole
/// series, floored absolutely.
std::optional<Eigen::VectorXd> detect_fixed_point(const TimeSeries& series,
                                                  const FixedPointOptions& opt = {});

struct PeriodicityOptions {
  double window = 40.0;        // trailing window examined
  double group_tol = 0.01;     // maxima equal if within this fraction of range
  double recur_tol = 0.02;     // recurrence distance, fraction of range
  double recur_frac = 0.95;    // fraction of samples that must recur
};

struct PeriodicityResult {
  double period = 0.0;
  int distinct_maxima = 0;
  std::vector<double> maxima_values, minima_values;
};

/// Period estimate from the local maxima of the last component (x3):
/// maxima are grouped by value, the candidate period is the median gap
/// between successive maxima of the dominant group, and the estimate is
/// accepted only if the state recurs under the shift for almost all samples.
std::optional<PeriodicityResult> detect_periodicity(const TimeSeries& series,
                                                    const PeriodicityOptions& opt = {});

enum class Behavior { LimitCycle, FixedPoint, Switched, Reconstructed, Unclassified };

std::string to_string(Behavior b);

struct BehaviorLabel {
  Behavior kind = Behavior::Unclassified;
  double theta_own = std::numeric_limits<double>::quiet_NaN();
  double theta_other = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> period;
  std::optional<Eigen::VectorXd> fixed_point;
  std::string note;
};

struct ClassifyOptions {
  double delta = 0.35;     // NRMSE threshold
  double t_star = 40.0;    // error window for rules 3-4
  double lc_window = 40.0;
  double fp_window = 10.0;
};

/// Five-way long-term behavior of a prediction, rules applied in order:
/// (1) periodic tail -> LimitCycle; (2) constant tail -> FixedPoint;
/// (3) NRMSE vs the *other* attractor's target <= delta -> Switched;
/// (4) NRMSE vs own target <= delta -> Reconstructed; (5) Unclassified.
BehaviorLabel classify(const TimeSeries& pred, const TimeSeries& target_own,
                       const TimeSeries& target_other, const ClassifyOptions& opt = {});

}  // namespace mfrc
