#include "mfrc/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "mfrc/errors.hpp"

namespace mfrc {

namespace {

// Index of the first sample at or after time t (grid-aligned check).
Eigen::Index window_start(const TimeSeries& s, double t) {
  const double pos = (t - s.t0) / s.dt;
  const auto j = static_cast<Eigen::Index>(std::llround(pos));
  if (j < 0 || std::abs(pos - static_cast<double>(j)) > 1e-6)
    throw ValidationError("evaluate: window start not on the sample grid");
  return j;
}

}  // namespace

ErrorReport nrmse(const TimeSeries& pred, const TimeSeries& target, double t_star,
                  double t_end) {
  if (pred.dim() != target.dim()) throw ValidationError("nrmse: dimension mismatch");
  if (std::abs(pred.dt - target.dt) > 1e-12)
    throw ValidationError("nrmse: sample grids differ");
  const double w0 = t_end - t_star;
  const Eigen::Index pa = window_start(pred, w0);
  const Eigen::Index ta = window_start(target, w0);
  const auto cols = static_cast<Eigen::Index>(std::llround(t_star / pred.dt)) + 1;
  if (pa + cols > pred.size() || ta + cols > target.size())
    throw ValidationError("nrmse: series do not cover the sampling window");

  ErrorReport rep;
  rep.w_start = w0;
  rep.w_end = t_end;
  rep.per_var.resize(pred.dim());
  for (Eigen::Index i = 0; i < pred.dim(); ++i) {
    const auto p = pred.samples.row(i).segment(pa, cols);
    const auto t = target.samples.row(i).segment(ta, cols);
    const double range = t.maxCoeff() - t.minCoeff();
    if (range <= 0.0)
      throw NumericError("nrmse", "degenerate normalizer: target variable " +
                                      std::to_string(i) + " has zero range in window");
    const double rms = std::sqrt((p - t).squaredNorm() / static_cast<double>(cols));
    rep.per_var[i] = rms / range;
  }
  rep.avg = rep.per_var.mean();
  return rep;
}

double epsilon_ratio(double theta_blend, double theta_task) {
  if (theta_task <= 0.0)
    throw NumericError("epsilon_ratio", "task-specific error must be positive");
  return theta_blend / theta_task;
}

std::optional<Eigen::VectorXd> detect_fixed_point(const TimeSeries& series,
                                                  const FixedPointOptions& opt) {
  const Eigen::Index a = window_start(series, series.t_end() - opt.window);
  const Eigen::Index cols = series.size() - a;
  Eigen::VectorXd mean(series.dim());
  for (Eigen::Index i = 0; i < series.dim(); ++i) {
    const auto w = series.samples.row(i).segment(a, cols);
    const double full_range = series.samples.row(i).maxCoeff() - series.samples.row(i).minCoeff();
    const double tol = std::max(opt.rel_tol * full_range, opt.abs_floor);
    const double m = w.mean();
    if ((w.array() - m).abs().maxCoeff() >= tol) return std::nullopt;
    mean[i] = m;
  }
  return mean;
}

std::optional<PeriodicityResult> detect_periodicity(const TimeSeries& series,
                                                    const PeriodicityOptions& opt) {
  const Eigen::Index a = window_start(series, series.t_end() - opt.window);
  const Eigen::Index cols = series.size() - a;
  const Eigen::Index xi = series.dim() - 1;  // x3 drives the analysis
  const auto x = series.samples.row(xi).segment(a, cols);
  const double range = x.maxCoeff() - x.minCoeff();
  if (range <= 0.0) return std::nullopt;  // constant: not periodic

  // strict local maxima / minima of x3
  struct Peak {
    Eigen::Index idx;
    double value;
  };
  std::vector<Peak> maxima, minima;
  for (Eigen::Index j = 1; j + 1 < cols; ++j) {
    if (x[j] > x[j - 1] && x[j] > x[j + 1]) maxima.push_back({j, x[j]});
    if (x[j] < x[j - 1] && x[j] < x[j + 1]) minima.push_back({j, x[j]});
  }
  if (maxima.size() < 2) return std::nullopt;

  // group maxima by value
  const double gtol = opt.group_tol * range;
  std::vector<std::vector<Peak>> groups;
  for (const Peak& p : maxima) {
    bool placed = false;
    for (auto& g : groups)
      if (std::abs(g.front().value - p.value) <= gtol) {
        g.push_back(p);
        placed = true;
        break;
      }
    if (!placed) groups.push_back({p});
  }

  // candidate period: median gap between successive maxima of the group
  // holding the largest maxima
  const std::vector<Peak>* top = &groups.front();
  for (const auto& g : groups)
    if (g.front().value > top->front().value) top = &g;
  if (top->size() < 2) return std::nullopt;
  std::vector<double> gaps;
  for (size_t k = 1; k < top->size(); ++k)
    gaps.push_back(static_cast<double>((*top)[k].idx - (*top)[k - 1].idx) * series.dt);
  std::sort(gaps.begin(), gaps.end());
  const double period = gaps[gaps.size() / 2];
  if (period <= 0.0) return std::nullopt;

  // recurrence check on the full state, per-variable normalized
  const auto shift = static_cast<Eigen::Index>(std::llround(period / series.dt));
  if (shift <= 0 || shift >= cols) return std::nullopt;
  Eigen::VectorXd ranges(series.dim());
  for (Eigen::Index i = 0; i < series.dim(); ++i) {
    const auto w = series.samples.row(i).segment(a, cols);
    ranges[i] = std::max(w.maxCoeff() - w.minCoeff(), 1e-300);
  }
  Eigen::Index good = 0;
  const Eigen::Index checks = cols - shift;
  for (Eigen::Index j = 0; j < checks; ++j) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < series.dim(); ++i)
      dev = std::max(dev, std::abs(series.samples(i, a + j) - series.samples(i, a + j + shift)) /
                              ranges[i]);
    if (dev < opt.recur_tol) ++good;
  }
  if (static_cast<double>(good) < opt.recur_frac * static_cast<double>(checks))
    return std::nullopt;

  PeriodicityResult res;
  res.period = period;
  res.distinct_maxima = static_cast<int>(groups.size());
  for (const auto& g : groups) res.maxima_values.push_back(g.front().value);
  std::sort(res.maxima_values.begin(), res.maxima_values.end());
  // distinct minima values, same grouping rule
  std::vector<double> mins;
  for (const Peak& p : minima) {
    bool placed = false;
    for (double v : mins)
      if (std::abs(v - p.value) <= gtol) {
        placed = true;
        break;
      }
    if (!placed) mins.push_back(p.value);
  }
  std::sort(mins.begin(), mins.end());
  res.minima_values = std::move(mins);
  return res;
}

std::string to_string(Behavior b) {
  switch (b) {
    case Behavior::LimitCycle: return "LimitCycle";
    case Behavior::FixedPoint: return "FixedPoint";
    case Behavior::Switched: return "Switched";
    case Behavior::Reconstructed: return "Reconstructed";
    case Behavior::Unclassified: return "Unclassified";
  }
  return "Unclassified";
}

BehaviorLabel classify(const TimeSeries& pred, const TimeSeries& target_own,
                       const TimeSeries& target_other, const ClassifyOptions& opt) {
  BehaviorLabel label;
  const double t_end = pred.t_end();

  PeriodicityOptions popt;
  popt.window = opt.lc_window;
  if (auto p = detect_periodicity(pred, popt)) {
    label.kind = Behavior::LimitCycle;
    label.period = p->period;
    return label;
  }

  FixedPointOptions fopt;
  fopt.window = opt.fp_window;
  if (auto fp = detect_fixed_point(pred, fopt)) {
    label.kind = Behavior::FixedPoint;
    label.fixed_point = *fp;
    return label;
  }

  label.theta_other = nrmse(pred, target_other, opt.t_star, t_end).avg;
  label.theta_own = nrmse(pred, target_own, opt.t_star, t_end).avg;
  if (label.theta_other <= opt.delta) {
    label.kind = Behavior::Switched;
    return label;
  }
  if (label.theta_own <= opt.delta) {
    label.kind = Behavior::Reconstructed;
    return label;
  }
  label.kind = Behavior::Unclassified;
  return label;
}

}  // namespace mfrc
