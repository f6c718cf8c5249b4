#include "mfrc/continuation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <deque>

#include "mfrc/reservoir_batch.hpp"
#include "mfrc/rng.hpp"
#include "mfrc/sweep.hpp"

namespace mfrc {

std::string to_string(AttractorClass c) {
  switch (c) {
    case AttractorClass::FixedPoint: return "FixedPoint";
    case AttractorClass::LimitCycle: return "LimitCycle";
    case AttractorClass::Chaotic: return "Chaotic";
  }
  return "?";
}

std::string to_string(BranchTermination t) {
  switch (t) {
    case BranchTermination::JumpToOtherBranch: return "jump-to-other-branch";
    case BranchTermination::LostConvergence: return "lost-convergence";
    case BranchTermination::GridEdge: return "grid-edge";
    case BranchTermination::CollapsedToPoint: return "collapsed-to-point";
  }
  return "?";
}

std::string to_string(BifKind k) {
  switch (k) {
    case BifKind::SaddleNodeCandidate: return "SaddleNodeCandidate";
    case BifKind::CuspCandidate: return "CuspCandidate";
    case BifKind::HopfCandidate: return "HopfCandidate";
    case BifKind::PeriodDoubling: return "PeriodDoubling";
    case BifKind::CascadeOnset: return "CascadeOnset";
  }
  return "?";
}

namespace {

constexpr double kFpVelTol = 1e-6;     // |r'|_inf below this counts as stationary
constexpr double kFpMatchVel = 1e-3;   // in-flight matching needs this slow a state
constexpr double kChaosBoxTol = 0.10;  // bbox agreement for merging chaotic tails

// Newton polish of a fixed point of the predicting reservoir. The Jacobian
// gamma [ -I + diag(sech^2 z) (M + sigma W_in (W1 + 2 W2 diag(r))) ] is
// dense N x N; a handful of damped iterations from an already-settled state
// reaches the stationarity residual.
struct NewtonPolish {
  const ReservoirConfig& cfg;
  const ReservoirMatrices& mat;
  const Eigen::MatrixXd& w_out;
  ReservoirBatch probe;

  NewtonPolish(const ReservoirConfig& c, const ReservoirMatrices& m, const Eigen::MatrixXd& w)
      : cfg(c), mat(m), w_out(w), probe(c, m, 1) {
    probe.set_readouts({&w_out});
  }

  double residual(const Eigen::VectorXd& r) {
    return probe.derivative_at(r).lpNorm<Eigen::Infinity>();
  }

  // returns true if the residual target was reached; r is updated in place
  bool run(Eigen::VectorXd& r, double target, int max_iter = 25) {
    const Eigen::Index n = cfg.n_neurons;
    const Eigen::MatrixXd m_dense = Eigen::MatrixXd(mat.m);
    const Eigen::MatrixXd win_sig = cfg.sigma * mat.w_in;  // N x D
    double res = residual(r);
    for (int it = 0; it < max_iter && res > target; ++it) {
      const Eigen::VectorXd rhs_val = probe.derivative_at(r);
      // z and tanh'(z)
      Eigen::VectorXd u_hat = w_out.leftCols(n) * r + w_out.rightCols(n) * r.array().square().matrix();
      Eigen::VectorXd z = mat.m * r + win_sig * u_hat;
      const Eigen::ArrayXd th = z.array().tanh();
      const Eigen::ArrayXd sech2 = 1.0 - th.square();
      // A = M + W_in_sig * (W1 + 2 W2 diag(r))
      Eigen::MatrixXd wq = w_out.leftCols(n);
      wq += 2.0 * w_out.rightCols(n) * r.asDiagonal();
      Eigen::MatrixXd jac = m_dense + win_sig * wq;
      jac.array().colwise() *= sech2;
      jac.diagonal().array() -= 1.0;
      jac *= cfg.gamma;

      const Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
      const Eigen::VectorXd step = lu.solve(-rhs_val);
      if (!step.allFinite()) return false;
      double lambda = 1.0;
      bool advanced = false;
      for (int bt = 0; bt < 8; ++bt) {
        Eigen::VectorXd cand = r + lambda * step;
        const double cres = residual(cand);
        if (cres < res) {
          r = std::move(cand);
          res = cres;
          advanced = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!advanced) return res <= target;
    }
    return res <= target;
  }
};

struct TailOutcome {
  AttractorClass cls = AttractorClass::Chaotic;
  bool classified = false;  // false: integration failed
  Eigen::VectorXd u_loc;    // FP readout location or window mean
  Eigen::VectorXd u_lo, u_hi;
  double period = 0.0;
  int distinct_maxima = 0;
  std::vector<double> x3_maxima, x3_minima;
  Eigen::VectorXd r_final;
  double residual = std::numeric_limits<double>::quiet_NaN();
};

AttractorSummary to_summary(const TailOutcome& t) {
  AttractorSummary s;
  s.cls = t.cls;
  s.location = t.u_loc;
  s.period = t.period;
  s.x3_maxima = t.x3_maxima;
  s.x3_minima = t.x3_minima;
  s.basin_count = 1;
  s.residual = t.residual;
  s.r_state = t.r_final;
  s.u_lo = t.u_lo;
  s.u_hi = t.u_hi;
  return s;
}

// Classify the u_hat window of a settled tail.
void classify_window(const TimeSeries& win, TailOutcome& out) {
  out.u_lo = win.samples.rowwise().minCoeff();
  out.u_hi = win.samples.rowwise().maxCoeff();
  if (auto fp = detect_fixed_point(win)) {
    out.cls = AttractorClass::FixedPoint;
    out.u_loc = *fp;
    return;
  }
  if (auto p = detect_periodicity(win)) {
    out.cls = AttractorClass::LimitCycle;
    out.period = p->period;
    out.distinct_maxima = p->distinct_maxima;
    out.x3_maxima = p->maxima_values;
    out.x3_minima = p->minima_values;
    out.u_loc = win.samples.rowwise().mean();
    return;
  }
  out.cls = AttractorClass::Chaotic;
  out.u_loc = win.samples.rowwise().mean();
  const Eigen::Index xi = win.dim() - 1;
  out.x3_maxima = {win.samples.row(xi).maxCoeff()};
  out.x3_minima = {win.samples.row(xi).minCoeff()};
}

// Single-lane settle + classify with early fixed-point exit; polishes fixed
// points to the stationarity residual.
TailOutcome run_tail(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                     const Eigen::MatrixXd& w_out, const Eigen::VectorXd& r0,
                     double settle_max, double analyze_window, double fp_check_every,
                     double polish_target) {
  TailOutcome out;
  ReservoirBatch batch(cfg, mat, 1);
  batch.set_readouts({&w_out});
  batch.set_state(0, r0);

  const auto check_steps =
      std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::llround(fp_check_every / cfg.tau)));
  const auto settle_steps = static_cast<Eigen::Index>(std::llround(settle_max / cfg.tau));
  Eigen::VectorXd r(cfg.n_neurons);
  bool fp_early = false;
  try {
    for (Eigen::Index k = 0; k < settle_steps; ++k) {
      batch.step(static_cast<double>(k) * cfg.tau);
      if ((k + 1) % check_steps == 0) {
        batch.extract_lane(0, r);
        if (batch.derivative_at(r).lpNorm<Eigen::Infinity>() < kFpVelTol) {
          fp_early = true;
          break;
        }
      }
    }
  } catch (const NumericError&) {
    return out;  // unclassified (integration failure)
  }
  batch.extract_lane(0, r);

  if (fp_early) {
    NewtonPolish polish(cfg, mat, w_out);
    if (polish.run(r, polish_target)) {
      out.classified = true;
      out.cls = AttractorClass::FixedPoint;
      out.r_final = r;
      out.residual = polish.residual(r);
      RowMat u(cfg.dim_in, 1);
      ReservoirBatch probe(cfg, mat, 1);
      probe.set_readouts({&w_out});
      probe.set_state(0, r);
      probe.readout_now(u);
      out.u_loc = u.col(0);
      out.u_lo = out.u_hi = out.u_loc;
      return out;
    }
    // not actually stationary enough; fall through to windowed analysis
    batch.set_state(0, r);
  }

  const auto win_steps = static_cast<Eigen::Index>(std::llround(analyze_window / cfg.tau));
  TimeSeries win;
  win.t0 = 0.0;
  win.dt = cfg.tau;
  win.samples.resize(cfg.dim_in, win_steps + 1);
  RowMat u(cfg.dim_in, 1);
  batch.readout_now(u);
  win.samples.col(0) = u.col(0);
  try {
    for (Eigen::Index k = 0; k < win_steps; ++k) {
      batch.step(static_cast<double>(k) * cfg.tau);
      batch.readout_now(u);
      win.samples.col(k + 1) = u.col(0);
    }
  } catch (const NumericError&) {
    return out;
  }
  batch.extract_lane(0, out.r_final);
  out.classified = true;
  classify_window(win, out);

  if (out.cls == AttractorClass::FixedPoint) {
    NewtonPolish polish(cfg, mat, w_out);
    Eigen::VectorXd rp = out.r_final;
    if (polish.run(rp, polish_target)) {
      out.r_final = rp;
      out.residual = polish.residual(rp);
    } else {
      out.residual = polish.residual(out.r_final);
    }
  }
  return out;
}

double hausdorff_1d(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  double h = 0.0;
  for (double x : a) {
    double best = std::numeric_limits<double>::infinity();
    for (double y : b) best = std::min(best, std::abs(x - y));
    h = std::max(h, best);
  }
  for (double y : b) {
    double best = std::numeric_limits<double>::infinity();
    for (double x : a) best = std::min(best, std::abs(y - x));
    h = std::max(h, best);
  }
  return h;
}

std::vector<double> merged_extrema(const AttractorSummary& s) {
  std::vector<double> e = s.x3_maxima;
  e.insert(e.end(), s.x3_minima.begin(), s.x3_minima.end());
  std::sort(e.begin(), e.end());
  return e;
}

bool same_attractor(const AttractorSummary& a, const AttractorSummary& b, const CaseData& data,
                    const RicOptions& opt) {
  if (a.cls != b.cls) return false;
  const double diag = data.box_diag;
  const Eigen::Index xi = data.box_lo.size() - 1;
  const double x3_range = data.box_hi[xi] - data.box_lo[xi];
  switch (a.cls) {
    case AttractorClass::FixedPoint:
      return (a.location - b.location).norm() <= opt.fp_cluster_frac * diag;
    case AttractorClass::LimitCycle: {
      const double pref = std::max(a.period, b.period);
      if (std::abs(a.period - b.period) > opt.lc_period_frac * pref) return false;
      return hausdorff_1d(merged_extrema(a), merged_extrema(b)) <=
             opt.lc_extrema_frac * x3_range;
    }
    case AttractorClass::Chaotic: {
      for (Eigen::Index i = 0; i < a.u_lo.size(); ++i) {
        const double ext = std::max(data.box_hi[i] - data.box_lo[i], 1e-12);
        if (std::abs(a.u_lo[i] - b.u_lo[i]) > kChaosBoxTol * ext) return false;
        if (std::abs(a.u_hi[i] - b.u_hi[i]) > kChaosBoxTol * ext) return false;
      }
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<AttractorSummary> find_untrained_attractors(const Readout& readout,
                                                        const ReservoirMatrices& mat,
                                                        const ReservoirConfig& cfg,
                                                        const CaseData& data,
                                                        const RicOptions& opt, int workers,
                                                        int* failures) {
  cfg.validate();
  const Eigen::MatrixXd& w = readout.w_out;
  const int n_chunks = (opt.n_ics + opt.chunk - 1) / opt.chunk;
  std::vector<std::vector<AttractorSummary>> chunk_found(static_cast<size_t>(n_chunks));
  std::vector<int> chunk_failures(static_cast<size_t>(n_chunks), 0);

  const auto match_steps = static_cast<Eigen::Index>(std::llround(opt.match_after / cfg.tau));
  const auto tail_keep = static_cast<Eigen::Index>(std::llround(10.0 / cfg.tau));

  run_indexed(n_chunks, resolve_workers(workers), [&](Eigen::Index ci) {
    const int chunk_lo = static_cast<int>(ci) * opt.chunk;
    const int chunk_hi = std::min(opt.n_ics, chunk_lo + opt.chunk);
    auto& lib = chunk_found[static_cast<size_t>(ci)];
    std::vector<int> pending;  // RIC indices needing a full-length run

    // Stage 1: short batched runs; match decayed/settled lanes against the
    // chunk-local library (conservative: proximity plus slow state for fixed
    // points, envelope containment for chaotic tails).
    for (int base = chunk_lo; base < chunk_hi; base += 8) {
      const int lanes = std::min(8, chunk_hi - base);
      ReservoirBatch batch(cfg, mat, lanes);
      std::vector<const Eigen::MatrixXd*> ws(static_cast<size_t>(lanes), &w);
      batch.set_readouts(ws);
      for (int l = 0; l < lanes; ++l) {
        rng::Engine eng(rng::derive_seed(cfg.seed, "ric", static_cast<uint64_t>(base + l)));
        Eigen::VectorXd r0(cfg.n_neurons);
        for (Eigen::Index i = 0; i < r0.size(); ++i) r0[i] = eng.uniform(-1.0, 1.0);
        batch.set_state(l, r0);
      }
      // trailing u_hat ring for envelope matching
      std::vector<RowMat> ring(static_cast<size_t>(tail_keep + 1));
      RowMat u(cfg.dim_in, lanes);
      bool batch_dead = false;
      try {
        for (Eigen::Index k = 0; k < match_steps; ++k) {
          batch.step(static_cast<double>(k) * cfg.tau);
          if (match_steps - k <= tail_keep) {
            batch.readout_now(u);
            ring[static_cast<size_t>(tail_keep - (match_steps - k))] = u;
          }
        }
      } catch (const NumericError&) {
        batch_dead = true;
      }
      if (batch_dead) {
        chunk_failures[static_cast<size_t>(ci)] += lanes;
        continue;
      }
      RowMat vel(cfg.n_neurons, lanes);
      batch.derivatives_now(vel);
      batch.readout_now(u);

      for (int l = 0; l < lanes; ++l) {
        const double speed = vel.col(l).lpNorm<Eigen::Infinity>();
        Eigen::VectorXd lo = ring.front().col(l), hi = ring.front().col(l);
        for (const RowMat& s : ring) {
          lo = lo.cwiseMin(s.col(l));
          hi = hi.cwiseMax(s.col(l));
        }
        bool matched = false;
        for (AttractorSummary& a : lib) {
          if (a.cls == AttractorClass::FixedPoint && speed < kFpMatchVel &&
              (Eigen::VectorXd(u.col(l)) - a.location).norm() <=
                  opt.fp_cluster_frac * data.box_diag) {
            ++a.basin_count;
            matched = true;
            break;
          }
          if (a.cls == AttractorClass::Chaotic && speed >= kFpMatchVel) {
            bool inside = true;
            double span_ok = false;
            for (Eigen::Index i = 0; i < lo.size() && inside; ++i) {
              const double ext = std::max(a.u_hi[i] - a.u_lo[i], 1e-12);
              if (lo[i] < a.u_lo[i] - 0.05 * ext || hi[i] > a.u_hi[i] + 0.05 * ext)
                inside = false;
            }
            const Eigen::Index xi = lo.size() - 1;
            span_ok = (hi[xi] - lo[xi]) >= 0.5 * (a.u_hi[xi] - a.u_lo[xi]);
            if (inside && span_ok) {
              ++a.basin_count;
              matched = true;
              break;
            }
          }
        }
        if (!matched) pending.push_back(base + l);
      }
    }

    // Stage 2: full-length classification of unmatched RICs (the states were
    // re-derived from the RIC seed; the settle repeats the short stage).
    for (int idx : pending) {
      rng::Engine eng(rng::derive_seed(cfg.seed, "ric", static_cast<uint64_t>(idx)));
      Eigen::VectorXd r0(cfg.n_neurons);
      for (Eigen::Index i = 0; i < r0.size(); ++i) r0[i] = eng.uniform(-1.0, 1.0);
      const TailOutcome tail = run_tail(cfg, mat, w, r0, opt.settle_max, opt.analyze_window,
                                        opt.fp_check_every, opt.polish_residual);
      if (!tail.classified) {
        ++chunk_failures[static_cast<size_t>(ci)];
        continue;
      }
      AttractorSummary s = to_summary(tail);
      bool merged = false;
      for (AttractorSummary& a : lib)
        if (same_attractor(a, s, data, opt)) {
          ++a.basin_count;
          merged = true;
          break;
        }
      if (!merged) lib.push_back(std::move(s));
    }
  });

  // Deterministic merge in chunk order.
  std::vector<AttractorSummary> out;
  int fail_total = 0;
  for (size_t ci = 0; ci < chunk_found.size(); ++ci) {
    fail_total += chunk_failures[ci];
    for (AttractorSummary& s : chunk_found[ci]) {
      bool merged = false;
      for (AttractorSummary& a : out)
        if (same_attractor(a, s, data, opt)) {
          a.basin_count += s.basin_count;
          merged = true;
          break;
        }
      if (!merged) out.push_back(std::move(s));
    }
  }
  if (failures) *failures = fail_total;
  std::stable_sort(out.begin(), out.end(),
                   [](const AttractorSummary& a, const AttractorSummary& b) {
                     return a.basin_count > b.basin_count;
                   });
  return out;
}

namespace {

// Continuity radius: slope-scaled step with an absolute floor.
double continuity_radius(const ContinuationOptions& opt, double step, double slope,
                         double diag) {
  return std::max(opt.continuity_slope_mult * step * slope, opt.continuity_floor_frac * diag);
}

double summary_distance(const AttractorSummary& a, const AttractorSummary& b) {
  if (a.cls == AttractorClass::FixedPoint && b.cls == AttractorClass::FixedPoint)
    return (a.location - b.location).norm();
  // interval distance on the x3 envelope
  const double alo = a.x3_minima.empty() ? a.location[a.location.size() - 1] : a.x3_minima.front();
  const double ahi = a.x3_maxima.empty() ? alo : a.x3_maxima.back();
  const double blo = b.x3_minima.empty() ? b.location[b.location.size() - 1] : b.x3_minima.front();
  const double bhi = b.x3_maxima.empty() ? blo : b.x3_maxima.back();
  return std::max(std::abs(alo - blo), std::abs(ahi - bhi));
}

Branch continue_branch_impl(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                            const ReadoutFamily& family, double box_diag, double alpha_start,
                            const AttractorSummary& seed, int direction,
                            const ContinuationOptions& opt, bool limit_cycle_mode) {
  if (direction != 1 && direction != -1)
    throw ValidationError("continuation: direction must be +1 or -1");
  if (seed.r_state.size() != cfg.n_neurons)
    throw ValidationError("continuation: seed has no reservoir state");

  Branch branch;
  branch.rho = cfg.rho;
  branch.points.push_back({alpha_start, seed});

  double step = opt.alpha_step;
  bool refined = false;
  double alpha = alpha_start;
  Eigen::VectorXd warm = seed.r_state;
  double slope = 0.0;

  for (int it = 0; it < opt.max_steps; ++it) {
    double next = alpha + direction * step;
    if (next < opt.alpha_min - 1e-12 || next > opt.alpha_max + 1e-12) {
      branch.term = BranchTermination::GridEdge;
      return branch;
    }
    next = std::clamp(next, opt.alpha_min, opt.alpha_max);

    const Eigen::MatrixXd w_out = family(next);
    const TailOutcome tail =
        run_tail(cfg, mat, w_out, warm, opt.settle, opt.analyze_window,
                 limit_cycle_mode ? opt.settle + 1.0 : 5.0,  // LC mode skips the early-FP exit
                 opt.polish_residual);
    if (!tail.classified) {
      branch.term = BranchTermination::LostConvergence;
      branch.landing_param = next;
      return branch;
    }
    AttractorSummary s = to_summary(tail);
    const AttractorSummary& prev = branch.points.back().att;
    const double radius = continuity_radius(opt, step, slope, box_diag);
    const double dist = summary_distance(prev, s);

    if (!limit_cycle_mode) {
      if (s.cls != AttractorClass::FixedPoint) {
        // fixed point gave way to an oscillation or worse; report as a jump
        // with the landing recorded (a small nearby cycle is Hopf evidence)
        branch.term = BranchTermination::JumpToOtherBranch;
        branch.landing = s;
        branch.landing_param = next;
        return branch;
      }
      if (dist > radius) {
        branch.term = BranchTermination::JumpToOtherBranch;
        branch.landing = s;
        branch.landing_param = next;
        return branch;
      }
    } else {
      if (s.cls == AttractorClass::FixedPoint) {
        const double amp = prev.x3_maxima.empty() || prev.x3_minima.empty()
                               ? 0.0
                               : prev.x3_maxima.back() - prev.x3_minima.front();
        if (summary_distance(prev, s) <= std::max(radius, amp)) {
          branch.term = BranchTermination::CollapsedToPoint;
        } else {
          branch.term = BranchTermination::JumpToOtherBranch;
        }
        branch.landing = s;
        branch.landing_param = next;
        return branch;
      }
      if (dist > radius) {
        branch.term = BranchTermination::JumpToOtherBranch;
        branch.landing = s;
        branch.landing_param = next;
        return branch;
      }
      // period-doubling: refine the step once
      if (!refined && prev.cls == AttractorClass::LimitCycle &&
          s.cls == AttractorClass::LimitCycle && prev.x3_maxima.size() >= 1 &&
          s.x3_maxima.size() >= 2 * prev.x3_maxima.size()) {
        step /= opt.pd_refine;
        refined = true;
      }
    }

    slope = dist / step;
    warm = s.r_state;
    alpha = next;
    branch.points.push_back({alpha, std::move(s)});
  }
  branch.term = BranchTermination::LostConvergence;
  return branch;
}

}  // namespace

Branch continue_fixed_point_branch(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                                   const ReadoutFamily& family, double box_diag,
                                   double alpha_start, const AttractorSummary& fp_seed,
                                   int direction, const ContinuationOptions& opt) {
  if (fp_seed.cls != AttractorClass::FixedPoint)
    throw ValidationError("continue_fixed_point_branch: seed is not a fixed point");
  return continue_branch_impl(cfg, mat, family, box_diag, alpha_start, fp_seed, direction, opt,
                              false);
}

Branch continue_fixed_point_branch(const RhoContext& ctx, double alpha_start,
                                   const AttractorSummary& fp_seed, int direction,
                                   const ContinuationOptions& opt) {
  return continue_fixed_point_branch(
      ctx.cfg, ctx.mat, [&ctx](double a) { return ctx.solve_alpha(a).w_out; },
      ctx.data->box_diag, alpha_start, fp_seed, direction, opt);
}

Branch continue_limit_cycle_branch(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                                   const ReadoutFamily& family, double box_diag,
                                   double alpha_start, const AttractorSummary& lc_seed,
                                   int direction, const ContinuationOptions& opt) {
  return continue_branch_impl(cfg, mat, family, box_diag, alpha_start, lc_seed, direction, opt,
                              true);
}

Branch continue_limit_cycle_branch(const RhoContext& ctx, double alpha_start,
                                   const AttractorSummary& lc_seed, int direction,
                                   const ContinuationOptions& opt) {
  return continue_limit_cycle_branch(
      ctx.cfg, ctx.mat, [&ctx](double a) { return ctx.solve_alpha(a).w_out; },
      ctx.data->box_diag, alpha_start, lc_seed, direction, opt);
}

std::vector<BifurcationEvent> detect_period_doubling(const Branch& branch, int cap) {
  std::vector<BifurcationEvent> events;
  int prev_count = 0;
  bool cascade_flagged = false;
  bool seen_lc = false;
  for (const BranchPoint& bp : branch.points) {
    if (bp.att.cls == AttractorClass::LimitCycle) {
      cascade_flagged = false;  // a periodic window resumes; a new cascade may follow
      const int count = std::max<int>(1, static_cast<int>(bp.att.x3_maxima.size()));
      if (seen_lc && prev_count > 0 && count == 2 * prev_count)
        events.push_back({BifKind::PeriodDoubling, bp.param, branch.rho,
                          "distinct maxima " + std::to_string(prev_count) + " -> " +
                              std::to_string(count)});
      if (count > cap) {
        events.push_back({BifKind::CascadeOnset, bp.param, branch.rho,
                          "distinct maxima count " + std::to_string(count) + " exceeds cap"});
        cascade_flagged = true;
      }
      prev_count = count;
      seen_lc = true;
    } else if (bp.att.cls == AttractorClass::Chaotic && seen_lc && !cascade_flagged) {
      events.push_back({BifKind::CascadeOnset, bp.param, branch.rho,
                        "periodicity lost (chaotic tail)"});
      cascade_flagged = true;
      prev_count = 0;
    }
  }
  return events;
}

std::optional<BifurcationEvent> branch_endpoint_analysis(const Branch& a, const Branch& b,
                                                         const EndpointAnalysisOptions& opt) {
  if (a.points.empty() || b.points.empty()) return std::nullopt;
  if (a.term != BranchTermination::JumpToOtherBranch) return std::nullopt;
  const double a_end = a.points.back().param;
  const double b_first = b.points.front().param;
  const double b_last = b.points.back().param;
  const double d = std::min(std::abs(a_end - b_first), std::abs(a_end - b_last));
  if (d > opt.alpha_near) return std::nullopt;
  BifurcationEvent ev;
  ev.kind = BifKind::SaddleNodeCandidate;
  ev.alpha = 0.5 * (a_end + (std::abs(a_end - b_first) < std::abs(a_end - b_last) ? b_first
                                                                                  : b_last));
  ev.rho = a.rho;
  ev.evidence = "branch ends in a jump at alpha=" + std::to_string(a_end) +
                "; partner endpoint within " + std::to_string(d);
  return ev;
}

std::optional<BifurcationEvent> cusp_scan(
    const std::vector<std::pair<double, std::pair<Branch, Branch>>>& family,
    const EndpointAnalysisOptions& opt) {
  // look for an SN candidate at one rho whose alpha location lies strictly
  // inside a branch at a later rho (the separated ends have connected)
  for (size_t i = 0; i < family.size(); ++i) {
    const auto sn = branch_endpoint_analysis(family[i].second.first, family[i].second.second, opt);
    if (!sn) continue;
    for (size_t j = 0; j < family.size(); ++j) {
      if (j == i) continue;
      for (const Branch* br : {&family[j].second.first, &family[j].second.second}) {
        if (br->points.size() < 5) continue;
        double lo = br->points.front().param, hi = br->points.back().param;
        if (lo > hi) std::swap(lo, hi);
        const double margin = 2.0 * std::abs(br->points[1].param - br->points[0].param);
        if (sn->alpha > lo + margin && sn->alpha < hi - margin) {
          BifurcationEvent ev;
          ev.kind = BifKind::CuspCandidate;
          ev.alpha = sn->alpha;
          ev.rho = 0.5 * (family[i].first + family[j].first);
          ev.evidence = "SN candidates at rho=" + std::to_string(family[i].first) +
                        " merge into a connected branch at rho=" + std::to_string(family[j].first);
          return ev;
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace mfrc
