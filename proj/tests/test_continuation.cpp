#include <doctest.h>

#include "mfrc/continuation.hpp"
#include "mfrc/reservoir_batch.hpp"

using namespace mfrc;

namespace {

ReservoirConfig small_config() {
  ReservoirConfig cfg;
  cfg.n_neurons = 48;
  cfg.conn_prob = 0.2;
  cfg.rho = 0.5;
  cfg.t_listen = 2.0;
  cfg.t_train = 5.0;
  cfg.t_predict = 60.0;
  cfg.t_star = 4.0;
  cfg.seed = 55;
  return cfg;
}

Branch branch_with_counts(const std::vector<int>& counts, double alpha0 = 1.0,
                          double step = 0.01) {
  Branch br;
  br.rho = 0.1;
  double a = alpha0;
  for (int c : counts) {
    BranchPoint bp;
    bp.param = a;
    if (c < 0) {
      bp.att.cls = AttractorClass::Chaotic;
    } else {
      bp.att.cls = AttractorClass::LimitCycle;
      bp.att.period = 5.0;
      for (int k = 0; k < c; ++k) {
        bp.att.x3_maxima.push_back(1.0 + 0.1 * k);
        bp.att.x3_minima.push_back(-1.0 - 0.1 * k);
      }
    }
    br.points.push_back(std::move(bp));
    a -= step;
  }
  return br;
}

// A two-neuron closed loop rigged to oscillate: with readout u = c r (first
// two features), M rotational and W_in = I, the linearization around the
// origin is gamma(-I + A), A = M + sigma c I, an unstable spiral for
// sigma c > 1 that tanh saturation turns into a stable limit cycle.
struct RiggedOscillator {
  ReservoirConfig cfg;
  ReservoirMatrices mat;

  RiggedOscillator() {
    cfg.n_neurons = 2;
    cfg.dim_in = 2;
    cfg.gamma = 10.0;
    cfg.sigma = 1.0;
    cfg.rho = 1.0;
    cfg.tau = 0.01;
    cfg.t_listen = 1.0;
    cfg.t_train = 2.0;
    cfg.t_predict = 3.0;
    cfg.seed = 1;
    Eigen::MatrixXd m(2, 2);
    const double w = 2.0;
    m << 0.0, -w, w, 0.0;
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        if (m(i, j) != 0.0) trips.emplace_back(i, j, m(i, j));
    mat.m.resize(2, 2);
    mat.m.setFromTriplets(trips.begin(), trips.end());
    mat.w_in = Eigen::MatrixXd::Identity(2, 2);
  }

  // readout family: u = c(alpha) * r, oscillatory for c > 1
  Eigen::MatrixXd readout(double c) const {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 4);
    w(0, 0) = c;
    w(1, 1) = c;
    return w;
  }
};

}  // namespace

TEST_CASE("detect_period_doubling emits the exact event list") {
  // counts 1,1,2,2,4,8 then past the cap
  const Branch br = branch_with_counts({1, 1, 2, 2, 4, 8, 17});
  const auto events = detect_period_doubling(br, 16);
  REQUIRE(events.size() == 4);
  CHECK(events[0].kind == BifKind::PeriodDoubling);
  CHECK(events[0].alpha == doctest::Approx(0.98));
  CHECK(events[1].kind == BifKind::PeriodDoubling);
  CHECK(events[1].alpha == doctest::Approx(0.96));
  CHECK(events[2].kind == BifKind::PeriodDoubling);
  CHECK(events[2].alpha == doctest::Approx(0.95));
  CHECK(events[3].kind == BifKind::CascadeOnset);

  // the acceptance wording: counts [1,2,4,cap]
  const auto ev2 = detect_period_doubling(branch_with_counts({1, 2, 4, 17}), 16);
  REQUIRE(ev2.size() == 3);
  CHECK(ev2[0].kind == BifKind::PeriodDoubling);
  CHECK(ev2[1].kind == BifKind::PeriodDoubling);
  CHECK(ev2[2].kind == BifKind::CascadeOnset);

  // constant counts: no events
  CHECK(detect_period_doubling(branch_with_counts({2, 2, 2, 2})).empty());

  // chaos after a cycle sequence is a cascade onset
  const auto ev3 = detect_period_doubling(branch_with_counts({1, 2, -1}));
  REQUIRE(ev3.size() == 2);
  CHECK(ev3[1].kind == BifKind::CascadeOnset);
}

TEST_CASE("find_untrained_attractors: zero readout has a single global fixed point") {
  const ReservoirConfig cfg = small_config();
  const ReservoirMatrices mat = build_matrices(cfg);
  const CaseDef def = case_def(CaseId::I);
  auto data = case_data(def, cfg);
  Readout r;
  r.w_out = Eigen::MatrixXd::Zero(cfg.dim_in, cfg.feature_dim());

  RicOptions opt;
  opt.n_ics = 24;
  opt.settle_max = 30.0;
  opt.analyze_window = 20.0;
  opt.match_after = 5.0;
  int failures = -1;
  const auto found = find_untrained_attractors(r, mat, cfg, *data, opt, 2, &failures);
  REQUIRE(found.size() == 1);
  CHECK(found[0].cls == AttractorClass::FixedPoint);
  CHECK(found[0].basin_count == 24);
  CHECK(found[0].location.norm() < 1e-8);
  CHECK(found[0].residual < 1e-8);
  CHECK(failures == 0);
}

TEST_CASE("find_untrained_attractors is deterministic and clustering idempotent") {
  const ReservoirConfig cfg = small_config();
  const ReservoirMatrices mat = build_matrices(cfg);
  const CaseDef def = case_def(CaseId::I);
  auto data = case_data(def, cfg);
  auto ctx = build_rho_context(def, cfg);
  const Readout r = ctx->solve_alpha(0.5);

  RicOptions opt;
  opt.n_ics = 16;
  opt.settle_max = 20.0;
  opt.analyze_window = 15.0;
  opt.match_after = 5.0;
  const auto f1 = find_untrained_attractors(r, ctx->mat, ctx->cfg, *data, opt, 1);
  const auto f2 = find_untrained_attractors(r, ctx->mat, ctx->cfg, *data, opt, 2);
  REQUIRE(f1.size() == f2.size());
  int total = 0;
  for (size_t i = 0; i < f1.size(); ++i) {
    CHECK(f1[i].cls == f2[i].cls);
    CHECK(f1[i].basin_count == f2[i].basin_count);
    total += f1[i].basin_count;
  }
  CHECK(total == opt.n_ics);
}

TEST_CASE("rigged oscillator: limit-cycle branch is stable under a dummy parameter") {
  const RiggedOscillator osc;
  // settle onto the cycle and summarize it as a seed
  const Eigen::MatrixXd w0 = osc.readout(1.2);
  PredictResult pr;
  {
    Eigen::VectorXd r0(2);
    r0 << 0.3, 0.0;
    pr = predict(osc.cfg, osc.mat, w0, r0, 80.0);
  }
  const auto per = detect_periodicity(pr.u_hat.segment(40.0, 80.0).rebased(0.0));
  REQUIRE(per.has_value());
  CHECK(per->distinct_maxima == 1);

  AttractorSummary seed;
  seed.cls = AttractorClass::LimitCycle;
  seed.period = per->period;
  seed.x3_maxima = per->maxima_values;
  seed.x3_minima = per->minima_values;
  seed.r_state = pr.r_final;

  ContinuationOptions opt;
  opt.alpha_step = 0.05;
  opt.settle = 20.0;
  opt.analyze_window = 40.0;
  opt.alpha_min = 0.0;
  opt.alpha_max = 1.0;
  // family: readout gain c = 1.2 + 0.2 * alpha, oscillatory throughout
  const Branch br = continue_limit_cycle_branch(
      osc.cfg, osc.mat, [&](double a) { return osc.readout(1.2 + 0.2 * a); }, 4.0, 0.5, seed, 1,
      opt);
  CHECK(br.term == BranchTermination::GridEdge);
  CHECK(br.points.size() == 11);  // 0.5 -> 1.0 in steps of 0.05
  for (const BranchPoint& bp : br.points) CHECK(bp.att.cls == AttractorClass::LimitCycle);
  CHECK(detect_period_doubling(br).empty());
}

TEST_CASE("rigged oscillator: shrinking the gain collapses the cycle to a point") {
  const RiggedOscillator osc;
  const Eigen::MatrixXd w0 = osc.readout(1.2);
  Eigen::VectorXd r0(2);
  r0 << 0.3, 0.0;
  const PredictResult pr = predict(osc.cfg, osc.mat, w0, r0, 80.0);
  const auto per = detect_periodicity(pr.u_hat.segment(40.0, 80.0).rebased(0.0));
  REQUIRE(per.has_value());

  AttractorSummary seed;
  seed.cls = AttractorClass::LimitCycle;
  seed.period = per->period;
  seed.x3_maxima = per->maxima_values;
  seed.x3_minima = per->minima_values;
  seed.r_state = pr.r_final;

  ContinuationOptions opt;
  opt.alpha_step = 0.05;
  opt.settle = 30.0;
  opt.analyze_window = 40.0;
  // gain passes through 1 (the oscillation dies) as alpha decreases
  const Branch br = continue_limit_cycle_branch(
      osc.cfg, osc.mat, [&](double a) { return osc.readout(0.8 + 0.4 * a); }, 4.0, 1.0, seed, -1,
      opt);
  CHECK(br.term == BranchTermination::CollapsedToPoint);
  REQUIRE(br.landing.has_value());
  CHECK(br.landing->cls == AttractorClass::FixedPoint);
}

TEST_CASE("fixed-point branch continuation on the rigged system") {
  const RiggedOscillator osc;
  // gain < 1: the origin is the only attractor
  const Eigen::MatrixXd w0 = osc.readout(0.5);
  Eigen::VectorXd r0(2);
  r0 << 0.2, -0.1;
  const PredictResult pr = predict(osc.cfg, osc.mat, w0, r0, 40.0);
  CHECK(pr.r_final.lpNorm<Eigen::Infinity>() < 1e-6);

  AttractorSummary seed;
  seed.cls = AttractorClass::FixedPoint;
  seed.location = Eigen::VectorXd::Zero(2);
  seed.r_state = pr.r_final;
  seed.residual = 0.0;

  ContinuationOptions opt;
  opt.alpha_step = 0.1;
  opt.settle = 20.0;
  opt.analyze_window = 20.0;
  const Branch br = continue_fixed_point_branch(
      osc.cfg, osc.mat, [&](double a) { return osc.readout(0.3 + 0.4 * a); }, 4.0, 0.5, seed, 1,
      opt);
  // the origin stays stable while the gain remains below 1 (alpha < 1)
  CHECK(br.points.size() >= 4);
  for (const BranchPoint& bp : br.points) {
    CHECK(bp.att.cls == AttractorClass::FixedPoint);
    CHECK(bp.att.residual < 1e-8);
    CHECK(bp.att.location.norm() < 1e-6);
  }
}

TEST_CASE("branch endpoint analysis flags saddle-node-like pairs only") {
  Branch a = branch_with_counts({1, 1, 1});
  a.term = BranchTermination::JumpToOtherBranch;
  a.points.front().param = 0.50;
  a.points[1].param = 0.49;
  a.points.back().param = 0.48;
  Branch b = branch_with_counts({1, 1, 1});
  b.term = BranchTermination::GridEdge;
  b.points.front().param = 0.46;
  b.points[1].param = 0.44;
  b.points.back().param = 0.42;

  const auto sn = branch_endpoint_analysis(a, b);
  REQUIRE(sn.has_value());
  CHECK(sn->kind == BifKind::SaddleNodeCandidate);
  CHECK(sn->alpha == doctest::Approx(0.47));

  Branch spanning = branch_with_counts({1, 1, 1});
  spanning.term = BranchTermination::GridEdge;
  CHECK_FALSE(branch_endpoint_analysis(spanning, b).has_value());

  Branch far = b;
  far.points.front().param = 0.9;
  far.points[1].param = 0.88;
  far.points.back().param = 0.86;
  CHECK_FALSE(branch_endpoint_analysis(a, far).has_value());
}

TEST_CASE("cusp_scan detects merged saddle-node pairs across rho") {
  // rho = 0.7: two branches with a gap and a jump at ~0.47
  Branch a = branch_with_counts({1, 1, 1});
  a.term = BranchTermination::JumpToOtherBranch;
  a.points[0].param = 0.50;
  a.points[1].param = 0.49;
  a.points[2].param = 0.48;
  Branch b = branch_with_counts({1, 1, 1});
  b.term = BranchTermination::GridEdge;
  b.points[0].param = 0.46;
  b.points[1].param = 0.44;
  b.points[2].param = 0.42;

  // rho = 0.77: one long connected branch spanning the former gap
  Branch merged = branch_with_counts({1, 1, 1, 1, 1, 1, 1, 1, 1});
  merged.term = BranchTermination::GridEdge;
  double p = 0.60;
  for (auto& bp : merged.points) {
    bp.param = p;
    p -= 0.03;
  }
  Branch other = branch_with_counts({1, 1, 1});
  other.term = BranchTermination::GridEdge;
  other.points[0].param = 0.95;
  other.points[1].param = 0.93;
  other.points[2].param = 0.91;

  std::vector<std::pair<double, std::pair<Branch, Branch>>> family;
  family.emplace_back(0.70, std::make_pair(a, b));
  family.emplace_back(0.77, std::make_pair(merged, other));
  const auto cusp = cusp_scan(family);
  REQUIRE(cusp.has_value());
  CHECK(cusp->kind == BifKind::CuspCandidate);
  CHECK(cusp->rho == doctest::Approx(0.735));

  // no merge, no cusp
  std::vector<std::pair<double, std::pair<Branch, Branch>>> nofam;
  nofam.emplace_back(0.70, std::make_pair(a, b));
  nofam.emplace_back(0.77, std::make_pair(a, b));
  CHECK_FALSE(cusp_scan(nofam).has_value());
}
