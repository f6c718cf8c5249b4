#include <doctest.h>

#include "mfrc/pipeline.hpp"
#include "mfrc/rng.hpp"

using namespace mfrc;

namespace {

ReservoirConfig small_config() {
  ReservoirConfig cfg;
  cfg.n_neurons = 48;
  cfg.conn_prob = 0.2;
  cfg.rho = 0.5;
  cfg.t_listen = 2.0;
  cfg.t_train = 6.0;
  cfg.t_predict = 8.0;
  cfg.t_star = 2.0;
  cfg.seed = 21;
  return cfg;
}

// random well-conditioned training set for solver properties
TrainingSet random_training_set(int feat, int targets, int cols, uint64_t seed) {
  rng::Engine eng(seed);
  TrainingSet ts;
  ts.x.resize(feat, cols);
  ts.y.resize(targets, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < feat; ++i) ts.x(i, j) = eng.uniform(-1.0, 1.0);
    for (Eigen::Index i = 0; i < targets; ++i) ts.y(i, j) = eng.uniform(-1.0, 1.0);
  }
  return ts;
}

double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(a.norm(), 1e-300);
}

}  // namespace

TEST_CASE("harvest column count and contents") {
  const ReservoirConfig cfg = small_config();
  const ReservoirMatrices mat = build_matrices(cfg);
  const GuanParams p;
  const TimeSeries src = integrate_guan(p, {1, 1, 1}, 0.0, cfg.t_train, cfg.tau);
  const ReservoirTrajectory traj =
      listen(cfg, mat, src, Eigen::VectorXd::Zero(cfg.n_neurons), cfg.t_listen, cfg.t_train);

  const TrainingSet ts = harvest(traj, src, cfg.t_listen, cfg.t_train);
  CHECK(ts.x.cols() == cfg.train_cols());
  CHECK(ts.x.rows() == 2 * cfg.n_neurons);
  CHECK(ts.y.rows() == 3);
  // first column is q(r(t_listen)), y(t_listen)
  CHECK(ts.x.col(0).head(cfg.n_neurons) == traj.states.col(0));
  CHECK(ts.y.col(0) == src.samples.col(src.index_of(cfg.t_listen)));

  // single grid point window
  const TrainingSet one = harvest(traj, src, cfg.t_listen, cfg.t_listen);
  CHECK(one.x.cols() == 1);

  // the default configuration yields the documented 20001 columns
  CHECK(ReservoirConfig{}.train_cols() == 20001);
}

TEST_CASE("harvest rejects misaligned grids") {
  const ReservoirConfig cfg = small_config();
  const ReservoirMatrices mat = build_matrices(cfg);
  const GuanParams p;
  const TimeSeries src = integrate_guan(p, {1, 1, 1}, 0.0, cfg.t_train, cfg.tau);
  ReservoirTrajectory traj =
      listen(cfg, mat, src, Eigen::VectorXd::Zero(cfg.n_neurons), cfg.t_listen, cfg.t_train);
  traj.t0 += cfg.tau / 3.0;
  CHECK_THROWS_AS(harvest(traj, src, cfg.t_listen, cfg.t_train), ValidationError);
  traj.t0 -= cfg.tau / 3.0;
  traj.dt *= 2.0;
  CHECK_THROWS_AS(harvest(traj, src, cfg.t_listen, cfg.t_train), ValidationError);
}

TEST_CASE("ridge_solve recovers an exact linear map with beta = 0") {
  rng::Engine eng(3);
  const int feat = 16, cols = 200;
  Eigen::MatrixXd a_true(3, feat);
  for (Eigen::Index i = 0; i < a_true.size(); ++i) *(a_true.data() + i) = eng.uniform(-1, 1);
  TrainingSet ts = random_training_set(feat, 3, cols, 4);
  ts.y = a_true * ts.x;
  const Readout r = ridge_solve(ts, 0.0);
  CHECK(rel_diff(r.w_out, a_true) < 1e-8);
  CHECK(r.prov.solve_residual < 1e-8);
}

TEST_CASE("ridge_solve residual contract and beta sweep monotonicity") {
  TrainingSet ts = random_training_set(24, 3, 300, 5);
  double prev_norm = std::numeric_limits<double>::infinity();
  for (double beta : {1e-4, 1e-2, 1.0, 1e2}) {
    const Readout r = ridge_solve(ts, beta);
    CHECK(r.prov.solve_residual < 1e-8);
    const double n = r.w_out.norm();
    CHECK(n <= prev_norm * (1.0 + 1e-12));
    prev_norm = n;
  }
  // beta -> infinity kills the readout
  CHECK(ridge_solve(ts, 1e12).w_out.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("ridge_solve with beta = 0 on a singular system raises a helpful error") {
  TrainingSet ts = random_training_set(10, 2, 50, 6);
  ts.x.row(3).setZero();  // rank-deficient X X^T
  try {
    ridge_solve(ts, 0.0);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("beta > 0") != std::string::npos);
  }
}

TEST_CASE("blend endpoints reproduce task-specific training") {
  TrainingSet a = random_training_set(20, 3, 120, 7);
  TrainingSet b = random_training_set(20, 3, 80, 8);
  const double beta = 1e-2;
  const Readout wa = ridge_solve(a, beta);
  const Readout wb = ridge_solve(b, beta);

  const Readout w1 = ridge_solve(blend(a, b, 1.0, 99), beta);
  CHECK(rel_diff(w1.w_out, wa.w_out) < 1e-10);
  const Readout w0 = ridge_solve(blend(a, b, 0.0, 99), beta);
  CHECK(rel_diff(w0.w_out, wb.w_out) < 1e-10);
}

TEST_CASE("the column shuffle is a no-op for the ridge solution") {
  TrainingSet a = random_training_set(20, 3, 100, 9);
  TrainingSet b = random_training_set(20, 3, 100, 10);
  const double beta = 1e-2;
  // same blend with different shuffles, plus a manual unshuffled concatenation
  const Readout s1 = ridge_solve(blend(a, b, 0.4, 1), beta);
  const Readout s2 = ridge_solve(blend(a, b, 0.4, 2), beta);
  TrainingSet manual;
  manual.x.resize(20, 200);
  manual.y.resize(3, 200);
  manual.x << 0.4 * a.x, 0.6 * b.x;
  manual.y << 0.4 * a.y, 0.6 * b.y;
  const Readout s3 = ridge_solve(manual, beta);
  CHECK(rel_diff(s1.w_out, s2.w_out) < 1e-10);
  CHECK(rel_diff(s1.w_out, s3.w_out) < 1e-10);
}

TEST_CASE("blend validates inputs") {
  TrainingSet a = random_training_set(20, 3, 50, 11);
  TrainingSet b = random_training_set(22, 3, 50, 12);
  CHECK_THROWS_AS(blend(a, b, 0.5, 1), ValidationError);
  TrainingSet c = random_training_set(20, 3, 50, 13);
  CHECK_THROWS_AS(blend(a, c, 1.5, 1), ValidationError);
}

TEST_CASE("streaming Gram accumulation equals the explicit path") {
  TrainingSet a = random_training_set(30, 3, 257, 14);  // not a multiple of the block size
  const GramBlocks explicit_grams = grams_of(a);
  GramAccumulator acc(30, 3, 64);
  for (Eigen::Index j = 0; j < a.x.cols(); ++j) {
    const Eigen::VectorXd r = a.x.col(j).head(15);
    // rebuild the feature column to exercise add(); x rows here are [r; r^2]
    // only when constructed that way, so drive the accumulator directly
    acc.add(r, a.y.col(j));
  }
  // accumulate explicitly over feature-mapped columns for comparison
  TrainingSet fm;
  fm.x.resize(30, a.x.cols());
  fm.y = a.y;
  for (Eigen::Index j = 0; j < a.x.cols(); ++j)
    fm.x.col(j) = feature_map(a.x.col(j).head(15));
  const GramBlocks expl = grams_of(fm);
  const GramBlocks stream = acc.finish();
  CHECK(rel_diff(stream.g, expl.g) < 1e-12);
  CHECK(rel_diff(stream.c, expl.c) < 1e-12);
  CHECK(stream.cols == expl.cols);
}

TEST_CASE("blend_grams equals grams of the explicit blend") {
  TrainingSet a = random_training_set(18, 3, 90, 15);
  TrainingSet b = random_training_set(18, 3, 70, 16);
  for (double alpha : {0.0, 0.3, 1.0}) {
    const GramBlocks gb = blend_grams(grams_of(a), grams_of(b), alpha);
    const GramBlocks ge = grams_of(blend(a, b, alpha, 5));
    CHECK(rel_diff(gb.g, ge.g) < 1e-10);
    CHECK(rel_diff(gb.c, ge.c) < 1e-10);
  }
}

TEST_CASE("train_task: streaming and explicit paths agree; runs are bit-reproducible") {
  const ReservoirConfig cfg = small_config();
  const ReservoirMatrices mat = build_matrices(cfg);
  const CaseDef def = case_def(CaseId::I);

  const TaskTraining expl = train_task(def.s1, cfg, mat, false);
  const TaskTraining stream = train_task(def.s1, cfg, mat, true);
  CHECK(rel_diff(expl.readout.w_out, stream.readout.w_out) < 1e-9);
  CHECK(expl.r_end == stream.r_end);
  CHECK(expl.readout.prov.solve_residual < 1e-8);

  const TaskTraining again = train_task(def.s1, cfg, mat, false);
  CHECK(again.readout.w_out == expl.readout.w_out);
}

TEST_CASE("train_blended endpoint dominance at full pipeline level") {
  const ReservoirConfig cfg = small_config();
  const ReservoirMatrices mat = build_matrices(cfg);
  const CaseDef def = case_def(CaseId::I);

  const TaskTraining task1 = train_task(def.s1, cfg, mat, false);
  const BlendedTraining b1 = train_blended(def.s1, def.s2, 1.0, cfg, mat, false);
  CHECK(rel_diff(b1.readout.w_out, task1.readout.w_out) < 1e-10);
  CHECK(b1.r_end_1 == task1.r_end);

  const BlendedTraining s = train_blended(def.s1, def.s2, 0.5, cfg, mat, true);
  const BlendedTraining e = train_blended(def.s1, def.s2, 0.5, cfg, mat, false);
  CHECK(rel_diff(s.readout.w_out, e.readout.w_out) < 1e-9);
}

TEST_CASE("readout_sensitivity: h = 0 gives exactly zero") {
  const ReservoirConfig cfg = small_config();
  const SensitivityReport rep = readout_sensitivity(case_def(CaseId::I), cfg, 0.5, 0.5, 0.0);
  CHECK(rep.d_alpha == 0.0);
  CHECK(rep.d_rho == 0.0);
}

TEST_CASE("readout_sensitivity: smooth and ~linear in h at the paper's operating point") {
  // full-size probe at (alpha, rho) = (0.5, 0.7); pilot values are ~1e-3,
  // well under the 0.05 smoothness bound
  ReservoirConfig cfg;
  cfg.seed = 7;
  const CaseDef def = case_def(CaseId::I);
  const SensitivityReport r1 = readout_sensitivity(def, cfg, 0.5, 0.7, 1e-3);
  CHECK(r1.d_alpha < 0.05);
  CHECK(r1.d_rho < 0.05);
  CHECK(r1.d_alpha > 0.0);
  CHECK(r1.d_rho > 0.0);

  const SensitivityReport r2 = readout_sensitivity(def, cfg, 0.5, 0.7, 5e-4);
  const SensitivityReport r3 = readout_sensitivity(def, cfg, 0.5, 0.7, 2.5e-4);
  // Richardson-style ratios ~2 when h halves (differentiability)
  CHECK(r1.d_alpha / r2.d_alpha == doctest::Approx(2.0).epsilon(0.35));
  CHECK(r2.d_alpha / r3.d_alpha == doctest::Approx(2.0).epsilon(0.35));
  CHECK(r1.d_rho / r2.d_rho == doctest::Approx(2.0).epsilon(0.35));
}
