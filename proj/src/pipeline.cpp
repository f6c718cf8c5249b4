#include "mfrc/pipeline.hpp"

#include <sstream>

#include "mfrc/reservoir_batch.hpp"
#include "mfrc/rng.hpp"

namespace mfrc {

TimeSeries AttractorSpec::trajectory(double t0, double t1, double dt) const {
  return std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GuanParams>)
          return integrate_guan(p, ic, t0, t1, dt);
        else
          return integrate_lorenz(p, ic, t0, t1, dt);
      },
      params);
}

CaseId parse_case(const std::string& s) {
  if (s == "I" || s == "i" || s == "caseI" || s == "1") return CaseId::I;
  if (s == "II" || s == "ii" || s == "caseII" || s == "2") return CaseId::II;
  if (s == "III" || s == "iii" || s == "caseIII" || s == "3") return CaseId::III;
  throw ValidationError("unknown case '" + s + "' (expected I, II or III)");
}

std::string to_string(CaseId c) {
  switch (c) {
    case CaseId::I: return "I";
    case CaseId::II: return "II";
    case CaseId::III: return "III";
  }
  return "?";
}

CaseDef case_def(CaseId id, double delta_a1) {
  CaseDef def;
  def.id = id;
  GuanParams case_i{5.0, 15.0, 3.0, 12.0, 1.0};
  AttractorSpec a2{"A2", case_i, SystemState(1.0, 1.0, -1.0)};
  switch (id) {
    case CaseId::I: {
      GuanParams a1p = case_i;
      a1p.delta = delta_a1;
      def.s1 = {"A1", a1p, SystemState(1.0, 1.0, 1.0)};
      def.s2 = a2;
      def.sigma = 0.2;
      break;
    }
    case CaseId::II: {
      def.s1 = {"B1", GuanParams{5.0, 8.0, 2.0, 2.0, 1.0}, SystemState(1.0, 1.0, 1.0)};
      def.s2 = a2;
      def.sigma = 0.4;
      break;
    }
    case CaseId::III: {
      def.s1 = {"L", LorenzParams{}, SystemState(1.0, 1.0, 1.0)};
      def.s2 = a2;
      def.sigma = 0.2;
      break;
    }
  }
  if (id != CaseId::I && delta_a1 != 1.0)
    throw ValidationError("timescale parameter applies to Case I only");
  return def;
}

namespace {

std::string case_key(const CaseDef& def, const ReservoirConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << to_string(def.id) << '|';
  if (const auto* g = std::get_if<GuanParams>(&def.s1.params)) os << g->delta;
  os << '|' << cfg.t_train << '|' << cfg.t_predict << '|' << cfg.tau << '|' << cfg.t_listen;
  return os.str();
}

std::mutex g_case_mutex;
std::map<std::string, std::shared_ptr<const CaseData>> g_case_cache;

}  // namespace

std::shared_ptr<const CaseData> case_data(const CaseDef& def, const ReservoirConfig& cfg) {
  const std::string key = case_key(def, cfg);
  {
    std::lock_guard<std::mutex> lock(g_case_mutex);
    auto it = g_case_cache.find(key);
    if (it != g_case_cache.end()) return it->second;
  }
  auto data = std::make_shared<CaseData>();
  data->def = def;
  const double span = cfg.t_train + cfg.t_predict;
  data->traj1 = def.s1.trajectory(0.0, span, cfg.tau);
  data->traj2 = def.s2.trajectory(0.0, span, cfg.tau);
  data->target1 = data->traj1.segment(cfg.t_train, span).rebased(0.0);
  data->target2 = data->traj2.segment(cfg.t_train, span).rebased(0.0);

  // union bounding box over the post-transient part of both sources
  const auto a1 = data->traj1.index_of(cfg.t_listen);
  const Eigen::Index d = data->traj1.dim();
  data->box_lo.resize(d);
  data->box_hi.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto r1 = data->traj1.samples.row(i).tail(data->traj1.size() - a1);
    const auto r2 = data->traj2.samples.row(i).tail(data->traj2.size() - a1);
    data->box_lo[i] = std::min(r1.minCoeff(), r2.minCoeff());
    data->box_hi[i] = std::max(r1.maxCoeff(), r2.maxCoeff());
  }
  data->box_diag = (data->box_hi - data->box_lo).norm();

  std::lock_guard<std::mutex> lock(g_case_mutex);
  auto [it, inserted] = g_case_cache.emplace(key, std::move(data));
  return it->second;
}

namespace {

struct ListenOutcome {
  GramBlocks grams;
  Eigen::VectorXd r_end;
};

// Batched listen over [0, t_train] with per-lane Gram accumulation from
// t_listen on. One code path for every pipeline, so cached and cache-free
// runs agree bit for bit.
std::vector<ListenOutcome> listen_harvest_batch(const ReservoirConfig& cfg,
                                                const ReservoirMatrices& mat,
                                                const std::vector<const TimeSeries*>& inputs) {
  const int lanes = static_cast<int>(inputs.size());
  ReservoirBatch batch(cfg, mat, lanes);
  batch.set_inputs(inputs);
  const auto first = static_cast<Eigen::Index>(std::llround(cfg.t_listen / cfg.tau));
  const auto steps = static_cast<Eigen::Index>(std::llround(cfg.t_train / cfg.tau));

  std::vector<GramAccumulator> accs;
  accs.reserve(static_cast<size_t>(lanes));
  for (int l = 0; l < lanes; ++l) accs.emplace_back(cfg.feature_dim(), cfg.dim_in);

  Eigen::VectorXd r(cfg.n_neurons);
  for (Eigen::Index k = 0; k <= steps; ++k) {
    if (k > 0) batch.step(static_cast<double>(k - 1) * cfg.tau);
    if (k >= first)
      for (int l = 0; l < lanes; ++l) {
        batch.extract_lane(l, r);
        accs[static_cast<size_t>(l)].add(r, inputs[static_cast<size_t>(l)]->samples.col(k));
      }
  }
  std::vector<ListenOutcome> out(static_cast<size_t>(lanes));
  for (int l = 0; l < lanes; ++l) {
    out[static_cast<size_t>(l)].grams = accs[static_cast<size_t>(l)].finish();
    batch.extract_lane(l, out[static_cast<size_t>(l)].r_end);
  }
  return out;
}

void fill_provenance(Readout& r, const ReservoirConfig& cfg, const std::string& kind,
                     double alpha) {
  r.prov.kind = kind;
  r.prov.alpha = alpha;
  r.prov.rho = cfg.rho;
  r.prov.sigma = cfg.sigma;
  r.prov.seed = cfg.seed;
}

}  // namespace

TaskTraining train_task(const AttractorSpec& spec, const ReservoirConfig& cfg,
                        const ReservoirMatrices& mat, bool streaming) {
  cfg.validate();
  const TimeSeries src = spec.trajectory(0.0, cfg.t_train, cfg.tau);
  TaskTraining out;
  if (streaming) {
    auto lo = listen_harvest_batch(cfg, mat, {&src});
    out.grams = std::move(lo.front().grams);
    out.r_end = std::move(lo.front().r_end);
    out.readout = ridge_solve_from_grams(out.grams, cfg.beta_reg);
  } else {
    const ReservoirTrajectory traj =
        listen(cfg, mat, src, Eigen::VectorXd::Zero(cfg.n_neurons), cfg.t_listen, cfg.t_train);
    out.r_end = traj.states.col(traj.size() - 1);
    const TrainingSet ts = harvest(traj, src, cfg.t_listen, cfg.t_train);
    out.grams = grams_of(ts);
    out.readout = ridge_solve_from_grams(out.grams, cfg.beta_reg);
  }
  fill_provenance(out.readout, cfg, "task:" + spec.name, -1.0);
  return out;
}

BlendedTraining train_blended(const AttractorSpec& s1, const AttractorSpec& s2, double alpha,
                              const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                              bool streaming) {
  cfg.validate();
  if (alpha < 0.0 || alpha > 1.0) throw ValidationError("train_blended: alpha must be in [0,1]");
  const TimeSeries src1 = s1.trajectory(0.0, cfg.t_train, cfg.tau);
  const TimeSeries src2 = s2.trajectory(0.0, cfg.t_train, cfg.tau);

  BlendedTraining out;
  if (streaming) {
    auto lo = listen_harvest_batch(cfg, mat, {&src1, &src2});
    out.r_end_1 = std::move(lo[0].r_end);
    out.r_end_2 = std::move(lo[1].r_end);
    out.readout = ridge_solve_from_grams(blend_grams(lo[0].grams, lo[1].grams, alpha),
                                         cfg.beta_reg);
  } else {
    ReservoirBatch batch(cfg, mat, 2);
    batch.set_inputs({&src1, &src2});
    const auto first = static_cast<Eigen::Index>(std::llround(cfg.t_listen / cfg.tau));
    const auto steps = static_cast<Eigen::Index>(std::llround(cfg.t_train / cfg.tau));
    ReservoirTrajectory tr1, tr2;
    tr1.t0 = tr2.t0 = cfg.t_listen;
    tr1.dt = tr2.dt = cfg.tau;
    tr1.states.resize(cfg.n_neurons, steps - first + 1);
    tr2.states.resize(cfg.n_neurons, steps - first + 1);
    Eigen::VectorXd r(cfg.n_neurons);
    for (Eigen::Index k = 0; k <= steps; ++k) {
      if (k > 0) batch.step(static_cast<double>(k - 1) * cfg.tau);
      if (k >= first) {
        batch.extract_lane(0, r);
        tr1.states.col(k - first) = r;
        batch.extract_lane(1, r);
        tr2.states.col(k - first) = r;
      }
    }
    batch.extract_lane(0, out.r_end_1);
    batch.extract_lane(1, out.r_end_2);
    const TrainingSet ts1 = harvest(tr1, src1, cfg.t_listen, cfg.t_train);
    const TrainingSet ts2 = harvest(tr2, src2, cfg.t_listen, cfg.t_train);
    const TrainingSet blended =
        blend(ts1, ts2, alpha, rng::derive_seed(cfg.seed, "blend-shuffle"));
    out.readout = ridge_solve(blended, cfg.beta_reg);
  }
  fill_provenance(out.readout, cfg, "blended", alpha);
  return out;
}

Readout RhoContext::solve_alpha(double alpha) const {
  Readout r = ridge_solve_from_grams(blend_grams(grams1, grams2, alpha), cfg.beta_reg);
  fill_provenance(r, cfg, "blended", alpha);
  r.prov.case_id = to_string(data->def.id);
  return r;
}

Readout RhoContext::solve_task(int source) const {
  if (source != 1 && source != 2) throw ValidationError("solve_task: source must be 1 or 2");
  const GramBlocks& gb = source == 1 ? grams1 : grams2;
  Readout r = ridge_solve_from_grams(gb, cfg.beta_reg);
  fill_provenance(r, cfg, "task:" + (source == 1 ? data->def.s1.name : data->def.s2.name), -1.0);
  r.prov.case_id = to_string(data->def.id);
  return r;
}

void listen_and_harvest(RhoContext& ctx) {
  const TimeSeries src1 = ctx.data->traj1.segment(0.0, ctx.cfg.t_train);
  const TimeSeries src2 = ctx.data->traj2.segment(0.0, ctx.cfg.t_train);
  auto lo = listen_harvest_batch(ctx.cfg, ctx.mat, {&src1, &src2});
  ctx.grams1 = std::move(lo[0].grams);
  ctx.grams2 = std::move(lo[1].grams);
  ctx.r_end_1 = std::move(lo[0].r_end);
  ctx.r_end_2 = std::move(lo[1].r_end);
}

std::shared_ptr<const RhoContext> build_rho_context(const CaseDef& def,
                                                    const ReservoirConfig& cfg) {
  auto ctx = std::make_shared<RhoContext>();
  ctx->cfg = cfg;
  ctx->cfg.sigma = def.sigma;
  ctx->data = case_data(def, ctx->cfg);
  ctx->mat = MatrixFactory::build(ctx->cfg);
  listen_and_harvest(*ctx);
  return ctx;
}

SensitivityReport readout_sensitivity(const CaseDef& def, const ReservoirConfig& cfg_in,
                                      double alpha, double rho, double h) {
  if (h < 0.0 || alpha + h > 1.0)
    throw ValidationError("readout_sensitivity: need h >= 0 with alpha + h <= 1");
  ReservoirConfig cfg = cfg_in;
  cfg.rho = rho;
  auto ctx = build_rho_context(def, cfg);
  const Eigen::MatrixXd w0 = ctx->solve_alpha(alpha).w_out;
  const double wnorm = w0.norm();
  SensitivityReport rep;
  if (h == 0.0) return rep;

  const Eigen::MatrixXd wa = ctx->solve_alpha(alpha + h).w_out;
  rep.d_alpha = (wa - w0).norm() / wnorm;

  ReservoirConfig cfg_h = cfg;
  cfg_h.rho = rho + h;
  auto ctx_h = build_rho_context(def, cfg_h);
  const Eigen::MatrixXd wr = ctx_h->solve_alpha(alpha).w_out;
  rep.d_rho = (wr - w0).norm() / wnorm;
  return rep;
}

namespace {

struct RawDraw {
  SpMat raw;
  double lambda = 0.0;
};

std::mutex g_mat_mutex;
std::map<std::string, std::shared_ptr<const RawDraw>> g_mat_cache;

std::string mat_key(const ReservoirConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << cfg.seed << '|' << cfg.n_neurons << '|' << cfg.conn_prob;
  return os.str();
}

}  // namespace

ReservoirMatrices MatrixFactory::build(const ReservoirConfig& cfg) {
  cfg.validate();
  const std::string key = mat_key(cfg);
  std::shared_ptr<const RawDraw> draw;
  {
    std::lock_guard<std::mutex> lock(g_mat_mutex);
    auto it = g_mat_cache.find(key);
    if (it != g_mat_cache.end()) draw = it->second;
  }
  if (!draw) {
    // Same draw -> estimate -> rescale sequence as build_internal_matrix,
    // with the rho-independent part kept for reuse.
    auto d = std::make_shared<RawDraw>();
    for (int attempt = 0; attempt < 3; ++attempt) {
      rng::Engine eng(rng::derive_seed(cfg.seed, "internal-matrix", static_cast<uint64_t>(attempt)));
      std::vector<Eigen::Triplet<double>> trips;
      for (Eigen::Index i = 0; i < cfg.n_neurons; ++i)
        for (Eigen::Index j = 0; j < cfg.n_neurons; ++j)
          if (eng.bernoulli(cfg.conn_prob)) trips.emplace_back(i, j, eng.uniform(-1.0, 1.0));
      d->raw.resize(cfg.n_neurons, cfg.n_neurons);
      d->raw.setFromTriplets(trips.begin(), trips.end());
      d->raw.makeCompressed();
      if (d->raw.nonZeros() == 0) continue;
      d->lambda = spectral_radius(d->raw);
      if (d->lambda >= 1e-12) break;
    }
    if (d->lambda < 1e-12)
      throw NumericError("build_internal_matrix",
                         "degenerate draw (zero spectral radius) after 3 attempts");
    std::lock_guard<std::mutex> lock(g_mat_mutex);
    auto [it, inserted] = g_mat_cache.emplace(key, std::move(d));
    draw = it->second;
  }
  ReservoirMatrices mat;
  mat.m = draw->raw * (cfg.rho / draw->lambda);
  mat.m.makeCompressed();
  mat.w_in = build_input_matrix(cfg);
  mat.seed = cfg.seed;
  mat.rho = cfg.rho;
  return mat;
}

void MatrixFactory::clear() {
  std::lock_guard<std::mutex> lock(g_mat_mutex);
  g_mat_cache.clear();
}

}  // namespace mfrc
