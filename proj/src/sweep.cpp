#include "mfrc/sweep.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

#include "mfrc/reservoir_batch.hpp"

namespace mfrc {

std::vector<double> AxisSpec::values() const {
  if (!(step > 0.0)) throw ValidationError("axis: step must be > 0");
  if (hi < lo) throw ValidationError("axis: empty range");
  std::vector<double> v;
  const auto n = static_cast<Eigen::Index>(std::floor((hi - lo) / step + 1e-9));
  for (Eigen::Index i = 0; i <= n; ++i) v.push_back(lo + static_cast<double>(i) * step);
  return v;
}

AxisSpec parse_axis(const std::string& s) {
  AxisSpec ax;
  const auto p1 = s.find(':');
  const auto p2 = s.find(':', p1 + 1);
  if (p1 == std::string::npos || p2 == std::string::npos)
    throw ValidationError("axis '" + s + "' is not of the form lo:hi:step");
  try {
    ax.lo = std::stod(s.substr(0, p1));
    ax.hi = std::stod(s.substr(p1 + 1, p2 - p1 - 1));
    ax.step = std::stod(s.substr(p2 + 1));
  } catch (const std::exception&) {
    throw ValidationError("axis '" + s + "' has non-numeric fields");
  }
  return ax;
}

void GridSpec::validate() const {
  config.validate();
  const auto a = alphas.values();
  if (a.front() < 0.0 || a.back() > 1.0 + 1e-12)
    throw ValidationError("grid: alpha range must lie in [0, 1]");
  (void)rhos.values();
  if (!deltas.values().empty() && case_id != CaseId::I)
    throw ValidationError("grid: timescale sweeps are defined for Case I only");
}

int resolve_workers(int requested) {
  if (const char* env = std::getenv("MFRC_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void run_indexed(Eigen::Index n, int workers, const std::function<void(Eigen::Index)>& fn) {
  if (n <= 0) return;
  workers = std::max(1, std::min(workers, static_cast<int>(n)));
  if (workers <= 1) {
    for (Eigen::Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<Eigen::Index> next{0};
  std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (;;) {
          const Eigen::Index i = next.fetch_add(1);
          if (i >= n) break;
          fn(i);
        }
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

struct CellTask {
  size_t i_rho, j_alpha;
  int ic;  // 1 or 2
};

// Classify one batch of closed-loop predictions that share a rho context.
// The batch composition (order of tasks) is fixed by the grid alone.
void classify_batch(const RhoContext& ctx, const std::vector<Readout>& readouts,
                    const std::vector<CellTask>& tasks, LabelGrid& g1, LabelGrid& g2) {
  const ReservoirConfig& cfg = ctx.cfg;
  const int lanes = static_cast<int>(tasks.size());
  ReservoirBatch batch(cfg, ctx.mat, lanes);
  std::vector<const Eigen::MatrixXd*> ws;
  ws.reserve(tasks.size());
  for (const CellTask& t : tasks) ws.push_back(&readouts[t.j_alpha].w_out);
  batch.set_readouts(ws);
  for (int l = 0; l < lanes; ++l)
    batch.set_state(l, tasks[static_cast<size_t>(l)].ic == 1 ? ctx.r_end_1 : ctx.r_end_2);

  const auto steps = static_cast<Eigen::Index>(std::llround(cfg.t_predict / cfg.tau));
  std::vector<TimeSeries> preds(tasks.size());
  for (auto& p : preds) {
    p.t0 = 0.0;
    p.dt = cfg.tau;
    p.samples.resize(cfg.dim_in, steps + 1);
  }
  RowMat u(cfg.dim_in, lanes);
  std::vector<bool> dead(tasks.size(), false);
  batch.readout_now(u);
  for (int l = 0; l < lanes; ++l) preds[static_cast<size_t>(l)].samples.col(0) = u.col(l);
  for (Eigen::Index k = 0; k < steps; ++k) {
    try {
      batch.step(static_cast<double>(k) * cfg.tau);
    } catch (const NumericError&) {
      // tanh keeps single runs bounded; a blow-up here would poison the whole
      // batch, so record it for every lane and stop.
      for (size_t l = 0; l < tasks.size(); ++l) dead[l] = true;
      break;
    }
    batch.readout_now(u);
    for (int l = 0; l < lanes; ++l) preds[static_cast<size_t>(l)].samples.col(k + 1) = u.col(l);
  }

  for (size_t l = 0; l < tasks.size(); ++l) {
    const CellTask& t = tasks[l];
    LabelGrid& g = t.ic == 1 ? g1 : g2;
    CellResult& cell = g.cells[t.i_rho * g.alphas.size() + t.j_alpha];
    if (dead[l]) {
      cell.failed = true;
      cell.error = "integration failure";
      cell.label.kind = Behavior::Unclassified;
      continue;
    }
    const TimeSeries& own = t.ic == 1 ? ctx.data->target1 : ctx.data->target2;
    const TimeSeries& other = t.ic == 1 ? ctx.data->target2 : ctx.data->target1;
    ClassifyOptions copt;
    copt.delta = cfg.delta_thresh;
    try {
      cell.label = classify(preds[l], own, other, copt);
    } catch (const Error& e) {
      cell.failed = true;
      cell.error = e.what();
      cell.label.kind = Behavior::Unclassified;
    }
  }
}

constexpr int kPredictBatch = 8;

}  // namespace

std::pair<LabelGrid, LabelGrid> sweep_alpha_rho(const GridSpec& spec) {
  spec.validate();
  const std::vector<double> rhos = spec.rhos.values();
  const std::vector<double> alphas = spec.alphas.values();
  const int workers = resolve_workers(spec.workers);

  LabelGrid g1, g2;
  g1.rhos = g2.rhos = rhos;
  g1.alphas = g2.alphas = alphas;
  g1.cells.assign(rhos.size() * alphas.size(), {});
  g2.cells.assign(rhos.size() * alphas.size(), {});

  // Phase 1: one context per rho (matrices, listens, Gram blocks).
  std::vector<std::shared_ptr<const RhoContext>> contexts(rhos.size());
  const CaseDef def = case_def(spec.case_id);
  run_indexed(static_cast<Eigen::Index>(rhos.size()), workers, [&](Eigen::Index i) {
    ReservoirConfig cfg = spec.config;
    cfg.rho = rhos[static_cast<size_t>(i)];
    contexts[static_cast<size_t>(i)] = build_rho_context(def, cfg);
  });

  // Phase 2: per rho, solve all alphas, then classify predictions in fixed
  // batches of kPredictBatch lanes.
  struct BatchItem {
    size_t i_rho;
    std::vector<CellTask> tasks;
  };
  std::vector<std::vector<Readout>> readouts(rhos.size());
  run_indexed(static_cast<Eigen::Index>(rhos.size()), workers, [&](Eigen::Index i) {
    auto& rs = readouts[static_cast<size_t>(i)];
    rs.reserve(alphas.size());
    for (double a : alphas) rs.push_back(contexts[static_cast<size_t>(i)]->solve_alpha(a));
  });

  std::vector<BatchItem> batches;
  for (size_t i = 0; i < rhos.size(); ++i) {
    std::vector<CellTask> pending;
    for (size_t j = 0; j < alphas.size(); ++j)
      for (int ic : {1, 2}) pending.push_back({i, j, ic});
    for (size_t off = 0; off < pending.size(); off += kPredictBatch) {
      BatchItem item;
      item.i_rho = i;
      for (size_t k = off; k < std::min(off + kPredictBatch, pending.size()); ++k)
        item.tasks.push_back(pending[k]);
      batches.push_back(std::move(item));
    }
  }
  run_indexed(static_cast<Eigen::Index>(batches.size()), workers, [&](Eigen::Index b) {
    const BatchItem& item = batches[static_cast<size_t>(b)];
    classify_batch(*contexts[item.i_rho], readouts[item.i_rho], item.tasks, g1, g2);
  });
  return {std::move(g1), std::move(g2)};
}

std::vector<uint8_t> multifunctional_region(const LabelGrid& g1, const LabelGrid& g2) {
  if (g1.rhos.size() != g2.rhos.size() || g1.alphas.size() != g2.alphas.size())
    throw ValidationError("multifunctional_region: grid dimensions differ");
  std::vector<uint8_t> mask(g1.cells.size(), 0);
  for (size_t i = 0; i < g1.cells.size(); ++i)
    mask[i] = g1.cells[i].label.kind == Behavior::Reconstructed &&
              g2.cells[i].label.kind == Behavior::Reconstructed;
  return mask;
}

TimescaleResult sweep_timescale(const GridSpec& spec) {
  spec.validate();
  if (spec.case_id != CaseId::I)
    throw ValidationError("timescale sweep is defined for Case I only");
  const std::vector<double> deltas = spec.deltas.values();
  const std::vector<double> rhos = spec.rhos.values();
  if (deltas.empty()) throw ValidationError("timescale sweep: no delta values");
  const int workers = resolve_workers(spec.workers);
  const double alpha = spec.timescale_alpha;

  TimescaleResult res;
  res.deltas = deltas;
  res.rhos = rhos;
  res.mask.assign(deltas.size() * rhos.size(), 0);
  res.grid_ic1.rhos = res.grid_ic2.rhos = rhos;
  res.grid_ic1.alphas = res.grid_ic2.alphas = deltas;  // delta plays the column role
  res.grid_ic1.cells.assign(deltas.size() * rhos.size(), {});
  res.grid_ic2.cells.assign(deltas.size() * rhos.size(), {});

  // Per rho: one batched listen over all delta variants of A1 plus A2
  // (A2's listen is delta-independent), then one context per delta sharing
  // the A2 Gram blocks.
  run_indexed(static_cast<Eigen::Index>(rhos.size()), workers, [&](Eigen::Index jr) {
    const auto j_rho = static_cast<size_t>(jr);
    ReservoirConfig cfg = spec.config;
    cfg.rho = rhos[j_rho];
    std::vector<CaseDef> defs;
    std::vector<std::shared_ptr<const CaseData>> datas;
    std::vector<TimeSeries> srcs;
    cfg.sigma = case_def(CaseId::I).sigma;
    for (double d : deltas) {
      defs.push_back(case_def(CaseId::I, d));
      datas.push_back(case_data(defs.back(), cfg));
      srcs.push_back(datas.back()->traj1.segment(0.0, cfg.t_train));
    }
    srcs.push_back(datas.front()->traj2.segment(0.0, cfg.t_train));  // A2 once

    const ReservoirMatrices mat = MatrixFactory::build(cfg);
    std::vector<const TimeSeries*> inputs;
    for (const TimeSeries& s : srcs) inputs.push_back(&s);
    ReservoirBatch batch(cfg, mat, static_cast<int>(inputs.size()));
    batch.set_inputs(inputs);
    const auto first = static_cast<Eigen::Index>(std::llround(cfg.t_listen / cfg.tau));
    const auto steps = static_cast<Eigen::Index>(std::llround(cfg.t_train / cfg.tau));
    std::vector<GramAccumulator> accs;
    for (size_t l = 0; l < inputs.size(); ++l)
      accs.emplace_back(cfg.feature_dim(), cfg.dim_in);
    Eigen::VectorXd r(cfg.n_neurons);
    for (Eigen::Index k = 0; k <= steps; ++k) {
      if (k > 0) batch.step(static_cast<double>(k - 1) * cfg.tau);
      if (k >= first)
        for (size_t l = 0; l < inputs.size(); ++l) {
          batch.extract_lane(static_cast<int>(l), r);
          accs[l].add(r, inputs[l]->samples.col(k));
        }
    }
    GramBlocks grams_a2 = accs.back().finish();
    Eigen::VectorXd r_end_a2;
    batch.extract_lane(static_cast<int>(inputs.size()) - 1, r_end_a2);

    for (size_t i_delta = 0; i_delta < deltas.size(); ++i_delta) {
      RhoContext ctx;
      ctx.cfg = cfg;
      ctx.data = datas[i_delta];
      ctx.mat = mat;
      ctx.grams1 = accs[i_delta].finish();
      ctx.grams2 = grams_a2;
      batch.extract_lane(static_cast<int>(i_delta), ctx.r_end_1);
      ctx.r_end_2 = r_end_a2;

      std::vector<Readout> rs(deltas.size());
      rs[i_delta] = ctx.solve_alpha(alpha);
      std::vector<CellTask> tasks{{j_rho, i_delta, 1}, {j_rho, i_delta, 2}};
      classify_batch(ctx, rs, tasks, res.grid_ic1, res.grid_ic2);

      const auto& l1 = res.grid_ic1.at(j_rho, i_delta).label.kind;
      const auto& l2 = res.grid_ic2.at(j_rho, i_delta).label.kind;
      res.mask[i_delta * rhos.size() + j_rho] =
          l1 == Behavior::Reconstructed && l2 == Behavior::Reconstructed;
    }
  });
  return res;
}

std::vector<TimeSeries> batch_predict_uhat(const ReservoirConfig& cfg,
                                           const ReservoirMatrices& mat,
                                           const std::vector<const Eigen::MatrixXd*>& readouts,
                                           const std::vector<const Eigen::VectorXd*>& r0s,
                                           double horizon, int workers) {
  if (readouts.size() != r0s.size())
    throw ValidationError("batch_predict: readout/state counts differ");
  const size_t n = readouts.size();
  const auto steps = static_cast<Eigen::Index>(std::llround(horizon / cfg.tau));
  std::vector<TimeSeries> preds(n);
  const size_t n_groups = (n + kPredictBatch - 1) / kPredictBatch;
  run_indexed(static_cast<Eigen::Index>(n_groups), workers, [&](Eigen::Index g) {
    const size_t off = static_cast<size_t>(g) * kPredictBatch;
    const size_t lanes = std::min<size_t>(kPredictBatch, n - off);
    ReservoirBatch batch(cfg, mat, static_cast<int>(lanes));
    std::vector<const Eigen::MatrixXd*> ws(readouts.begin() + static_cast<long>(off),
                                           readouts.begin() + static_cast<long>(off + lanes));
    batch.set_readouts(ws);
    for (size_t l = 0; l < lanes; ++l)
      batch.set_state(static_cast<int>(l), *r0s[off + l]);
    for (size_t l = 0; l < lanes; ++l) {
      preds[off + l].t0 = 0.0;
      preds[off + l].dt = cfg.tau;
      preds[off + l].samples.resize(cfg.dim_in, steps + 1);
    }
    RowMat u(cfg.dim_in, static_cast<int>(lanes));
    batch.readout_now(u);
    for (size_t l = 0; l < lanes; ++l) preds[off + l].samples.col(0) = u.col(static_cast<int>(l));
    for (Eigen::Index k = 0; k < steps; ++k) {
      batch.step(static_cast<double>(k) * cfg.tau);
      batch.readout_now(u);
      for (size_t l = 0; l < lanes; ++l)
        preds[off + l].samples.col(k + 1) = u.col(static_cast<int>(l));
    }
  });
  return preds;
}

EpsilonCurves sweep_alpha_error(CaseId case_id, double rho, const AxisSpec& alphas,
                                const ReservoirConfig& cfg_in, int workers) {
  ReservoirConfig cfg = cfg_in;
  cfg.rho = rho;
  auto ctx = build_rho_context(case_def(case_id), cfg);
  const std::vector<double> avals = alphas.values();
  const int nw = resolve_workers(workers);
  const double horizon = ctx->cfg.t_predict;
  const double t_star = ctx->cfg.t_star;

  // task-specific baselines followed by the blended readouts, for both ICs
  const Readout w1 = ctx->solve_task(1);
  const Readout w2 = ctx->solve_task(2);
  std::vector<Readout> rs(avals.size());
  for (size_t j = 0; j < avals.size(); ++j) rs[j] = ctx->solve_alpha(avals[j]);

  std::vector<const Eigen::MatrixXd*> readouts;
  std::vector<const Eigen::VectorXd*> ics;
  readouts.push_back(&w1.w_out);
  ics.push_back(&ctx->r_end_1);
  readouts.push_back(&w2.w_out);
  ics.push_back(&ctx->r_end_2);
  for (const Readout& r : rs) {
    readouts.push_back(&r.w_out);
    ics.push_back(&ctx->r_end_1);
    readouts.push_back(&r.w_out);
    ics.push_back(&ctx->r_end_2);
  }
  const std::vector<TimeSeries> preds =
      batch_predict_uhat(ctx->cfg, ctx->mat, readouts, ics, horizon, nw);

  auto theta_of = [&](const TimeSeries& pred, int source) {
    const TimeSeries& target = source == 1 ? ctx->data->target1 : ctx->data->target2;
    return nrmse(pred, target, t_star, horizon).avg;
  };

  EpsilonCurves curves;
  curves.alphas = avals;
  curves.eps_s1.assign(avals.size(), 0.0);
  curves.eps_s2.assign(avals.size(), 0.0);
  curves.theta_task_1 = theta_of(preds[0], 1);
  curves.theta_task_2 = theta_of(preds[1], 2);
  for (size_t j = 0; j < avals.size(); ++j) {
    curves.eps_s1[j] = epsilon_ratio(theta_of(preds[2 + 2 * j], 1), curves.theta_task_1);
    curves.eps_s2[j] = epsilon_ratio(theta_of(preds[2 + 2 * j + 1], 2), curves.theta_task_2);
  }
  return curves;
}

}  // namespace mfrc
