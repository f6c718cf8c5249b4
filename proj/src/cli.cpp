#include "mfrc/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "mfrc/io.hpp"
#include "mfrc/version.hpp"

namespace mfrc {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct CliOptions {
  std::string config_file;
  std::string case_id = "I";
  std::string out_dir = "out";
  ReservoirConfig cfg;
  double alpha = 0.5;
  std::string alpha_range = "0:1:0.02";
  std::string rho_range = "0.1:1.1:0.05";
  std::string delta_range;
  int workers = 0;
  bool streaming = false;
};

json config_echo(const CliOptions& opt) {
  const ReservoirConfig& c = opt.cfg;
  return json{{"case", opt.case_id},
              {"out", opt.out_dir},
              {"workers", opt.workers},
              {"alpha", opt.alpha},
              {"alpha_range", opt.alpha_range},
              {"rho_range", opt.rho_range},
              {"delta_range", opt.delta_range},
              {"reservoir",
               {{"N", c.n_neurons},
                {"D", c.dim_in},
                {"gamma", c.gamma},
                {"rho", c.rho},
                {"sigma", c.sigma},
                {"P", c.conn_prob},
                {"tau", c.tau},
                {"t_listen", c.t_listen},
                {"t_train", c.t_train},
                {"t_predict", c.t_predict},
                {"t_star", c.t_star},
                {"delta_thresh", c.delta_thresh},
                {"beta", c.beta_reg},
                {"seed", c.seed}}}};
}

void apply_config_file(CliOptions& opt) {
  if (opt.config_file.empty()) return;
  std::ifstream f(opt.config_file);
  if (!f) throw ValidationError("cannot open config file " + opt.config_file);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ValidationError("config file " + opt.config_file + ": " + e.what());
  }
  auto get = [&](const json& obj, const char* key, auto& target) {
    if (obj.contains(key)) target = obj.at(key).get<std::decay_t<decltype(target)>>();
  };
  get(j, "case", opt.case_id);
  get(j, "out", opt.out_dir);
  get(j, "workers", opt.workers);
  get(j, "alpha", opt.alpha);
  get(j, "alpha_range", opt.alpha_range);
  get(j, "rho_range", opt.rho_range);
  get(j, "delta_range", opt.delta_range);
  if (j.contains("reservoir")) {
    const json& r = j.at("reservoir");
    ReservoirConfig& c = opt.cfg;
    get(r, "N", c.n_neurons);
    get(r, "D", c.dim_in);
    get(r, "gamma", c.gamma);
    get(r, "rho", c.rho);
    get(r, "sigma", c.sigma);
    get(r, "P", c.conn_prob);
    get(r, "tau", c.tau);
    get(r, "t_listen", c.t_listen);
    get(r, "t_train", c.t_train);
    get(r, "t_predict", c.t_predict);
    get(r, "t_star", c.t_star);
    get(r, "delta_thresh", c.delta_thresh);
    get(r, "beta", c.beta_reg);
    get(r, "seed", c.seed);
  }
}

// Case definition honoring a CLI sigma override (nonzero means explicit).
CaseDef make_case(const CliOptions& opt, double sigma_override, double delta_a1 = 1.0) {
  CaseDef def = case_def(parse_case(opt.case_id), delta_a1);
  if (sigma_override > 0.0) def.sigma = sigma_override;
  return def;
}

struct MetaWriter {
  fs::path dir;
  json meta;
  Clock::time_point start = Clock::now();

  MetaWriter(const CliOptions& opt, const std::string& command) : dir(opt.out_dir) {
    fs::create_directories(dir);
    meta["command"] = command;
    meta["version"] = kVersion;
    meta["config"] = config_echo(opt);
    meta["seed"] = opt.cfg.seed;
  }
  void add_matrix_hashes(const ReservoirMatrices& mat) {
    meta["m_sha256"] = io::matrix_hash(mat.m);
    meta["w_in_sha256"] = io::matrix_hash(mat.w_in);
  }
  void finish() {
    meta["wall_time_s"] = std::chrono::duration<double>(Clock::now() - start).count();
    io::write_text(dir / "meta.json", meta.dump(2) + "\n");
  }
};

const AttractorSpec& pick_source(const CaseDef& def, int ic) {
  if (ic == 1) return def.s1;
  if (ic == 2) return def.s2;
  throw ValidationError("--ic must be 1 or 2");
}

int cmd_generate_data(const CliOptions& opt, const std::string& attractor, double t1,
                      double delta_a1) {
  MetaWriter meta(opt, "generate-data");
  CaseDef def = case_def(CaseId::I, delta_a1);
  AttractorSpec spec;
  if (attractor == "A1") spec = def.s1;
  else if (attractor == "A2") spec = def.s2;
  else if (attractor == "B1") spec = case_def(CaseId::II).s1;
  else if (attractor == "L") spec = case_def(CaseId::III).s1;
  else throw ValidationError("unknown attractor '" + attractor + "' (A1, A2, B1, L)");
  const TimeSeries ts = spec.trajectory(0.0, t1, opt.cfg.tau);
  io::write_timeseries_csv(meta.dir / (attractor + ".csv"), ts);
  meta.meta["outputs"] = {attractor + ".csv"};
  meta.finish();
  return 0;
}

int cmd_train(const CliOptions& opt, int task_source, double sigma_override) {
  MetaWriter meta(opt, "train");
  const CaseDef def = make_case(opt, sigma_override);
  ReservoirConfig cfg = opt.cfg;
  cfg.sigma = def.sigma;
  const ReservoirMatrices mat = MatrixFactory::build(cfg);
  meta.add_matrix_hashes(mat);
  Readout readout;
  if (task_source > 0) {
    readout = train_task(pick_source(def, task_source), cfg, mat, opt.streaming).readout;
  } else {
    readout = train_blended(def.s1, def.s2, opt.alpha, cfg, mat, opt.streaming).readout;
  }
  readout.prov.case_id = to_string(def.id);
  io::write_readout(meta.dir / "readout.csv", readout, mat);
  meta.meta["outputs"] = {"readout.csv", "readout.json"};
  meta.finish();
  return 0;
}

int cmd_predict_or_classify(const CliOptions& opt, int ic, double sigma_override,
                            bool do_classify) {
  MetaWriter meta(opt, do_classify ? "classify" : "predict");
  const CaseDef def = make_case(opt, sigma_override);
  ReservoirConfig cfg = opt.cfg;
  cfg.sigma = def.sigma;
  auto ctx = build_rho_context(def, cfg);
  meta.add_matrix_hashes(ctx->mat);
  const Readout readout = ctx->solve_alpha(opt.alpha);
  const Eigen::VectorXd& r0 = ic == 1 ? ctx->r_end_1 : ctx->r_end_2;
  const PredictResult pr = predict(ctx->cfg, ctx->mat, readout.w_out, r0, cfg.t_predict);
  if (do_classify) {
    const TimeSeries& own = ic == 1 ? ctx->data->target1 : ctx->data->target2;
    const TimeSeries& other = ic == 1 ? ctx->data->target2 : ctx->data->target1;
    ClassifyOptions copt;
    copt.delta = cfg.delta_thresh;
    const BehaviorLabel label = classify(pr.u_hat, own, other, copt);
    std::ostringstream os;
    os << io::classification_header() << "\n"
       << io::classification_row(opt.alpha, cfg.rho, ic == 1 ? def.s1.name : def.s2.name, label)
       << "\n";
    io::write_text(meta.dir / "classification.csv", os.str());
    meta.meta["outputs"] = {"classification.csv"};
    std::cout << to_string(label.kind) << "\n";
  } else {
    io::write_timeseries_csv(meta.dir / "prediction.csv", pr.u_hat);
    meta.meta["outputs"] = {"prediction.csv"};
  }
  meta.finish();
  return 0;
}

int cmd_sweep(const CliOptions& opt, double sigma_override) {
  MetaWriter meta(opt, "sweep");
  GridSpec spec;
  spec.case_id = parse_case(opt.case_id);
  spec.alphas = parse_axis(opt.alpha_range);
  spec.rhos = parse_axis(opt.rho_range);
  spec.config = opt.cfg;
  if (sigma_override > 0.0) spec.config.sigma = sigma_override;
  spec.workers = opt.workers;
  auto [g1, g2] = sweep_alpha_rho(spec);
  const auto mask = multifunctional_region(g1, g2);
  const CaseDef def = case_def(spec.case_id);
  io::write_label_grid(meta.dir / "grid_ic1.csv", g1, def.s1.name);
  io::write_label_grid(meta.dir / "grid_ic2.csv", g2, def.s2.name);
  io::write_mask(meta.dir / "mf_mask.csv", g1.rhos, g1.alphas, mask);
  meta.meta["outputs"] = {"grid_ic1.csv", "grid_ic2.csv", "mf_mask.csv"};
  meta.finish();
  return 0;
}

int cmd_timescale(const CliOptions& opt, double sigma_override) {
  MetaWriter meta(opt, "timescale-sweep");
  GridSpec spec;
  spec.case_id = parse_case(opt.case_id);
  if (spec.case_id != CaseId::I) throw ValidationError("timescale-sweep requires --case I");
  if (opt.delta_range.empty()) throw ValidationError("timescale-sweep requires --delta-range");
  spec.deltas = parse_axis(opt.delta_range);
  spec.rhos = parse_axis(opt.rho_range);
  spec.timescale_alpha = opt.alpha;
  spec.config = opt.cfg;
  if (sigma_override > 0.0) spec.config.sigma = sigma_override;
  spec.workers = opt.workers;
  const TimescaleResult res = sweep_timescale(spec);
  io::write_mask(meta.dir / "mf_mask.csv", res.rhos, res.deltas, res.mask, true);
  io::write_label_grid(meta.dir / "grid_ic1.csv", res.grid_ic1, "A1");
  io::write_label_grid(meta.dir / "grid_ic2.csv", res.grid_ic2, "A2");
  meta.meta["outputs"] = {"mf_mask.csv", "grid_ic1.csv", "grid_ic2.csv"};
  meta.finish();
  return 0;
}

int cmd_epsilon(const CliOptions& opt, double sigma_override) {
  MetaWriter meta(opt, "epsilon-curve");
  ReservoirConfig cfg = opt.cfg;
  const CaseDef def = make_case(opt, sigma_override);
  cfg.sigma = def.sigma;
  const EpsilonCurves curves = sweep_alpha_error(parse_case(opt.case_id), cfg.rho,
                                                 parse_axis(opt.alpha_range), cfg, opt.workers);
  std::ostringstream os;
  os << "alpha,eps_s1,eps_s2\n";
  for (size_t i = 0; i < curves.alphas.size(); ++i)
    os << io::fmt(curves.alphas[i]) << ',' << io::fmt(curves.eps_s1[i]) << ','
       << io::fmt(curves.eps_s2[i]) << "\n";
  io::write_text(meta.dir / "epsilon.csv", os.str());
  meta.meta["theta_task_1"] = curves.theta_task_1;
  meta.meta["theta_task_2"] = curves.theta_task_2;
  meta.meta["outputs"] = {"epsilon.csv"};
  meta.finish();
  return 0;
}

int cmd_detect(const CliOptions& opt, int n_ics, double sigma_override) {
  MetaWriter meta(opt, "detect-attractors");
  const CaseDef def = make_case(opt, sigma_override);
  ReservoirConfig cfg = opt.cfg;
  cfg.sigma = def.sigma;
  auto ctx = build_rho_context(def, cfg);
  meta.add_matrix_hashes(ctx->mat);
  const Readout readout = ctx->solve_alpha(opt.alpha);
  RicOptions ric;
  ric.n_ics = n_ics;
  int failures = 0;
  const auto attractors = find_untrained_attractors(readout, ctx->mat, ctx->cfg, *ctx->data,
                                                    ric, opt.workers, &failures);
  io::write_attractors(meta.dir / "attractors.csv", attractors);
  meta.meta["n_ics"] = n_ics;
  meta.meta["failures"] = failures;
  meta.meta["outputs"] = {"attractors.csv"};
  meta.finish();
  return 0;
}

int cmd_trace(const CliOptions& opt, double alpha_start, const std::string& direction,
              int attractor_index, int n_ics, double sigma_override) {
  MetaWriter meta(opt, "trace-branch");
  const CaseDef def = make_case(opt, sigma_override);
  ReservoirConfig cfg = opt.cfg;
  cfg.sigma = def.sigma;
  auto ctx = build_rho_context(def, cfg);
  meta.add_matrix_hashes(ctx->mat);
  const Readout readout = ctx->solve_alpha(alpha_start);
  RicOptions ric;
  ric.n_ics = n_ics;
  auto attractors = find_untrained_attractors(readout, ctx->mat, ctx->cfg, *ctx->data, ric,
                                              opt.workers);
  std::vector<AttractorSummary> fps;
  for (auto& a : attractors)
    if (a.cls == AttractorClass::FixedPoint) fps.push_back(a);
  if (attractor_index < 0 || attractor_index >= static_cast<int>(fps.size()))
    throw NumericError("trace-branch",
                       "no fixed point with index " + std::to_string(attractor_index) +
                           " found at alpha_start (found " + std::to_string(fps.size()) + ")");
  const int dir = direction == "up" ? 1 : -1;
  const Branch branch =
      continue_fixed_point_branch(*ctx, alpha_start, fps[static_cast<size_t>(attractor_index)], dir);
  io::write_branch(meta.dir / "branch.csv", branch);
  std::vector<BifurcationEvent> events = detect_period_doubling(branch);
  io::write_events(meta.dir / "events.csv", events);
  meta.meta["termination"] = to_string(branch.term);
  meta.meta["points"] = branch.points.size();
  meta.meta["outputs"] = {"branch.csv", "events.csv"};
  meta.finish();
  return 0;
}

int cmd_reproduce(const CliOptions& opt, const std::string& which, bool fast) {
  MetaWriter meta(opt, "reproduce " + which);
  std::ostringstream summary;
  int failures = 0;
  auto check = [&](const std::string& name, bool ok) {
    summary << (ok ? "PASS" : "FAIL") << ' ' << name << "\n";
    if (!ok) ++failures;
  };

  const CaseId cid = parse_case(which.substr(4));  // "caseI" -> "I"
  if (cid == CaseId::I) {
    CliOptions sub = opt;
    sub.case_id = "I";
    // Fig-5-style error curves at rho = 0.7
    ReservoirConfig cfg = sub.cfg;
    cfg.rho = 0.7;
    cfg.sigma = case_def(CaseId::I).sigma;
    const AxisSpec alpha_axis = fast ? AxisSpec{0.0, 1.0, 0.25} : AxisSpec{0.0, 1.0, 0.05};
    const EpsilonCurves curves =
        sweep_alpha_error(CaseId::I, 0.7, alpha_axis, cfg, sub.workers);
    std::ostringstream os;
    os << "alpha,eps_s1,eps_s2\n";
    for (size_t i = 0; i < curves.alphas.size(); ++i)
      os << io::fmt(curves.alphas[i]) << ',' << io::fmt(curves.eps_s1[i]) << ','
         << io::fmt(curves.eps_s2[i]) << "\n";
    io::write_text(meta.dir / "epsilon_rho0.7.csv", os.str());
    check("epsilon(alpha=1) of A1 equals 1 within 1e-9",
          std::abs(curves.eps_s1.back() - 1.0) < 1e-9);

    // Fig-8/9a-style coarse sweep
    GridSpec spec;
    spec.case_id = CaseId::I;
    spec.alphas = fast ? AxisSpec{0.0, 1.0, 0.25} : AxisSpec{0.0, 1.0, 0.1};
    spec.rhos = fast ? AxisSpec{0.1, 1.1, 0.25} : AxisSpec{0.1, 1.1, 0.1};
    spec.config = sub.cfg;
    spec.config.sigma = cfg.sigma;
    spec.workers = sub.workers;
    auto [g1, g2] = sweep_alpha_rho(spec);
    const auto mask = multifunctional_region(g1, g2);
    io::write_label_grid(meta.dir / "grid_ic1.csv", g1, "A1");
    io::write_label_grid(meta.dir / "grid_ic2.csv", g2, "A2");
    io::write_mask(meta.dir / "mf_mask.csv", g1.rhos, g1.alphas, mask);

    bool alpha0_fp = true;
    for (size_t i = 0; i < g1.rhos.size(); ++i)
      alpha0_fp &= g1.at(i, 0).label.kind == Behavior::FixedPoint;
    check("alpha=0 column (IC A1) is all FixedPoint", alpha0_fp);
    bool any_mf = false;
    for (uint8_t m : mask) any_mf |= m != 0;
    check("multifunctional mask is nonempty", any_mf);
  } else {
    // Cases II and III: the paper's working points
    const double alpha = cid == CaseId::II ? 0.5 : 0.65;
    const double rho = cid == CaseId::II ? 0.3 : 0.85;
    CliOptions sub = opt;
    sub.case_id = to_string(cid);
    ReservoirConfig cfg = sub.cfg;
    cfg.rho = rho;
    const CaseDef def = case_def(cid);
    cfg.sigma = def.sigma;
    auto ctx = build_rho_context(def, cfg);
    const Readout readout = ctx->solve_alpha(alpha);
    ClassifyOptions copt;
    copt.delta = cfg.delta_thresh;
    for (int ic : {1, 2}) {
      const PredictResult pr = predict(ctx->cfg, ctx->mat, readout.w_out,
                                       ic == 1 ? ctx->r_end_1 : ctx->r_end_2, cfg.t_predict);
      io::write_timeseries_csv(meta.dir / ("prediction_ic" + std::to_string(ic) + ".csv"),
                               pr.u_hat);
      const TimeSeries& own = ic == 1 ? ctx->data->target1 : ctx->data->target2;
      const TimeSeries& other = ic == 1 ? ctx->data->target2 : ctx->data->target1;
      const BehaviorLabel label = classify(pr.u_hat, own, other, copt);
      check((ic == 1 ? def.s1.name : def.s2.name) + " reconstructed at (alpha,rho)=(" +
                io::fmt(alpha) + "," + io::fmt(rho) + ")",
            label.kind == Behavior::Reconstructed);
    }
  }

  io::write_text(meta.dir / "summary.txt", summary.str());
  std::cout << summary.str();
  meta.meta["failures"] = failures;
  meta.finish();
  return failures == 0 ? 0 : 2;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"multifunctional reservoir computer experiments"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CliOptions opt;
  double sigma_override = 0.0;
  app.add_option("--config", opt.config_file, "JSON config file (flags override it)");
  app.add_option("--out", opt.out_dir, "output directory");
  app.add_option("--seed", opt.cfg.seed, "master RNG seed");
  app.add_option("--workers", opt.workers, "worker threads (MFRC_WORKERS overrides)");
  app.add_option("--case", opt.case_id, "training case: I, II or III");
  app.add_option("--rho", opt.cfg.rho, "spectral radius");
  app.add_option("--sigma", sigma_override, "input strength (default: the case's value)");
  app.add_option("--alpha", opt.alpha, "blending weight");
  app.add_option("--beta", opt.cfg.beta_reg, "ridge regularization");
  app.add_option("--n-neurons", opt.cfg.n_neurons, "reservoir size N");
  app.add_option("--t-predict", opt.cfg.t_predict, "prediction horizon");
  app.add_option("--t-star", opt.cfg.t_star, "error sampling window");
  app.add_flag("--streaming", opt.streaming, "stream Gram blocks instead of storing X");

  auto* gen = app.add_subcommand("generate-data", "integrate a source attractor to CSV");
  std::string attractor = "A1";
  double gen_t1 = 600.0, delta_a1 = 1.0;
  gen->add_option("--attractor", attractor, "A1, A2, B1 or L");
  gen->add_option("--t1", gen_t1, "end time");
  gen->add_option("--timescale", delta_a1, "timescale multiplier for A1");

  auto* train = app.add_subcommand("train", "train a task-specific or blended readout");
  int task_source = 0;
  train->add_option("--task", task_source, "1 or 2: task-specific for that source (else blended)");

  auto* predict_cmd = app.add_subcommand("predict", "closed-loop prediction to CSV");
  int ic = 1;
  predict_cmd->add_option("--ic", ic, "prediction initial condition: source 1 or 2");
  auto* classify_cmd = app.add_subcommand("classify", "classify a prediction's long-term behavior");
  classify_cmd->add_option("--ic", ic, "prediction initial condition: source 1 or 2");

  auto* sweep_cmd = app.add_subcommand("sweep", "(alpha, rho) grid classification");
  sweep_cmd->add_option("--alpha-range", opt.alpha_range, "lo:hi:step");
  sweep_cmd->add_option("--rho-range", opt.rho_range, "lo:hi:step");

  auto* ts_cmd = app.add_subcommand("timescale-sweep", "(Delta, rho) multifunctionality mask");
  ts_cmd->add_option("--delta-range", opt.delta_range, "lo:hi:step");
  ts_cmd->add_option("--rho-range", opt.rho_range, "lo:hi:step");

  auto* eps_cmd = app.add_subcommand("epsilon-curve", "error ratio vs alpha at fixed rho");
  eps_cmd->add_option("--alpha-range", opt.alpha_range, "lo:hi:step");

  auto* det_cmd = app.add_subcommand("detect-attractors", "random-IC attractor census");
  int n_ics = 1000;
  det_cmd->add_option("--n-ics", n_ics, "number of random initial conditions");

  auto* trace_cmd = app.add_subcommand("trace-branch", "continue a fixed-point branch in alpha");
  double alpha_start = 0.5;
  std::string direction = "up";
  int attractor_index = 0;
  int trace_ics = 200;
  trace_cmd->add_option("--alpha-start", alpha_start, "starting alpha");
  trace_cmd->add_option("--direction", direction, "up or down")
      ->check(CLI::IsMember({"up", "down"}));
  trace_cmd->add_option("--attractor-index", attractor_index, "which detected fixed point");
  trace_cmd->add_option("--n-ics", trace_ics, "RICs used to find the seed fixed point");

  auto* rep_cmd = app.add_subcommand("reproduce", "canned acceptance pipelines");
  std::string which = "caseI";
  bool fast = false;
  rep_cmd->add_option("target", which, "caseI, caseII or caseIII")
      ->check(CLI::IsMember({"caseI", "caseII", "caseIII"}));
  rep_cmd->add_flag("--fast", fast, "reduced grids (for determinism checks)");

  for (CLI::App* sub : {gen, train, predict_cmd, classify_cmd, sweep_cmd, ts_cmd, eps_cmd,
                        det_cmd, trace_cmd, rep_cmd})
    sub->fallthrough();

  // Config file first (pre-scanned), so that flags parsed below override it.
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") opt.config_file = argv[i + 1];
  try {
    apply_config_file(opt);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    opt.cfg.validate();

    if (gen->parsed()) return cmd_generate_data(opt, attractor, gen_t1, delta_a1);
    if (train->parsed()) return cmd_train(opt, task_source, sigma_override);
    if (predict_cmd->parsed()) return cmd_predict_or_classify(opt, ic, sigma_override, false);
    if (classify_cmd->parsed()) return cmd_predict_or_classify(opt, ic, sigma_override, true);
    if (sweep_cmd->parsed()) return cmd_sweep(opt, sigma_override);
    if (ts_cmd->parsed()) return cmd_timescale(opt, sigma_override);
    if (eps_cmd->parsed()) return cmd_epsilon(opt, sigma_override);
    if (det_cmd->parsed()) return cmd_detect(opt, n_ics, sigma_override);
    if (trace_cmd->parsed())
      return cmd_trace(opt, alpha_start, direction, attractor_index, trace_ics, sigma_override);
    if (rep_cmd->parsed()) return cmd_reproduce(opt, which, fast);
    throw ValidationError("no subcommand given");
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace mfrc
