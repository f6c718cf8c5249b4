#pragma once

#include <optional>

#include "mfrc/pipeline.hpp"

namespace mfrc {

enum class AttractorClass { FixedPoint, LimitCycle, Chaotic };

std::string to_string(AttractorClass c);

/// Deduplicated long-term behavior found in the prediction state space.
/// Fixed points carry their readout-space location and stationarity residual;
/// limit cycles their period and the distinct local extrema of predicted x3;
/// chaotic tails their x3 extrema envelope.
struct AttractorSummary {
  AttractorClass cls = AttractorClass::Chaotic;
  Eigen::VectorXd location;           // readout-space fixed point (D) or window mean
  double period = 0.0;
  std::vector<double> x3_maxima, x3_minima;
  int basin_count = 0;
  double residual = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd r_state;            // representative reservoir state (warm starts)
  Eigen::VectorXd u_lo, u_hi;         // readout-space envelope of the analyzed tail
};

struct RicOptions {
  int n_ics = 1000;
  double settle_max = 200.0;    // transient discarded (at most)
  double analyze_window = 100.0;
  double fp_check_every = 5.0;  // early fixed-point exit cadence
  double match_after = 20.0;    // try matching against found attractors from here on
  double fp_cluster_frac = 0.01;   // readout-space cluster radius, fraction of box diagonal
  double lc_period_frac = 0.02;    // period agreement for limit-cycle clustering
  double lc_extrema_frac = 0.02;   // Hausdorff distance on x3 extrema, fraction of x3 range
  double polish_residual = 1e-8;
  int chunk = 64;               // RICs per deterministic work item
};

/// Sample n_ics random reservoir states uniform(-1,1)^N, integrate the
/// predicting reservoir, classify each tail (fixed point / limit cycle /
/// chaotic) and cluster the outcomes into deduplicated attractors with basin
/// counts. Fixed-point representatives are polished by a damped Newton step
/// to the stationarity residual. Per-IC integration failures are counted in
/// `failures`, never fatal.
std::vector<AttractorSummary> find_untrained_attractors(const Readout& readout,
                                                        const ReservoirMatrices& mat,
                                                        const ReservoirConfig& cfg,
                                                        const CaseData& data,
                                                        const RicOptions& opt = {},
                                                        int workers = 0,
                                                        int* failures = nullptr);

enum class BranchTermination {
  JumpToOtherBranch,
  LostConvergence,
  GridEdge,
  CollapsedToPoint,
};

std::string to_string(BranchTermination t);

struct BranchPoint {
  double param = 0.0;  // alpha (or rho)
  AttractorSummary att;
};

struct Branch {
  std::vector<BranchPoint> points;  // in sweep order; param strictly monotone
  BranchTermination term = BranchTermination::GridEdge;
  std::optional<AttractorSummary> landing;  // where a jump ended up
  double landing_param = 0.0;
  double rho = 0.0;
};

enum class BifKind {
  SaddleNodeCandidate,
  CuspCandidate,
  HopfCandidate,
  PeriodDoubling,
  CascadeOnset,
};

std::string to_string(BifKind k);

struct BifurcationEvent {
  BifKind kind;
  double alpha = 0.0, rho = 0.0;
  std::string evidence;
};

struct ContinuationOptions {
  double alpha_step = 2e-3;
  double settle = 50.0;          // integration horizon per step before detection
  double analyze_window = 40.0;
  double continuity_slope_mult = 10.0;  // radius = mult * step * slope, floored
  double continuity_floor_frac = 0.02;  // fraction of box diagonal
  double polish_residual = 1e-8;
  int pd_refine = 10;            // step refinement factor after a period doubling
  int max_steps = 100000;
  double alpha_min = 0.0, alpha_max = 1.0;
};

/// Parametrized readout family alpha -> W_out; the production family is the
/// cache-assisted retraining ctx.solve_alpha(alpha), synthetic families feed
/// the continuation machinery directly in tests.
using ReadoutFamily = std::function<Eigen::MatrixXd(double)>;

/// Track a stable fixed point of the predicting reservoir as alpha changes:
/// retrain (cache-assisted), integrate from the previous fixed point's
/// reservoir state, accept while a fixed point within the continuity radius
/// is found; on convergence to a distant attractor terminate with
/// JumpToOtherBranch and record the landing.
Branch continue_fixed_point_branch(const RhoContext& ctx, double alpha_start,
                                   const AttractorSummary& fp_seed, int direction,
                                   const ContinuationOptions& opt = {});
Branch continue_fixed_point_branch(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                                   const ReadoutFamily& family, double box_diag,
                                   double alpha_start, const AttractorSummary& fp_seed,
                                   int direction, const ContinuationOptions& opt = {});

/// Same warm-started scheme for a limit cycle, recording the distinct local
/// maxima/minima of predicted x3 at each step; the class sequence
/// (period-k counts, chaos) feeds detect_period_doubling.
Branch continue_limit_cycle_branch(const RhoContext& ctx, double alpha_start,
                                   const AttractorSummary& lc_seed, int direction,
                                   const ContinuationOptions& opt = {});
Branch continue_limit_cycle_branch(const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                                   const ReadoutFamily& family, double box_diag,
                                   double alpha_start, const AttractorSummary& lc_seed,
                                   int direction, const ContinuationOptions& opt = {});

/// PeriodDoubling event wherever the distinct-maxima count doubles along a
/// limit-cycle branch; CascadeOnset when the count exceeds `cap` or the tail
/// stops being periodic (chaos).
std::vector<BifurcationEvent> detect_period_doubling(const Branch& branch, int cap = 16);

struct EndpointAnalysisOptions {
  double alpha_near = 0.05;  // how close two branch endpoints must be in alpha
};

/// SaddleNodeCandidate when one branch ends in a jump and the partner
/// branch's endpoint lies nearby in alpha (their stable ends are being drawn
/// together). Returns nothing when no pattern matches.
std::optional<BifurcationEvent> branch_endpoint_analysis(const Branch& a, const Branch& b,
                                                         const EndpointAnalysisOptions& opt = {});

/// CuspCandidate when two saddle-node candidate locations at one rho merge
/// into a connected branch at another rho. `pairs` maps rho -> the two
/// branches tracked at that rho.
std::optional<BifurcationEvent> cusp_scan(
    const std::vector<std::pair<double, std::pair<Branch, Branch>>>& family,
    const EndpointAnalysisOptions& opt = {});

}  // namespace mfrc
