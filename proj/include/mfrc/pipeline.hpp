#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <variant>

#include "mfrc/evaluate.hpp"
#include "mfrc/reservoir.hpp"
#include "mfrc/systems.hpp"
#include "mfrc/training.hpp"

namespace mfrc {

/// One training source: a named attractor reached by integrating a system
/// from a fixed initial condition.
struct AttractorSpec {
  std::string name;  // "A1", "A2", "B1", "L"
  std::variant<GuanParams, LorenzParams> params;
  SystemState ic;

  TimeSeries trajectory(double t0, double t1, double dt) const;
};

enum class CaseId { I, II, III };

CaseId parse_case(const std::string& s);
std::string to_string(CaseId c);

/// The paper's three training scenarios. Case I: the two coexisting
/// single-scroll attractors A1 (IC (1,1,1)) and A2 (IC (1,1,-1)) of the Guan
/// system at (a,b,c,d) = (5,15,3,12), sigma = 0.2. Case II: the double-scroll
/// B1 at (5,8,2,2) paired with A2, sigma = 0.4. Case III: the Lorenz
/// butterfly L paired with A2, sigma = 0.2. delta_a1 rescales A1's timescale
/// (Case I only).
struct CaseDef {
  CaseId id;
  AttractorSpec s1, s2;
  double sigma = 0.2;
};

CaseDef case_def(CaseId id, double delta_a1 = 1.0);

/// Source trajectories and geometry for one case, shared read-only.
/// Trajectories cover [0, t_train + t_predict] so that prediction-window
/// targets are available; the bounding box is taken over the post-transient
/// part and feeds clustering radii and continuity thresholds.
struct CaseData {
  CaseDef def;
  TimeSeries traj1, traj2;           // full-span source trajectories
  TimeSeries target1, target2;       // prediction-window segments, clock from 0
  Eigen::VectorXd box_lo, box_hi;    // union bounding box (post-transient)
  double box_diag = 0.0;
};

std::shared_ptr<const CaseData> case_data(const CaseDef& def, const ReservoirConfig& cfg);

struct TaskTraining {
  Readout readout;
  Eigen::VectorXd r_end;   // r(t_train), the prediction initial state
  GramBlocks grams;
};

/// Full task-specific pipeline: integrate the source, listen from r(0) = 0,
/// harvest over [t_listen, t_train], ridge-solve. `streaming` accumulates the
/// Gram blocks during the listen pass instead of materializing X (same
/// normal equations; used by sweeps and bulk runs).
TaskTraining train_task(const AttractorSpec& spec, const ReservoirConfig& cfg,
                        const ReservoirMatrices& mat, bool streaming = false);

struct BlendedTraining {
  Readout readout;
  Eigen::VectorXd r_end_1, r_end_2;  // prediction ICs for both sources
};

BlendedTraining train_blended(const AttractorSpec& s1, const AttractorSpec& s2, double alpha,
                              const ReservoirConfig& cfg, const ReservoirMatrices& mat,
                              bool streaming = false);

/// Everything that depends on (case, rho, sigma, seed) but not on alpha:
/// matrices, per-source Gram blocks, listening end states. Built once per
/// rho, then any alpha is a cheap rescale-and-solve. This cache is the
/// dominant cost saving of the sweeps.
struct RhoContext {
  ReservoirConfig cfg;
  std::shared_ptr<const CaseData> data;
  ReservoirMatrices mat;
  GramBlocks grams1, grams2;
  Eigen::VectorXd r_end_1, r_end_2;

  Readout solve_alpha(double alpha) const;
  Readout solve_task(int source /* 1 or 2 */) const;
};

std::shared_ptr<const RhoContext> build_rho_context(const CaseDef& def,
                                                    const ReservoirConfig& cfg);

/// Listen to both case sources in lockstep (shared matrices), accumulating
/// Gram blocks; fills grams/r_end fields of the context.
void listen_and_harvest(RhoContext& ctx);

/// Finite-difference smoothness probe of the blended readout:
/// relative Frobenius change of W_out under alpha -> alpha + h and
/// rho -> rho + h.
struct SensitivityReport {
  double d_alpha = 0.0;
  double d_rho = 0.0;
};
SensitivityReport readout_sensitivity(const CaseDef& def, const ReservoirConfig& cfg,
                                      double alpha, double rho, double h);

/// Internal matrix draws keyed by (seed, N, P) with the spectral radius of
/// the raw draw, so sweeping rho only rescales. Thread-safe, deterministic
/// (the cached path performs the identical raw-draw -> estimate -> rescale
/// sequence as a cold build).
class MatrixFactory {
public:
  static ReservoirMatrices build(const ReservoirConfig& cfg);
  static void clear();
};

}  // namespace mfrc
