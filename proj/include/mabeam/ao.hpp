#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mabeam/conic.hpp"
#include "mabeam/config.hpp"
#include "mabeam/scenario.hpp"

namespace mabeam {

/// Decision variables: one beam matrix (antennas x users) and one antenna
/// position vector per slot.
struct DesignPoint {
  std::vector<Eigen::MatrixXcd> beams;
  std::vector<Eigen::VectorXd> positions;

  int num_slots() const { return static_cast<int>(beams.size()); }
};

/// Per-(user, slot) auxiliary state of the convex reformulation plus the
/// successive-approximation local points. alpha/beta are in watts; gamma is
/// the certified SINR.
struct SlackState {
  Eigen::MatrixXd alpha, beta, gamma;     // K x N
  Eigen::MatrixXd lambda, varpi, varrho;  // K x N, multipliers/slack
  bool restoration_flag = false;
};

struct AoOptions {
  int max_outer = 30;
  double epsilon = 1e-4;
  SolverSettings solver{};
  double displacement_cap_wavelengths = 0.25;
  int workers = 1;
};

struct SlotOutcome {
  SolveStatus bf_status = SolveStatus::Optimal;
  SolveStatus pos_status = SolveStatus::Optimal;
  bool bf_ran = false, pos_ran = false;
  bool bf_accepted = false, pos_accepted = false;
  double seconds = 0.0;
};

struct AoIteration {
  double phi = 0.0;        // certified objective after the iteration
  double seconds = 0.0;    // wall time of the iteration
  double step_norm = 0.0;  // ||x_new - x_old|| over all slots
  std::vector<SlotOutcome> slots;
};

struct AoTrace {
  double phi_init = 0.0;
  std::vector<AoIteration> iterations;
  std::vector<int> flagged_slots;  // kept an incumbent after solve failures

  bool monotone(double tol = 1e-6) const;
};

struct AoResult {
  DesignPoint design;
  SlackState slacks;
  AoTrace trace;
};

/// Uniform antenna grid, equal-power matched-filter beams at 90% of the
/// budget, slacks from the margin-adjusted nominal channel. Raises the
/// restoration flag (and floors gamma) when the uncertainty swallows the
/// whole signal margin.
std::pair<DesignPoint, SlackState> initialize(const SystemConfig& cfg,
                                              const ScenarioState& scen);

/// Certified signal/interference bounds for a fixed design at one slot.
/// The signal side is the exact ball minimum in closed form; the
/// interference side is closed form for up to one interferer and the
/// tight LMI certificate otherwise.
struct SlotCert {
  Eigen::VectorXd alpha, beta, gamma;  // per user, physical units
};
SlotCert certify_slot(const SystemConfig& cfg, const ScenarioState& scen, int n,
                      const Eigen::MatrixXcd& w, const Eigen::VectorXd& x,
                      const SolverSettings& solver = {});

/// Certified objective (1/N) sum_n sum_k log2(1 + gamma) of a whole design.
double certified_objective(const SystemConfig& cfg, const ScenarioState& scen,
                           const DesignPoint& design,
                           const SolverSettings& solver = {});

/// Incumbent state of one slot handed to the subproblem solvers.
struct SlotLocal {
  Eigen::MatrixXcd w;  // M x K
  Eigen::VectorXd x;   // M
  Eigen::VectorXd alpha, beta, gamma, lambda, varpi;  // per user
};
struct SlotStep {
  SolveStatus status = SolveStatus::NumericalFailure;
  bool usable = false;
  SlotLocal point;
  double objective = 0.0;  // sum_k log2(1 + gamma)
  int retries = 0;
};

/// One-slot beamforming step: optimizes beams and slack variables at fixed
/// antenna positions around the given local point.
SlotStep solve_beamforming_slot(const SystemConfig& cfg,
                                const ScenarioState& scen, int n,
                                const SlotLocal& local, const AoOptions& opts);

/// One-slot antenna position step at fixed beams, with the per-iteration
/// displacement cap in meters.
SlotStep solve_positions_slot(const SystemConfig& cfg, const ScenarioState& scen,
                              int n, const SlotLocal& local,
                              const AoOptions& opts, double cap_m);

enum class Scheme { Proposed, Fpa, Fb, Upper };
const char* to_string(Scheme s);

/// Alternating optimization: per slot, a beamforming step then a position
/// step, each accepted only when the certified slot objective does not
/// decrease; rejected position steps halve that slot's displacement cap.
/// Scheme::Fpa skips position steps, Scheme::Fb skips beamforming steps.
/// The returned design always satisfies the power and spacing constraints.
AoResult run(const SystemConfig& cfg, const ScenarioState& scen,
             const AoOptions& opts = {}, Scheme scheme = Scheme::Proposed);

/// Largest violation of the power budget (relative) and spacing/aperture
/// constraints (absolute, meters) over all slots.
double design_violation(const SystemConfig& cfg, const DesignPoint& design);

}  // namespace mabeam
