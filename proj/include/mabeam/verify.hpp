#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mabeam/ao.hpp"
#include "mabeam/config.hpp"
#include "mabeam/scenario.hpp"

namespace mabeam::verify {

// Everything in this namespace re-evaluates the link model from scratch
// (plain complex arithmetic, no shared helpers), so it can falsify the
// optimizer rather than echo it.

struct McReport {
  Eigen::MatrixXd min_sinr;   // K x N, empirical ball minimum
  Eigen::MatrixXd min_rate;   // K x N, log2(1 + min_sinr)
  Eigen::MatrixXi violations; // K x N, samples below the certified value
  int samples = 0;
  std::uint64_t seed = 0;
  double worst_sum_rate = 0.0;  // (1/N) sum_n sum_k min_rate
  int total_violations = 0;

  void write_csv(const std::string& path) const;
};

/// Samples channel errors on and inside the uncertainty ball (half the
/// draws on the boundary, where the minimum typically sits) and reports the
/// empirical worst case per (user, slot). A sample counts as a violation
/// when its SINR falls below gamma - 1e-6 * max(1, gamma). Deterministic
/// per seed; chunks with derived seeds merge order-independently.
McReport mc_worst_case(const SystemConfig& cfg, const ScenarioState& scen,
                       const DesignPoint& design, const Eigen::MatrixXd& gamma,
                       int samples, std::uint64_t seed);

struct BoundCheck {
  bool pass = false;
  double max_ratio = 0.0;

  void write_csv(const std::string& path) const;
};

/// Draws true positions in the positioning ball around the estimates and
/// random feasible antenna layouts, and checks the channel perturbation
/// against the geometric bound computed from the true distance.
/// boundary_fraction of the draws sit on the ball boundary.
BoundCheck check_error_bound(const SystemConfig& cfg, const ScenarioState& scen,
                             int samples, std::uint64_t seed,
                             double boundary_fraction = 0.5);

struct GridSearch {
  Eigen::VectorXd x;
  double objective = 0.0;  // worst-case slot sum rate at the best grid point
  long evaluated = 0;
};

/// Exhaustive search over feasible sorted antenna layouts for one slot at
/// fixed beams. Single-user instances use the exact closed-form worst case;
/// otherwise the ball minimum is sampled with `robust_samples` draws.
/// Rejects more than three antennas.
GridSearch brute_force_positions(const SystemConfig& cfg,
                                 const ScenarioState& scen, int n,
                                 const Eigen::MatrixXcd& w, double grid_step,
                                 int robust_samples, std::uint64_t seed);

struct SuiteReport {
  struct Property {
    std::string name;
    long trials = 0;
    long violations = 0;
  };
  std::vector<Property> properties;
  long total_trials = 0;
  long total_violations = 0;
  std::uint64_t seed = 0;

  void write_csv(const std::string& path) const;
};

/// Random-instance battery over every bound and tightness property of the
/// convexification builders, at tolerance 1e-9. Scalar properties run
/// `trials` instances; matrix properties run proportionally fewer.
SuiteReport surrogate_suite(std::uint64_t seed, long trials);

}  // namespace mabeam::verify
