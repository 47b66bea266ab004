#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mabeam/config.hpp"

namespace mabeam {

struct TrajectoryOptions {
  enum class Kind { Line, File };
  Kind kind = Kind::Line;
  double speed_mps = 10.0;
  double area_side_m = 500.0;
  std::string path;  // CSV with columns k,n,x_m,y_m when kind == File
};

/// Per-slot geometry of all users plus the derived channel-uncertainty
/// bounds. True positions drive the physical channel, estimated positions
/// drive everything the optimizer is allowed to see.
struct ScenarioState {
  int num_users = 0;
  int num_slots = 0;
  int num_antennas = 0;
  double wavelength = 0.0;
  double ref_gain = 0.0;
  Eigen::Vector2d bs_xy{0.0, 0.0};
  double bs_height = 0.0;

  // indexed [k*num_slots + n]
  std::vector<Eigen::Vector2d> true_pos, est_pos;
  Eigen::MatrixXd true_dist, est_dist;    // K x N
  Eigen::MatrixXd true_aoa, est_aoa;      // K x N
  Eigen::MatrixXd phase_rate;             // (2*pi/lambda)*cos(est_aoa), K x N
  Eigen::VectorXd xi;                     // channel error bound per user

  const Eigen::Vector2d& q_true(int k, int n) const { return true_pos[k * num_slots + n]; }
  const Eigen::Vector2d& q_est(int k, int n) const { return est_pos[k * num_slots + n]; }

  /// Estimated channel at antenna positions x (depends on x through the
  /// steering vector only).
  Eigen::VectorXcd est_channel(int k, int n, const Eigen::VectorXd& x) const;
  /// Physical channel at antenna positions x.
  Eigen::VectorXcd true_channel(int k, int n, const Eigen::VectorXd& x) const;

  /// Perfect-knowledge copy: estimates replaced by truth, xi zeroed.
  ScenarioState perfect() const;
};

/// Builds the per-slot scenario. Line trajectories and the estimation
/// errors are drawn from the seed; file trajectories load true positions
/// and still draw estimation errors from the seed.
ScenarioState build_scenario(const SystemConfig& cfg,
                             const TrajectoryOptions& traj, std::uint64_t seed);

}  // namespace mabeam
