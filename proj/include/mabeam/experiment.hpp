#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mabeam/ao.hpp"
#include "mabeam/baselines.hpp"
#include "mabeam/config.hpp"
#include "mabeam/scenario.hpp"

namespace mabeam {

/// One experiment: scenario constants, trajectory source, schemes to run,
/// optional sweep axis, and output options. Parsed from JSON by
/// load_config; every key has a documented default.
struct ExperimentSpec {
  SystemConfig base;
  TrajectoryOptions trajectory;
  std::uint64_t seed = 1;
  std::vector<Scheme> schemes{Scheme::Proposed, Scheme::Fpa, Scheme::Fb,
                              Scheme::Upper};

  enum class Axis { None, PMax, Antennas, Aperture, Users };
  Axis axis = Axis::None;
  std::vector<double> values;

  std::string out_dir = ".";
  int verify_samples = 10000;
  int workers = 1;
  AoOptions ao;

  void validate() const;
};

const char* axis_key(ExperimentSpec::Axis axis);

/// System constants for one sweep point. The user-count axis broadcasts the
/// first per-user entry; the aperture axis is in wavelengths.
SystemConfig apply_axis(const ExperimentSpec& spec, double value);

/// Parses the JSON configuration. Unknown keys are rejected with their
/// path; environment variables MABEAM_<UPPERCASED_KEY> override top-level
/// scalar keys after parsing.
ExperimentSpec load_config(const std::string& path);

/// Runs every (sweep value x scheme) combination, writing
/// convergence_<scheme>_<value>.csv, design_<scheme>_<value>.csv and
/// sweep_<axis>.csv under out_dir. Returns the number of failed runs;
/// partial results are preserved on failure.
int run_experiment(const ExperimentSpec& spec);

/// Design serialization: one row per (slot, user, antenna) with the beam
/// component, the antenna position and the certified SINR.
void save_design_csv(const std::string& path, const DesignPoint& design,
                     const Eigen::MatrixXd& gamma);
struct LoadedDesign {
  DesignPoint design;
  Eigen::MatrixXd gamma;
};
LoadedDesign load_design_csv(const std::string& path, const SystemConfig& cfg);

}  // namespace mabeam
