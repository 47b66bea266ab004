#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace mabeam {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w * 1e3); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Scenario constants for one downlink instance: base station geometry,
/// array limits, power budget, per-user noise and positioning uncertainty.
struct SystemConfig {
  int num_antennas = 4;   // M
  int num_users = 2;      // K
  int num_slots = 6;      // N
  double slot_seconds = 1.0;

  Eigen::Vector2d bs_xy{250.0, 250.0};  // horizontal BS coordinates [m]
  double bs_height_m = 12.0;            // H
  double wavelength_m = 0.1;
  double ref_gain = 1e-4;               // linear power gain at 1 m (-40 dB default)

  double max_power_w = 2.51188643150958;  // 34 dBm
  double aperture_m = 0.6;                // L, movable range [0, L]
  double min_spacing_m = 0.03;            // d_min between adjacent elements

  Eigen::VectorXd noise_power_w;       // per user, watts
  Eigen::VectorXd pos_error_radius_m;  // r_k per user
  Eigen::VectorXd xi_override;         // optional per-user channel error bound;
                                       // empty = derive from geometry

  double total_period_s() const { return num_slots * slot_seconds; }

  /// Fills per-user vectors that are still empty with the defaults
  /// (-80 dBm noise, 0.5 m positioning radius).
  void fill_defaults();

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  static SystemConfig defaults() {
    SystemConfig c;
    c.fill_defaults();
    return c;
  }
};

}  // namespace mabeam
