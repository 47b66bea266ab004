#include "mabeam/config.hpp"

#include <stdexcept>

namespace mabeam {

void SystemConfig::fill_defaults() {
  if (noise_power_w.size() == 0)
    noise_power_w = Eigen::VectorXd::Constant(num_users, dbm_to_watts(-80.0));
  if (pos_error_radius_m.size() == 0)
    pos_error_radius_m = Eigen::VectorXd::Constant(num_users, 0.5);
}

namespace {
[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw std::invalid_argument("SystemConfig." + field + ": " + what);
}
}  // namespace

void SystemConfig::validate() const {
  if (num_antennas < 1) fail("num_antennas", "must be >= 1");
  if (num_users < 1) fail("num_users", "must be >= 1");
  if (num_slots < 1) fail("num_slots", "must be >= 1");
  if (!(slot_seconds > 0)) fail("slot_seconds", "must be > 0");
  if (!(bs_height_m > 0)) fail("bs_height_m", "must be > 0");
  if (!(wavelength_m > 0)) fail("wavelength_m", "must be > 0");
  if (!(ref_gain > 0)) fail("ref_gain", "must be > 0");
  if (!(max_power_w > 0)) fail("max_power_w", "must be > 0");
  if (!(min_spacing_m > 0)) fail("min_spacing_m", "must be > 0");
  if (aperture_m < (num_antennas - 1) * min_spacing_m)
    fail("aperture_m", "must be >= (M-1)*min_spacing_m");
  if (noise_power_w.size() != num_users)
    fail("noise_power_w", "needs one entry per user");
  for (int k = 0; k < num_users; ++k)
    if (!(noise_power_w(k) > 0)) fail("noise_power_w", "entries must be > 0");
  if (pos_error_radius_m.size() != num_users)
    fail("pos_error_radius_m", "needs one entry per user");
  for (int k = 0; k < num_users; ++k)
    if (pos_error_radius_m(k) < 0) fail("pos_error_radius_m", "entries must be >= 0");
  if (xi_override.size() != 0 && xi_override.size() != num_users)
    fail("xi_override", "needs one entry per user when set");
  for (int k = 0; k < xi_override.size(); ++k)
    if (xi_override(k) < 0) fail("xi_override", "entries must be >= 0");
}

}  // namespace mabeam
