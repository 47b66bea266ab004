#include "mabeam/model.hpp"

#include <cmath>
#include <stdexcept>

namespace mabeam {

double slant_distance(const Eigen::Vector2d& bs_xy, double bs_height,
                      const Eigen::Vector2d& q) {
  return std::sqrt((bs_xy - q).squaredNorm() + bs_height * bs_height);
}

double aoa(const Eigen::Vector2d& bs_xy, double bs_height,
           const Eigen::Vector2d& q) {
  const double d = slant_distance(bs_xy, bs_height, q);
  double c = bs_height / d;
  if (c > 1.0) c = 1.0;
  return std::acos(c);
}

Eigen::VectorXcd steering(const Eigen::VectorXd& x, double theta,
                          double wavelength) {
  const double rate = 2.0 * M_PI / wavelength * std::cos(theta);
  Eigen::VectorXcd a(x.size());
  for (Eigen::Index m = 0; m < x.size(); ++m)
    a(m) = std::polar(1.0, -rate * x(m));
  return a;
}

Eigen::VectorXcd channel(const Eigen::VectorXd& x, double theta, double dist,
                         double ref_gain, double wavelength) {
  if (!(dist > 0.0))
    throw std::invalid_argument("channel: distance must be > 0");
  return (std::sqrt(ref_gain) / dist) * steering(x, theta, wavelength);
}

SinrRate sinr_and_rate(const Eigen::VectorXcd& h, const Eigen::MatrixXcd& beams,
                       int user, double noise_power) {
  if (!(noise_power > 0.0))
    throw std::invalid_argument("sinr_and_rate: noise power must be > 0");
  double interference = 0.0;
  for (int j = 0; j < beams.cols(); ++j) {
    if (j == user) continue;
    interference += std::norm(h.dot(beams.col(j)));
  }
  const double signal = std::norm(h.dot(beams.col(user)));
  SinrRate out;
  out.sinr = signal / (interference + noise_power);
  out.rate = std::log2(1.0 + out.sinr);
  return out;
}

double channel_error_bound(int num_antennas, double ref_gain, double r,
                           double d_true, double d_est, double aperture,
                           double bs_height, double wavelength) {
  if (!(d_true > 0.0) || !(d_est > 0.0))
    throw std::invalid_argument("channel_error_bound: distances must be > 0");
  return std::sqrt(num_antennas * ref_gain) * r / (d_true * d_est) *
         (1.0 + 2.0 * M_PI * aperture * bs_height / (wavelength * d_est));
}

double channel_error_bound_conservative(int num_antennas, double ref_gain,
                                        double r, double d_est, double aperture,
                                        double bs_height, double wavelength) {
  const double d_true = std::max(d_est - r, bs_height);
  return channel_error_bound(num_antennas, ref_gain, r, d_true, d_est, aperture,
                             bs_height, wavelength);
}

}  // namespace mabeam
