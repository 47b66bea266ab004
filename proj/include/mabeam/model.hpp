#pragma once

#include <complex>

#include <Eigen/Dense>

namespace mabeam {

/// Slant distance from the elevated base station to a ground point.
double slant_distance(const Eigen::Vector2d& bs_xy, double bs_height,
                      const Eigen::Vector2d& q);

/// Elevation angle of arrival: arccos(H / slant distance), in [0, pi/2).
double aoa(const Eigen::Vector2d& bs_xy, double bs_height,
           const Eigen::Vector2d& q);

/// Linear-array steering vector at element positions x for elevation theta.
/// Entry m is exp(-j * (2*pi/lambda) * x_m * cos(theta)); the conjugated
/// convention is fixed here and used consistently everywhere (channels are
/// always paired with beams as h^H w).
Eigen::VectorXcd steering(const Eigen::VectorXd& x, double theta,
                          double wavelength);

/// Line-of-sight channel (sqrt(g0)/d) * steering(x, theta).
/// Throws std::invalid_argument for d <= 0.
Eigen::VectorXcd channel(const Eigen::VectorXd& x, double theta, double dist,
                         double ref_gain, double wavelength);

struct SinrRate {
  double sinr = 0.0;
  double rate = 0.0;  // bits/s/Hz
};

/// SINR and rate of `user` given its channel and the beam matrix (column j
/// is the beam of user j).
SinrRate sinr_and_rate(const Eigen::VectorXcd& h, const Eigen::MatrixXcd& beams,
                       int user, double noise_power);

/// Norm bound on the channel estimation error induced by a positioning
/// error of radius r: sqrt(M*g0)*r/(d*d_est) * (1 + 2*pi*L*H/(lambda*d_est)).
double channel_error_bound(int num_antennas, double ref_gain, double r,
                           double d_true, double d_est, double aperture,
                           double bs_height, double wavelength);

/// Same bound with the unknown true distance replaced by the worst-case
/// value max(d_est - r, H), which can only enlarge the bound.
double channel_error_bound_conservative(int num_antennas, double ref_gain,
                                        double r, double d_est, double aperture,
                                        double bs_height, double wavelength);

}  // namespace mabeam
