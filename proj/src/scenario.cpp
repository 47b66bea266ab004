#include "mabeam/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mabeam/model.hpp"
#include "mabeam/rng.hpp"

namespace mabeam {

Eigen::VectorXcd ScenarioState::est_channel(int k, int n,
                                            const Eigen::VectorXd& x) const {
  return channel(x, est_aoa(k, n), est_dist(k, n), ref_gain, wavelength);
}

Eigen::VectorXcd ScenarioState::true_channel(int k, int n,
                                             const Eigen::VectorXd& x) const {
  return channel(x, true_aoa(k, n), true_dist(k, n), ref_gain, wavelength);
}

ScenarioState ScenarioState::perfect() const {
  ScenarioState s = *this;
  s.est_pos = s.true_pos;
  s.est_dist = s.true_dist;
  s.est_aoa = s.true_aoa;
  for (int k = 0; k < num_users; ++k)
    for (int n = 0; n < num_slots; ++n)
      s.phase_rate(k, n) = 2.0 * M_PI / wavelength * std::cos(s.est_aoa(k, n));
  s.xi.setZero();
  return s;
}

namespace {

std::vector<Eigen::Vector2d> line_trajectories(const SystemConfig& cfg,
                                               const TrajectoryOptions& traj,
                                               Rng& rng) {
  const int K = cfg.num_users, N = cfg.num_slots;
  const double side = traj.area_side_m;
  std::vector<Eigen::Vector2d> pos(static_cast<size_t>(K) * N);
  for (int k = 0; k < K; ++k) {
    // Start on a random edge, head inward within +-45 degrees of the
    // normal, constant speed for the whole period.
    const int edge = static_cast<int>(rng.uniform() * 4.0) % 4;
    const double t = rng.uniform(0.1, 0.9) * side;
    Eigen::Vector2d start, normal;
    switch (edge) {
      case 0: start = {t, 0.0}; normal = {0.0, 1.0}; break;
      case 1: start = {side, t}; normal = {-1.0, 0.0}; break;
      case 2: start = {t, side}; normal = {0.0, -1.0}; break;
      default: start = {0.0, t}; normal = {1.0, 0.0}; break;
    }
    const double ang = std::atan2(normal.y(), normal.x()) + rng.uniform(-M_PI / 4, M_PI / 4);
    const Eigen::Vector2d vel{traj.speed_mps * std::cos(ang), traj.speed_mps * std::sin(ang)};
    for (int n = 0; n < N; ++n) {
      Eigen::Vector2d q = start + vel * (n * cfg.slot_seconds);
      q.x() = std::clamp(q.x(), 0.0, side);
      q.y() = std::clamp(q.y(), 0.0, side);
      pos[static_cast<size_t>(k) * N + n] = q;
    }
  }
  return pos;
}

std::vector<Eigen::Vector2d> file_trajectories(const SystemConfig& cfg,
                                               const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("trajectory file not found: " + path);
  const int K = cfg.num_users, N = cfg.num_slots;
  std::vector<Eigen::Vector2d> pos(static_cast<size_t>(K) * N,
                                   Eigen::Vector2d(NAN, NAN));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.find_first_not_of("kn,xy_m ") == std::string::npos)
      continue;  // header
    std::stringstream ss(line);
    std::string tok;
    double vals[4];
    for (int i = 0; i < 4; ++i) {
      if (!std::getline(ss, tok, ','))
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": expected k,n,x_m,y_m");
      vals[i] = std::stod(tok);
    }
    const int k = static_cast<int>(vals[0]), n = static_cast<int>(vals[1]);
    if (k < 0 || k >= K || n < 0 || n >= N)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": user/slot index out of range");
    pos[static_cast<size_t>(k) * N + n] = {vals[2], vals[3]};
  }
  for (size_t i = 0; i < pos.size(); ++i)
    if (std::isnan(pos[i].x()))
      throw std::runtime_error(path + ": missing entries for some (user, slot)");
  return pos;
}

}  // namespace

ScenarioState build_scenario(const SystemConfig& cfg,
                             const TrajectoryOptions& traj, std::uint64_t seed) {
  cfg.validate();
  const int K = cfg.num_users, N = cfg.num_slots;

  ScenarioState s;
  s.num_users = K;
  s.num_slots = N;
  s.num_antennas = cfg.num_antennas;
  s.wavelength = cfg.wavelength_m;
  s.ref_gain = cfg.ref_gain;
  s.bs_xy = cfg.bs_xy;
  s.bs_height = cfg.bs_height_m;

  Rng rng(Rng::derive_seed(seed, 0x5ce));  // scenario stream

  s.true_pos = (traj.kind == TrajectoryOptions::Kind::File)
                   ? file_trajectories(cfg, traj.path)
                   : line_trajectories(cfg, traj, rng);

  s.est_pos.resize(s.true_pos.size());
  s.true_dist.resize(K, N);
  s.est_dist.resize(K, N);
  s.true_aoa.resize(K, N);
  s.est_aoa.resize(K, N);
  s.phase_rate.resize(K, N);
  s.xi.resize(K);

  for (int k = 0; k < K; ++k) {
    double xi_max = 0.0;
    for (int n = 0; n < N; ++n) {
      const Eigen::Vector2d q = s.q_true(k, n);
      const Eigen::Vector2d qe = q + rng.disk_point(cfg.pos_error_radius_m(k));
      s.est_pos[static_cast<size_t>(k) * N + n] = qe;
      s.true_dist(k, n) = slant_distance(cfg.bs_xy, cfg.bs_height_m, q);
      s.est_dist(k, n) = slant_distance(cfg.bs_xy, cfg.bs_height_m, qe);
      s.true_aoa(k, n) = aoa(cfg.bs_xy, cfg.bs_height_m, q);
      s.est_aoa(k, n) = aoa(cfg.bs_xy, cfg.bs_height_m, qe);
      s.phase_rate(k, n) =
          2.0 * M_PI / cfg.wavelength_m * std::cos(s.est_aoa(k, n));
      xi_max = std::max(
          xi_max, channel_error_bound_conservative(
                      cfg.num_antennas, cfg.ref_gain, cfg.pos_error_radius_m(k),
                      s.est_dist(k, n), cfg.aperture_m, cfg.bs_height_m,
                      cfg.wavelength_m));
    }
    // One bound per user covering every slot; overrides win when present.
    s.xi(k) = (cfg.xi_override.size() > 0) ? cfg.xi_override(k) : xi_max;
  }
  return s;
}

}  // namespace mabeam
