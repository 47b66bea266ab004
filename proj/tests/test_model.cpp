#include "doctest.h"

#include <cmath>

#include "mabeam/config.hpp"
#include "mabeam/model.hpp"
#include "mabeam/rng.hpp"
#include "mabeam/scenario.hpp"

using namespace mabeam;

TEST_CASE("unit conversions") {
  CHECK(dbm_to_watts(34.0) == doctest::Approx(2.5118864315).epsilon(1e-9));
  CHECK(dbm_to_watts(-80.0) == doctest::Approx(1e-11).epsilon(1e-9));
  CHECK(db_to_linear(-40.0) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(watts_to_dbm(dbm_to_watts(17.3)) == doctest::Approx(17.3));
}

TEST_CASE("config validation names the offending field") {
  auto cfg = SystemConfig::defaults();
  CHECK_NOTHROW(cfg.validate());
  cfg.min_spacing_m = -0.1;
  CHECK_THROWS_WITH_AS(cfg.validate(),
                       "SystemConfig.min_spacing_m: must be > 0",
                       std::invalid_argument);
  cfg = SystemConfig::defaults();
  cfg.aperture_m = 0.01;  // < (M-1)*d_min
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("angle of arrival") {
  const Eigen::Vector2d b{250.0, 250.0};
  SUBCASE("directly below the array") {
    CHECK(aoa(b, 12.0, b) == doctest::Approx(0.0));
  }
  SUBCASE("equal height and ground offset gives pi/4") {
    CHECK(aoa(b, 12.0, {250.0 + 12.0, 250.0}) == doctest::Approx(M_PI / 4));
  }
  SUBCASE("far users approach pi/2") {
    CHECK(aoa(b, 12.0, {250.0 + 1e7, 250.0}) ==
          doctest::Approx(M_PI / 2).epsilon(1e-5));
    CHECK(aoa(b, 12.0, {250.0 + 1e7, 250.0}) < M_PI / 2);
  }
}

TEST_CASE("steering vector") {
  SUBCASE("broadside angle gives all ones") {
    Eigen::VectorXd x(3);
    x << 0.0, 0.13, 0.44;
    const auto a = steering(x, M_PI / 2, 0.1);
    for (int m = 0; m < 3; ++m) CHECK(std::abs(a(m) - 1.0) < 1e-12);
  }
  SUBCASE("quarter-wavelength phase at 60 degrees") {
    Eigen::VectorXd x(2);
    x << 0.0, 0.05;
    const auto a = steering(x, M_PI / 3, 0.1);
    CHECK(std::abs(a(0) - std::complex<double>(1, 0)) < 1e-12);
    CHECK(std::abs(a(1) - std::complex<double>(0, -1)) < 1e-12);
  }
  SUBCASE("single element") {
    Eigen::VectorXd x(1);
    x << 0.0;
    CHECK(std::abs(steering(x, 0.7, 0.1)(0) - 1.0) < 1e-15);
  }
  SUBCASE("entries unit modulus, norm sqrt(M)") {
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
      const int m = 1 + t % 6;
      Eigen::VectorXd x(m);
      for (int i = 0; i < m; ++i) x(i) = rng.uniform(0.0, 0.6);
      const auto a = steering(x, rng.uniform(0.0, M_PI / 2), 0.1);
      for (int i = 0; i < m; ++i) CHECK(std::abs(a(i)) == doctest::Approx(1.0));
      CHECK(a.norm() == doctest::Approx(std::sqrt(double(m))));
    }
  }
}

TEST_CASE("channel") {
  Eigen::VectorXd x(4);
  x << 0.0, 0.1, 0.2, 0.3;
  SUBCASE("unit gain at unit distance, broadside") {
    const auto h = channel(x, M_PI / 2, 1.0, 1.0, 0.1);
    for (int m = 0; m < 4; ++m) CHECK(std::abs(h(m) - 1.0) < 1e-12);
  }
  SUBCASE("doubling distance halves magnitudes") {
    const auto h1 = channel(x, 0.9, 100.0, 1e-4, 0.1);
    const auto h2 = channel(x, 0.9, 200.0, 1e-4, 0.1);
    for (int m = 0; m < 4; ++m)
      CHECK(std::abs(h2(m)) == doctest::Approx(0.5 * std::abs(h1(m))));
  }
  SUBCASE("entrywise magnitude sqrt(g0)/d") {
    const auto h = channel(x, 0.9, 100.0, 1e-4, 0.1);
    for (int m = 0; m < 4; ++m) CHECK(std::abs(h(m)) == doctest::Approx(1e-4));
  }
  SUBCASE("zero distance rejected") {
    CHECK_THROWS_AS(channel(x, 0.9, 0.0, 1e-4, 0.1), std::invalid_argument);
  }
}

TEST_CASE("sinr and rate") {
  SUBCASE("single user, no interference") {
    Eigen::VectorXcd h(2);
    h << 1.0, 0.0;
    Eigen::MatrixXcd w(2, 1);
    w << 2.0, 0.0;
    const auto out = sinr_and_rate(h, w, 0, 1.0);
    CHECK(out.sinr == doctest::Approx(4.0));
    CHECK(out.rate == doctest::Approx(std::log2(5.0)));
  }
  SUBCASE("zero beam gives zero rate") {
    Eigen::VectorXcd h(2);
    h << 1.0, std::complex<double>(0, 1);
    Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(2, 1);
    const auto out = sinr_and_rate(h, w, 0, 1e-3);
    CHECK(out.sinr == 0.0);
    CHECK(out.rate == 0.0);
  }
  SUBCASE("two-user instance against a scalar recomputation") {
    Eigen::VectorXcd h(2);
    h << std::complex<double>(0.3, -0.4), std::complex<double>(-0.1, 0.2);
    Eigen::MatrixXcd w(2, 2);
    w << std::complex<double>(1.0, 0.5), std::complex<double>(-0.2, 0.7),
        std::complex<double>(0.0, -1.1), std::complex<double>(0.4, 0.0);
    const double sigma2 = 0.05;
    auto inner = [&](int col) {
      std::complex<double> acc = 0.0;
      for (int m = 0; m < 2; ++m) acc += std::conj(h(m)) * w(m, col);
      return std::norm(acc);
    };
    const double want = inner(0) / (inner(1) + sigma2);
    const auto out = sinr_and_rate(h, w, 0, sigma2);
    CHECK(out.sinr == doctest::Approx(want).epsilon(1e-12));
    CHECK(out.rate == doctest::Approx(std::log2(1.0 + want)).epsilon(1e-12));
  }
  SUBCASE("rate monotone in beam power at fixed direction") {
    Rng rng(5);
    Eigen::VectorXcd h = rng.gaussian_cvector(3);
    Eigen::MatrixXcd w(3, 2);
    w.col(0) = rng.gaussian_cvector(3);
    w.col(1) = rng.gaussian_cvector(3);
    double prev = -1.0;
    for (double scale = 0.1; scale < 3.0; scale += 0.17) {
      Eigen::MatrixXcd ws = w;
      ws.col(0) *= scale;
      const double r = sinr_and_rate(h, ws, 0, 0.01).rate;
      CHECK(r >= prev);
      prev = r;
    }
  }
}

TEST_CASE("channel error bound") {
  SUBCASE("zero positioning error means zero bound") {
    CHECK(channel_error_bound(4, 1e-4, 0.0, 100.0, 100.0, 0.6, 12.0, 0.1) == 0.0);
  }
  SUBCASE("reference value") {
    // sqrt(4e-4)*0.5/1e4 * (1 + 2*pi*0.6*12/(0.1*100))
    CHECK(channel_error_bound(4, 1e-4, 0.5, 100.0, 100.0, 0.6, 12.0, 0.1) ==
          doctest::Approx(5.523893421169302e-6).epsilon(1e-12));
  }
  SUBCASE("strictly increasing in the positioning radius") {
    double prev = 0.0;
    for (double r = 0.1; r < 2.0; r += 0.1) {
      const double xi =
          channel_error_bound(4, 1e-4, r, 100.0, 100.0, 0.6, 12.0, 0.1);
      CHECK(xi > prev);
      prev = xi;
    }
  }
  SUBCASE("conservative substitution never smaller") {
    for (double r = 0.1; r < 3.0; r += 0.3) {
      const double d_est = 50.0;
      const double lo =
          channel_error_bound(4, 1e-4, r, d_est + r, d_est, 0.6, 12.0, 0.1);
      const double hi = channel_error_bound_conservative(4, 1e-4, r, d_est, 0.6,
                                                         12.0, 0.1);
      CHECK(hi >= lo);
    }
  }
}

TEST_CASE("sampled error containment") {
  // channel perturbations from sampled positioning errors stay within the
  // bound computed from the true distance
  const Eigen::Vector2d b{250.0, 250.0};
  const double H = 12.0, g0 = 1e-4, lam = 0.1, L = 0.6, r = 0.5;
  const int M = 4;
  Rng rng(17);
  double max_ratio = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const Eigen::Vector2d q_est{rng.uniform(0.0, 500.0), rng.uniform(0.0, 500.0)};
    const Eigen::Vector2d q_true = q_est + rng.disk_point(r);
    Eigen::VectorXd x(M);
    x(0) = rng.uniform(0.0, 0.05);
    for (int m = 1; m < M; ++m) x(m) = x(m - 1) + rng.uniform(0.03, 0.15);
    if (x(M - 1) > L) continue;
    const double d_true = slant_distance(b, H, q_true);
    const double d_est = slant_distance(b, H, q_est);
    const auto h = channel(x, aoa(b, H, q_true), d_true, g0, lam);
    const auto h_est = channel(x, aoa(b, H, q_est), d_est, g0, lam);
    const double xi = channel_error_bound(M, g0, r, d_true, d_est, L, H, lam);
    max_ratio = std::max(max_ratio, (h - h_est).norm() / xi);
  }
  CHECK(max_ratio <= 1.0);
}

TEST_CASE("scenario construction") {
  auto cfg = SystemConfig::defaults();
  TrajectoryOptions traj;
  const auto scen = build_scenario(cfg, traj, 1);

  SUBCASE("estimates stay within the positioning radius") {
    for (int k = 0; k < cfg.num_users; ++k)
      for (int n = 0; n < cfg.num_slots; ++n)
        CHECK((scen.q_true(k, n) - scen.q_est(k, n)).norm() <=
              cfg.pos_error_radius_m(k) + 1e-12);
  }
  SUBCASE("distances and angles consistent with geometry") {
    for (int k = 0; k < cfg.num_users; ++k)
      for (int n = 0; n < cfg.num_slots; ++n) {
        CHECK(scen.est_dist(k, n) ==
              doctest::Approx(slant_distance(cfg.bs_xy, cfg.bs_height_m,
                                             scen.q_est(k, n))));
        CHECK(scen.est_aoa(k, n) >= 0.0);
        CHECK(scen.est_aoa(k, n) < M_PI / 2);
      }
  }
  SUBCASE("estimated channel reproduces the model bit-for-bit") {
    Eigen::VectorXd x(cfg.num_antennas);
    x << 0.0, 0.2, 0.4, 0.6;
    for (int k = 0; k < cfg.num_users; ++k) {
      const auto via_state = scen.est_channel(k, 2, x);
      const auto direct = channel(x, aoa(cfg.bs_xy, cfg.bs_height_m, scen.q_est(k, 2)),
                                  slant_distance(cfg.bs_xy, cfg.bs_height_m,
                                                 scen.q_est(k, 2)),
                                  cfg.ref_gain, cfg.wavelength_m);
      for (int m = 0; m < cfg.num_antennas; ++m) CHECK(via_state(m) == direct(m));
    }
  }
  SUBCASE("perfect copy zeroes the uncertainty") {
    const auto perfect = scen.perfect();
    CHECK(perfect.xi.maxCoeff() == 0.0);
    for (int k = 0; k < cfg.num_users; ++k)
      for (int n = 0; n < cfg.num_slots; ++n)
        CHECK(perfect.q_est(k, n) == scen.q_true(k, n));
  }
  SUBCASE("same seed reproduces the scenario") {
    const auto again = build_scenario(cfg, traj, 1);
    for (int k = 0; k < cfg.num_users; ++k)
      for (int n = 0; n < cfg.num_slots; ++n)
        CHECK(scen.q_true(k, n) == again.q_true(k, n));
  }
  SUBCASE("xi override wins") {
    auto cfg2 = cfg;
    cfg2.xi_override = Eigen::VectorXd::Constant(cfg.num_users, 3.25e-6);
    const auto s2 = build_scenario(cfg2, traj, 1);
    CHECK(s2.xi(0) == 3.25e-6);
    CHECK(s2.xi(1) == 3.25e-6);
  }
}
