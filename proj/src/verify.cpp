#include "mabeam/verify.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "mabeam/rng.hpp"
#include "mabeam/surrogate.hpp"

namespace mabeam::verify {

namespace {

using cplx = std::complex<double>;

cplx unit_phase(double phase) { return {std::cos(phase), std::sin(phase)}; }

// local re-derivation of the estimated channel: (sqrt(g0)/d) per-element
// phases at the estimated angle
std::vector<cplx> local_channel(const SystemConfig& cfg,
                                const ScenarioState& scen, int k, int n,
                                const Eigen::VectorXd& x) {
  const double amp = std::sqrt(cfg.ref_gain) / scen.est_dist(k, n);
  const double rate =
      2.0 * M_PI / cfg.wavelength_m * std::cos(scen.est_aoa(k, n));
  std::vector<cplx> h(x.size());
  for (int m = 0; m < x.size(); ++m) h[m] = amp * unit_phase(-rate * x(m));
  return h;
}

std::vector<cplx> ball_point(Rng& rng, int m, double radius, bool boundary) {
  std::vector<cplx> e(m);
  double nrm2 = 0.0;
  for (int i = 0; i < m; ++i) {
    e[i] = cplx(rng.gaussian(), rng.gaussian());
    nrm2 += std::norm(e[i]);
  }
  double r = radius;
  if (!boundary) r *= std::pow(rng.uniform(), 1.0 / (2 * m));
  const double s = r / std::sqrt(nrm2);
  for (auto& v : e) v *= s;
  return e;
}

double abs2_inner(const std::vector<cplx>& h, const std::vector<cplx>& e,
                  const Eigen::MatrixXcd& w, int col) {
  cplx acc = 0.0;
  for (size_t m = 0; m < h.size(); ++m)
    acc += std::conj(h[m] + e[m]) * w(m, col);
  return std::norm(acc);
}

}  // namespace

void McReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "user,slot,min_sinr,min_rate,violations,samples,seed\n";
  char buf[160];
  for (int k = 0; k < min_sinr.rows(); ++k)
    for (int n = 0; n < min_sinr.cols(); ++n) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.9g,%.9g,%d,%d,%llu\n", k, n,
                    min_sinr(k, n), min_rate(k, n), violations(k, n), samples,
                    static_cast<unsigned long long>(seed));
      out << buf;
    }
}

McReport mc_worst_case(const SystemConfig& cfg, const ScenarioState& scen,
                       const DesignPoint& design, const Eigen::MatrixXd& gamma,
                       int samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("mc_worst_case: samples >= 1");
  const int K = cfg.num_users, N = cfg.num_slots;
  McReport rep;
  rep.min_sinr.resize(K, N);
  rep.min_rate.resize(K, N);
  rep.violations = Eigen::MatrixXi::Zero(K, N);
  rep.samples = samples;
  rep.seed = seed;

  constexpr int kChunk = 1024;
  for (int k = 0; k < K; ++k) {
    for (int n = 0; n < N; ++n) {
      const auto h = local_channel(cfg, scen, k, n, design.positions[n]);
      const Eigen::MatrixXcd& w = design.beams[n];
      const double sigma2 = cfg.noise_power_w(k);
      const double xi = scen.xi(k);
      const double viol_tol = 1e-6 * std::max(1.0, gamma(k, n));
      double lo = 1e300;
      int viol = 0;
      int done = 0, chunk_id = 0;
      while (done < samples) {
        const int count = std::min(kChunk, samples - done);
        Rng rng(Rng::derive_seed(seed, (static_cast<std::uint64_t>(k * N + n)
                                        << 20) + chunk_id));
        for (int t = 0; t < count; ++t) {
          const auto e = ball_point(rng, cfg.num_antennas, xi, t % 2 == 0);
          double denom = sigma2;
          for (int j = 0; j < K; ++j)
            if (j != k) denom += abs2_inner(h, e, w, j);
          const double sinr = abs2_inner(h, e, w, k) / denom;
          lo = std::min(lo, sinr);
          if (sinr < gamma(k, n) - viol_tol) ++viol;
        }
        done += count;
        ++chunk_id;
      }
      rep.min_sinr(k, n) = lo;
      rep.min_rate(k, n) = std::log2(1.0 + lo);
      rep.violations(k, n) = viol;
      rep.total_violations += viol;
    }
  }
  for (int n = 0; n < N; ++n)
    for (int k = 0; k < K; ++k) rep.worst_sum_rate += rep.min_rate(k, n) / N;
  return rep;
}

void BoundCheck::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "pass,max_ratio\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%d,%.9g\n", pass ? 1 : 0, max_ratio);
  out << buf;
}

BoundCheck check_error_bound(const SystemConfig& cfg, const ScenarioState& scen,
                             int samples, std::uint64_t seed,
                             double boundary_fraction) {
  const int M = cfg.num_antennas;
  Rng rng(seed);
  BoundCheck out;
  for (int t = 0; t < samples; ++t) {
    const int k = static_cast<int>(rng.uniform() * cfg.num_users) % cfg.num_users;
    const int n = static_cast<int>(rng.uniform() * cfg.num_slots) % cfg.num_slots;
    const double r = cfg.pos_error_radius_m(k);
    if (r <= 0.0) continue;

    // feasible random layout
    Eigen::VectorXd x(M);
    const double span = cfg.aperture_m - (M - 1) * cfg.min_spacing_m;
    x(0) = rng.uniform() * span / M;
    for (int m = 1; m < M; ++m)
      x(m) = x(m - 1) + cfg.min_spacing_m + rng.uniform() * span / M;

    // true position drawn around the estimate
    Eigen::Vector2d offset = rng.disk_point(r);
    if (rng.uniform() < boundary_fraction && offset.norm() > 0.0)
      offset *= r / offset.norm();
    const Eigen::Vector2d q_est = scen.q_est(k, n);
    const Eigen::Vector2d q_true = q_est + offset;

    const double h_bs = scen.bs_height;
    const double d_true =
        std::sqrt((scen.bs_xy - q_true).squaredNorm() + h_bs * h_bs);
    const double d_est = scen.est_dist(k, n);
    const double cos_true = h_bs / d_true;
    const double cos_est = h_bs / d_est;
    const double amp_true = std::sqrt(cfg.ref_gain) / d_true;
    const double amp_est = std::sqrt(cfg.ref_gain) / d_est;

    double diff2 = 0.0;
    for (int m = 0; m < M; ++m) {
      const double ph_true = -2.0 * M_PI / cfg.wavelength_m * x(m) * cos_true;
      const double ph_est = -2.0 * M_PI / cfg.wavelength_m * x(m) * cos_est;
      diff2 += std::norm(amp_true * unit_phase(ph_true) -
                         amp_est * unit_phase(ph_est));
    }
    const double xi =
        std::sqrt(M * cfg.ref_gain) * r / (d_true * d_est) *
        (1.0 + 2.0 * M_PI * cfg.aperture_m * h_bs / (cfg.wavelength_m * d_est));
    if (xi > 0.0)
      out.max_ratio = std::max(out.max_ratio, std::sqrt(diff2) / xi);
  }
  out.pass = out.max_ratio <= 1.0;
  return out;
}

GridSearch brute_force_positions(const SystemConfig& cfg,
                                 const ScenarioState& scen, int n,
                                 const Eigen::MatrixXcd& w, double grid_step,
                                 int robust_samples, std::uint64_t seed) {
  const int M = cfg.num_antennas, K = cfg.num_users;
  if (M > 3)
    throw std::invalid_argument("brute_force_positions: grid limited to M <= 3");
  if (!(grid_step > 0.0))
    throw std::invalid_argument("brute_force_positions: grid_step must be > 0");

  auto objective = [&](const Eigen::VectorXd& x) {
    double acc = 0.0;
    for (int k = 0; k < K; ++k) {
      const auto h = local_channel(cfg, scen, k, n, x);
      const double xi = scen.xi(k);
      const double sigma2 = cfg.noise_power_w(k);
      double worst;
      if (K == 1) {
        // exact: the error only acts through its projection on the beam
        cplx acc_h = 0.0;
        double wnorm2 = 0.0;
        for (int m = 0; m < M; ++m) {
          acc_h += std::conj(h[m]) * w(m, 0);
          wnorm2 += std::norm(w(m, 0));
        }
        const double margin = std::abs(acc_h) - xi * std::sqrt(wnorm2);
        worst = std::max(margin, 0.0) * std::max(margin, 0.0) / sigma2;
      } else {
        Rng rng(Rng::derive_seed(seed, static_cast<std::uint64_t>(k) + 1));
        worst = 1e300;
        std::vector<cplx> e(M);
        for (int t = 0; t < robust_samples; ++t) {
          e = ball_point(rng, M, xi, t % 2 == 0);
          double denom = sigma2;
          for (int j = 0; j < K; ++j)
            if (j != k) denom += abs2_inner(h, e, w, j);
          worst = std::min(worst, abs2_inner(h, e, w, k) / denom);
        }
      }
      acc += std::log2(1.0 + worst);
    }
    return acc;
  };

  GridSearch best;
  best.objective = -1e300;
  const double L = cfg.aperture_m, dmin = cfg.min_spacing_m;
  Eigen::VectorXd x(M);
  if (M == 1) {
    for (double x0 = 0.0; x0 <= L + 1e-12; x0 += grid_step) {
      x(0) = std::min(x0, L);
      const double val = objective(x);
      ++best.evaluated;
      if (val > best.objective) {
        best.objective = val;
        best.x = x;
      }
    }
  } else if (M == 2) {
    for (double x0 = 0.0; x0 + dmin <= L + 1e-12; x0 += grid_step)
      for (double x1 = x0 + dmin; x1 <= L + 1e-12; x1 += grid_step) {
        x << x0, std::min(x1, L);
        const double val = objective(x);
        ++best.evaluated;
        if (val > best.objective) {
          best.objective = val;
          best.x = x;
        }
      }
  } else {
    for (double x0 = 0.0; x0 + 2 * dmin <= L + 1e-12; x0 += grid_step)
      for (double x1 = x0 + dmin; x1 + dmin <= L + 1e-12; x1 += grid_step)
        for (double x2 = x1 + dmin; x2 <= L + 1e-12; x2 += grid_step) {
          x << x0, x1, std::min(x2, L);
          const double val = objective(x);
          ++best.evaluated;
          if (val > best.objective) {
            best.objective = val;
            best.x = x;
          }
        }
  }
  return best;
}

void SuiteReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "property,trials,violations\n";
  for (const auto& p : properties)
    out << p.name << "," << p.trials << "," << p.violations << "\n";
  out << "total," << total_trials << "," << total_violations << "\n";
}

SuiteReport surrogate_suite(std::uint64_t seed, long trials) {
  SuiteReport rep;
  rep.seed = seed;
  constexpr double kTol = 1e-9;

  auto record = [&](const std::string& name, long t, long v) {
    rep.properties.push_back({name, t, v});
    rep.total_trials += t;
    rep.total_violations += v;
  };

  {  // product upper bound never crosses the product
    Rng rng(Rng::derive_seed(seed, 1));
    long viol = 0;
    for (long t = 0; t < trials; ++t) {
      const double xi = rng.uniform(1e-3, 10.0), xj = rng.uniform(1e-3, 10.0);
      const double xi0 = rng.uniform(1e-3, 10.0), xj0 = rng.uniform(1e-3, 10.0);
      if (product_upper_bound_eval(xi, xj, xi0, xj0) < xi * xj - kTol) ++viol;
    }
    record("product_upper_bound", trials, viol);
  }
  {  // log minorant below the true rate curve
    Rng rng(Rng::derive_seed(seed, 2));
    long viol = 0;
    for (long t = 0; t < trials; ++t) {
      const double g0 = rng.uniform(0.0, 100.0), g = rng.uniform(0.0, 100.0);
      if (log_minorant(g0).eval(g) > std::log2(1.0 + g) + kTol) ++viol;
    }
    record("log_minorant", trials, viol);
  }
  {  // log minorant tight at the local point
    Rng rng(Rng::derive_seed(seed, 3));
    long viol = 0;
    for (long t = 0; t < trials; ++t) {
      const double g0 = rng.uniform(0.0, 100.0);
      if (std::abs(log_minorant(g0).eval(g0) - std::log2(1.0 + g0)) > kTol)
        ++viol;
    }
    record("log_minorant_tight", trials, viol);
  }
  {  // scalar cosine minorant
    Rng rng(Rng::derive_seed(seed, 4));
    long viol = 0;
    for (long t = 0; t < trials; ++t) {
      const double a = rng.uniform(-12.0, 12.0), a0 = rng.uniform(-12.0, 12.0);
      if (cos_lower_bound(a, a0) > std::cos(a) + kTol) ++viol;
    }
    record("cos_lower_bound", trials, viol);
  }
  {  // quadratic steering surrogate: global minorant and tight at the point
    Rng rng(Rng::derive_seed(seed, 5));
    const long count = std::max<long>(trials / 10, 1);
    long viol = 0;
    for (long t = 0; t < count; ++t) {
      const int m = 2 + t % 3;
      Eigen::VectorXcd w(m);
      for (int i = 0; i < m; ++i) w(i) = cplx(rng.gaussian(), rng.gaussian());
      const double rate = rng.uniform(5.0, 60.0);
      auto draw_x = [&](bool first) {
        Eigen::VectorXd x(m);
        x(0) = rng.uniform(0.0, first ? 0.05 : 0.1);
        for (int i = 1; i < m; ++i) x(i) = x(i - 1) + rng.uniform(0.03, 0.2);
        return x;
      };
      const Eigen::VectorXd x0 = draw_x(true), x = draw_x(false);
      const auto sur = cos_quadratic_surrogate(w, rate, x0);
      auto gain = [&](const Eigen::VectorXd& pos) {
        cplx acc = 0.0;
        for (int p = 0; p < m; ++p) acc += unit_phase(rate * pos(p)) * w(p);
        return std::norm(acc);
      };
      if (sur.eval(x) > gain(x) + kTol) ++viol;
      if (std::abs(sur.eval(x0) - gain(x0)) > kTol * (1.0 + gain(x0))) ++viol;
    }
    record("cos_quadratic_surrogate", count, viol);
  }
  {  // rank-one expansion gap stays psd and exact at the point
    Rng rng(Rng::derive_seed(seed, 6));
    const long count = std::max<long>(trials / 100, 1);
    long viol = 0;
    for (long t = 0; t < count; ++t) {
      const int m = 2 + t % 4;
      Eigen::VectorXcd w(m), w0(m);
      for (int i = 0; i < m; ++i) {
        w(i) = cplx(rng.gaussian(), rng.gaussian());
        w0(i) = cplx(rng.gaussian(), rng.gaussian());
      }
      const Eigen::MatrixXcd gap = w * w.adjoint() - taylor_rank1(w, w0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gap,
                                                         Eigen::EigenvaluesOnly);
      const double scale = 1.0 + gap.cwiseAbs().maxCoeff();
      if (es.eigenvalues().minCoeff() < -kTol * scale) ++viol;
      if ((taylor_rank1(w0, w0) - w0 * w0.adjoint()).cwiseAbs().maxCoeff() >
          kTol * (1.0 + w0.squaredNorm()))
        ++viol;
    }
    record("taylor_rank1_gap", count, viol);
  }
  {  // certified s-procedure blocks imply sampled nonnegativity
    Rng rng(Rng::derive_seed(seed, 7));
    const long count = std::max<long>(trials / 100, 1);
    long viol = 0;
    for (long t = 0; t < count; ++t) {
      const int m = 2 + t % 3;
      const double xi = rng.uniform(0.2, 1.5);
      Eigen::MatrixXcd raw(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) raw(i, j) = cplx(rng.gaussian(), rng.gaussian());
      const Eigen::MatrixXcd a = 0.5 * (raw + raw.adjoint());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ea(a, Eigen::EigenvaluesOnly);
      const double lam = std::max(0.0, -ea.eigenvalues().minCoeff()) + 0.3;
      Eigen::VectorXcd b(m);
      for (int i = 0; i < m; ++i) b(i) = cplx(rng.gaussian(), rng.gaussian());
      const Eigen::MatrixXcd shifted =
          a + lam * Eigen::MatrixXcd::Identity(m, m);
      const double cc = lam * xi * xi +
                        (b.adjoint() * shifted.inverse() * b)(0, 0).real() + 0.1;
      for (int s = 0; s < 100; ++s) {
        Eigen::VectorXcd e(m);
        double nrm2 = 0.0;
        for (int i = 0; i < m; ++i) {
          e(i) = cplx(rng.gaussian(), rng.gaussian());
          nrm2 += std::norm(e(i));
        }
        e *= (s % 2 == 0 ? xi : xi * std::pow(rng.uniform(), 1.0 / (2 * m))) /
             std::sqrt(nrm2);
        const double f =
            (e.adjoint() * a * e)(0, 0).real() + 2.0 * (b.adjoint() * e)(0, 0).real() + cc;
        if (f < -kTol) ++viol;
      }
    }
    record("s_procedure_soundness", count * 100, viol);
  }
  {  // schur predicate equivalence
    Rng rng(Rng::derive_seed(seed, 8));
    const long count = std::max<long>(trials / 100, 1);
    long viol = 0;
    for (long t = 0; t < count; ++t) {
      const int na = 1 + t % 3, nc = 1 + (t / 3) % 3;
      Eigen::MatrixXcd ra(na, na), rc(nc, nc), b(na, nc);
      for (int i = 0; i < na; ++i)
        for (int j = 0; j < na; ++j) ra(i, j) = cplx(rng.gaussian(), rng.gaussian());
      for (int i = 0; i < nc; ++i)
        for (int j = 0; j < nc; ++j) rc(i, j) = cplx(rng.gaussian(), rng.gaussian());
      for (int i = 0; i < na; ++i)
        for (int j = 0; j < nc; ++j) b(i, j) = cplx(rng.gaussian(), rng.gaussian());
      const Eigen::MatrixXcd a =
          ra * ra.adjoint() + 0.5 * Eigen::MatrixXcd::Identity(na, na);
      const auto chk = schur_psd_check(a, b, 0.5 * (rc + rc.adjoint()), 1e-8);
      if (chk.whole_psd != chk.blocks_psd) ++viol;
    }
    record("schur_equivalence", count, viol);
  }
  return rep;
}

}  // namespace mabeam::verify
