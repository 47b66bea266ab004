#include "mabeam/ao.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include <Eigen/Eigenvalues>

#include "mabeam/model.hpp"
#include "mabeam/surrogate.hpp"

namespace mabeam {

namespace {

constexpr double kGammaFloor = 1e-6;
constexpr double kAcceptTol = 1e-9;
constexpr double kMultInit = 1e-6;

double slot_objective(const Eigen::VectorXd& gamma) {
  double acc = 0.0;
  for (int k = 0; k < gamma.size(); ++k) acc += std::log2(1.0 + gamma(k));
  return acc;
}

// Per-slot rescaling of channels and powers to O(1) before assembly; the
// SINR values are invariant under it.
struct SlotScale {
  double h = 1.0;  // channel scale
  double w = 1.0;  // beam scale, sqrt(P_max)
  double p2() const { return h * h * w * w; }
};

SlotScale make_scale(const SystemConfig& cfg, const ScenarioState& scen, int n,
                     const Eigen::VectorXd& x) {
  SlotScale s;
  s.w = std::sqrt(cfg.max_power_w);
  double acc = 0.0;
  for (int k = 0; k < cfg.num_users; ++k)
    acc += scen.est_channel(k, n, x).squaredNorm();
  s.h = std::sqrt(acc / cfg.num_users);
  if (!(s.h > 0.0)) s.h = 1.0;
  return s;
}

void add_lmi(ConicProblem& pb, const LmiBlock& blk) {
  std::vector<int> vars;
  std::vector<Eigen::MatrixXd> coeffs;
  vars.reserve(blk.terms.size());
  for (const auto& [idx, coeff] : blk.terms) {
    vars.push_back(idx);
    coeffs.push_back(hermitian_embed(coeff));
  }
  pb.add_psd(hermitian_embed(blk.constant), vars, coeffs);
}

bool solution_usable(const ConicSolution& sol) {
  if (sol.status == SolveStatus::Optimal) return true;
  if (sol.status == SolveStatus::MaxIterations)
    return sol.gap <= 1e-5 * (1.0 + std::abs(sol.obj)) && sol.pres <= 1e-5;
  return false;
}

Eigen::VectorXd unit_row(int n, int idx, double val) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  r(idx) = val;
  return r;
}

// Variable layout shared by both subproblems (beams only in the first,
// positions only in the second).
struct SlackVars {
  std::vector<int> alpha, beta, gamma, lam, varpi, rho, t;
};

// gamma is optimized in units of its local point; these rows add the cone
// memberships, the link between alpha/beta/gamma, and the rate epigraph.
void add_slack_rows(ConicProblem& pb, const SlackVars& v,
                    const Eigen::VectorXd& gamma0,
                    const Eigen::VectorXd& beta0_scaled,
                    const Eigen::VectorXd& gamma_scale) {
  const int K = static_cast<int>(v.alpha.size());
  const int n = pb.num_vars();
  for (int k = 0; k < K; ++k) {
    const double gs = gamma_scale(k);
    pb.add_nonneg(unit_row(n, v.gamma[k], -1.0), -0.5 * gamma0(k) / gs);
    pb.add_nonneg(unit_row(n, v.lam[k], -1.0), 0.0);
    pb.add_nonneg(unit_row(n, v.varpi[k], -1.0), 0.0);

    // alpha >= 0.5 * (b0/g0 * gamma^2 + g0/b0 * beta^2), tight at the
    // local point, implies alpha >= gamma * beta
    const auto [ca, cb] = product_upper_bound(gamma0(k), beta0_scaled(k));
    Eigen::MatrixXd gw = Eigen::MatrixXd::Zero(2, n);
    gw(0, v.gamma[k]) = -std::sqrt(2.0 * ca) * gs;
    gw(1, v.beta[k]) = -std::sqrt(2.0 * cb);
    pb.add_rotated_soc(unit_row(n, v.alpha[k], -1.0), 0.0,
                       Eigen::VectorXd::Zero(n), 1.0, gw,
                       Eigen::VectorXd::Zero(2));

    // t <= quadratic minorant of log2(1+gamma) trusted on gamma >= gamma0/2
    const auto q = log_minorant(gamma0(k), 0.5 * gamma0(k));
    Eigen::VectorXd gu = Eigen::VectorXd::Zero(n);
    gu(v.gamma[k]) = -q.slope * gs;
    gu(v.t[k]) = 1.0;
    const double hu = q.value0 - q.slope * gamma0(k);
    Eigen::MatrixXd gw2 = Eigen::MatrixXd::Zero(1, n);
    gw2(0, v.gamma[k]) = -gs;
    Eigen::VectorXd hw2(1);
    hw2 << -gamma0(k);
    pb.add_rotated_soc(gu, hu, Eigen::VectorXd::Zero(n),
                       0.5 / q.curvature, gw2, hw2);
  }
}

struct Extracted {
  Eigen::MatrixXcd w;
  Eigen::VectorXd x;
  Eigen::VectorXd alpha, beta, gamma, lambda, varpi;
};

Extracted extract_slacks(const ConicSolution& sol, const SlackVars& v,
                         const Eigen::VectorXd& gamma_scale,
                         const SlotScale& scale) {
  const int K = static_cast<int>(v.alpha.size());
  Extracted e;
  e.alpha.resize(K);
  e.beta.resize(K);
  e.gamma.resize(K);
  e.lambda.resize(K);
  e.varpi.resize(K);
  for (int k = 0; k < K; ++k) {
    e.alpha(k) = sol.x(v.alpha[k]) * scale.p2();
    e.beta(k) = sol.x(v.beta[k]) * scale.p2();
    e.gamma(k) = std::max(sol.x(v.gamma[k]) * gamma_scale(k), 0.0);
    e.lambda(k) = std::max(sol.x(v.lam[k]) * scale.w * scale.w, 0.0);
    e.varpi(k) = std::max(sol.x(v.varpi[k]) * scale.p2(), 0.0);
  }
  return e;
}

Eigen::VectorXd project_positions(const SystemConfig& cfg, Eigen::VectorXd x) {
  std::sort(x.begin(), x.end());
  const int m = static_cast<int>(x.size());
  x(0) = std::max(x(0), 0.0);
  for (int i = 1; i < m; ++i)
    x(i) = std::max(x(i), x(i - 1) + cfg.min_spacing_m);
  x(m - 1) = std::min(x(m - 1), cfg.aperture_m);
  for (int i = m - 2; i >= 0; --i)
    x(i) = std::min(x(i), x(i + 1) - cfg.min_spacing_m);
  x(0) = std::max(x(0), 0.0);
  return x;
}

Eigen::MatrixXcd project_power(const SystemConfig& cfg, Eigen::MatrixXcd w) {
  const double power = w.squaredNorm();
  if (power > cfg.max_power_w)
    w *= std::sqrt(cfg.max_power_w / power);
  return w;
}

Eigen::MatrixXcd drop_column(const Eigen::MatrixXcd& w, int k) {
  Eigen::MatrixXcd out(w.rows(), w.cols() - 1);
  int c = 0;
  for (int j = 0; j < w.cols(); ++j)
    if (j != k) out.col(c++) = w.col(j);
  return out;
}

}  // namespace

bool AoTrace::monotone(double tol) const {
  double prev = phi_init;
  for (const auto& it : iterations) {
    if (it.phi < prev - tol) return false;
    prev = it.phi;
  }
  return true;
}

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::Proposed: return "proposed";
    case Scheme::Fpa: return "fpa";
    case Scheme::Fb: return "fb";
    case Scheme::Upper: return "upper";
  }
  return "unknown";
}

std::pair<DesignPoint, SlackState> initialize(const SystemConfig& cfg,
                                              const ScenarioState& scen) {
  cfg.validate();
  const int M = cfg.num_antennas, K = cfg.num_users, N = cfg.num_slots;

  DesignPoint design;
  design.beams.resize(N);
  design.positions.resize(N);

  Eigen::VectorXd grid(M);
  if (M == 1)
    grid(0) = 0.0;
  else
    for (int m = 0; m < M; ++m) grid(m) = m * cfg.aperture_m / (M - 1);

  SlackState slacks;
  slacks.alpha.resize(K, N);
  slacks.beta.resize(K, N);
  slacks.gamma.resize(K, N);
  slacks.lambda = Eigen::MatrixXd::Constant(K, N, kMultInit);
  slacks.varpi = Eigen::MatrixXd::Constant(K, N, kMultInit);
  slacks.varrho = Eigen::MatrixXd::Zero(K, N);

  const double per_user = 0.9 * cfg.max_power_w / K;
  for (int n = 0; n < N; ++n) {
    design.positions[n] = grid;
    Eigen::MatrixXcd w(M, K);
    for (int k = 0; k < K; ++k) {
      const Eigen::VectorXcd h = scen.est_channel(k, n, grid);
      w.col(k) = std::sqrt(per_user) * h / h.norm();
    }
    design.beams[n] = w;
    for (int k = 0; k < K; ++k) {
      const Eigen::VectorXcd h = scen.est_channel(k, n, grid);
      const double xi = scen.xi(k);
      const double margin = std::abs(h.dot(w.col(k))) - xi * w.col(k).norm();
      if (margin <= 0.0) slacks.restoration_flag = true;
      slacks.alpha(k, n) = std::max(margin, 0.0) * std::max(margin, 0.0);
      double beta = cfg.noise_power_w(k);
      for (int j = 0; j < K; ++j) {
        if (j == k) continue;
        const double cross = std::abs(h.dot(w.col(j))) + xi * w.col(j).norm();
        beta += cross * cross;
      }
      slacks.beta(k, n) = beta;
      slacks.gamma(k, n) = std::max(slacks.alpha(k, n) / beta, kGammaFloor);
    }
  }
  return {design, slacks};
}

SlotCert certify_slot(const SystemConfig& cfg, const ScenarioState& scen, int n,
                      const Eigen::MatrixXcd& w, const Eigen::VectorXd& x,
                      const SolverSettings& solver) {
  const int K = cfg.num_users;
  SlotCert cert;
  cert.alpha.resize(K);
  cert.beta.resize(K);
  cert.gamma.resize(K);
  const SlotScale scale = make_scale(cfg, scen, n, x);

  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXcd h = scen.est_channel(k, n, x);
    const double xi = scen.xi(k);
    // the ball minimum of |(h+e)^H w_k|^2 is attained by rotating e against
    // the beam, so it has a closed form
    const double margin = std::abs(h.dot(w.col(k))) - xi * w.col(k).norm();
    cert.alpha(k) = std::max(margin, 0.0) * std::max(margin, 0.0);

    double beta;
    if (K == 1) {
      beta = cfg.noise_power_w(k);
    } else if (xi <= 1e-300) {
      beta = cfg.noise_power_w(k);
      for (int j = 0; j < K; ++j)
        if (j != k) beta += std::norm(h.dot(w.col(j)));
    } else if (K == 2) {
      const int j = 1 - k;
      const double cross = std::abs(h.dot(w.col(j))) + xi * w.col(j).norm();
      beta = cross * cross + cfg.noise_power_w(k);
    } else {
      // tight certificate from the interference LMI at fixed beams
      const Eigen::MatrixXcd others = drop_column(w, k) / scale.w;
      const double g_over_d =
          std::sqrt(cfg.ref_gain) / (scen.est_dist(k, n) * scale.h);
      const Eigen::VectorXcd a =
          steering(x, scen.est_aoa(k, n), cfg.wavelength_m);
      AffineCRow row;
      row.value0 = (a.adjoint() * others).transpose();
      row.slope = Eigen::MatrixXcd::Zero(K - 1, x.size());
      ConicProblem pb;
      const int vb = pb.add_var("beta");
      const int vv = pb.add_var("varpi");
      Eigen::VectorXd c(2);
      c << -1.0, 0.0;
      pb.set_objective(c);
      pb.add_nonneg(unit_row(2, vv, -1.0), 0.0);
      add_lmi(pb, interference_lmi_positions(
                      others, g_over_d, xi / scale.h,
                      cfg.noise_power_w(k) / scale.p2(), row, x, {}, vb, vv));
      const auto sol = solve(pb, solver);
      if (solution_usable(sol)) {
        beta = sol.x(vb) * scale.p2();
      } else {
        beta = cfg.noise_power_w(k);
        for (int j = 0; j < K; ++j) {
          if (j == k) continue;
          const double cross = std::abs(h.dot(w.col(j))) + xi * w.col(j).norm();
          beta += cross * cross;
        }
      }
    }
    cert.beta(k) = beta;
    cert.gamma(k) = cert.alpha(k) / beta;
  }
  return cert;
}

double certified_objective(const SystemConfig& cfg, const ScenarioState& scen,
                           const DesignPoint& design,
                           const SolverSettings& solver) {
  double acc = 0.0;
  for (int n = 0; n < design.num_slots(); ++n)
    acc += slot_objective(
        certify_slot(cfg, scen, n, design.beams[n], design.positions[n], solver)
            .gamma);
  return acc / design.num_slots();
}

SlotStep solve_beamforming_slot(const SystemConfig& cfg,
                                const ScenarioState& scen, int n,
                                const SlotLocal& local, const AoOptions& opts) {
  const int M = cfg.num_antennas, K = cfg.num_users;
  const SlotScale scale = make_scale(cfg, scen, n, local.x);

  std::vector<Eigen::VectorXcd> h(K);
  for (int k = 0; k < K; ++k)
    h[k] = scen.est_channel(k, n, local.x) / scale.h;

  SlotStep out;
  out.point = local;

  for (int attempt = 0; attempt < 2; ++attempt) {
    const double shrink = attempt == 0 ? 1.0 : 0.5;
    Eigen::VectorXd gamma0(K), beta0(K), gamma_scale(K);
    for (int k = 0; k < K; ++k) {
      gamma0(k) = std::max(local.gamma(k) * shrink, kGammaFloor);
      beta0(k) = std::max(local.beta(k) / scale.p2(),
                          cfg.noise_power_w(k) / scale.p2());
      gamma_scale(k) = gamma0(k);
    }

    ConicProblem pb;
    std::vector<std::vector<int>> wre(K), wim(K);
    for (int k = 0; k < K; ++k) {
      const int r = pb.add_var("w_re" + std::to_string(k), M);
      const int i = pb.add_var("w_im" + std::to_string(k), M);
      for (int p = 0; p < M; ++p) {
        wre[k].push_back(r + p);
        wim[k].push_back(i + p);
      }
    }
    SlackVars v;
    for (int k = 0; k < K; ++k) {
      const auto sk = std::to_string(k);
      v.alpha.push_back(pb.add_var("alpha" + sk));
      v.beta.push_back(pb.add_var("beta" + sk));
      v.gamma.push_back(pb.add_var("gamma" + sk));
      v.lam.push_back(pb.add_var("lambda" + sk));
      v.varpi.push_back(pb.add_var("varpi" + sk));
      v.t.push_back(pb.add_var("t" + sk));
    }
    const int nv = pb.num_vars();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
    for (int k = 0; k < K; ++k) c(v.t[k]) = 1.0;
    pb.set_objective(c);

    add_slack_rows(pb, v, gamma0, beta0, gamma_scale);

    {  // total power within the (scaled) unit budget
      Eigen::MatrixXd g = Eigen::MatrixXd::Zero(1 + 2 * M * K, nv);
      Eigen::VectorXd hh = Eigen::VectorXd::Zero(1 + 2 * M * K);
      hh(0) = 1.0;
      int r = 1;
      for (int k = 0; k < K; ++k) {
        for (int p = 0; p < M; ++p) g(r++, wre[k][p]) = -1.0;
        for (int p = 0; p < M; ++p) g(r++, wim[k][p]) = -1.0;
      }
      pb.add_soc(g, hh);
    }

    for (int k = 0; k < K; ++k) {
      const Eigen::VectorXcd w0 = local.w.col(k) / scale.w;
      const double xi = scen.xi(k) / scale.h;
      const double sigma2 = cfg.noise_power_w(k) / scale.p2();
      if (xi > 1e-12) {
        add_lmi(pb, beamforming_signal_lmi(h[k], xi, w0, wre[k], wim[k],
                                           v.alpha[k], v.lam[k]));
      } else {
        // uncertainty-free limit: the signal constraint collapses to the
        // linearized nominal bound h^H Wc(w) h >= alpha, affine in w
        Eigen::VectorXd g = Eigen::VectorXd::Zero(nv);
        const std::complex<double> hw0 = h[k].dot(w0);
        for (int p = 0; p < M; ++p) {
          const std::complex<double> hp = std::conj(h[k](p));
          g(wre[k][p]) = -2.0 * (hp * std::conj(hw0)).real();
          g(wim[k][p]) = -2.0 * ((std::complex<double>(0, 1) * hp) *
                                 std::conj(hw0))
                                    .real();
        }
        g(v.alpha[k]) = 1.0;
        pb.add_nonneg(g, -std::norm(hw0));
      }
      std::vector<std::vector<int>> ore, oim;
      for (int j = 0; j < K; ++j) {
        if (j == k) continue;
        ore.push_back(wre[j]);
        oim.push_back(wim[j]);
      }
      if (xi > 1e-12) {
        add_lmi(pb, interference_lmi(h[k], xi, sigma2, ore, oim, v.beta[k],
                                     v.varpi[k]));
      } else if (K > 1) {
        // Schur-reduced nominal form: beta - sigma2 >= ||W_other^H h||^2
        Eigen::VectorXd gu = unit_row(nv, v.beta[k], -1.0);
        Eigen::MatrixXd gw = Eigen::MatrixXd::Zero(2 * (K - 1), nv);
        for (int j = 0; j < K - 1; ++j)
          for (int p = 0; p < M; ++p) {
            const std::complex<double> hp = h[k](p);
            gw(2 * j, ore[j][p]) = -hp.real();
            gw(2 * j, oim[j][p]) = -hp.imag();
            gw(2 * j + 1, ore[j][p]) = hp.imag();
            gw(2 * j + 1, oim[j][p]) = -hp.real();
          }
        pb.add_rotated_soc(gu, -sigma2, Eigen::VectorXd::Zero(nv), 0.5, gw,
                           Eigen::VectorXd::Zero(2 * (K - 1)));
      } else {
        pb.add_nonneg(unit_row(nv, v.beta[k], -1.0), -sigma2);
      }
    }

    const auto sol = solve(pb, opts.solver);
    out.status = sol.status;
    out.retries = attempt;
    if (!solution_usable(sol)) continue;

    Eigen::MatrixXcd w(M, K);
    for (int k = 0; k < K; ++k)
      for (int p = 0; p < M; ++p)
        w(p, k) = scale.w * std::complex<double>(sol.x(wre[k][p]),
                                                 sol.x(wim[k][p]));
    out.point.w = project_power(cfg, w);
    const Extracted e = extract_slacks(sol, v, gamma_scale, scale);
    out.point.alpha = e.alpha;
    out.point.beta = e.beta;
    out.point.gamma = e.gamma;
    out.point.lambda = e.lambda;
    out.point.varpi = e.varpi;
    out.objective = slot_objective(e.gamma);
    out.usable = true;
    return out;
  }
  return out;
}

SlotStep solve_positions_slot(const SystemConfig& cfg, const ScenarioState& scen,
                              int n, const SlotLocal& local,
                              const AoOptions& opts, double cap_m) {
  const int M = cfg.num_antennas, K = cfg.num_users;
  const SlotScale scale = make_scale(cfg, scen, n, local.x);
  const Eigen::VectorXd& x0 = local.x;

  SlotStep out;
  out.point = local;

  for (int attempt = 0; attempt < 2; ++attempt) {
    const double shrink = attempt == 0 ? 1.0 : 0.5;
    Eigen::VectorXd gamma0(K), beta0(K), gamma_scale(K);
    for (int k = 0; k < K; ++k) {
      gamma0(k) = std::max(local.gamma(k) * shrink, kGammaFloor);
      beta0(k) = std::max(local.beta(k) / scale.p2(),
                          cfg.noise_power_w(k) / scale.p2());
      gamma_scale(k) = gamma0(k);
    }

    ConicProblem pb;
    const int vx = pb.add_var("x", M);
    std::vector<int> xvars(M);
    for (int p = 0; p < M; ++p) xvars[p] = vx + p;
    SlackVars v;
    for (int k = 0; k < K; ++k) {
      const auto sk = std::to_string(k);
      v.alpha.push_back(pb.add_var("alpha" + sk));
      v.beta.push_back(pb.add_var("beta" + sk));
      v.gamma.push_back(pb.add_var("gamma" + sk));
      v.lam.push_back(pb.add_var("lambda" + sk));
      v.varpi.push_back(pb.add_var("varpi" + sk));
      v.rho.push_back(pb.add_var("rho" + sk));
      v.t.push_back(pb.add_var("t" + sk));
    }
    const int nv = pb.num_vars();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
    for (int k = 0; k < K; ++k) c(v.t[k]) = 1.0;
    pb.set_objective(c);

    // box, spacing and per-step displacement limits
    pb.add_nonneg(unit_row(nv, xvars[0], -1.0), 0.0);
    pb.add_nonneg(unit_row(nv, xvars[M - 1], 1.0), cfg.aperture_m);
    for (int p = 0; p + 1 < M; ++p) {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(nv);
      g(xvars[p + 1]) = -1.0;
      g(xvars[p]) = 1.0;
      pb.add_nonneg(g, -cfg.min_spacing_m);
    }
    for (int p = 0; p < M; ++p) {
      pb.add_nonneg(unit_row(nv, xvars[p], 1.0), cap_m + x0(p));
      pb.add_nonneg(unit_row(nv, xvars[p], -1.0), cap_m - x0(p));
    }

    add_slack_rows(pb, v, gamma0, beta0, gamma_scale);

    for (int k = 0; k < K; ++k) {
      const Eigen::VectorXcd wk = local.w.col(k) / scale.w;
      const Eigen::MatrixXcd others = drop_column(local.w, k) / scale.w;
      const double rate = scen.phase_rate(k, n);
      const double g_over_d =
          std::sqrt(cfg.ref_gain) / (scen.est_dist(k, n) * scale.h);
      const double xi = scen.xi(k) / scale.h;
      const auto lin = steering_linearizations(rank1_decomp(wk), rate, x0, others);
      const double sigma2 = cfg.noise_power_w(k) / scale.p2();

      if (xi > 1e-12) {
        add_lmi(pb, position_signal_lmi(wk, g_over_d, xi, lin, x0, xvars,
                                        v.alpha[k], v.lam[k], v.rho[k]));
        add_lmi(pb, interference_lmi_positions(others, g_over_d, xi, sigma2,
                                               lin.a_row, x0, xvars, v.beta[k],
                                               v.varpi[k]));
      } else {
        // uncertainty-free limit: alpha bounded by the steering-gain slack
        // directly, interference in Schur-reduced form with the linearized
        // channel row
        Eigen::VectorXd g = Eigen::VectorXd::Zero(nv);
        g(v.rho[k]) = -g_over_d * g_over_d;
        g(v.alpha[k]) = 1.0;
        pb.add_nonneg(g, 0.0);
        if (K > 1) {
          Eigen::VectorXd gu = unit_row(nv, v.beta[k], -1.0);
          Eigen::MatrixXd gw = Eigen::MatrixXd::Zero(2 * (K - 1), nv);
          Eigen::VectorXd hw = Eigen::VectorXd::Zero(2 * (K - 1));
          const Eigen::VectorXcd row0 =
              lin.a_row.value0 -
              lin.a_row.slope * x0.cast<std::complex<double>>();
          for (int j = 0; j < K - 1; ++j) {
            hw(2 * j) = g_over_d * row0(j).real();
            hw(2 * j + 1) = g_over_d * row0(j).imag();
            for (int p = 0; p < M; ++p) {
              const std::complex<double> sl = g_over_d * lin.a_row.slope(j, p);
              gw(2 * j, xvars[p]) = -sl.real();
              gw(2 * j + 1, xvars[p]) = -sl.imag();
            }
          }
          pb.add_rotated_soc(gu, -sigma2, Eigen::VectorXd::Zero(nv), 0.5, gw,
                             hw);
        } else {
          pb.add_nonneg(unit_row(nv, v.beta[k], -1.0), -sigma2);
        }
      }

      // rho lower-bounded by the concave quadratic minorant of the
      // steering gain |a(x)^H w|^2
      const auto sur = cos_quadratic_surrogate(wk, rate, x0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-sur.x2);
      const Eigen::VectorXd ev = es.eigenvalues();
      const double ev_tol = 1e-12 * (1.0 + ev.maxCoeff());
      int rank = 0;
      for (int i = 0; i < M; ++i)
        if (ev(i) > ev_tol) ++rank;
      Eigen::MatrixXd gw = Eigen::MatrixXd::Zero(rank, nv);
      int r = 0;
      for (int i = 0; i < M; ++i) {
        if (ev(i) <= ev_tol) continue;
        const Eigen::VectorXd row = std::sqrt(ev(i)) * es.eigenvectors().col(i);
        for (int p = 0; p < M; ++p) gw(r, xvars[p]) = -row(p);
        ++r;
      }
      Eigen::VectorXd gu = Eigen::VectorXd::Zero(nv);
      for (int p = 0; p < M; ++p) gu(xvars[p]) = -sur.y(p);
      gu(v.rho[k]) = 1.0;
      pb.add_rotated_soc(gu, sur.z, Eigen::VectorXd::Zero(nv), 1.0, gw,
                         Eigen::VectorXd::Zero(rank));
    }

    const auto sol = solve(pb, opts.solver);
    out.status = sol.status;
    out.retries = attempt;
    if (!solution_usable(sol)) continue;

    Eigen::VectorXd xnew(M);
    for (int p = 0; p < M; ++p) xnew(p) = sol.x(xvars[p]);
    out.point.x = project_positions(cfg, xnew);
    const Extracted e = extract_slacks(sol, v, gamma_scale, scale);
    out.point.alpha = e.alpha;
    out.point.beta = e.beta;
    out.point.gamma = e.gamma;
    out.point.lambda = e.lambda;
    out.point.varpi = e.varpi;
    out.objective = slot_objective(e.gamma);
    out.usable = true;
    return out;
  }
  return out;
}

namespace {

struct SlotWork {
  SlotLocal inc;
  double objective = 0.0;
  double cap = 0.0;
  bool flagged = false;
  SlotOutcome outcome;
};

void run_slot(const SystemConfig& cfg, const ScenarioState& scen, int n,
              const AoOptions& opts, Scheme scheme, SlotWork& w) {
  const auto t0 = std::chrono::steady_clock::now();
  SlotOutcome& out = w.outcome;
  out = SlotOutcome{};

  if (scheme != Scheme::Fb) {
    const SlotStep step = solve_beamforming_slot(cfg, scen, n, w.inc, opts);
    out.bf_ran = true;
    out.bf_status = step.status;
    if (step.usable) {
      const SlotCert cert =
          certify_slot(cfg, scen, n, step.point.w, w.inc.x, opts.solver);
      const double cert_obj = slot_objective(cert.gamma);
      const bool cert_better = cert_obj >= step.objective;
      const double best = std::max(cert_obj, step.objective);
      if (best >= w.objective - kAcceptTol) {
        w.inc.w = step.point.w;
        w.inc.lambda = step.point.lambda;
        w.inc.varpi = step.point.varpi;
        if (cert_better) {
          w.inc.alpha = cert.alpha;
          w.inc.beta = cert.beta;
          w.inc.gamma = cert.gamma;
        } else {
          w.inc.alpha = step.point.alpha;
          w.inc.beta = step.point.beta;
          w.inc.gamma = step.point.gamma;
        }
        w.objective = best;
        out.bf_accepted = true;
      }
    } else {
      w.flagged = true;
    }
  }

  if (scheme != Scheme::Fpa) {
    const SlotStep step = solve_positions_slot(cfg, scen, n, w.inc, opts, w.cap);
    out.pos_ran = true;
    out.pos_status = step.status;
    bool accepted = false;
    if (step.usable) {
      const SlotCert cert =
          certify_slot(cfg, scen, n, w.inc.w, step.point.x, opts.solver);
      const double cert_obj = slot_objective(cert.gamma);
      if (cert_obj >= w.objective - kAcceptTol) {
        w.inc.x = step.point.x;
        w.inc.alpha = cert.alpha;
        w.inc.beta = cert.beta;
        w.inc.gamma = cert.gamma;
        w.inc.lambda = step.point.lambda;
        w.inc.varpi = step.point.varpi;
        w.objective = cert_obj;
        out.pos_accepted = true;
        accepted = true;
      }
    } else {
      w.flagged = true;
    }
    if (!accepted) w.cap *= 0.5;
  }

  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
}

}  // namespace

AoResult run(const SystemConfig& cfg, const ScenarioState& scen,
             const AoOptions& opts, Scheme scheme) {
  cfg.validate();
  const int N = cfg.num_slots, K = cfg.num_users;
  auto [design, slacks] = initialize(cfg, scen);

  std::vector<SlotWork> work(N);
  for (int n = 0; n < N; ++n) {
    SlotWork& w = work[n];
    w.inc.w = design.beams[n];
    w.inc.x = design.positions[n];
    w.inc.alpha = slacks.alpha.col(n);
    w.inc.beta = slacks.beta.col(n);
    w.inc.gamma = slacks.gamma.col(n);
    w.inc.lambda = slacks.lambda.col(n);
    w.inc.varpi = slacks.varpi.col(n);
    w.objective = slot_objective(w.inc.gamma);
    w.cap = opts.displacement_cap_wavelengths * cfg.wavelength_m;
  }

  AoResult res;
  res.trace.phi_init = 0.0;
  for (const auto& w : work) res.trace.phi_init += w.objective / N;

  double phi_prev = res.trace.phi_init;
  for (int l = 0; l < opts.max_outer; ++l) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Eigen::VectorXd> x_before(N);
    for (int n = 0; n < N; ++n) x_before[n] = work[n].inc.x;

    const int threads = std::max(1, std::min(opts.workers, N));
    if (threads == 1) {
      for (int n = 0; n < N; ++n) run_slot(cfg, scen, n, opts, scheme, work[n]);
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t]() {
          for (int n = t; n < N; n += threads)
            run_slot(cfg, scen, n, opts, scheme, work[n]);
        });
      for (auto& th : pool) th.join();
    }

    AoIteration it;
    double step_sq = 0.0;
    for (int n = 0; n < N; ++n) {
      it.slots.push_back(work[n].outcome);
      step_sq += (work[n].inc.x - x_before[n]).squaredNorm();
      it.phi += work[n].objective / N;
    }
    it.step_norm = std::sqrt(step_sq);
    it.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    res.trace.iterations.push_back(it);

    const double phi = it.phi;
    if (std::abs(phi - phi_prev) <= opts.epsilon) break;
    phi_prev = phi;
  }

  res.design.beams.resize(N);
  res.design.positions.resize(N);
  res.slacks.alpha.resize(K, N);
  res.slacks.beta.resize(K, N);
  res.slacks.gamma.resize(K, N);
  res.slacks.lambda.resize(K, N);
  res.slacks.varpi.resize(K, N);
  res.slacks.varrho = Eigen::MatrixXd::Zero(K, N);
  res.slacks.restoration_flag = slacks.restoration_flag;
  for (int n = 0; n < N; ++n) {
    res.design.beams[n] = work[n].inc.w;
    res.design.positions[n] = work[n].inc.x;
    res.slacks.alpha.col(n) = work[n].inc.alpha;
    res.slacks.beta.col(n) = work[n].inc.beta;
    res.slacks.gamma.col(n) = work[n].inc.gamma;
    res.slacks.lambda.col(n) = work[n].inc.lambda;
    res.slacks.varpi.col(n) = work[n].inc.varpi;
    if (work[n].flagged) res.trace.flagged_slots.push_back(n);
  }
  return res;
}

double design_violation(const SystemConfig& cfg, const DesignPoint& design) {
  double worst = 0.0;
  for (int n = 0; n < design.num_slots(); ++n) {
    const double power = design.beams[n].squaredNorm();
    worst = std::max(worst, (power - cfg.max_power_w) / cfg.max_power_w);
    const Eigen::VectorXd& x = design.positions[n];
    worst = std::max(worst, -x(0));
    worst = std::max(worst, x(x.size() - 1) - cfg.aperture_m);
    for (int p = 0; p + 1 < x.size(); ++p)
      worst = std::max(worst, cfg.min_spacing_m - (x(p + 1) - x(p)));
  }
  return worst;
}

}  // namespace mabeam
