#include "mabeam/surrogate.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace mabeam {

using cplx = std::complex<double>;
static const cplx kJ{0.0, 1.0};

Eigen::MatrixXcd LmiBlock::eval(const Eigen::VectorXd& vars) const {
  Eigen::MatrixXcd m = constant;
  for (const auto& [idx, coeff] : terms) m += vars(idx) * coeff;
  return m;
}

void LmiBlock::add_term(int var, const Eigen::MatrixXcd& coeff) {
  const double scale = 1.0 + coeff.cwiseAbs().maxCoeff();
  if ((coeff - coeff.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw std::invalid_argument("LmiBlock: non-Hermitian coefficient");
  terms.emplace_back(var, 0.5 * (coeff + coeff.adjoint()));
}

LmiBlock s_procedure_lmi(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b,
                         double c, double xi, int lambda_var) {
  const int d = static_cast<int>(a.rows());
  const double scale = 1.0 + a.cwiseAbs().maxCoeff();
  if ((a - a.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw std::invalid_argument("s_procedure_lmi: A must be Hermitian");
  LmiBlock blk;
  blk.dim = d + 1;
  blk.constant = Eigen::MatrixXcd::Zero(d + 1, d + 1);
  blk.constant.topLeftCorner(d, d) = 0.5 * (a + a.adjoint());
  blk.constant.topRightCorner(d, 1) = b;
  blk.constant.bottomLeftCorner(1, d) = b.adjoint();
  blk.constant(d, d) = c;
  Eigen::MatrixXcd lam = Eigen::MatrixXcd::Zero(d + 1, d + 1);
  lam.topLeftCorner(d, d).setIdentity();
  lam(d, d) = -xi * xi;
  blk.add_term(lambda_var, lam);
  return blk;
}

Eigen::MatrixXcd schur_assemble(const Eigen::MatrixXcd& a,
                                const Eigen::MatrixXcd& b,
                                const Eigen::MatrixXcd& c) {
  if (a.rows() != b.rows() || c.rows() != b.cols())
    throw std::invalid_argument("schur_assemble: dimension mismatch");
  const int na = static_cast<int>(a.rows()), nc = static_cast<int>(c.rows());
  Eigen::MatrixXcd m(na + nc, na + nc);
  m.topLeftCorner(na, na) = a;
  m.topRightCorner(na, nc) = b;
  m.bottomLeftCorner(nc, na) = b.adjoint();
  m.bottomRightCorner(nc, nc) = c;
  return m;
}

namespace {
bool psd_eig(const Eigen::MatrixXcd& m, double tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()),
                                                     Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}
}  // namespace

SchurCheck schur_psd_check(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                           const Eigen::MatrixXcd& c, double tol) {
  SchurCheck out;
  out.whole_psd = psd_eig(schur_assemble(a, b, c), tol);
  const Eigen::MatrixXcd comp = c - b.adjoint() * a.inverse() * b;
  out.blocks_psd = psd_eig(a, tol) && psd_eig(comp, tol);
  return out;
}

std::pair<double, double> product_upper_bound(double xi0, double xj0) {
  if (!(xi0 > 0.0) || !(xj0 > 0.0))
    throw std::invalid_argument("product_upper_bound: local points must be > 0");
  return {0.5 * xj0 / xi0, 0.5 * xi0 / xj0};
}

double product_upper_bound_eval(double xi, double xj, double xi0, double xj0) {
  const auto [ca, cb] = product_upper_bound(xi0, xj0);
  return ca * xi * xi + cb * xj * xj;
}

Eigen::MatrixXcd taylor_rank1(const Eigen::VectorXcd& w,
                              const Eigen::VectorXcd& w0) {
  return w * w0.adjoint() + w0 * w.adjoint() - w0 * w0.adjoint();
}

LmiBlock beamforming_signal_lmi(const Eigen::VectorXcd& h_hat, double xi,
                                const Eigen::VectorXcd& w0,
                                const std::vector<int>& w_re_vars,
                                const std::vector<int>& w_im_vars,
                                int alpha_var, int lambda_var) {
  const int m = static_cast<int>(h_hat.size());
  LmiBlock blk;
  blk.dim = m + 1;

  auto lifted = [&](const Eigen::MatrixXcd& dw) {
    // [[dW, dW h], [h^H dW, h^H dW h]] for a Hermitian increment dW
    Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(m + 1, m + 1);
    full.topLeftCorner(m, m) = dw;
    full.topRightCorner(m, 1) = dw * h_hat;
    full.bottomLeftCorner(1, m) = h_hat.adjoint() * dw;
    full(m, m) = (h_hat.adjoint() * dw * h_hat)(0, 0);
    return full;
  };

  blk.constant = lifted(-w0 * w0.adjoint());
  for (int p = 0; p < m; ++p) {
    Eigen::VectorXcd ep = Eigen::VectorXcd::Zero(m);
    ep(p) = 1.0;
    const Eigen::MatrixXcd d_re = ep * w0.adjoint() + w0 * ep.adjoint();
    const Eigen::MatrixXcd d_im =
        (kJ * ep) * w0.adjoint() + w0 * (kJ * ep).adjoint();
    blk.add_term(w_re_vars[p], lifted(d_re));
    blk.add_term(w_im_vars[p], lifted(d_im));
  }
  Eigen::MatrixXcd da = Eigen::MatrixXcd::Zero(m + 1, m + 1);
  da(m, m) = -1.0;
  blk.add_term(alpha_var, da);
  Eigen::MatrixXcd dl = Eigen::MatrixXcd::Zero(m + 1, m + 1);
  dl.topLeftCorner(m, m).setIdentity();
  dl(m, m) = -xi * xi;
  blk.add_term(lambda_var, dl);
  return blk;
}

LmiBlock interference_lmi(const Eigen::VectorXcd& h_hat, double xi,
                          double sigma2,
                          const std::vector<std::vector<int>>& wj_re_vars,
                          const std::vector<std::vector<int>>& wj_im_vars,
                          int beta_var, int varpi_var) {
  const int m = static_cast<int>(h_hat.size());
  const int km1 = static_cast<int>(wj_re_vars.size());
  const int dim = 1 + km1 + m;
  LmiBlock blk;
  blk.dim = dim;
  blk.constant = Eigen::MatrixXcd::Zero(dim, dim);
  blk.constant(0, 0) = -sigma2;
  blk.constant.block(1, 1, km1, km1).setIdentity();

  Eigen::MatrixXcd db = Eigen::MatrixXcd::Zero(dim, dim);
  db(0, 0) = 1.0;
  blk.add_term(beta_var, db);
  Eigen::MatrixXcd dv = Eigen::MatrixXcd::Zero(dim, dim);
  dv(0, 0) = -1.0;
  dv.bottomRightCorner(m, m).setIdentity();
  blk.add_term(varpi_var, dv);

  for (int j = 0; j < km1; ++j) {
    for (int p = 0; p < m; ++p) {
      // real part of beam component p of interferer j
      Eigen::MatrixXcd dre = Eigen::MatrixXcd::Zero(dim, dim);
      dre(0, 1 + j) = std::conj(h_hat(p));
      dre(1 + j, 0) = h_hat(p);
      dre(1 + j, 1 + km1 + p) = xi;
      dre(1 + km1 + p, 1 + j) = xi;
      blk.add_term(wj_re_vars[j][p], dre);
      // imaginary part
      Eigen::MatrixXcd dim_ = Eigen::MatrixXcd::Zero(dim, dim);
      dim_(0, 1 + j) = kJ * std::conj(h_hat(p));
      dim_(1 + j, 0) = -kJ * h_hat(p);
      dim_(1 + j, 1 + km1 + p) = -kJ * xi;
      dim_(1 + km1 + p, 1 + j) = kJ * xi;
      blk.add_term(wj_im_vars[j][p], dim_);
    }
  }
  return blk;
}

LmiBlock interference_lmi_positions(const Eigen::MatrixXcd& w_others,
                                    double g_over_d, double xi, double sigma2,
                                    const AffineCRow& a_row,
                                    const Eigen::VectorXd& x0,
                                    const std::vector<int>& x_vars,
                                    int beta_var, int varpi_var) {
  const int m = static_cast<int>(w_others.rows());
  const int km1 = static_cast<int>(w_others.cols());
  const int dim = 1 + km1 + m;
  LmiBlock blk;
  blk.dim = dim;
  blk.constant = Eigen::MatrixXcd::Zero(dim, dim);
  blk.constant(0, 0) = -sigma2;
  blk.constant.block(1, 1, km1, km1).setIdentity();
  blk.constant.block(1, 1 + km1, km1, m) = xi * w_others.adjoint();
  blk.constant.block(1 + km1, 1, m, km1) = xi * w_others;

  // channel row at the expansion point, minus the slope offset
  const Eigen::VectorXcd row0 =
      a_row.value0 - a_row.slope * x0.cast<cplx>();
  for (int j = 0; j < km1; ++j) {
    blk.constant(0, 1 + j) = g_over_d * row0(j);
    blk.constant(1 + j, 0) = std::conj(g_over_d * row0(j));
  }
  for (size_t p = 0; p < x_vars.size(); ++p) {
    Eigen::MatrixXcd dx = Eigen::MatrixXcd::Zero(dim, dim);
    for (int j = 0; j < km1; ++j) {
      dx(0, 1 + j) = g_over_d * a_row.slope(j, p);
      dx(1 + j, 0) = std::conj(g_over_d * a_row.slope(j, p));
    }
    blk.add_term(x_vars[p], dx);
  }

  Eigen::MatrixXcd db = Eigen::MatrixXcd::Zero(dim, dim);
  db(0, 0) = 1.0;
  blk.add_term(beta_var, db);
  Eigen::MatrixXcd dv = Eigen::MatrixXcd::Zero(dim, dim);
  dv(0, 0) = -1.0;
  dv.bottomRightCorner(m, m).setIdentity();
  blk.add_term(varpi_var, dv);
  return blk;
}

Rank1 rank1_decomp(const Eigen::VectorXcd& w) {
  Rank1 r;
  const double nrm = w.norm();
  if (nrm == 0.0) return r;
  r.chi = nrm * nrm;
  r.u = w / nrm;
  r.ok = true;
  return r;
}

SteeringLin steering_linearizations(const Rank1& wk, double theta_rate,
                                    const Eigen::VectorXd& x0,
                                    const Eigen::MatrixXcd& w_others) {
  const int m = static_cast<int>(x0.size());
  const int km1 = static_cast<int>(w_others.cols());
  SteeringLin lin;

  // v(x) = chi (sum_p atil_p(x)) u with atil_p = conj(u_p) e^{-j th x_p}
  lin.v.value0 = Eigen::VectorXcd::Zero(m);
  lin.v.slope = Eigen::MatrixXcd::Zero(m, m);
  if (wk.ok) {
    Eigen::VectorXcd atil0(m);
    for (int p = 0; p < m; ++p)
      atil0(p) = std::conj(wk.u(p)) * std::polar(1.0, -theta_rate * x0(p));
    lin.v.value0 = wk.chi * atil0.sum() * wk.u;
    for (int p = 0; p < m; ++p)
      lin.v.slope.col(p) = -kJ * wk.chi * theta_rate * atil0(p) * wk.u;
  }

  // a(x)^H w_j = sum_p e^{+j th x_p} w_j[p]
  lin.a_row.value0 = Eigen::VectorXcd::Zero(km1);
  lin.a_row.slope = Eigen::MatrixXcd::Zero(km1, m);
  for (int j = 0; j < km1; ++j) {
    for (int p = 0; p < m; ++p) {
      const cplx t0 = std::polar(1.0, theta_rate * x0(p)) * w_others(p, j);
      lin.a_row.value0(j) += t0;
      lin.a_row.slope(j, p) = kJ * theta_rate * t0;
    }
  }
  return lin;
}

LmiBlock position_signal_lmi(const Eigen::VectorXcd& w, double g_over_d,
                             double xi, const SteeringLin& lin,
                             const Eigen::VectorXd& x0,
                             const std::vector<int>& x_vars, int alpha_var,
                             int lambda_var, int rho_var) {
  const int m = static_cast<int>(w.size());
  LmiBlock blk;
  blk.dim = m + 1;
  blk.constant = Eigen::MatrixXcd::Zero(m + 1, m + 1);
  blk.constant.topLeftCorner(m, m) = w * w.adjoint();
  const Eigen::VectorXcd v0 =
      g_over_d * (lin.v.value0 - lin.v.slope * x0.cast<cplx>());
  blk.constant.topRightCorner(m, 1) = v0;
  blk.constant.bottomLeftCorner(1, m) = v0.adjoint();

  for (size_t p = 0; p < x_vars.size(); ++p) {
    Eigen::MatrixXcd dx = Eigen::MatrixXcd::Zero(m + 1, m + 1);
    dx.topRightCorner(m, 1) = g_over_d * lin.v.slope.col(p);
    dx.bottomLeftCorner(1, m) = (g_over_d * lin.v.slope.col(p)).adjoint();
    blk.add_term(x_vars[p], dx);
  }

  Eigen::MatrixXcd da = Eigen::MatrixXcd::Zero(m + 1, m + 1);
  da(m, m) = -1.0;
  blk.add_term(alpha_var, da);
  Eigen::MatrixXcd dl = Eigen::MatrixXcd::Zero(m + 1, m + 1);
  dl.topLeftCorner(m, m).setIdentity();
  dl(m, m) = -xi * xi;
  blk.add_term(lambda_var, dl);
  Eigen::MatrixXcd dr = Eigen::MatrixXcd::Zero(m + 1, m + 1);
  dr(m, m) = g_over_d * g_over_d;
  blk.add_term(rho_var, dr);
  return blk;
}

double cos_lower_bound(double a, double a0) {
  const double d = a - a0;
  return std::cos(a0) - std::sin(a0) * d - 0.5 * d * d;
}

CosSurrogate cos_quadratic_surrogate(const Eigen::VectorXcd& w,
                                     double theta_rate,
                                     const Eigen::VectorXd& x0) {
  const int m = static_cast<int>(w.size());
  const Eigen::VectorXd mag = w.cwiseAbs();
  Eigen::VectorXd phase(m);
  for (int p = 0; p < m; ++p) phase(p) = std::arg(w(p));
  const double eta = mag.sum();

  CosSurrogate out;
  out.x2 = -2.0 * theta_rate * theta_rate *
           (eta * Eigen::MatrixXd(mag.asDiagonal()) - mag * mag.transpose());

  // expansion of sum_pq |w_p||w_q| cos(theta_rate (x_p - x_q) + ph_p - ph_q)
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
  double f0 = 0.0;
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q) {
      const double c = mag(p) * mag(q);
      const double th0 = theta_rate * (x0(p) - x0(q)) + phase(p) - phase(q);
      f0 += c * std::cos(th0);
      g(p) += -2.0 * theta_rate * c * std::sin(th0);
    }
  out.y = g - out.x2 * x0;
  out.z = f0 - g.dot(x0) + 0.5 * x0.dot(out.x2 * x0);
  return out;
}

LogMinorant log_minorant(double gamma0) { return log_minorant(gamma0, 0.0); }

LogMinorant log_minorant(double gamma0, double gamma_lb) {
  if (gamma0 < 0.0)
    throw std::invalid_argument("log_minorant: gamma0 must be >= 0");
  if (gamma_lb < 0.0 || gamma_lb > gamma0)
    throw std::invalid_argument("log_minorant: need 0 <= gamma_lb <= gamma0");
  const double ln2 = std::log(2.0);
  LogMinorant q;
  q.gamma0 = gamma0;
  q.value0 = std::log2(1.0 + gamma0);
  q.slope = 1.0 / ((1.0 + gamma0) * ln2);
  q.curvature = 1.0 / (2.0 * ln2 * (1.0 + gamma_lb) * (1.0 + gamma_lb));
  return q;
}

}  // namespace mabeam
