#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mabeam {

/// Hermitian-matrix-valued affine map of scalar decision variables:
/// value(v) = constant + sum_t v[terms[t].first] * terms[t].second.
/// Every coefficient is Hermitian, so the value is Hermitian for any real
/// assignment.
struct LmiBlock {
  int dim = 0;
  Eigen::MatrixXcd constant;
  std::vector<std::pair<int, Eigen::MatrixXcd>> terms;

  Eigen::MatrixXcd eval(const Eigen::VectorXd& vars) const;
  void add_term(int var, const Eigen::MatrixXcd& coeff);
};

/// S-Procedure block for f(e) = e^H A e + 2 Re(b^H e) + c over ||e|| <= xi:
/// [[A + lambda I, b], [b^H, c - lambda xi^2]] as an affine map of the
/// multiplier variable. PSD feasibility for some lambda >= 0 certifies
/// f >= 0 on the ball. Throws when A is not Hermitian.
LmiBlock s_procedure_lmi(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b,
                         double c, double xi, int lambda_var);

/// Assembles [[A, B], [B^H, C]].
Eigen::MatrixXcd schur_assemble(const Eigen::MatrixXcd& a,
                                const Eigen::MatrixXcd& b,
                                const Eigen::MatrixXcd& c);

/// Eigenvalue test of M >= 0 <=> (A >= 0 and C - B^H A^-1 B >= 0) for
/// invertible A; returns both sides so tests can compare them.
struct SchurCheck {
  bool whole_psd = false;
  bool blocks_psd = false;
};
SchurCheck schur_psd_check(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                           const Eigen::MatrixXcd& c, double tol = 1e-9);

/// Coefficients (ca, cb) with x_i*x_j <= ca*x_i^2 + cb*x_j^2, tight at the
/// local point: ca = x_j0/(2 x_i0), cb = x_i0/(2 x_j0). Local points must be
/// positive.
std::pair<double, double> product_upper_bound(double xi0, double xj0);
double product_upper_bound_eval(double xi, double xj, double xi0, double xj0);

/// First-order expansion of w w^H about w0:
/// w w0^H + w0 w^H - w0 w0^H, which lower-bounds w w^H in the PSD order.
Eigen::MatrixXcd taylor_rank1(const Eigen::VectorXcd& w,
                              const Eigen::VectorXcd& w0);

/// Signal-power LMI in the beam variables: the S-Procedure block of the
/// robust constraint |(h+e)^H w|^2 >= alpha with w w^H replaced by its
/// rank-one expansion about w0. Affine in (w_re, w_im, alpha, lambda).
LmiBlock beamforming_signal_lmi(const Eigen::VectorXcd& h_hat, double xi,
                                const Eigen::VectorXcd& w0,
                                const std::vector<int>& w_re_vars,
                                const std::vector<int>& w_im_vars,
                                int alpha_var, int lambda_var);

/// Interference-power LMI with the beams as variables. Certifies
/// sum_{j!=k} |(h+e)^H w_j|^2 + sigma2 <= beta on the ball. Variable
/// layout: per interfering user j, its 2M real beam components.
LmiBlock interference_lmi(const Eigen::VectorXcd& h_hat, double xi,
                          double sigma2,
                          const std::vector<std::vector<int>>& wj_re_vars,
                          const std::vector<std::vector<int>>& wj_im_vars,
                          int beta_var, int varpi_var);

/// Same block with fixed beams and the off-diagonal channel rows replaced
/// by affine maps of the antenna positions (see steering_row_linearization).
struct AffineCRow {
  Eigen::VectorXcd value0;   // value at x = x0
  Eigen::MatrixXcd slope;    // column p: d(value)/dx_p
  Eigen::VectorXcd eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x0) const {
    return value0 + slope * (x - x0).cast<std::complex<double>>();
  }
};
LmiBlock interference_lmi_positions(const Eigen::MatrixXcd& w_others,
                                    double g_over_d, double xi, double sigma2,
                                    const AffineCRow& a_row,
                                    const Eigen::VectorXd& x0,
                                    const std::vector<int>& x_vars,
                                    int beta_var, int varpi_var);

/// chi = ||w||^2 and u = w/||w||, so chi u u^H = w w^H exactly.
struct Rank1 {
  double chi = 0.0;
  Eigen::VectorXcd u;
  bool ok = false;  // false for w = 0; callers skip the term
};
Rank1 rank1_decomp(const Eigen::VectorXcd& w);

/// First-order expansions in the antenna positions x about x0 of
///   v(x)    ~ w w^H a(x)        (M-vector)
///   a_row_j ~ a(x)^H w_j        (per interfering beam, row entries)
/// where a is the array steering vector at phase rate theta_rate. Exact at
/// x = x0. The conjugate-transposed maps follow by symmetry.
struct SteeringLin {
  AffineCRow v;      // M-vector map for w w^H a(x)
  AffineCRow a_row;  // entries a(x)^H w_j for the given beams
};
SteeringLin steering_linearizations(const Rank1& wk, double theta_rate,
                                    const Eigen::VectorXd& x0,
                                    const Eigen::MatrixXcd& w_others);

/// Signal LMI for the position step: [[w w^H + lambda I, g v(x)],
/// [g v(x)^H, g^2 rho - alpha - lambda xi^2]] with v the linearized
/// steering product and g = sqrt(g0)/d_est. Affine in (x, alpha, lambda, rho).
LmiBlock position_signal_lmi(const Eigen::VectorXcd& w, double g_over_d,
                             double xi, const SteeringLin& lin,
                             const Eigen::VectorXd& x0,
                             const std::vector<int>& x_vars, int alpha_var,
                             int lambda_var, int rho_var);

/// Concave quadratic minorant of |a(x)^H w|^2 in the positions:
/// 0.5 x'X x + y'x + z <= |a(x)^H w|^2 for all x, tight at x0, X <= 0.
struct CosSurrogate {
  Eigen::MatrixXd x2;  // X
  Eigen::VectorXd y;
  double z = 0.0;
  double eval(const Eigen::VectorXd& x) const {
    return 0.5 * x.dot(x2 * x) + y.dot(x) + z;
  }
};
CosSurrogate cos_quadratic_surrogate(const Eigen::VectorXcd& w,
                                     double theta_rate,
                                     const Eigen::VectorXd& x0);

/// Scalar second-order cosine minorant used by the surrogate above:
/// cos(a) >= cos(a0) - sin(a0)(a - a0) - 0.5 (a - a0)^2 for all a.
double cos_lower_bound(double a, double a0);

/// Concave quadratic minorant of log2(1 + g) on g >= gamma_lb, tight with
/// matching slope at gamma0:
/// q(g) = log2(1+gamma0) + (g-gamma0)/((1+gamma0) ln2) - c2 (g-gamma0)^2,
/// c2 = 1/(2 ln2 (1+gamma_lb)^2). gamma_lb = 0 is the globally valid form.
struct LogMinorant {
  double gamma0 = 0.0;
  double value0 = 0.0;     // log2(1+gamma0)
  double slope = 0.0;      // 1/((1+gamma0) ln2)
  double curvature = 0.0;  // c2
  double eval(double g) const {
    const double d = g - gamma0;
    return value0 + slope * d - curvature * d * d;
  }
};
LogMinorant log_minorant(double gamma0);
LogMinorant log_minorant(double gamma0, double gamma_lb);

}  // namespace mabeam
