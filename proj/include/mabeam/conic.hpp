#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mabeam {

// Standard form handled by the solver:
//
//   maximize    c' x
//   subject to  A x = b                 (zero cone, p rows)
//               G x + s = h,  s in K    (m rows)
//
// with K a product of nonnegative-orthant, second-order and real-symmetric
// PSD cones over the stacked slack vector. PSD slices hold the scaled upper
// triangle (svec) of the matrix, so Frobenius inner products are preserved.
// Hermitian constraints enter through the real embedding, which doubles the
// matrix side.

enum class ConeKind { NonNeg, Soc, Psd };

struct ConeSpec {
  ConeKind kind;
  int size;  // NonNeg/Soc: number of rows; Psd: matrix side
  int rows() const { return kind == ConeKind::Psd ? size * (size + 1) / 2 : size; }
};

/// svec: scaled column-major upper triangle, off-diagonals times sqrt(2).
Eigen::VectorXd svec(const Eigen::MatrixXd& sym);
Eigen::MatrixXd smat(const Eigen::VectorXd& v, int side);
int svec_len(int side);

/// [[Re H, -Im H], [Im H, Re H]]; eigenvalues of H, each doubled.
/// Throws std::invalid_argument when H is not Hermitian.
Eigen::MatrixXd hermitian_embed(const Eigen::MatrixXcd& h);

enum class SolveStatus {
  Optimal,
  Infeasible,
  Unbounded,
  MaxIterations,
  NumericalFailure,
};

const char* to_string(SolveStatus s);

struct SolverSettings {
  double tol = 1e-7;
  int max_iters = 100;
  double reg = 1e-9;  // static regularization of the normal equations
  bool verbose = false;
};

struct ConicSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd x;   // primal variables
  Eigen::VectorXd y;   // equality multipliers
  Eigen::VectorXd z;   // cone multipliers
  Eigen::VectorXd s;   // cone slacks
  double obj = 0.0;    // c' x (maximize convention)
  double gap = 0.0;    // s' z after scaling back
  double pres = 0.0;
  double dres = 0.0;
  int iterations = 0;
  double seconds = 0.0;
};

/// Incremental builder for one instance. Rows are grouped per cone family
/// on finalize (nonnegative first, then SOC blocks, then PSD blocks).
class ConicProblem {
 public:
  /// Declares `count` scalar variables, returns the first index.
  int add_var(const std::string& name, int count = 1);
  int num_vars() const { return n_; }
  const std::vector<std::string>& var_names() const { return names_; }
  int index_of(const std::string& name) const;

  /// Objective is kept in maximize convention.
  void set_objective(const Eigen::VectorXd& c);

  void add_eq(const Eigen::VectorXd& row, double rhs);

  /// Appends the scalar constraint h0 - g'x >= 0.
  void add_nonneg(const Eigen::VectorXd& g, double h0);

  /// Appends the block constraint h - Gx in SOC (first row is the cone head).
  void add_soc(const Eigen::MatrixXd& g, const Eigen::VectorXd& h0);

  /// Rotated cone 2*u*v >= ||w||^2 with affine u, v, w; converted to a
  /// standard SOC block.
  void add_rotated_soc(const Eigen::VectorXd& gu, double hu,
                       const Eigen::VectorXd& gv, double hv,
                       const Eigen::MatrixXd& gw, const Eigen::VectorXd& hw);

  /// Real-symmetric PSD constraint: C0 + sum_i x_{vars[i]} * Ci  >=  0.
  void add_psd(const Eigen::MatrixXd& c0, const std::vector<int>& vars,
               const std::vector<Eigen::MatrixXd>& coeffs);

  /// Assembled views (valid after all constraints are added).
  const Eigen::VectorXd& c() const { return c_; }
  Eigen::MatrixXd eq_matrix() const;
  Eigen::VectorXd eq_rhs() const;
  Eigen::MatrixXd ineq_matrix() const;
  Eigen::VectorXd ineq_rhs() const;
  /// Cone list including the leading zero cone for the equality rows.
  std::vector<ConeSpec> cones_with_zero() const;
  std::vector<ConeSpec> cones() const;

  /// Plain-text dump (objective, equality and cone rows as triplets, cone
  /// list, variable names) for cross-checking against external solvers.
  void dump(const std::string& path) const;

 private:
  struct Row {
    Eigen::VectorXd g;
    double h;
  };
  void push_row(std::vector<Row>& dst, const Eigen::VectorXd& g, double h);

  int n_ = 0;
  std::vector<std::string> names_;
  Eigen::VectorXd c_;
  std::vector<Row> eq_rows_;
  std::vector<Row> nonneg_rows_;
  std::vector<std::vector<Row>> soc_blocks_;
  std::vector<std::pair<int, std::vector<Row>>> psd_blocks_;  // side, rows
};

/// Dense primal-dual path-following solve with Nesterov-Todd scaling and a
/// Mehrotra predictor-corrector, on the homogeneous self-dual embedding.
/// Deterministic: identical problems produce identical iterate sequences.
ConicSolution solve(const ConicProblem& problem, const SolverSettings& settings = {});

}  // namespace mabeam
