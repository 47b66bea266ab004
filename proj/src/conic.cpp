#include "mabeam/conic.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace mabeam {

// ---------------------------------------------------------------------------
// svec / smat / Hermitian embedding
// ---------------------------------------------------------------------------

int svec_len(int side) { return side * (side + 1) / 2; }

Eigen::VectorXd svec(const Eigen::MatrixXd& sym) {
  const int d = static_cast<int>(sym.rows());
  Eigen::VectorXd v(svec_len(d));
  const double rt2 = std::sqrt(2.0);
  int idx = 0;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i)
      v(idx++) = (i == j) ? sym(i, j) : rt2 * 0.5 * (sym(i, j) + sym(j, i));
  return v;
}

Eigen::MatrixXd smat(const Eigen::VectorXd& v, int side) {
  Eigen::MatrixXd m(side, side);
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  int idx = 0;
  for (int j = 0; j < side; ++j)
    for (int i = 0; i <= j; ++i) {
      const double val = v(idx++);
      if (i == j) {
        m(i, j) = val;
      } else {
        m(i, j) = val * inv_rt2;
        m(j, i) = val * inv_rt2;
      }
    }
  return m;
}

Eigen::MatrixXd hermitian_embed(const Eigen::MatrixXcd& h) {
  const double scale = 1.0 + h.cwiseAbs().maxCoeff();
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw std::invalid_argument("hermitian_embed: matrix is not Hermitian");
  const int d = static_cast<int>(h.rows());
  Eigen::MatrixXd e(2 * d, 2 * d);
  const Eigen::MatrixXd re = h.real(), im = h.imag();
  e.topLeftCorner(d, d) = re;
  e.topRightCorner(d, d) = -im;
  e.bottomLeftCorner(d, d) = im;
  e.bottomRightCorner(d, d) = re;
  return 0.5 * (e + e.transpose());
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::MaxIterations: return "max-iterations";
    case SolveStatus::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// ConicProblem builder
// ---------------------------------------------------------------------------

int ConicProblem::add_var(const std::string& name, int count) {
  const int start = n_;
  for (int i = 0; i < count; ++i)
    names_.push_back(count == 1 ? name : name + "[" + std::to_string(i) + "]");
  n_ += count;
  return start;
}

int ConicProblem::index_of(const std::string& name) const {
  for (size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  throw std::invalid_argument("ConicProblem: unknown variable " + name);
}

void ConicProblem::set_objective(const Eigen::VectorXd& c) {
  if (c.size() != n_) throw std::invalid_argument("objective size mismatch");
  c_ = c;
}

void ConicProblem::push_row(std::vector<Row>& dst, const Eigen::VectorXd& g,
                            double h) {
  if (g.size() != n_) throw std::invalid_argument("constraint row size mismatch");
  dst.push_back({g, h});
}

void ConicProblem::add_eq(const Eigen::VectorXd& row, double rhs) {
  push_row(eq_rows_, row, rhs);
}

void ConicProblem::add_nonneg(const Eigen::VectorXd& g, double h0) {
  push_row(nonneg_rows_, g, h0);
}

void ConicProblem::add_soc(const Eigen::MatrixXd& g, const Eigen::VectorXd& h0) {
  if (g.rows() != h0.size() || g.rows() < 2)
    throw std::invalid_argument("add_soc: block needs >= 2 conforming rows");
  std::vector<Row> block;
  for (int i = 0; i < g.rows(); ++i) block.push_back({g.row(i).transpose(), h0(i)});
  soc_blocks_.push_back(std::move(block));
}

void ConicProblem::add_rotated_soc(const Eigen::VectorXd& gu, double hu,
                                   const Eigen::VectorXd& gv, double hv,
                                   const Eigen::MatrixXd& gw,
                                   const Eigen::VectorXd& hw) {
  const int nw = static_cast<int>(hw.size());
  const double rt2 = std::sqrt(2.0);
  Eigen::MatrixXd g(2 + nw, n_);
  Eigen::VectorXd h(2 + nw);
  g.row(0) = (gu + gv).transpose();
  h(0) = hu + hv;
  g.row(1) = (gu - gv).transpose();
  h(1) = hu - hv;
  if (nw > 0) {
    g.bottomRows(nw) = rt2 * gw;
    h.tail(nw) = rt2 * hw;
  }
  add_soc(g, h);
}

void ConicProblem::add_psd(const Eigen::MatrixXd& c0, const std::vector<int>& vars,
                           const std::vector<Eigen::MatrixXd>& coeffs) {
  if (vars.size() != coeffs.size())
    throw std::invalid_argument("add_psd: vars/coeffs size mismatch");
  const int side = static_cast<int>(c0.rows());
  const int len = svec_len(side);
  std::vector<Row> block(len);
  const Eigen::VectorXd h = svec(c0);
  for (int r = 0; r < len; ++r) block[r] = {Eigen::VectorXd::Zero(n_), h(r)};
  for (size_t t = 0; t < vars.size(); ++t) {
    if (coeffs[t].rows() != side)
      throw std::invalid_argument("add_psd: coefficient side mismatch");
    const Eigen::VectorXd col = svec(coeffs[t]);
    for (int r = 0; r < len; ++r) block[r].g(vars[t]) -= col(r);
  }
  psd_blocks_.emplace_back(side, std::move(block));
}

Eigen::MatrixXd ConicProblem::eq_matrix() const {
  Eigen::MatrixXd a(eq_rows_.size(), n_);
  for (size_t i = 0; i < eq_rows_.size(); ++i) a.row(i) = eq_rows_[i].g.transpose();
  return a;
}

Eigen::VectorXd ConicProblem::eq_rhs() const {
  Eigen::VectorXd b(eq_rows_.size());
  for (size_t i = 0; i < eq_rows_.size(); ++i) b(i) = eq_rows_[i].h;
  return b;
}

Eigen::MatrixXd ConicProblem::ineq_matrix() const {
  int m = static_cast<int>(nonneg_rows_.size());
  for (const auto& blk : soc_blocks_) m += static_cast<int>(blk.size());
  for (const auto& blk : psd_blocks_) m += static_cast<int>(blk.second.size());
  Eigen::MatrixXd g(m, n_);
  int r = 0;
  for (const auto& row : nonneg_rows_) g.row(r++) = row.g.transpose();
  for (const auto& blk : soc_blocks_)
    for (const auto& row : blk) g.row(r++) = row.g.transpose();
  for (const auto& blk : psd_blocks_)
    for (const auto& row : blk.second) g.row(r++) = row.g.transpose();
  return g;
}

Eigen::VectorXd ConicProblem::ineq_rhs() const {
  int m = static_cast<int>(nonneg_rows_.size());
  for (const auto& blk : soc_blocks_) m += static_cast<int>(blk.size());
  for (const auto& blk : psd_blocks_) m += static_cast<int>(blk.second.size());
  Eigen::VectorXd h(m);
  int r = 0;
  for (const auto& row : nonneg_rows_) h(r++) = row.h;
  for (const auto& blk : soc_blocks_)
    for (const auto& row : blk) h(r++) = row.h;
  for (const auto& blk : psd_blocks_)
    for (const auto& row : blk.second) h(r++) = row.h;
  return h;
}

std::vector<ConeSpec> ConicProblem::cones() const {
  std::vector<ConeSpec> out;
  if (!nonneg_rows_.empty())
    out.push_back({ConeKind::NonNeg, static_cast<int>(nonneg_rows_.size())});
  for (const auto& blk : soc_blocks_)
    out.push_back({ConeKind::Soc, static_cast<int>(blk.size())});
  for (const auto& blk : psd_blocks_) out.push_back({ConeKind::Psd, blk.first});
  return out;
}

std::vector<ConeSpec> ConicProblem::cones_with_zero() const {
  // The zero cone carries the equality rows; it leads the list so the cone
  // dimensions partition the full constraint vector.
  std::vector<ConeSpec> out;
  out.push_back({ConeKind::NonNeg, static_cast<int>(eq_rows_.size())});
  auto rest = cones();
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

void ConicProblem::dump(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open dump file " + path);
  out.precision(17);
  out << "conic-problem v1\n";
  out << "vars " << n_ << "\n";
  out << "maximize";
  for (int i = 0; i < n_; ++i) out << " " << (c_.size() ? c_(i) : 0.0);
  out << "\n";
  auto write_rows = [&](const char* tag, const Eigen::MatrixXd& mat,
                        const Eigen::VectorXd& rhs) {
    out << tag << " " << mat.rows() << "\n";
    for (int i = 0; i < mat.rows(); ++i)
      for (int j = 0; j < mat.cols(); ++j)
        if (mat(i, j) != 0.0) out << i << " " << j << " " << mat(i, j) << "\n";
    out << "rhs";
    for (int i = 0; i < rhs.size(); ++i) out << " " << rhs(i);
    out << "\n";
  };
  write_rows("eq", eq_matrix(), eq_rhs());
  write_rows("ineq", ineq_matrix(), ineq_rhs());
  out << "cones\n";
  for (const auto& c : cones()) {
    switch (c.kind) {
      case ConeKind::NonNeg: out << "nonneg " << c.size << "\n"; break;
      case ConeKind::Soc: out << "soc " << c.size << "\n"; break;
      case ConeKind::Psd: out << "psd " << c.size << "\n"; break;
    }
  }
  out << "varnames\n";
  for (const auto& n : names_) out << n << "\n";
}

// ---------------------------------------------------------------------------
// Cone machinery for the interior-point iteration
// ---------------------------------------------------------------------------

namespace {

struct ConeBlock {
  ConeKind kind;
  int offset = 0;  // first row in the stacked slack vector
  int rows = 0;
  int side = 0;  // PSD matrix side

  // Nesterov-Todd scaling state
  Eigen::VectorXd w_lp;               // sqrt(s/z) for the orthant
  Eigen::MatrixXd w_soc, w_soc_inv;   // dense SOC scaling
  Eigen::MatrixXd r, rti, sw, swi;    // PSD: W acts as U -> r'Ur; sw = r r'
  Eigen::VectorXd sigma;              // PSD scaled eigenvalues (lambda)
  Eigen::VectorXd lambda;             // scaled point, svec layout for PSD
};

class ConeSystem {
 public:
  ConeSystem(const std::vector<ConeSpec>& specs) {
    int off = 0;
    for (const auto& sp : specs) {
      ConeBlock b;
      b.kind = sp.kind;
      b.offset = off;
      b.rows = sp.rows();
      b.side = sp.kind == ConeKind::Psd ? sp.size : 0;
      off += b.rows;
      degree_ += sp.kind == ConeKind::NonNeg ? sp.size
                : sp.kind == ConeKind::Soc   ? 1
                                             : sp.size;
      blocks_.push_back(std::move(b));
    }
    m_ = off;
  }

  int rows() const { return m_; }
  int degree() const { return degree_; }

  Eigen::VectorXd identity() const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m_);
    for (const auto& b : blocks_) {
      switch (b.kind) {
        case ConeKind::NonNeg:
          e.segment(b.offset, b.rows).setOnes();
          break;
        case ConeKind::Soc:
          e(b.offset) = 1.0;
          break;
        case ConeKind::Psd:
          e.segment(b.offset, b.rows) =
              svec(Eigen::MatrixXd::Identity(b.side, b.side));
          break;
      }
    }
    return e;
  }

  // Computes NT scalings; false when (s, z) is not strictly interior.
  bool update(const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
    for (auto& b : blocks_) {
      const auto ss = s.segment(b.offset, b.rows);
      const auto zs = z.segment(b.offset, b.rows);
      switch (b.kind) {
        case ConeKind::NonNeg: {
          if ((ss.array() <= 0).any() || (zs.array() <= 0).any()) return false;
          b.w_lp = (ss.array() / zs.array()).sqrt();
          b.lambda = (ss.array() * zs.array()).sqrt();
          break;
        }
        case ConeKind::Soc: {
          const int d = b.rows;
          const double sres = ss(0) * ss(0) - ss.tail(d - 1).squaredNorm();
          const double zres = zs(0) * zs(0) - zs.tail(d - 1).squaredNorm();
          if (sres <= 0 || zres <= 0 || ss(0) <= 0 || zs(0) <= 0) return false;
          const Eigen::VectorXd sbar = ss / std::sqrt(sres);
          const Eigen::VectorXd zbar = zs / std::sqrt(zres);
          const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
          Eigen::VectorXd jz = zbar;
          jz.tail(d - 1) = -zbar.tail(d - 1);
          // normalized scaling point, then W = eta * Q(wbar)^{1/2}
          const Eigen::VectorXd wbar = (sbar + jz) / (2.0 * gamma);
          const double eta = std::pow(sres / zres, 0.25);
          const double w0 = wbar(0);
          const Eigen::VectorXd w1 = wbar.tail(d - 1);
          Eigen::MatrixXd w(d, d), wi(d, d);
          w(0, 0) = w0;
          w.row(0).tail(d - 1) = w1.transpose();
          w.col(0).tail(d - 1) = w1;
          w.bottomRightCorner(d - 1, d - 1) =
              Eigen::MatrixXd::Identity(d - 1, d - 1) +
              w1 * w1.transpose() / (1.0 + w0);
          wi = w;
          wi.row(0).tail(d - 1) = -w1.transpose();
          wi.col(0).tail(d - 1) = -w1;
          b.w_soc = eta * w;
          b.w_soc_inv = (1.0 / eta) * wi;
          b.lambda = b.w_soc * zs;
          break;
        }
        case ConeKind::Psd: {
          Eigen::MatrixXd S = smat(ss, b.side);
          Eigen::MatrixXd Z = smat(zs, b.side);
          Eigen::LLT<Eigen::MatrixXd> ls(S), lz(Z);
          // near machine precision an interior block can lose definiteness
          // to rounding; a relative shift keeps the scaling usable
          if (ls.info() != Eigen::Success) {
            S.diagonal().array() += 1e-14 * (1.0 + S.diagonal().maxCoeff());
            ls.compute(S);
          }
          if (lz.info() != Eigen::Success) {
            Z.diagonal().array() += 1e-14 * (1.0 + Z.diagonal().maxCoeff());
            lz.compute(Z);
          }
          if (ls.info() != Eigen::Success || lz.info() != Eigen::Success)
            return false;
          const Eigen::MatrixXd Ls = ls.matrixL();
          const Eigen::MatrixXd Lz = lz.matrixL();
          Eigen::JacobiSVD<Eigen::MatrixXd> svd(
              Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
          const Eigen::VectorXd sv = svd.singularValues();
          if (sv.minCoeff() <= 0) return false;
          const Eigen::VectorXd isq = sv.array().sqrt().inverse();
          b.r = Ls * svd.matrixV() * isq.asDiagonal();
          b.rti = Lz * svd.matrixU() * isq.asDiagonal();
          b.sw = b.r * b.r.transpose();
          b.swi = b.rti * b.rti.transpose();
          b.sigma = sv;
          b.lambda = svec(Eigen::MatrixXd(sv.asDiagonal()));
          break;
        }
      }
    }
    return true;
  }

  Eigen::VectorXd lambda() const {
    Eigen::VectorXd l(m_);
    for (const auto& b : blocks_) l.segment(b.offset, b.rows) = b.lambda;
    return l;
  }

  enum class Op { W, Wt, WinvT, WtW, WtWInv };

  Eigen::VectorXd apply(Op op, const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(m_);
    for (const auto& b : blocks_) {
      const auto vs = v.segment(b.offset, b.rows);
      auto os = out.segment(b.offset, b.rows);
      switch (b.kind) {
        case ConeKind::NonNeg:
          switch (op) {
            case Op::W:
            case Op::Wt: os = b.w_lp.array() * vs.array(); break;
            case Op::WinvT: os = vs.array() / b.w_lp.array(); break;
            case Op::WtW: os = b.w_lp.array().square() * vs.array(); break;
            case Op::WtWInv: os = vs.array() / b.w_lp.array().square(); break;
          }
          break;
        case ConeKind::Soc:
          switch (op) {
            case Op::W:
            case Op::Wt: os = b.w_soc * vs; break;  // symmetric
            case Op::WinvT: os = b.w_soc_inv * vs; break;
            case Op::WtW: os = b.w_soc * (b.w_soc * vs); break;
            case Op::WtWInv: os = b.w_soc_inv * (b.w_soc_inv * vs); break;
          }
          break;
        case ConeKind::Psd: {
          const Eigen::MatrixXd V = smat(vs, b.side);
          Eigen::MatrixXd R;
          switch (op) {
            case Op::W: R = b.r.transpose() * V * b.r; break;
            case Op::Wt: R = b.r * V * b.r.transpose(); break;
            case Op::WinvT: R = b.rti.transpose() * V * b.rti; break;
            case Op::WtW: R = b.sw * V * b.sw; break;
            case Op::WtWInv: R = b.swi * V * b.swi; break;
          }
          os = svec(0.5 * (R + R.transpose()));
          break;
        }
      }
    }
    return out;
  }

  // Jordan product u o v per cone.
  Eigen::VectorXd jordan_mul(const Eigen::VectorXd& u,
                             const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(m_);
    for (const auto& b : blocks_) {
      const auto us = u.segment(b.offset, b.rows);
      const auto vs = v.segment(b.offset, b.rows);
      auto os = out.segment(b.offset, b.rows);
      switch (b.kind) {
        case ConeKind::NonNeg:
          os = us.array() * vs.array();
          break;
        case ConeKind::Soc: {
          os(0) = us.dot(vs);
          os.tail(b.rows - 1) =
              us(0) * vs.tail(b.rows - 1) + vs(0) * us.tail(b.rows - 1);
          break;
        }
        case ConeKind::Psd: {
          const Eigen::MatrixXd U = smat(us, b.side);
          const Eigen::MatrixXd V = smat(vs, b.side);
          os = svec(0.5 * (U * V + V * U));
          break;
        }
      }
    }
    return out;
  }

  // Solves lambda o q = rhs for q; lambda is the current scaled point.
  Eigen::VectorXd jordan_div_lambda(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd out(m_);
    for (const auto& b : blocks_) {
      const auto rs = rhs.segment(b.offset, b.rows);
      auto os = out.segment(b.offset, b.rows);
      switch (b.kind) {
        case ConeKind::NonNeg:
          os = rs.array() / b.lambda.array();
          break;
        case ConeKind::Soc: {
          const int d = b.rows;
          const double l0 = b.lambda(0);
          const auto l1 = b.lambda.tail(d - 1);
          const double det = l0 * l0 - l1.squaredNorm();
          const double q0 = (l0 * rs(0) - l1.dot(rs.tail(d - 1))) / det;
          os(0) = q0;
          os.tail(d - 1) = (rs.tail(d - 1) - q0 * l1) / l0;
          break;
        }
        case ConeKind::Psd: {
          const Eigen::MatrixXd R = smat(rs, b.side);
          Eigen::MatrixXd Q(b.side, b.side);
          for (int i = 0; i < b.side; ++i)
            for (int j = 0; j < b.side; ++j)
              Q(i, j) = 2.0 * R(i, j) / (b.sigma(i) + b.sigma(j));
          os = svec(0.5 * (Q + Q.transpose()));
          break;
        }
      }
    }
    return out;
  }

  // Largest step t with v + t*dv staying in the cone (capped by `cap`).
  double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv,
                  double cap) const {
    double t = cap;
    for (const auto& b : blocks_) {
      const auto vs = v.segment(b.offset, b.rows);
      const auto ds = dv.segment(b.offset, b.rows);
      switch (b.kind) {
        case ConeKind::NonNeg:
          for (int i = 0; i < b.rows; ++i)
            if (ds(i) < 0) t = std::min(t, -vs(i) / ds(i));
          break;
        case ConeKind::Soc: {
          const int d = b.rows;
          // first positive root of (v0 + t d0)^2 - ||v1 + t d1||^2 = 0,
          // plus the linear bound v0 + t d0 >= 0
          const double a = ds(0) * ds(0) - ds.tail(d - 1).squaredNorm();
          const double bq =
              2.0 * (vs(0) * ds(0) - vs.tail(d - 1).dot(ds.tail(d - 1)));
          const double cq = vs(0) * vs(0) - vs.tail(d - 1).squaredNorm();
          double root = std::numeric_limits<double>::infinity();
          const double disc = bq * bq - 4.0 * a * cq;
          if (disc >= 0) {
            // cancellation-free roots via qq = -(bq + sign(bq) sqrt(disc))/2
            const double sq = std::sqrt(disc);
            const double qq = -0.5 * (bq + (bq >= 0 ? sq : -sq));
            if (a != 0.0) {
              const double r = qq / a;
              if (r > 0) root = std::min(root, r);
            }
            if (qq != 0.0) {
              const double r = cq / qq;
              if (r > 0) root = std::min(root, r);
            }
          }
          if (ds(0) < 0) root = std::min(root, -vs(0) / ds(0));
          t = std::min(t, root);
          break;
        }
        case ConeKind::Psd: {
          Eigen::MatrixXd V = smat(vs, b.side);
          const Eigen::MatrixXd D = smat(ds, b.side);
          Eigen::LLT<Eigen::MatrixXd> llt(V);
          if (llt.info() != Eigen::Success) {
            V.diagonal().array() += 1e-14 * (1.0 + V.diagonal().maxCoeff());
            llt.compute(V);
            if (llt.info() != Eigen::Success) return 0.0;
          }
          const Eigen::MatrixXd L = llt.matrixL();
          const Eigen::MatrixXd tmp =
              L.triangularView<Eigen::Lower>().solve(D);  // L^-1 D
          const Eigen::MatrixXd M =
              L.triangularView<Eigen::Lower>().solve(tmp.transpose());  // L^-1 D L^-T
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
              0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
          const double lmin = es.eigenvalues().minCoeff();
          if (lmin < 0) t = std::min(t, -1.0 / lmin);
          break;
        }
      }
    }
    return t;
  }

 private:
  std::vector<ConeBlock> blocks_;
  int m_ = 0;
  int degree_ = 0;
};

}  // namespace

// ---------------------------------------------------------------------------
// Homogeneous self-dual interior-point solve
// ---------------------------------------------------------------------------

ConicSolution solve(const ConicProblem& problem, const SolverSettings& settings) {
  const auto t_start = std::chrono::steady_clock::now();

  const int n = problem.num_vars();
  if (n == 0) throw std::invalid_argument("solve: problem has no variables");

  // internal minimize convention
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  if (problem.c().size() == n) c = -problem.c();
  const Eigen::MatrixXd A = problem.eq_matrix();
  const Eigen::VectorXd b = problem.eq_rhs();
  const Eigen::MatrixXd G = problem.ineq_matrix();
  const Eigen::VectorXd h = problem.ineq_rhs();
  const int p = static_cast<int>(A.rows());
  const int m = static_cast<int>(G.rows());
  if (m == 0) throw std::invalid_argument("solve: problem has no cone rows");

  ConeSystem cones(problem.cones());
  const int nu = cones.degree();
  const Eigen::VectorXd e = cones.identity();

  ConicSolution sol;
  sol.x = Eigen::VectorXd::Zero(n);
  sol.y = Eigen::VectorXd::Zero(p);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd s = e, z = e;
  double tau = 1.0, kappa = 1.0;

  const double norm_b = b.size() ? b.norm() : 0.0;
  const double norm_h = h.norm();
  const double norm_c = c.norm();

  Eigen::LDLT<Eigen::MatrixXd> nllt;  // normal matrix factor
  Eigen::LDLT<Eigen::MatrixXd> sllt;  // equality Schur complement factor

  auto finish = [&](SolveStatus st) {
    sol.status = st;
    sol.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                t_start)
                      .count();
    return sol;
  };

  auto record_scaled = [&]() {
    sol.x = x / tau;
    sol.y = y / tau;
    sol.z = z / tau;
    sol.s = s / tau;
    sol.obj = -c.dot(sol.x);
    sol.gap = sol.s.dot(sol.z);
    sol.pres = std::max((G * sol.x + sol.s - h).norm(),
                        p ? (A * sol.x - b).norm() : 0.0);
    sol.dres = ((p ? (A.transpose() * sol.y).eval()
                   : Eigen::VectorXd::Zero(n).eval()) +
                G.transpose() * sol.z + c)
                   .norm();
  };

  // One factorization per iteration; solves share it. Static regularization
  // keeps the normal matrix positive definite, iterative refinement against
  // the unregularized system recovers the accuracy.
  Eigen::MatrixXd WtWinvG(m, n);

  auto refactor = [&]() -> bool {
    for (int j = 0; j < n; ++j)
      WtWinvG.col(j) = cones.apply(ConeSystem::Op::WtWInv, G.col(j));
    Eigen::MatrixXd N = G.transpose() * WtWinvG;
    // static regularization; the pivoted LDLT tolerates the rounding-level
    // indefiniteness of the ill-conditioned late iterations, and iterative
    // refinement against the unregularized system recovers the accuracy
    N.diagonal().array() += settings.reg;
    nllt.compute(N);
    if (nllt.info() != Eigen::Success) return false;
    if (p > 0) {
      Eigen::MatrixXd S = A * nllt.solve(A.transpose());
      S.diagonal().array() += settings.reg;
      sllt.compute(S);
      if (sllt.info() != Eigen::Success) return false;
    }
    return true;
  };

  struct Dir {
    Eigen::VectorXd dx, dy, dz;
  };

  auto kkt_once = [&](const Eigen::VectorXd& bx, const Eigen::VectorXd& by,
                      const Eigen::VectorXd& bz) -> Dir {
    Dir d;
    const Eigen::VectorXd rhs_x =
        bx + G.transpose() * cones.apply(ConeSystem::Op::WtWInv, bz);
    if (p > 0) {
      const Eigen::VectorXd dx0 = nllt.solve(rhs_x);
      d.dy = sllt.solve(A * dx0 - by);
      d.dx = nllt.solve(rhs_x - A.transpose() * d.dy);
    } else {
      d.dy = Eigen::VectorXd::Zero(0);
      d.dx = nllt.solve(rhs_x);
    }
    d.dz = cones.apply(ConeSystem::Op::WtWInv, G * d.dx - bz);
    return d;
  };

  auto kkt_solve = [&](const Eigen::VectorXd& bx, const Eigen::VectorXd& by,
                       const Eigen::VectorXd& bz) -> Dir {
    Dir d = kkt_once(bx, by, bz);
    const double rhs_scale = std::max(
        {bx.lpNorm<Eigen::Infinity>(), p ? by.lpNorm<Eigen::Infinity>() : 0.0,
         bz.lpNorm<Eigen::Infinity>(), 1.0});
    for (int round = 0; round < 3; ++round) {
      const Eigen::VectorXd r1 =
          (p ? (A.transpose() * d.dy).eval() : Eigen::VectorXd::Zero(n).eval()) +
          G.transpose() * d.dz - bx;
      const Eigen::VectorXd r2 = p ? (A * d.dx - by).eval() : Eigen::VectorXd();
      const Eigen::VectorXd r3 =
          G * d.dx - cones.apply(ConeSystem::Op::WtW, d.dz) - bz;
      const double rn = std::max({r1.lpNorm<Eigen::Infinity>(),
                                  p ? r2.lpNorm<Eigen::Infinity>() : 0.0,
                                  r3.lpNorm<Eigen::Infinity>()});
      if (rn < 1e-13 * rhs_scale) break;
      Dir corr = kkt_once(-r1, p ? (-r2).eval() : Eigen::VectorXd(), -r3);
      d.dx += corr.dx;
      if (p) d.dy += corr.dy;
      d.dz += corr.dz;
    }
    return d;
  };

  for (int iter = 0; iter <= settings.max_iters; ++iter) {
    // residuals of the embedded system
    const Eigen::VectorXd rx =
        (p ? (A.transpose() * y).eval() : Eigen::VectorXd::Zero(n).eval()) +
        G.transpose() * z + c * tau;
    const Eigen::VectorXd ry = p ? (A * x - b * tau).eval() : Eigen::VectorXd();
    const Eigen::VectorXd rz = G * x + s - h * tau;
    const double rt = kappa + c.dot(x) + (p ? b.dot(y) : 0.0) + h.dot(z);
    const double mu = (s.dot(z) + tau * kappa) / (nu + 1);

    if (!x.allFinite() || !s.allFinite() || !z.allFinite() ||
        !std::isfinite(tau) || !std::isfinite(kappa)) {
      record_scaled();
      return finish(SolveStatus::NumericalFailure);
    }

    // convergence
    {
      const Eigen::VectorXd xs = x / tau, ss = s / tau, zs = z / tau;
      const Eigen::VectorXd ys = p ? (y / tau).eval() : Eigen::VectorXd();
      const double pres_in = (G * xs + ss - h).norm();
      const double pres_eq = p ? (A * xs - b).norm() : 0.0;
      const double dres =
          ((p ? (A.transpose() * ys).eval() : Eigen::VectorXd::Zero(n).eval()) +
           G.transpose() * zs + c)
              .norm();
      const double gap = ss.dot(zs);
      if (settings.verbose)
        std::printf("it %3d  mu %9.2e  gap %9.2e  pres %9.2e  dres %9.2e  tau %8.2e\n",
                    iter, mu, gap, std::max(pres_in, pres_eq), dres, tau);
      if (pres_in <= settings.tol * (1.0 + norm_h) &&
          pres_eq <= settings.tol * (1.0 + norm_b) &&
          dres <= settings.tol * (1.0 + norm_c) && gap <= settings.tol) {
        record_scaled();
        sol.iterations = iter;
        return finish(SolveStatus::Optimal);
      }

      // infeasibility certificates
      const double by_hz = (p ? b.dot(y) : 0.0) + h.dot(z);
      if (by_hz < -1e-14) {
        const double cert =
            ((p ? (A.transpose() * y).eval() : Eigen::VectorXd::Zero(n).eval()) +
             G.transpose() * z)
                .norm() /
            (-by_hz);
        if (cert <= settings.tol * 10.0 && tau <= 1e-6 * std::max(1.0, kappa)) {
          sol.y = p ? (y / -by_hz).eval() : y;
          sol.z = z / -by_hz;
          sol.iterations = iter;
          return finish(SolveStatus::Infeasible);
        }
      }
      const double cx = c.dot(x);
      if (cx < -1e-14) {
        const double cert = std::max((G * x + s).norm(), p ? (A * x).norm() : 0.0) /
                            (-cx);
        if (cert <= settings.tol * 10.0 && tau <= 1e-6 * std::max(1.0, kappa)) {
          sol.x = x / -cx;
          sol.s = s / -cx;
          sol.iterations = iter;
          return finish(SolveStatus::Unbounded);
        }
      }
    }
    if (iter == settings.max_iters) break;

    if (!cones.update(s, z)) {
      record_scaled();
      sol.iterations = iter;
      return finish(SolveStatus::NumericalFailure);
    }
    const Eigen::VectorXd lambda = cones.lambda();

    if (!refactor()) {
      record_scaled();
      sol.iterations = iter;
      return finish(SolveStatus::NumericalFailure);
    }

    const Dir u1 = kkt_solve(-c, b, h);
    const double u1_dot = c.dot(u1.dx) + (p ? b.dot(u1.dy) : 0.0) + h.dot(u1.dz);

    auto assemble = [&](double eta, const Eigen::VectorXd& rhs5, double rhs6,
                        Dir& dir, double& dtau, Eigen::VectorXd& ds,
                        double& dkappa) {
      const Eigen::VectorXd dbar = cones.jordan_div_lambda(rhs5);
      const Dir u2 = kkt_solve(-eta * rx, p ? (-eta * ry).eval() : Eigen::VectorXd(),
                               -eta * rz - cones.apply(ConeSystem::Op::Wt, dbar));
      const double num = -eta * rt - rhs6 / tau -
                         (c.dot(u2.dx) + (p ? b.dot(u2.dy) : 0.0) + h.dot(u2.dz));
      const double den = u1_dot - kappa / tau;
      dtau = num / den;
      dir.dx = u2.dx + dtau * u1.dx;
      if (p) dir.dy = u2.dy + dtau * u1.dy;
      dir.dz = u2.dz + dtau * u1.dz;
      ds = cones.apply(ConeSystem::Op::Wt,
                       dbar - cones.apply(ConeSystem::Op::W, dir.dz));
      dkappa = (rhs6 - kappa * dtau) / tau;
    };

    // predictor
    Dir aff;
    double dtau_a, dkappa_a;
    Eigen::VectorXd ds_a;
    assemble(1.0, -cones.jordan_mul(lambda, lambda), -tau * kappa, aff, dtau_a,
             ds_a, dkappa_a);

    double alpha_a = cones.max_step(s, ds_a, 10.0);
    alpha_a = cones.max_step(z, aff.dz, alpha_a);
    if (dtau_a < 0) alpha_a = std::min(alpha_a, -tau / dtau_a);
    if (dkappa_a < 0) alpha_a = std::min(alpha_a, -kappa / dkappa_a);
    alpha_a = std::min(alpha_a, 1.0);

    const double gap_now = s.dot(z) + tau * kappa;
    const double gap_aff = (s + alpha_a * ds_a).dot(z + alpha_a * aff.dz) +
                           (tau + alpha_a * dtau_a) * (kappa + alpha_a * dkappa_a);
    double sigma = std::pow(std::clamp(gap_aff / gap_now, 0.0, 1.0), 3.0);
    sigma = std::clamp(sigma, 0.0, 0.999);

    // corrector (Mehrotra second-order term in the scaled space)
    const Eigen::VectorXd corr =
        cones.jordan_mul(cones.apply(ConeSystem::Op::WinvT, ds_a),
                         cones.apply(ConeSystem::Op::W, aff.dz));
    const Eigen::VectorXd rhs5 =
        sigma * mu * e - cones.jordan_mul(lambda, lambda) - corr;
    const double rhs6 = sigma * mu - tau * kappa - dtau_a * dkappa_a;

    Dir dir;
    double dtau, dkappa;
    Eigen::VectorXd ds;
    assemble(1.0 - sigma, rhs5, rhs6, dir, dtau, ds, dkappa);

    double alpha = cones.max_step(s, ds, 10.0);
    alpha = cones.max_step(z, dir.dz, alpha);
    if (dtau < 0) alpha = std::min(alpha, -tau / dtau);
    if (dkappa < 0) alpha = std::min(alpha, -kappa / dkappa);
    alpha = std::min(0.99 * alpha, 1.0);

    if (!(alpha > 1e-11)) {
      record_scaled();
      sol.iterations = iter;
      return finish(SolveStatus::NumericalFailure);
    }

    x += alpha * dir.dx;
    if (p) y += alpha * dir.dy;
    z += alpha * dir.dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
    sol.iterations = iter + 1;
  }

  record_scaled();
  return finish(SolveStatus::MaxIterations);
}

}  // namespace mabeam
