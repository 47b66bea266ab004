#pragma once

// Constructive solver oracle: build a primal-dual optimal pair first, then
// derive the instance data from it. The optimum is known exactly, so any
// backend can be checked for gap and objective recovery without reference
// to another solver.

#include <Eigen/Dense>
#include <Eigen/QR>

#include "mabeam/conic.hpp"
#include "mabeam/rng.hpp"

namespace mabeam::testing {

struct KktInstance {
  ConicProblem problem;
  Eigen::VectorXd x_opt;
  double obj_opt = 0.0;  // maximize convention
};

inline KktInstance make_kkt_instance(std::uint64_t seed, bool with_eq = true) {
  Rng rng(seed);
  const int n = 6 + static_cast<int>(rng.uniform() * 8);  // 6..13 variables
  const int p = with_eq ? 1 + static_cast<int>(rng.uniform() * 2) : 0;
  const int l = 3 + static_cast<int>(rng.uniform() * 4);
  const int soc_dim = 3 + static_cast<int>(rng.uniform() * 3);
  const int psd_side = 2 + static_cast<int>(rng.uniform() * 3);  // 2..4

  KktInstance inst;
  auto& pb = inst.problem;
  pb.add_var("x", n);

  // complementary pair per cone
  const int m = l + soc_dim + svec_len(psd_side);
  Eigen::VectorXd s_opt(m), z_opt(m);
  int off = 0;
  for (int i = 0; i < l; ++i) {
    if (rng.uniform() < 0.5) {
      s_opt(off + i) = rng.uniform(0.5, 2.0);
      z_opt(off + i) = 0.0;
    } else {
      s_opt(off + i) = 0.0;
      z_opt(off + i) = rng.uniform(0.5, 2.0);
    }
  }
  off += l;
  {
    // boundary-complementary SOC pair: z proportional to the reflection of s
    Eigen::VectorXd tail = rng.gaussian_vector(soc_dim - 1);
    tail.normalize();
    const double head = rng.uniform(0.5, 2.0);
    s_opt.segment(off, soc_dim) << head, head * tail;
    const double gz = rng.uniform(0.5, 2.0);
    z_opt.segment(off, soc_dim) << gz * head, -gz * head * tail;
  }
  off += soc_dim;
  {
    // complementary eigen-partition on a shared basis
    Eigen::MatrixXd raw(psd_side, psd_side);
    for (int i = 0; i < psd_side; ++i)
      for (int j = 0; j < psd_side; ++j) raw(i, j) = rng.gaussian();
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(raw)
                                  .householderQ();
    Eigen::VectorXd ds = Eigen::VectorXd::Zero(psd_side);
    Eigen::VectorXd dz = Eigen::VectorXd::Zero(psd_side);
    for (int i = 0; i < psd_side; ++i) {
      if (i % 2 == 0)
        ds(i) = rng.uniform(0.5, 2.0);
      else
        dz(i) = rng.uniform(0.5, 2.0);
    }
    s_opt.segment(off, svec_len(psd_side)) =
        svec(q * ds.asDiagonal() * q.transpose());
    z_opt.segment(off, svec_len(psd_side)) =
        svec(q * dz.asDiagonal() * q.transpose());
  }

  Eigen::MatrixXd g(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.gaussian();
  Eigen::MatrixXd a(p, n);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.gaussian();

  inst.x_opt = rng.gaussian_vector(n);
  const Eigen::VectorXd y_opt = rng.gaussian_vector(p);
  const Eigen::VectorXd h = g * inst.x_opt + s_opt;
  const Eigen::VectorXd b = p ? (a * inst.x_opt).eval() : Eigen::VectorXd();
  // maximize convention: c = A'y + G'z makes (x,y,z,s) a KKT point
  const Eigen::VectorXd c =
      (p ? (a.transpose() * y_opt).eval() : Eigen::VectorXd::Zero(n).eval()) +
      g.transpose() * z_opt;

  pb.set_objective(c);
  for (int i = 0; i < p; ++i) pb.add_eq(a.row(i).transpose(), b(i));
  for (int i = 0; i < l; ++i) pb.add_nonneg(g.row(i).transpose(), h(i));
  pb.add_soc(g.middleRows(l, soc_dim), h.segment(l, soc_dim));
  {
    // express the PSD rows through add_psd: constant smat(h_psd), coefficient
    // -smat(column) per variable
    const int start = l + soc_dim;
    const int len = svec_len(psd_side);
    std::vector<int> vars(n);
    std::vector<Eigen::MatrixXd> coeffs(n);
    for (int j = 0; j < n; ++j) {
      vars[j] = j;
      coeffs[j] = -smat(g.col(j).segment(start, len), psd_side);
    }
    pb.add_psd(smat(h.segment(start, len), psd_side), vars, coeffs);
  }
  inst.obj_opt = c.dot(inst.x_opt);
  return inst;
}

}  // namespace mabeam::testing
