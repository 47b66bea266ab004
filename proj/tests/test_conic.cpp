#include "doctest.h"

#include <cstring>
#include <fstream>

#include "kkt_instances.hpp"
#include "mabeam/conic.hpp"
#include "mabeam/rng.hpp"

using namespace mabeam;

TEST_CASE("svec/smat round trip preserves inner products") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + trial % 5;
    Eigen::MatrixXd a(d, d), b(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        a(i, j) = rng.gaussian();
        b(i, j) = rng.gaussian();
      }
    a = (0.5 * (a + a.transpose())).eval();
    b = (0.5 * (b + b.transpose())).eval();
    CHECK((smat(svec(a), d) - a).cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(svec(a).dot(svec(b)) ==
          doctest::Approx((a.transpose() * b).trace()).epsilon(1e-10));
  }
}

TEST_CASE("hermitian embedding") {
  SUBCASE("complex identity maps to real identity") {
    const Eigen::MatrixXcd h = Eigen::MatrixXcd::Identity(3, 3);
    CHECK((hermitian_embed(h) - Eigen::MatrixXd::Identity(6, 6)).norm() ==
          doctest::Approx(0.0));
  }
  SUBCASE("pauli-y eigenvalues doubled") {
    Eigen::MatrixXcd h(2, 2);
    h << 0.0, std::complex<double>(0, 1), std::complex<double>(0, -1), 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hermitian_embed(h));
    const Eigen::VectorXd ev = es.eigenvalues();
    CHECK(ev(0) == doctest::Approx(-1.0));
    CHECK(ev(1) == doctest::Approx(-1.0));
    CHECK(ev(2) == doctest::Approx(1.0));
    CHECK(ev(3) == doctest::Approx(1.0));
  }
  SUBCASE("psd preserved both directions") {
    Rng rng(11);
    for (int t = 0; t < 40; ++t) {
      const int d = 2 + t % 4;
      Eigen::MatrixXcd g(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          g(i, j) = std::complex<double>(rng.gaussian(), rng.gaussian());
      Eigen::MatrixXcd h = 0.5 * (g + g.adjoint());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ec(h);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(hermitian_embed(h));
      CHECK((ec.eigenvalues().minCoeff() >= 0) ==
            (er.eigenvalues().minCoeff() >= -1e-12));
    }
  }
  SUBCASE("non-hermitian rejected") {
    Eigen::MatrixXcd h(2, 2);
    h << 1.0, 2.0, 3.0, 4.0;
    CHECK_THROWS(hermitian_embed(h));
  }
}

TEST_CASE("scalar bound: maximize -x subject to x >= 1") {
  ConicProblem pb;
  pb.add_var("x");
  Eigen::VectorXd c(1);
  c << -1.0;
  pb.set_objective(c);
  Eigen::VectorXd g(1);
  g << -1.0;  // s = h - g x = x - 1 >= 0
  pb.add_nonneg(g, -1.0);
  const auto sol = solve(pb);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.x(0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("soc projection: min t with ||(3,4)|| <= t") {
  ConicProblem pb;
  const int t = pb.add_var("t");
  Eigen::VectorXd c(1);
  c << -1.0;  // maximize -t
  pb.set_objective(c);
  Eigen::MatrixXd g(3, 1);
  g << -1.0, 0.0, 0.0;
  Eigen::VectorXd h(3);
  h << 0.0, 3.0, 4.0;
  pb.add_soc(g, h);
  const auto sol = solve(pb);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.x(t) == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("tiny sdp: largest t with [[1,t],[t,1]] psd") {
  ConicProblem pb;
  const int t = pb.add_var("t");
  Eigen::VectorXd c(1);
  c << 1.0;
  pb.set_objective(c);
  Eigen::MatrixXd c0(2, 2), ct(2, 2);
  c0 << 1, 0, 0, 1;
  ct << 0, 1, 1, 0;
  pb.add_psd(c0, {t}, {ct});
  const auto sol = solve(pb);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.x(t) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("kkt-constructed instances recovered to tight gap") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto inst = testing::make_kkt_instance(seed, seed % 2 == 0);
    const auto sol = solve(inst.problem);
    REQUIRE_MESSAGE(sol.status == SolveStatus::Optimal,
                    "seed ", seed, " status ", to_string(sol.status));
    CHECK(sol.gap <= 1e-7);
    CHECK(std::abs(sol.obj - inst.obj_opt) <=
          1e-5 * (1.0 + std::abs(inst.obj_opt)));
  }
}

TEST_CASE("self-duality: dual instance attains the negated optimum") {
  const auto inst = testing::make_kkt_instance(42, true);
  const auto psol = solve(inst.problem);
  REQUIRE(psol.status == SolveStatus::Optimal);

  const Eigen::MatrixXd a = inst.problem.eq_matrix();
  const Eigen::VectorXd b = inst.problem.eq_rhs();
  const Eigen::MatrixXd g = inst.problem.ineq_matrix();
  const Eigen::VectorXd h = inst.problem.ineq_rhs();
  const Eigen::VectorXd cmin = -inst.problem.c();
  const int p = static_cast<int>(a.rows()), m = static_cast<int>(g.rows()),
            n = inst.problem.num_vars();

  // dual of [min cmin'x st Ax=b, Gx+s=h, s in K]:
  // max -b'y - h'z st A'y + G'z + cmin = 0, z in K
  ConicProblem dual;
  dual.add_var("y", p);
  dual.add_var("z", m);
  Eigen::VectorXd cd(p + m);
  cd.head(p) = -b;
  cd.tail(m) = -h;
  dual.set_objective(cd);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd row(p + m);
    row.head(p) = a.col(i);
    row.tail(m) = g.col(i);
    dual.add_eq(row, -cmin(i));
  }
  int off = 0;
  for (const auto& spec : inst.problem.cones()) {
    const int rows = spec.rows();
    switch (spec.kind) {
      case ConeKind::NonNeg:
        for (int i = 0; i < rows; ++i) {
          Eigen::VectorXd r = Eigen::VectorXd::Zero(p + m);
          r(p + off + i) = -1.0;
          dual.add_nonneg(r, 0.0);
        }
        break;
      case ConeKind::Soc: {
        Eigen::MatrixXd gz = Eigen::MatrixXd::Zero(rows, p + m);
        for (int i = 0; i < rows; ++i) gz(i, p + off + i) = -1.0;
        dual.add_soc(gz, Eigen::VectorXd::Zero(rows));
        break;
      }
      case ConeKind::Psd: {
        std::vector<int> vars;
        std::vector<Eigen::MatrixXd> coeffs;
        const int len = svec_len(spec.size);
        for (int i = 0; i < len; ++i) {
          Eigen::VectorXd unit = Eigen::VectorXd::Zero(len);
          unit(i) = 1.0;
          vars.push_back(p + off + i);
          coeffs.push_back(smat(unit, spec.size));
        }
        dual.add_psd(Eigen::MatrixXd::Zero(spec.size, spec.size), vars, coeffs);
        break;
      }
    }
    off += rows;
  }
  const auto dsol = solve(dual);
  REQUIRE(dsol.status == SolveStatus::Optimal);
  CHECK(dsol.obj == doctest::Approx(-psol.obj).epsilon(1e-6));
}

TEST_CASE("infeasible and unbounded detection") {
  SUBCASE("x >= 1 and x <= 0 reported infeasible") {
    ConicProblem pb;
    pb.add_var("x");
    Eigen::VectorXd c(1);
    c << 0.0;
    pb.set_objective(c);
    Eigen::VectorXd g(1);
    g << -1.0;
    pb.add_nonneg(g, -1.0);  // x >= 1
    Eigen::VectorXd g2(1);
    g2 << 1.0;
    pb.add_nonneg(g2, 0.0);  // x <= 0
    const auto sol = solve(pb);
    CHECK(sol.status == SolveStatus::Infeasible);
  }
  SUBCASE("maximize x with x >= 0 reported unbounded") {
    ConicProblem pb;
    pb.add_var("x");
    Eigen::VectorXd c(1);
    c << 1.0;
    pb.set_objective(c);
    Eigen::VectorXd g(1);
    g << -1.0;
    pb.add_nonneg(g, 0.0);  // x >= 0
    const auto sol = solve(pb);
    CHECK(sol.status == SolveStatus::Unbounded);
  }
}

TEST_CASE("deterministic resolve is bitwise identical") {
  const auto inst = testing::make_kkt_instance(5, true);
  const auto s1 = solve(inst.problem);
  const auto s2 = solve(inst.problem);
  REQUIRE(s1.x.size() == s2.x.size());
  CHECK(std::memcmp(s1.x.data(), s2.x.data(), sizeof(double) * s1.x.size()) == 0);
  CHECK(s1.iterations == s2.iterations);
}

TEST_CASE("rotated cone helper") {
  // minimize u + v with u*v >= 1: optimum 2 at u = v = 1
  ConicProblem pb;
  const int u = pb.add_var("u");
  const int v = pb.add_var("v");
  Eigen::VectorXd c(2);
  c << -1.0, -1.0;
  pb.set_objective(c);
  Eigen::VectorXd gu = Eigen::VectorXd::Zero(2), gv = Eigen::VectorXd::Zero(2);
  gu(u) = -1.0;
  gv(v) = -1.0;
  Eigen::MatrixXd gw = Eigen::MatrixXd::Zero(1, 2);
  Eigen::VectorXd hw(1);
  hw << std::sqrt(2.0);
  pb.add_rotated_soc(gu, 0.0, gv, 0.0, gw, hw);
  const auto sol = solve(pb);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.x(u) * sol.x(v) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(sol.obj == doctest::Approx(-2.0).epsilon(1e-5));
}

TEST_CASE("problem dump writes a parseable header") {
  const auto inst = testing::make_kkt_instance(3, true);
  const std::string path = "/tmp/mabeam_dump_test.txt";
  inst.problem.dump(path);
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(first == "conic-problem v1");
}
