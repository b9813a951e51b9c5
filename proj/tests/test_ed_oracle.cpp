#include <doctest.h>

#include "djcg/ed_oracle.hpp"
#include "djcg/repmap.hpp"
#include "oracles.hpp"

using namespace djcg;
using doctest::Approx;

namespace {

const ModelParams jc = ModelParams::spin_boson({1.0}, 1.0, 0.5);

}  // namespace

TEST_CASE("sector basis ordering") {
  const ModelParams p = oracle::spin_boson(2, 1);
  const SectorBasis b(p, Sector{2});
  REQUIRE(b.size() == 4);
  CHECK(b[0] == BasisState{2, {}});
  CHECK(b[1] == BasisState{1, {0}});
  CHECK(b[2] == BasisState{1, {1}});
  CHECK(b[3] == BasisState{0, {0, 1}});
  CHECK(b.index_of(BasisState{1, {1}}) == 2);
  CHECK(b.index_of(BasisState{0, {1}}) == -1);
  const SectorBasis so(oracle::spin_only(3, 1), Sector{2});
  CHECK(so.size() == 3);
  CHECK(so[0].flipped == std::vector<int>{0, 1});
}

TEST_CASE("charge matrices") {
  const Eigen::MatrixXd R = build_charge_matrix(jc, 0, Sector{1});
  REQUIRE(R.rows() == 2);
  CHECK(R(0, 0) == Approx(0.0));
  CHECK(R(1, 1) == Approx(0.0));
  CHECK(R(0, 1) == Approx(0.5));
  CHECK(R(1, 0) == Approx(0.5));

  SUBCASE("vacuum entry") {
    const ModelParams p = oracle::spin_boson(3, 2);
    const double V2 = p.V() * p.V();
    for (int k = 0; k < 3; ++k) {
      double expect = -0.5 * (p.epsilon(k) - p.omega());
      for (int j = 0; j < 3; ++j)
        if (j != k) expect += 2 * V2 / (p.epsilon(k) - p.epsilon(j)) * 0.25;
      CHECK(build_charge_matrix(p, k, Sector{0})(0, 0) == Approx(expect));
    }
  }

  SUBCASE("symmetric, commuting") {
    for (const ModelParams& p : {oracle::spin_boson(4, 9), oracle::spin_only(4, 9)}) {
      const int M = p.spin_boson() ? 3 : 2;
      double scale = 0.0;
      for (int k = 0; k < 4; ++k) {
        const Eigen::MatrixXd Rk = build_charge_matrix(p, k, Sector{M});
        CHECK((Rk - Rk.transpose()).norm() == 0.0);
        scale = std::max(scale, Rk.lpNorm<Eigen::Infinity>());
      }
      CHECK(check_commutation(p, Sector{M}) <= 1e-12 * scale);
    }
    CHECK(check_commutation(jc, Sector{3}) == 0.0);
  }

  SUBCASE("guard") {
    try {
      build_charge_matrix(oracle::spin_boson(4, 9), 0, Sector{3}, 10);
      FAIL("guard not enforced");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::OracleTooLarge);
    }
  }
}

TEST_CASE("sectors are invariant") {
  // charges commute with the excitation number on the direct sum of two sectors
  const ModelParams p = oracle::spin_boson(3, 5);
  for (int k = 0; k < 3; ++k)
    for (OperatorKind kind : {OperatorKind::Sz, OperatorKind::Number}) {
      const Eigen::MatrixXd op = operator_matrix(p, {kind, k}, Sector{2});
      CHECK(op.rows() == op.cols());
    }
  CHECK(operator_matrix(p, {OperatorKind::Sminus, 0}, Sector{0}).rows() == 0);
  CHECK(operator_matrix(oracle::spin_only(2, 1), {OperatorKind::Splus, 0}, Sector{2}).rows() == 0);
  // number operator in a sector: b^dag b + sum (S^z + 1/2) = M
  const Eigen::MatrixXd n = operator_matrix(p, {OperatorKind::Number, 0}, Sector{2});
  Eigen::MatrixXd total = n;
  for (int k = 0; k < 3; ++k)
    total += operator_matrix(p, {OperatorKind::Sz, k}, Sector{2}) +
             0.5 * Eigen::MatrixXd::Identity(n.rows(), n.cols());
  CHECK((total - 2.0 * Eigen::MatrixXd::Identity(n.rows(), n.cols())).norm() <= 1e-14);
}

TEST_CASE("joint diagonalization") {
  const EDResult two = joint_diagonalize(jc, Sector{1});
  REQUIRE(two.charges.size() == 2);
  CHECK(two.charges[0](0) == Approx(-0.5));
  CHECK(two.charges[1](0) == Approx(0.5));

  const ModelParams p = oracle::spin_boson(3, 13);
  const EDResult vac = joint_diagonalize(p, Sector{0});
  REQUIRE(vac.charges.size() == 1);
  for (int k = 0; k < 3; ++k) CHECK(vac.charges[0](k) == Approx(build_charge_matrix(p, k, Sector{0})(0, 0)));

  for (int M = 1; M <= 3; ++M) {
    const EDResult ed = joint_diagonalize(p, Sector{M});
    const Eigen::MatrixXd& Q = ed.vectors;
    CHECK((Q.transpose() * Q - Eigen::MatrixXd::Identity(Q.cols(), Q.cols())).lpNorm<Eigen::Infinity>() <= 1e-12);
    for (int k = 0; k < 3; ++k) {
      const Eigen::MatrixXd R = build_charge_matrix(p, k, Sector{M});
      for (int i = 0; i < Q.cols(); ++i)
        CHECK((R * Q.col(i) - ed.charges[i](k) * Q.col(i)).norm() <= 1e-9 * R.norm());
    }
    std::vector<Eigen::VectorXd> solved;
    for (const auto& s : solve_sector(p, Sector{M})) solved.push_back(charges_from_lambda(p, s));
    CHECK(oracle::match_charges(solved, ed.charges).second <= 1e-8);
  }
}

TEST_CASE("lambda from charges") {
  CHECK(lambda_from_ed(jc, Eigen::VectorXd::Constant(1, -0.5), Sector{1}).values(0) == Approx(2.0));
  const ModelParams p = oracle::spin_boson(4, 3);
  const EDResult vac = joint_diagonalize(p, Sector{0});
  CHECK(lambda_from_ed(p, vac.charges[0], Sector{0}).values.lpNorm<Eigen::Infinity>() <= 1e-12);
  for (const ModelParams& q : {p, oracle::spin_only(4, 3)}) {
    const EDResult ed = joint_diagonalize(q, Sector{2});
    for (const auto& r : ed.charges)
      CHECK(qbe_residual(q, lambda_from_ed(q, r, Sector{2})).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("local operator matrix elements") {
  const ModelParams one = ModelParams::spin_boson({1.0}, 2.0, 0.5);
  SectorVector down{Sector{0}, Eigen::VectorXd::Ones(1)};
  // sector 1 basis: |1;{}>, |0;{0}>
  SectorVector up{Sector{1}, Eigen::Vector2d(0.0, 1.0)};
  SectorVector boson{Sector{1}, Eigen::Vector2d(1.0, 0.0)};
  CHECK(ed_matrix_element(one, {OperatorKind::Splus, 0}, up, down) == Approx(1.0));
  CHECK(ed_matrix_element(one, {OperatorKind::Bdag, 0}, boson, down) == Approx(1.0));
  CHECK(ed_matrix_element(one, {OperatorKind::Sz, 0}, up, up) == Approx(0.5));
  CHECK_THROWS_AS(ed_matrix_element(one, {OperatorKind::Splus, 0}, up, up), Error);
  SectorVector two{Sector{2}, Eigen::Vector2d(1.0, 0.0)};
  CHECK(ed_matrix_element(one, {OperatorKind::Bdag, 0}, two, boson) == Approx(std::sqrt(2.0)));
  CHECK(to_string(LocalOperator{OperatorKind::Splus, 1}) == "Splus(1)");
  CHECK(LocalOperator{OperatorKind::B, 0}.delta() == -1);
  CHECK(LocalOperator{OperatorKind::Number, 0}.bosonic());
}

TEST_CASE("explicit Bethe vectors") {
  const Eigen::VectorXd v = ed_state_from_rapidities(jc, {{Complex(0.5)}, Representation::Particle}, Sector{1});
  REQUIRE(v.size() == 2);
  CHECK(v(0) == Approx(1.0));
  CHECK(v(1) == Approx(-1.0));
  CHECK_THROWS_AS(ed_state_from_rapidities(jc, {{Complex(1.0)}, Representation::Particle}, Sector{1}), Error);

  SUBCASE("Bethe vectors are joint eigenvectors") {
    const ModelParams p = oracle::spin_boson(3, 61);
    for (const auto& st : solve_sector(p, Sector{2})) {
      const Eigen::VectorXd w = ed_state_from_rapidities(p, rapidities_from_lambda(p, st), Sector{2});
      const Eigen::VectorXd r = charges_from_lambda(p, st);
      for (int k = 0; k < 3; ++k)
        CHECK((build_charge_matrix(p, k, Sector{2}) * w - r(k) * w).norm() <= 1e-9 * w.norm());
    }
  }
}

TEST_CASE("Gaudin operators") {
  const ModelParams p = oracle::spin_boson(2, 4);
  const Complex u(0.3, 0.2);
  const Eigen::MatrixXcd up = gaudin_raising(p, u, Sector{1});
  const Eigen::MatrixXcd down = gaudin_lowering(p, u, Sector{2});
  CHECK(up.rows() == sector_dimension(p, Sector{2}));
  CHECK(down.rows() == sector_dimension(p, Sector{1}));
  // the Casimir commutes with every charge
  const Eigen::MatrixXcd C = gaudin_casimir(p, u, Sector{2});
  for (int k = 0; k < 2; ++k) {
    const Eigen::MatrixXcd R = build_charge_matrix(p, k, Sector{2}).cast<Complex>();
    CHECK((C * R - R * C).norm() <= 1e-12 * C.norm());
  }
}
