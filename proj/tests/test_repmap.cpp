#include <doctest.h>

#include "djcg/determinants.hpp"
#include "djcg/ed_oracle.hpp"
#include "djcg/repmap.hpp"
#include "oracles.hpp"

using namespace djcg;
using doctest::Approx;

namespace {

const ModelParams jc = ModelParams::spin_boson({1.0}, 1.0, 0.5);

double worst(const std::vector<Complex>& v) {
  double m = 0.0;
  for (const Complex& x : v) m = std::max(m, std::abs(x));
  return m;
}

EigenstateRecord record_of(const ModelParams& p, const LambdaState& s) {
  EigenstateRecord r;
  r.lambda_particle = s;
  r.lambda_hole = hole_from_particle(p, s);
  r.charges = charges_from_lambda(p, s);
  return r;
}

}  // namespace

TEST_CASE("rapidities from lambda") {
  LambdaState s;
  s.values = Eigen::VectorXd::Constant(1, 2.0);
  s.M = 1;
  const RapiditySet r = rapidities_from_lambda(jc, s);
  REQUIRE(r.values.size() == 1);
  CHECK(r.values[0].real() == Approx(0.5));
  CHECK(r.values[0].imag() == Approx(0.0));

  LambdaState vac;
  vac.values = Eigen::VectorXd::Zero(3);
  CHECK(rapidities_from_lambda(oracle::spin_boson(3, 1), vac).values.empty());

  SUBCASE("round trip and conjugate pairing") {
    const ModelParams p = oracle::spin_boson(3, 31, 1.3, 1.6);
    for (const auto& st : solve_sector(p, Sector{2})) {
      const RapiditySet lam = rapidities_from_lambda(p, st);
      CHECK(is_conjugation_closed(lam.values, 1e-9));
      const LambdaState back = lambda_from_rapidities(lam, p);
      CHECK((back.values - st.values).lpNorm<Eigen::Infinity>() <= 1e-9 * std::max(1.0, st.values.norm()));
    }
  }

  SUBCASE("errors") {
    LambdaState many;
    many.values = Eigen::VectorXd::Constant(1, 2.0);
    many.M = 2;
    try {
      rapidities_from_lambda(jc, many);
      FAIL("more rapidities than levels");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Underdetermined);
    }
    LambdaState junk;
    junk.values = Eigen::Vector3d(1.0, -7.0, 3.0);
    junk.M = 1;
    try {
      rapidities_from_lambda(oracle::spin_boson(3, 1), junk);
      FAIL("inconsistent Lambda accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Inconsistency);
    }
  }
}

TEST_CASE("rapidity Bethe equations") {
  CHECK(worst(rapidity_bethe_residual(jc, {{Complex(0.5)}, Representation::Particle}, Sector{1})) < 1e-12);

  SUBCASE("hole rapidities from the mapped hole state") {
    const ModelParams p = oracle::spin_boson(2, 17);
    for (const auto& st : solve_sector(p, Sector{1})) {
      const RapiditySet mu = rapidities_from_lambda(p, hole_from_particle(p, st));
      CHECK(mu.values.size() == 2);
      CHECK(worst(rapidity_bethe_residual(p, mu, Sector{1})) <= 1e-8);
    }
  }

  SUBCASE("every solved state, both ansatze, both realizations") {
    for (const ModelParams& p : {oracle::spin_boson(4, 2), oracle::spin_only(4, 2)})
      for (int M = 0; M <= 4; ++M)
        for (const auto& st : solve_sector(p, Sector{M})) {
          if (st.M <= p.size())
            CHECK(worst(rapidity_bethe_residual(p, rapidities_from_lambda(p, st), Sector{M})) <= 1e-7);
          const RapiditySet mu = rapidities_from_lambda(p, hole_from_particle(p, st));
          CHECK(worst(rapidity_bethe_residual(p, mu, Sector{M})) <= 1e-7);
        }
  }

  SUBCASE("perturbed rapidities are detected") {
    const ModelParams p = oracle::spin_boson(3, 5);
    RapiditySet lam = rapidities_from_lambda(p, solve_sector(p, Sector{2})[1]);
    lam.values[0] += 1e-3;
    if (lam.values[0].imag() != 0.0) lam.values[1] = std::conj(lam.values[0]);
    double norm = 0.0;
    for (const Complex& x : rapidity_bethe_residual(p, lam, Sector{2})) norm += std::norm(x);
    CHECK(std::sqrt(norm) > 1e-4);
  }

  CHECK_THROWS_AS(rapidity_bethe_residual(oracle::spin_boson(2, 1), {{Complex(7.0), Complex(7.0)}}, Sector{2}),
                  Error);
}

TEST_CASE("generating function eigenvalue") {
  EigenstateRecord vac;
  vac.lambda_particle.values = Eigen::VectorXd::Zero(1);
  vac.charges = Eigen::VectorXd::Zero(1);
  CHECK(generating_eigenvalue(jc, vac, Complex(2.0)).real() == Approx(1.1875));
  CHECK_THROWS_AS(generating_eigenvalue(jc, vac, Complex(1.0)), Error);

  SUBCASE("agrees with the assembled generating operator") {
    for (const ModelParams& p : {oracle::spin_boson(2, 40), oracle::spin_only(3, 40)}) {
      const Complex u(p.epsilon(0) + 0.7, 0.0);
      for (int M = 0; M <= 2; ++M) {
        const EDResult ed = joint_diagonalize(p, Sector{M});
        const Eigen::MatrixXcd S2 = gaudin_casimir(p, u, Sector{M});
        for (const auto& st : solve_sector(p, Sector{M})) {
          const EigenstateRecord rec = record_of(p, st);
          const auto [assign, dist] = oracle::match_charges({rec.charges}, ed.charges);
          REQUIRE(dist < 1e-8);
          const Eigen::VectorXcd v = ed.vectors.col(assign[0]).cast<Complex>();
          const Complex expect = v.dot(S2 * v);
          CHECK(std::abs(generating_eigenvalue(p, rec, u) - expect) <= 1e-8);
          // hole charges give the same value
          EigenstateRecord hole = rec;
          hole.charges = charges_from_lambda(p, rec.lambda_hole);
          CHECK(std::abs(generating_eigenvalue(p, hole, u) - generating_eigenvalue(p, rec, u)) <= 1e-10);
        }
      }
    }
  }
}
