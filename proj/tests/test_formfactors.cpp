#include <doctest.h>

#include "djcg/determinants.hpp"
#include "djcg/ed_oracle.hpp"
#include "djcg/formfactors.hpp"
#include "oracles.hpp"

using namespace djcg;
using doctest::Approx;

namespace {

const ModelParams jc = ModelParams::spin_boson({1.0}, 1.0, 0.5);

// Unit-norm vacuum record; at resonance its hole representation is null.
EigenstateRecord vacuum(const ModelParams& p) {
  EigenstateRecord r;
  r.lambda_particle.values = Eigen::VectorXd::Zero(p.size());
  r.lambda_hole = hole_from_particle(p, r.lambda_particle);
  r.charges = charges_from_lambda(p, r.lambda_particle);
  r.dlambda = Eigen::VectorXd::Zero(p.size());
  r.norm_product = 1.0;
  r.norm_ratio = 1.0;
  return r;
}

using Solved = oracle::SolvedSector;

Solved solve(const ModelParams& p, int M) { return oracle::solve_and_align(p, M); }

Eigen::MatrixXd ed_table(const ModelParams& p, const LocalOperator& op, const Solved& bra, int, const Solved& ket) {
  return oracle::ed_table(p, op, bra, ket);
}

using oracle::worst_entry;

}  // namespace

TEST_CASE("closed forms of the resonant single level") {
  const std::vector<LambdaState> two = solve_sector(jc, Sector{1});
  const EigenstateRecord plus = make_record(jc, two[0]);   // Lambda = 2
  const EigenstateRecord minus = make_record(jc, two[1]);  // Lambda = -2
  const EigenstateRecord vac = vacuum(jc);

  CHECK(ff_splus(jc, plus, vac, 0).unnormalized == Approx(1.0));
  CHECK(ff_splus(jc, minus, vac, 0).unnormalized == Approx(1.0));
  CHECK(ff_bdagger(jc, plus, vac).unnormalized == Approx(-1.0));
  CHECK(ff_bdagger(jc, minus, vac).unnormalized == Approx(1.0));
  CHECK(ff_splus(jc, plus, vac, 0).normalized == Approx(-std::sqrt(0.5)));
  CHECK(ff_bdagger(jc, plus, vac).normalized == Approx(std::sqrt(0.5)));

  CHECK(ff_sz_diagonal(jc, plus, 0) == Approx(0.0));
  CHECK(ff_sz_diagonal(jc, minus, 0) == Approx(0.0));
  CHECK(ff_number(jc, plus, plus, true).normalized == Approx(0.5));
  CHECK(ff_number(jc, minus, minus, true).normalized == Approx(0.5));
}

TEST_CASE("vacuum expectation values") {
  const ModelParams p = oracle::spin_boson(3, 4);
  const EigenstateRecord vac = make_record(p, solve_sector(p, Sector{0})[0]);
  for (int k = 0; k < 3; ++k) CHECK(ff_sz_diagonal(p, vac, k) == Approx(-0.5));
  CHECK(ff_number(p, vac, vac, true).normalized == Approx(0.0));
  CHECK_THROWS_AS(overlap_omega_derivative(p, vac, vac), Error);
}

TEST_CASE("spin-boson form factors against exact diagonalization") {
  const ModelParams p = oracle::spin_boson(3, 27);
  std::vector<Solved> s;
  for (int M = 0; M <= 3; ++M) s.push_back(solve(p, M));
  for (int M = 1; M <= 3; ++M) {
    const Solved& bra = s[M];
    const Solved& ket = s[M - 1];
    for (int k = 0; k < 3; ++k) {
      CHECK(worst_entry(ed_table(p, {OperatorKind::Splus, k}, bra, M - 1, ket), [&](int a, int b) {
              return ff_splus(p, bra.records[a], ket.records[b], k).normalized;
            }) <= 1e-8);
      CHECK(worst_entry(ed_table(p, {OperatorKind::Sminus, k}, ket, M, bra), [&](int a, int b) {
              return ff_sminus(p, ket.records[a], bra.records[b], k).normalized;
            }) <= 1e-8);
      CHECK(worst_entry(ed_table(p, {OperatorKind::Sz, k}, bra, M, bra), [&](int a, int b) {
              return ff_sz(p, bra.records[a], bra.records[b], k, a == b).normalized;
            }) <= 1e-8);
    }
    CHECK(worst_entry(ed_table(p, {OperatorKind::Bdag, 0}, bra, M - 1, ket), [&](int a, int b) {
            return ff_bdagger(p, bra.records[a], ket.records[b]).normalized;
          }) <= 1e-8);
    CHECK(worst_entry(ed_table(p, {OperatorKind::B, 0}, ket, M, bra), [&](int a, int b) {
            return ff_b(p, ket.records[a], bra.records[b]).normalized;
          }) <= 1e-8);
    CHECK(worst_entry(ed_table(p, {OperatorKind::Number, 0}, bra, M, bra), [&](int a, int b) {
            return ff_number(p, bra.records[a], bra.records[b], a == b).normalized;
          }) <= 1e-8);
  }
}

TEST_CASE("spin-only form factors against exact diagonalization") {
  for (int n : {2, 4}) {
    const ModelParams p = oracle::spin_only(n, 33);
    std::vector<Solved> s;
    for (int M = 0; M <= n; ++M) s.push_back(solve(p, M));
    for (int M = 1; M <= n; ++M)
      for (int k = 0; k < n; ++k) {
        CHECK(worst_entry(ed_table(p, {OperatorKind::Splus, k}, s[M], M - 1, s[M - 1]), [&](int a, int b) {
                return ff_splus(p, s[M].records[a], s[M - 1].records[b], k).normalized;
              }) <= 1e-8);
        CHECK(worst_entry(ed_table(p, {OperatorKind::Sz, k}, s[M], M, s[M]), [&](int a, int b) {
                return ff_sz_spin_only(p, s[M].records[a], s[M].records[b], k, a == b).normalized;
              }) <= 1e-8);
      }
  }
  const ModelParams so = oracle::spin_only(2, 1);
  const Solved one = solve(so, 1);
  CHECK_THROWS_AS(ff_bdagger(so, one.records[0], solve(so, 0).records[0]), Error);
  CHECK_THROWS_AS(ff_sz_spin_only(jc, make_record(jc, solve_sector(jc, Sector{1})[0]),
                                  make_record(jc, solve_sector(jc, Sector{1})[0]), 0, true),
                  Error);
}

TEST_CASE("sector checks") {
  const ModelParams p = oracle::spin_boson(2, 3);
  const Solved one = solve(p, 1);
  CHECK_THROWS_AS(ff_splus(p, one.records[0], one.records[1], 0), Error);
  CHECK_THROWS_AS(ff_bdagger(p, solve(p, 2).records[0], solve(p, 0).records[0]), Error);
  CHECK_THROWS_AS(ff_number(p, one.records[0], solve(p, 2).records[0], false), Error);
  CHECK_THROWS_AS(ff_splus(p, solve(p, 2).records[0], one.records[0], 5), Error);
}

TEST_CASE("overlap derivative against the determinant quotient") {
  const double h = 1e-5;
  for (int realization = 0; realization < 2; ++realization) {
    const ModelParams p = realization == 0 ? oracle::spin_boson(3, 41) : oracle::spin_only(3, 41);
    auto moved = [&](double d) {
      return realization == 0 ? p.with_omega(p.omega() + d) : p.with_coupling(1.0 / (1.0 / p.g() + d));
    };
    for (int M = 1; M <= 2; ++M) {
      const std::vector<LambdaState> states = solve_sector(p, Sector{M});
      const auto up = continue_states(p, states, moved(h), {}, 1);
      const auto dn = continue_states(p, states, moved(-h), {}, 1);
      std::vector<EigenstateRecord> recs;
      for (const auto& st : states) recs.push_back(make_record(p, st));
      for (std::size_t m = 0; m < recs.size(); ++m)
        for (std::size_t n = 0; n < recs.size(); ++n) {
          if (m == n) continue;
          const double quotient = (oracle::scalar_product_extended(p, recs[m].lambda_hole, up[n]) -
                                   oracle::scalar_product_extended(p, recs[m].lambda_hole, dn[n])) /
                                  (2 * h);
          const double analytic = overlap_omega_derivative(p, recs[m], recs[n]);
          CHECK(analytic == Approx(quotient).epsilon(1e-5));
          if (realization == 0) {
            // charge-difference prefactor of the S^z form factor
            const double V2 = p.V() * p.V();
            for (int k = 0; k < 3; ++k) {
              const double pre = p.epsilon(k) - p.omega() + V2 * recs[n].lambda_particle.values(k) -
                                 V2 * recs[m].lambda_hole.values(k);
              CHECK(ff_sz_offdiagonal(p, recs[m], recs[n], k).unnormalized == Approx(pre * analytic));
            }
          }
        }
    }
  }
}

TEST_CASE("hermiticity and sum rules") {
  for (const ModelParams& p : {oracle::spin_boson(3, 51), oracle::spin_only(3, 51)})
    for (int M = 0; M <= 3; ++M) {
      const Solved s = solve(p, M);
      const int n = p.size();
      for (std::size_t a = 0; a < s.records.size(); ++a) {
        double total = p.spin_boson() ? ff_number(p, s.records[a], s.records[a], true).normalized : 0.0;
        for (int k = 0; k < n; ++k) total += ff_sz(p, s.records[a], s.records[a], k, true).normalized;
        CHECK(total == Approx(M - 0.5 * n).epsilon(1e-12));
        for (std::size_t b = 0; b < a; ++b)
          for (int k = 0; k < n; ++k)
            CHECK(ff_sz(p, s.records[a], s.records[b], k, false).normalized ==
                  Approx(ff_sz(p, s.records[b], s.records[a], k, false).normalized).epsilon(1e-8));
      }
    }
}

TEST_CASE("weak spin-only coupling reproduces the product states") {
  const ModelParams p = ModelParams::spin_only({0.3, 1.4, 2.2}, 1e-3);
  for (const auto& ls : solve_sector_labeled(p, Sector{1})) {
    const EigenstateRecord r = make_record(p, ls.state);
    for (int k = 0; k < 3; ++k) {
      const bool up = std::find(ls.label.flipped.begin(), ls.label.flipped.end(), k) != ls.label.flipped.end();
      CHECK(std::abs(ff_sz_spin_only(p, r, r, k, true).normalized - (up ? 0.5 : -0.5)) <= 1e-3);
    }
  }
}
