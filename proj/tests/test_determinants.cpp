#include <doctest.h>

#include <numeric>

#include "djcg/determinants.hpp"
#include "djcg/ed_oracle.hpp"
#include "djcg/repmap.hpp"
#include "oracles.hpp"

using namespace djcg;
using doctest::Approx;

namespace {

const ModelParams jc = ModelParams::spin_boson({1.0}, 1.0, 0.5);

using oracle::random_rapidities;
using oracle::subsets;

double partition(const ModelParams& p, const std::vector<Complex>& nu, const BasisState& b) {
  return partition_function(p, RapiditySet{nu, Representation::Particle}, b);
}

}  // namespace

TEST_CASE("partition function closed forms") {
  const ModelParams p = ModelParams::spin_boson({1.0}, 1.0, 0.5);
  CHECK(partition(p, {Complex(3.0)}, BasisState{0, {0}}) == Approx(0.25));
  CHECK(brute_force_partition(p, {{Complex(3.0)}}, BasisState{0, {0}}) == Approx(0.25));
  for (int M = 0; M <= 5; ++M) {
    std::mt19937_64 rng(M);
    const std::vector<Complex> nu = random_rapidities(rng, M);
    CHECK(partition(p, nu, BasisState{M, {}}) == Approx(std::sqrt(std::tgamma(M + 1.0))));
  }
  CHECK_THROWS_AS(partition(p, {Complex(3.0)}, BasisState{1, {0}}), Error);
}

TEST_CASE("partition function equals the permutation expansion") {
  std::mt19937_64 rng(2024);
  const ModelParams two = oracle::spin_boson(2, 3);
  const std::vector<Complex> pair = random_rapidities(rng, 2);
  CHECK(partition(two, pair, BasisState{0, {0, 1}}) ==
        Approx(brute_force_partition(two, {pair}, BasisState{0, {0, 1}})).epsilon(1e-12));

  const std::vector<Complex> four = random_rapidities(rng, 4);
  for (const BasisState& b : {BasisState{2, {0, 1}}, BasisState{3, {1}}, BasisState{4, {}}}) {
    const double brute = brute_force_partition(two, {four}, b);
    CHECK(partition(two, four, b) == Approx(brute).epsilon(1e-12));
    CHECK(std::abs(oracle::expansion_overlap(two, four, b.n_b, b.flipped) - brute) <= 1e-12 * std::abs(brute));
  }

  SUBCASE("all basis states up to six excitations") {
    for (const ModelParams& p : {oracle::spin_boson(2, 8), oracle::spin_boson(3, 8), oracle::spin_only(3, 8)})
      for (int M = 0; M <= 6; ++M) {
        const std::vector<Complex> nu = random_rapidities(rng, p.spin_boson() ? M : std::min(M, p.size()));
        for (int m = 0; m <= std::min(M, p.size()); ++m) {
          if (!p.spin_boson() && m != int(nu.size())) continue;
          for (const auto& S : subsets(p.size(), m)) {
            const BasisState b{p.spin_boson() ? M - m : 0, S};
            const double brute = brute_force_partition(p, {nu}, b);
            CHECK(std::abs(partition(p, nu, b) - brute) <= 1e-10 * std::max(1.0, std::abs(brute)));
          }
        }
      }
  }

  SUBCASE("brute force is symmetric and guarded") {
    const ModelParams p = oracle::spin_boson(3, 1);
    std::vector<Complex> nu = random_rapidities(rng, 4);
    const BasisState b{2, {0, 2}};
    const double a = brute_force_partition(p, {nu}, b);
    std::reverse(nu.begin(), nu.end());
    CHECK(std::abs(brute_force_partition(p, {nu}, b) - a) <= 1e-15 * std::max(1.0, std::abs(a)));
    try {
      brute_force_partition(p, {random_rapidities(rng, 9)}, BasisState{6, {0, 1, 2}});
      FAIL("guard not enforced");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::OracleTooLarge);
    }
  }
}

TEST_CASE("overlap recursion in the last rapidity") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> pick(0, 1 << 10);
  int checked = 0;
  double worst = 0.0;
  while (checked < 100) {
    const int n = 2 + pick(rng) % 2;
    const ModelParams p = oracle::spin_boson(n, pick(rng), 1.3, 0.3 + 0.1 * (pick(rng) % 10));
    const int m = pick(rng) % (n + 1);
    const int nb = pick(rng) % 4;
    if (m + nb == 0) continue;
    std::vector<int> S = subsets(n, m)[pick(rng) % subsets(n, m).size()];
    // closed set for the first m + nb - 1, a real last rapidity
    const std::vector<Complex> rest = random_rapidities(rng, m + nb - 1);
    const Complex last = random_rapidities(rng, 1)[0];
    std::vector<Complex> nu = rest;
    nu.push_back(last);
    double rhs = nb > 0 ? std::sqrt(double(nb)) * partition(p, rest, BasisState{nb - 1, S}) : 0.0;
    for (std::size_t j = 0; j < S.size(); ++j) {
      std::vector<int> less = S;
      less.erase(less.begin() + long(j));
      rhs += (p.V() / (last - p.epsilon(S[j]))).real() * partition(p, rest, BasisState{nb, less});
    }
    const double lhs = partition(p, nu, BasisState{nb, S});
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    ++checked;
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("partition function matches the explicit Bethe vector") {
  for (const ModelParams& p : {oracle::spin_boson(3, 14), oracle::spin_only(4, 14)})
    for (int M = 1; M <= 3; ++M) {
      const SectorBasis basis(p, Sector{M});
      for (const auto& st : solve_sector(p, Sector{M})) {
        const RapiditySet lam = rapidities_from_lambda(p, st);
        const Eigen::VectorXd v = ed_state_from_rapidities(p, lam, Sector{M});
        const LambdaState hole = hole_from_particle(p, st);
        const Eigen::VectorXd w = ed_state_from_rapidities(p, rapidities_from_lambda(p, hole), Sector{M});
        for (int b = 0; b < basis.size(); ++b) {
          CHECK(partition_function(p, st, basis[b]) == Approx(v(b)).epsilon(1e-10).scale(v.norm()));
          CHECK(hole_overlap(p, hole, basis[b]) == Approx(w(b)).epsilon(1e-10).scale(w.norm()));
        }
      }
    }
}

TEST_CASE("norm product") {
  const std::vector<LambdaState> two = solve_sector(jc, Sector{1});
  CHECK(norm_product(jc, make_record(jc, two[0])) == Approx(-2.0).epsilon(1e-14));
  CHECK(norm_product(jc, make_record(jc, two[1])) == Approx(2.0).epsilon(1e-14));

  SUBCASE("vacuum against the explicit inner product") {
    const ModelParams p = oracle::spin_boson(3, 6);
    const EigenstateRecord r = make_record(p, solve_sector(p, Sector{0})[0]);
    CHECK(r.lambda_hole.values(1) == Approx(-(p.omega() - p.epsilon(1)) / (p.V() * p.V())));
    const Eigen::VectorXd mu =
        ed_state_from_rapidities(p, rapidities_from_lambda(p, r.lambda_hole), Sector{0});
    CHECK(r.norm_product == Approx(mu(0)).epsilon(1e-10));
  }

  SUBCASE("explicit inner products, positivity and orthogonality") {
    for (const ModelParams& p : {oracle::spin_boson(3, 19), oracle::spin_only(4, 19)})
      for (int M = 0; M <= 3; ++M) {
        std::vector<EigenstateRecord> recs;
        for (const auto& st : solve_sector(p, Sector{M})) recs.push_back(make_record(p, st));
        for (const auto& r : recs) {
          const Eigen::VectorXd lam =
              ed_state_from_rapidities(p, rapidities_from_lambda(p, r.lambda_particle), Sector{M});
          const Eigen::VectorXd mu = ed_state_from_rapidities(p, rapidities_from_lambda(p, r.lambda_hole), Sector{M});
          CHECK(r.norm_product == Approx(mu.dot(lam)).epsilon(1e-10));
          const double nl2 = r.norm_product * r.norm_ratio;
          const double nm2 = r.norm_product / r.norm_ratio;
          CHECK(nl2 > 0.0);
          CHECK(nm2 > 0.0);
          CHECK(nl2 == Approx(lam.squaredNorm()).epsilon(1e-10));
          CHECK(nm2 == Approx(mu.squaredNorm()).epsilon(1e-10));
        }
        for (std::size_t a = 0; a < recs.size(); ++a)
          for (std::size_t b = 0; b < recs.size(); ++b) {
            if (a == b) continue;
            const double scale = std::sqrt(std::abs(recs[a].norm_product * recs[b].norm_product));
            CHECK(std::abs(scalar_product(p, recs[a].lambda_hole, recs[b].lambda_particle)) <= 1e-9 * scale);
          }
      }
  }
}

TEST_CASE("norm ratio") {
  const EigenstateRecord up = make_record(jc, solve_sector(jc, Sector{1})[0]);
  CHECK(norm_ratio(jc, up, BasisState{0, {0}}) == Approx(-1.0));
  CHECK(up.norm_product * up.norm_ratio == Approx(2.0));
  CHECK(up.norm_product / up.norm_ratio == Approx(2.0));
  CHECK(default_reference(jc, Sector{1}) == BasisState{0, {0}});
  CHECK(default_reference(oracle::spin_boson(3, 1), Sector{5}) == BasisState{2, {0, 1, 2}});
  CHECK(default_reference(oracle::spin_only(4, 1), Sector{2}) == BasisState{0, {0, 1}});

  SUBCASE("a reference without weight is refused") {
    // the resonant single-level vacuum has a null hole representation
    EigenstateRecord vac;
    vac.lambda_particle.values = Eigen::VectorXd::Zero(1);
    vac.lambda_hole = hole_from_particle(jc, vac.lambda_particle);
    try {
      norm_ratio(jc, vac, BasisState{0, {}});
      FAIL("zero denominator accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::UnreachableReference);
    }
    CHECK_THROWS_AS(choose_norm_ratio(jc, vac), Error);
  }

  SUBCASE("the ratio does not depend on the reference") {
    const ModelParams p = oracle::spin_boson(3, 23);
    for (const auto& st : solve_sector(p, Sector{2})) {
      const EigenstateRecord r = make_record(p, st);
      const SectorBasis basis(p, Sector{2});
      for (int b = 0; b < basis.size(); ++b) {
        try {
          CHECK(norm_ratio(p, r, basis[b]) == Approx(r.norm_ratio).epsilon(1e-8));
        } catch (const Error& e) {
          CHECK(e.kind() == ErrorKind::UnreachableReference);
        }
      }
    }
  }
}

TEST_CASE("minors and determinants") {
  CHECK(minor_determinant(Eigen::MatrixXd::Constant(1, 1, 5.0), 0) == 1.0);
  CHECK(minor_determinant(Eigen::Vector3d(2, 3, 4).asDiagonal(), 1) == Approx(8.0));
  CHECK_THROWS_AS(minor_determinant(Eigen::MatrixXd::Identity(2, 2), 2), Error);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd A(5, 5);
    for (int i = 0; i < 25; ++i) A(i) = g(rng);
    for (int k = 0; k < 5; ++k)
      CHECK(minor_determinant(A, k) == Approx(oracle::cofactor_det(remove_row_col(A, k))).epsilon(1e-12));
    CHECK(determinant(A) == Approx(oracle::cofactor_det(A)).epsilon(1e-12));
  }
  CHECK(determinant(Eigen::MatrixXd(0, 0)) == 1.0);
  CHECK(determinant(Eigen::MatrixXd::Zero(3, 3)) == 0.0);
}

TEST_CASE("large prefactors stay in log form") {
  const ModelParams p = ModelParams::spin_boson({1.0}, 2.0, 1.0);
  const LogDet<double> d = partition_log<double>(p, Eigen::VectorXd::Zero(1), BasisState{400, {}});
  CHECK(d.phase == 1.0);
  CHECK(d.log_abs == Approx(0.5 * std::lgamma(401.0)));
  CHECK(std::isinf(d.value()));
}
