#include <cmath>
#include <random>

#include "doctest.h"
#include "mrk/order_conditions.hpp"
#include "oracles.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using mrk::ButcherTableau;

namespace {

oracle::Coeffs to_coeffs(const ButcherTableau& t) {
  const int s = t.stages();
  oracle::Coeffs k;
  k.A.assign(s, std::vector<double>(s));
  k.Ah.assign(s, std::vector<double>(s));
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      k.A[i][j] = t.A()(i, j);
      k.Ah[i][j] = t.Ahat()(i, j);
    }
    k.d.push_back(t.d()(i));
    k.delta.push_back(t.delta()(i));
  }
  return k;
}

const mrk::Residual& find(const mrk::ResidualList& list, const std::string& condition) {
  for (const auto& r : list)
    if (r.condition == condition) return r;
  FAIL("condition not found: " << condition);
  return list.front();
}

ButcherTableau random_tableau(std::mt19937_64& rng, int s) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::bernoulli_distribution coin(0.5);
  MatrixXd A(s, s), Ah = MatrixXd::Zero(s, s);
  VectorXd d(s), delta(s);
  for (int i = 0; i < s; ++i) {
    delta(i) = (i == s - 1 || coin(rng)) ? 1.0 : 0.0;
    d(i) = u(rng);
    for (int j = 0; j < s; ++j) A(i, j) = u(rng);
    if (delta(i) == 1.0) {
      double sum = 0.0;
      for (int j = 0; j < s - 1; ++j) sum += (Ah(i, j) = u(rng));
      Ah(i, s - 1) = 1.0 - sum;
    }
  }
  return ButcherTableau("random", A, Ah, d, delta);
}

// Signed lhs - rhs of the invmeas2 list for rk2-invmeas, evaluated with an
// independent NumPy script from the published coefficients.
const double kRk2Signed[23] = {
    0.0,         1.257e-7,    1.257e-7,   2.5115e-7,  2.5115e-7, 1.257e-7,  1.257e-7,  2.5115e-7,
    2.5115e-7,   1.3417e-8,   1.3417e-8,  0.0,        0.0,       -8.141e-8, -8.141e-8, -1.3126e-7,
    -5.998e-8,   -5.998e-8,   3.0757e-7,  -2.1267e-7, 2.2616e-7, 0.0,       -1.749e-7};

}  // namespace

TEST_SUITE("order_conditions") {
  TEST_CASE("consistency") {
    CHECK(mrk::max_abs_residual(mrk::consistency_residuals(mrk::builtin_tableau("euler-ie"))) == 0.0);
    CHECK(mrk::max_abs_residual(mrk::consistency_residuals(mrk::builtin_tableau("euler-ee"))) == 0.0);
    CHECK(mrk::max_abs_residual(mrk::consistency_residuals(mrk::builtin_tableau("rk2-invmeas"))) <= 1e-12);

    MatrixXd A(2, 2), Ah(2, 2);
    A << 0, 0, 1, 0;
    Ah << 0, 0, 0, 1;
    VectorXd d(2), delta(2);
    d << 0, 0.5;
    delta << 0, 1;
    const auto r = mrk::consistency_residuals(ButcherTableau("half", A, Ah, d, delta));
    CHECK(find(r, "d_s = 1").abs_residual == 0.5);
  }

  TEST_CASE("invariant-measure list matches an index-sum evaluation") {
    std::vector<ButcherTableau> cases;
    for (const auto& n : mrk::builtin_tableau_names()) cases.push_back(mrk::builtin_tableau(n));
    std::mt19937_64 rng(99);
    for (int k = 0; k < 200; ++k) cases.push_back(random_tableau(rng, 2 + k % 4));
    for (const auto& t : cases) {
      const auto lib = mrk::invmeas2_residuals(t);
      const auto ref = oracle::invmeas2_index_sums(to_coeffs(t));
      REQUIRE(lib.size() == ref.size());
      for (std::size_t i = 0; i < lib.size(); ++i) {
        CAPTURE(lib[i].condition);
        CHECK(lib[i].abs_residual == doctest::Approx(std::abs(ref[i])).epsilon(1e-11).scale(1.0));
        CHECK(lib[i].abs_residual == std::abs(lib[i].lhs - lib[i].rhs));
      }
    }
  }

  TEST_CASE("published order-two coefficients satisfy the conditions to about 3e-7") {
    const auto t = mrk::builtin_tableau("rk2-invmeas");
    const auto lib = mrk::invmeas2_residuals(t);
    REQUIRE(lib.size() == 23);
    for (int i = 0; i < 23; ++i) {
      CAPTURE(lib[i].condition);
      CHECK(lib[i].lhs - lib[i].rhs == doctest::Approx(kRk2Signed[i]).epsilon(1e-3).scale(1e-11));
    }
    CHECK(mrk::max_abs_residual(lib) == doctest::Approx(3.0757290551963745e-07).epsilon(1e-6));
    const double bhd = t.bhat().dot(t.d());
    CHECK(bhd == doctest::Approx(0.2928931612473764).epsilon(1e-13));
    CHECK(std::abs(bhd - (1.0 - std::sqrt(2.0) / 2)) == doctest::Approx(5.56e-8).epsilon(1e-2));
  }

  TEST_CASE("Euler residuals") {
    const auto ie = mrk::invmeas2_residuals(mrk::builtin_tableau("euler-ie"));
    CHECK(find(ie, "b̂ᵀd = bᵀd").abs_residual == 1.0);
    const auto& bc = find(ie, "bᵀc = 2b̂ᵀd − 1/2");
    CHECK(bc.lhs == 0.0);
    CHECK(bc.rhs == 1.5);
    CHECK(bc.abs_residual == 1.5);
    const auto ee = mrk::invmeas2_residuals(mrk::builtin_tableau("euler-ee"));
    CHECK(find(ee, "b̂ᵀd = bᵀd").abs_residual == 0.0);
    CHECK(mrk::max_abs_residual(ee) == 1.0);
  }

  TEST_CASE("group structure") {
    const auto t = mrk::builtin_tableau("rk2-invmeas");
    CHECK(mrk::invmeas2_groups(t).size() == 12);
    CHECK(mrk::weak2_groups(t).size() == 12);
    CHECK(mrk::consistency_residuals(t).size() == 3);
    CHECK(mrk::sphere_residuals(t, mrk::SphereMode::weak2).size() == 10);
    CHECK(mrk::sphere_residuals(t, mrk::SphereMode::invmeas2).size() == 8);
  }

  TEST_CASE("reduced list for projected stages only") {
    const auto t = mrk::builtin_tableau("rk2-invmeas");
    const auto reduced = mrk::invmeas2_residuals_delta_one(t);
    CHECK(mrk::max_abs_residual(reduced) < 4e-7);
    CHECK(find(reduced, "(b̂ᵀd)² − 2b̂ᵀd + 1/2 = 0").abs_residual ==
          doctest::Approx(8.14107e-8).epsilon(1e-4));
    CHECK_THROWS_AS(mrk::invmeas2_residuals_delta_one(mrk::builtin_tableau("euler-ie")),
                    mrk::PreconditionError);
  }

  TEST_CASE("reduced and general lists agree on verdicts") {
    const auto base = mrk::builtin_tableau("rk2-invmeas");
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    int agreements = 0;
    for (int k = 0; k < 200; ++k) {
      const double eps = k == 0 ? 0.0 : std::pow(10.0, -9.0 + 8.0 * (k % 9) / 8.0);
      MatrixXd A = base.A(), Ah = base.Ahat();
      VectorXd d = base.d();
      for (int i = 0; i < 3; ++i) d(i) += eps * n(rng);
      A(1, 0) += eps * n(rng);
      Ah(1, 0) += eps * n(rng);
      Ah(1, 1) = 1.0 - Ah(1, 0);
      const ButcherTableau t("p", A, Ah, d, VectorXd::Ones(4));
      for (const double tol : {1e-6, 1e-4}) {
        const bool general = mrk::max_abs_residual(mrk::invmeas2_residuals(t)) <= tol &&
                             mrk::max_abs_residual(mrk::consistency_residuals(t)) <= tol;
        const bool reduced = mrk::max_abs_residual(mrk::invmeas2_residuals_delta_one(t)) <= tol;
        if (general == reduced) ++agreements;
        if (eps >= 1e-2) CHECK_FALSE(general);
      }
    }
    // both lists track the same defect; borderline perturbations may straddle tol
    CHECK(agreements >= 380);
  }

  TEST_CASE("weak order two") {
    const auto ie = mrk::weak2_residuals(mrk::builtin_tableau("euler-ie"));
    CHECK(find(ie, "bᵀd = 1/2").abs_residual == 0.5);
    for (const auto& name : {"rk2-invmeas", "sphere-rk2"}) {
      const auto w = mrk::weak2_residuals(mrk::builtin_tableau(name));
      const auto& r = find(w, "b̂ᵀA((𝟙−δ)◆d) = 1/4");
      CHECK(r.lhs == 0.0);
      CHECK(r.abs_residual == 0.25);
    }
    const auto bm = mrk::weak2_residuals(mrk::builtin_tableau("bm-sphere-weak2"));
    CHECK(find(bm, "b̂ᵀd = 1/2").abs_residual == 0.0);
    CHECK(find(bm, "b̂ᵀ(d◆Âd) = 1/8").abs_residual == 0.0);
  }

  TEST_CASE("sphere reductions") {
    const auto sph = mrk::builtin_tableau("sphere-rk2");
    CHECK(mrk::max_abs_residual(mrk::sphere_residuals(sph, mrk::SphereMode::invmeas2)) <= 1e-12);
    CHECK(mrk::max_abs_residual(mrk::sphere_consistency_residuals(sph)) <= 1e-15);
    const auto rk2 = mrk::builtin_tableau("rk2-invmeas");
    CHECK(mrk::max_abs_residual(mrk::sphere_residuals(rk2, mrk::SphereMode::invmeas2)) <=
          mrk::max_abs_residual(mrk::invmeas2_residuals(rk2)));
    CHECK(mrk::max_abs_residual(mrk::sphere_residuals(mrk::builtin_tableau("euler-ie"),
                                                      mrk::SphereMode::invmeas2)) == 1.5);
  }

  TEST_CASE("sphere reductions reject perturbed schemes") {
    const auto base = mrk::builtin_tableau("sphere-rk2");
    MatrixXd A = base.A();
    A(0, 1) += 1e-3;
    const ButcherTableau t("p", A, base.Ahat(), base.d(), base.delta());
    CHECK(mrk::max_abs_residual(mrk::sphere_residuals(t, mrk::SphereMode::invmeas2)) > 1e-4);
  }

  TEST_CASE("Brownian motion on the sphere") {
    const auto bm = mrk::builtin_tableau("bm-sphere-weak2");
    const auto w = mrk::bm_sphere_residuals(bm, mrk::SphereMode::weak2);
    REQUIRE(w.size() == 2);
    CHECK(w[0].abs_residual <= 1e-12);
    CHECK(w[1].abs_residual <= 1e-12);

    const auto ie = mrk::builtin_tableau("euler-ie").with_zero_drift();
    CHECK(mrk::bm_sphere_residuals(ie, mrk::SphereMode::invmeas2).empty());
    const auto wie = mrk::bm_sphere_residuals(ie, mrk::SphereMode::weak2);
    CHECK(find(wie, "b̂ᵀd = 1/2").abs_residual == 0.5);
    const auto& q = find(wie, "b̂ᵀ(d◆Âd) = 1/8");
    CHECK(q.lhs == 1.0);
    CHECK(q.abs_residual == 0.875);
    CHECK(mrk::classify(ie).verdicts.at("bm_sphere_weak2") == false);

    CHECK_THROWS_AS(mrk::bm_sphere_residuals(mrk::builtin_tableau("euler-ie"), mrk::SphereMode::weak2),
                    mrk::PreconditionError);
  }

  TEST_CASE("classification verdicts") {
    const auto rk2 = mrk::classify(mrk::builtin_tableau("rk2-invmeas"));
    CHECK(rk2.verdicts.at("consistent"));
    CHECK(rk2.verdicts.at("invmeas2"));
    CHECK(rk2.verdicts.at("sphere_invmeas2"));
    CHECK_FALSE(rk2.verdicts.at("weak2"));
    CHECK(rk2.tolerance == mrk::kDefaultConditionTolerance);

    const auto strict = mrk::classify(mrk::builtin_tableau("rk2-invmeas"), 1e-10);
    CHECK(strict.verdicts.at("consistent"));
    CHECK_FALSE(strict.verdicts.at("invmeas2"));

    const auto ie = mrk::classify(mrk::builtin_tableau("euler-ie"));
    CHECK(ie.verdicts.at("consistent"));
    CHECK_FALSE(ie.verdicts.at("weak2"));
    CHECK_FALSE(ie.verdicts.at("invmeas2"));

    const auto sph = mrk::classify(mrk::builtin_tableau("sphere-rk2"), 1e-10);
    CHECK(sph.verdicts.at("sphere_invmeas2"));
    CHECK_FALSE(sph.verdicts.at("invmeas2"));

    const auto bm = mrk::classify(mrk::builtin_tableau("bm-sphere-weak2"), 1e-12);
    CHECK(bm.verdicts.at("bm_sphere_weak2"));

    for (const auto& name : mrk::builtin_tableau_names()) {
      const auto r = mrk::classify(mrk::builtin_tableau(name));
      if (r.verdicts.at("invmeas2")) CHECK(r.verdicts.at("consistent"));
      for (const auto& g : r.groups) CHECK(r.max_residual_per_group.at(g.group_id) == g.max_residual());
    }
  }

  TEST_CASE("classification rejects malformed tableaux") {
    const ButcherTableau zero("zero", MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2), VectorXd::Zero(2),
                              VectorXd::Zero(2));
    CHECK_THROWS_AS(mrk::classify(zero), mrk::StructuralError);
  }

  TEST_CASE("evaluation is pure") {
    const auto t = mrk::builtin_tableau("rk2-invmeas");
    const auto a = mrk::invmeas2_residuals(t);
    const auto b = mrk::invmeas2_residuals(t);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].lhs == b[i].lhs);
      CHECK(a[i].rhs == b[i].rhs);
      CHECK(a[i].abs_residual == std::abs(a[i].rhs - a[i].lhs));
    }
  }
}
