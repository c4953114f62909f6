#include <doctest.h>

#include <cmath>
#include <limits>

#include "indtest/exponents.hpp"
#include "indtest/rng.hpp"
#include "oracle.hpp"

using namespace indtest;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
SolveOptions quick() {
  SolveOptions o;
  o.starts = 8;
  return o;
}
}  // namespace

TEST_CASE("ep_of_eq boundary behavior") {
  auto p = oracle::example_joint();
  double mi = mutual_information(p);
  // Feasible whenever e_q >= 0; zero once the constraint admits p itself.
  CHECK(ep_of_eq(p, mi, quick()).value == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(ep_of_eq(p, mi + 0.1, quick()).value == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(ep_of_eq(p, -0.001, quick()).value == kInf);
  // e_q = 0 forces product distributions: the value is J_1-like and positive.
  auto est = ep_of_eq(p, 0.0, quick());
  CHECK(est.value > 0.0);
  REQUIRE(est.witness.has_value());
  CHECK(mutual_information(*est.witness) <= 1e-9);
}

TEST_CASE("ep_of_eq witness is feasible and attains the value") {
  CounterRng rng(0xaaaa);
  for (int i = 0; i < 5; ++i) {
    auto p = oracle::random_joint(rng, 3, 3);
    double e_q = 0.3 * mutual_information(p);
    auto est = ep_of_eq(p, e_q, quick());
    REQUIRE(est.witness.has_value());
    CHECK(mutual_information(*est.witness) <= e_q + 1e-9);
    CHECK(kl_divergence(*est.witness, p) == doctest::Approx(est.value).epsilon(1e-7));
    CHECK(est.dual_lower <= est.value + 1e-9);
  }
}

TEST_CASE("ep_of_eq is nonincreasing in e_q") {
  auto p = oracle::example_joint();
  double prev = kInf;
  for (double eq : {0.0, 0.01, 0.02, 0.03, 0.05}) {
    double v = ep_of_eq(p, eq, quick()).value;
    CHECK(v <= prev + 1e-9);
    prev = v;
  }
}

TEST_CASE("eq_of_ep mirrors ep_of_eq") {
  auto p = oracle::example_joint();
  double e_q = 0.02;
  double e_p = ep_of_eq(p, e_q).value;
  // Inverting at the achieved exponent must come back near e_q or better.
  double back = eq_of_ep(p, e_p + 1e-9).value;
  CHECK(back <= e_q + 1e-6);
  CHECK(eq_of_ep(p, -1.0).value == kInf);
  CHECK(eq_of_ep(p, kl_divergence(product_pmf(p.row_marginal(), p.col_marginal()), p) + 1.0)
            .value == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("simple duality closes the gap on random instances") {
  CounterRng rng(0xbbbb);
  for (int i = 0; i < 10; ++i) {
    int m = 2 + static_cast<int>(rng.next_u64() % 2);
    auto p = oracle::random_marginal(rng, m);
    auto q = oracle::random_marginal(rng, m);
    double e_q = 0.02 + 0.2 * rng.next_double();
    auto [primal, dual] = simple_duality(p, q, e_q);
    CHECK(std::fabs(primal - dual) <= 1e-3);
    CHECK(dual <= primal + 1e-9);  // weak duality with a grid primal
  }
}

TEST_CASE("biconjugate is a lower bound on the primal curve") {
  CounterRng rng(0xcccc);
  auto check_p = [&](const Pmf& p) {
    double mi = mutual_information(p);
    for (int k = 1; k <= 6; ++k) {
      double e_q = mi * k / 7.0;
      double primal = ep_of_eq(p, e_q, quick()).value;
      double lower = ep_biconjugate(p, e_q);
      CHECK(lower <= primal + 1e-6);
      CHECK(lower >= -1e-12);
    }
  };
  check_p(oracle::example_joint());
  for (int i = 0; i < 2; ++i) check_p(oracle::random_joint(rng, 3, 3));
}

TEST_CASE("eq_biconjugate basics") {
  auto p = oracle::example_joint();
  // At e_p = 0 the bound is sup_alpha J_alpha = the order-one value.
  double v0 = eq_biconjugate(p, 0.0);
  CHECK(v0 <= mutual_information(p) + 1e-9);
  CHECK(v0 > 0.0);
  // Nonincreasing in e_p.
  CHECK(eq_biconjugate(p, 0.1) <= v0 + 1e-12);
}

TEST_CASE("achievability margin sign") {
  auto p = oracle::example_joint();
  double mi = mutual_information(p);
  double e_q = 0.5 * mi;
  double e_p = ep_of_eq(p, e_q).value;
  // Strictly inside the region: positive margin.
  CHECK(achievability_margin(p, {0.5 * e_p, 0.5 * e_q}, quick()) > 0.0);
  // On/beyond the frontier: nonpositive margin.
  CHECK(achievability_margin(p, {1.5 * e_p, e_q}, quick()) <= 1e-9);
  CHECK(is_achievable(p, {0.25 * e_p, 0.5 * e_q}, quick()));
}
