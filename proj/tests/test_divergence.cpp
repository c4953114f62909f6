#include <doctest.h>

#include <cmath>
#include <limits>

#include "indtest/divergence.hpp"
#include "indtest/rng.hpp"
#include "oracle.hpp"

using namespace indtest;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("kl divergence matches the extended-precision oracle") {
  CounterRng rng(0x1111);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    auto p = oracle::random_joint(rng, 3, 3);
    auto q = oracle::random_joint(rng, 3, 3);
    double got = kl_divergence(p, q);
    double want = oracle::kl(p.mass(), q.mass());
    worst = std::max(worst, std::fabs(got - want));
  }
  CHECK(worst <= 1e-13);
}

TEST_CASE("kl divergence conventions") {
  auto p = Pmf::marginal({0.5, 0.5, 0.0});
  auto q = Pmf::marginal({0.25, 0.75, 0.0});
  // 0 log(0/0) = 0: the shared zero cell contributes nothing.
  CHECK(kl_divergence(p, q) == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0))
                                   .epsilon(1e-14));
  // 0 log(0/q) = 0 for q > 0.
  auto q2 = Pmf::marginal({0.25, 0.25, 0.5});
  CHECK(std::isfinite(kl_divergence(p, q2)));
  // p log(p/0) = +inf.
  auto q3 = Pmf::marginal({0.0, 0.5, 0.5});
  CHECK(kl_divergence(p, q3) == kInf);
  CHECK(kl_divergence(p, p) == 0.0);
}

TEST_CASE("renyi divergence matches the oracle and its conventions") {
  CounterRng rng(0x2222);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    auto p = oracle::random_joint(rng, 3, 3);
    auto q = oracle::random_joint(rng, 3, 3);
    for (double a : {0.1, 0.5, 0.9, 1.5, 2.0}) {
      double got = renyi_divergence(p, q, RenyiOrder::of(a));
      double want = oracle::renyi(p.mass(), q.mass(), a);
      worst = std::max(worst, std::fabs(got - want));
    }
  }
  CHECK(worst <= 1e-13);

  // alpha < 1 ignores cells outside q's support; alpha > 1 diverges there.
  auto p = Pmf::marginal({0.5, 0.5});
  auto q = Pmf::marginal({1.0, 0.0});
  CHECK(std::isfinite(renyi_divergence(p, q, RenyiOrder::of(0.5))));
  CHECK(renyi_divergence(p, q, RenyiOrder::of(2.0)) == kInf);
  // Disjoint supports: +inf for every order.
  auto r = Pmf::marginal({0.0, 1.0});
  auto s = Pmf::marginal({1.0, 0.0});
  CHECK(renyi_divergence(r, s, RenyiOrder::of(0.5)) == kInf);
}

TEST_CASE("renyi order one is the kl limit") {
  CounterRng rng(0x3333);
  for (int i = 0; i < 50; ++i) {
    auto p = oracle::random_joint(rng, 3, 3);
    auto q = oracle::random_joint(rng, 3, 3);
    double lim = renyi_divergence(p, q, RenyiOrder::of(1.0 - 1e-7));
    double at1 = renyi_divergence(p, q, RenyiOrder::one());
    CHECK(at1 == kl_divergence(p, q));
    // The limit gap is first order in (1 - alpha) with a constant that can
    // exceed one for skewed pairs.
    CHECK(std::fabs(lim - at1) <= 1e-5);
  }
}

TEST_CASE("renyi divergence is nondecreasing in alpha") {
  CounterRng rng(0x4444);
  for (int i = 0; i < 50; ++i) {
    auto p = oracle::random_joint(rng, 3, 3);
    auto q = oracle::random_joint(rng, 3, 3);
    double prev = -1.0;
    for (double a : {0.1, 0.3, 0.5, 0.7, 0.9, 1.0, 1.3, 2.0}) {
      double v = renyi_divergence(p, q, RenyiOrder::of(a));
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("mutual information basics") {
  // Product distribution: zero.
  auto qx = Pmf::marginal({0.3, 0.7});
  auto qy = Pmf::marginal({0.6, 0.4});
  CHECK(mutual_information(product_pmf(qx, qy)) == doctest::Approx(0.0).epsilon(1e-14));
  // Perfectly correlated pair: log 2.
  auto corr = Pmf::joint(2, 2, {0.5, 0.0, 0.0, 0.5});
  CHECK(mutual_information(corr) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  // Oracle match on random joints.
  CounterRng rng(0x5555);
  for (int i = 0; i < 200; ++i) {
    auto r = oracle::random_joint(rng, 3, 3);
    CHECK(mutual_information(r) ==
          doctest::Approx(oracle::mutual_information(r)).epsilon(1e-12));
  }
}

TEST_CASE("chain decomposition of divergence to a product") {
  // D(R || Q_X Q_Y) = D(R || R_X R_Y) + D(R_X || Q_X) + D(R_Y || Q_Y)
  CounterRng rng(0x6666);
  for (int i = 0; i < 200; ++i) {
    auto r = oracle::random_joint(rng, 3, 3);
    auto qx = oracle::random_marginal(rng, 3);
    auto qy = oracle::random_marginal(rng, 3);
    double lhs = kl_divergence(r, product_pmf(qx, qy));
    double rhs = mutual_information(r) + kl_divergence(r.row_marginal(), qx) +
                 kl_divergence(r.col_marginal(), qy);
    CHECK(std::fabs(lhs - rhs) <= 1e-10);
  }
}

TEST_CASE("j_alpha agrees with a dense product grid on 2x2") {
  CounterRng rng(0x7777);
  for (int trial = 0; trial < 3; ++trial) {
    auto p = oracle::random_joint(rng, 2, 2);
    for (double a : {0.3, 0.5, 0.8}) {
      double got = j_alpha(p, RenyiOrder::of(a));
      double best = kInf;
      for (int i = 1; i < 1000; ++i)
        for (int j = 1; j < 1000; ++j) {
          auto qx = Pmf::marginal({i * 1e-3, 1.0 - i * 1e-3});
          auto qy = Pmf::marginal({j * 1e-3, 1.0 - j * 1e-3});
          best = std::min(best, renyi_divergence(p, product_pmf(qx, qy), RenyiOrder::of(a)));
        }
      CHECK(got <= best + 1e-9);   // the solver must not be beaten by the grid
      CHECK(got >= best - 1e-5);   // and the grid localizes the optimum
    }
  }
}

TEST_CASE("j_alpha at order one is mutual information") {
  auto p = oracle::example_joint();
  CHECK(j_alpha(p, RenyiOrder::one()) == mutual_information(p));
  // J_alpha is nondecreasing in alpha on (0, 1].
  double prev = 0.0;
  for (double a : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    double v = j_alpha(p, RenyiOrder::of(a));
    CHECK(v >= prev - 1e-9);
    prev = v;
  }
  CHECK(prev <= mutual_information(p) + 1e-12);
}
