#include <doctest.h>

#include <cmath>
#include <limits>

#include "indtest/divergence.hpp"
#include "indtest/hypotests.hpp"
#include "indtest/rng.hpp"
#include "indtest/simulate.hpp"
#include "oracle.hpp"

using namespace indtest;

namespace {
TestConfig example_config() {
  auto p = oracle::example_joint();
  double mi = mutual_information(p);
  ExponentPair pair{0.02, 0.25 * mi};
  return TestConfig(pair, 0.01, p);
}
}  // namespace

TEST_CASE("empirical_type counts samples") {
  std::vector<SamplePair> s{{0, 0}, {1, 2}, {1, 2}, {2, 1}};
  auto t = empirical_type(s, 3, 3);
  CHECK(t.n() == 4);
  CHECK(t.count(1, 2) == 2);
  CHECK_THROWS(empirical_type({}, 3, 3));
  CHECK_THROWS(empirical_type({{3, 0}}, 3, 3));
}

TEST_CASE("emi test thresholds empirical mutual information") {
  auto cfg = example_config();
  // A type proportional to a product has zero empirical MI: decide 1.
  EmpiricalType prod(3, 3, {4, 2, 2, 4, 2, 2, 4, 2, 2});
  auto v = emi_test(prod, cfg);
  CHECK(v.decision == 1);
  CHECK(v.statistic == doctest::Approx(0.0).epsilon(1e-12));
  // A type exactly on the diagonal has high MI: decide 0 (for this cfg).
  EmpiricalType diag(3, 3, {5, 0, 0, 0, 5, 0, 0, 0, 5});
  CHECK(emi_test(diag, cfg).decision == 0);
  // The verdict statistic is the empirical mutual information.
  CHECK(emi_test(diag, cfg).statistic ==
        doctest::Approx(mutual_information(diag.as_pmf())).epsilon(1e-12));
}

TEST_CASE("hoeffding test thresholds divergence to the reference") {
  auto cfg = example_config();
  // Sample types near P decide 0.
  auto samples = sample_iid(cfg.reference, 4000, 7);
  auto t = empirical_type(samples, 3, 3);
  CHECK(hoeffding_test(t, cfg).decision == 0);
  // A far-away type decides 1.
  EmpiricalType far(3, 3, {10, 0, 0, 0, 0, 0, 0, 0, 0});
  CHECK(hoeffding_test(far, cfg).decision == 1);
}

TEST_CASE("glrt statistic equals the closed form") {
  // Gamma = D(R||R_X R_Y) - D(R||P) must equal
  //         sum_z R(z) log(P(z) / (R_X R_Y)(z)) whenever both terms are finite.
  auto p = oracle::example_joint();
  CounterRng rng(0xdddd);
  for (int i = 0; i < 100; ++i) {
    std::int64_t n = 20 + static_cast<std::int64_t>(rng.next_u64() % 200);
    auto samples = sample_iid(p, n, rng.next_u64());
    auto t = empirical_type(samples, 3, 3);
    auto r = t.as_pmf();
    double gamma = glrt_statistic(t, p);
    double direct = 0.0;
    auto rx = r.row_marginal();
    auto ry = r.col_marginal();
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 3; ++y) {
        double rv = r.at(x, y);
        if (rv > 0.0) direct += rv * std::log(p.at(x, y) / (rx[x] * ry[y]));
      }
    CHECK(std::fabs(gamma - direct) <= 1e-10);
  }
}

TEST_CASE("glrt statistic is -inf off the reference support") {
  auto p = Pmf::joint(2, 2, {0.5, 0.5, 0.0, 0.0});
  EmpiricalType t(2, 2, {1, 1, 1, 1});  // mass where p has none
  CHECK(glrt_statistic(t, p) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("glrt verdict thresholds at e_q - e_p") {
  auto cfg = example_config();
  auto samples = sample_iid(cfg.reference, 2000, 11);
  auto t = empirical_type(samples, 3, 3);
  auto v = glrt_test(t, cfg);
  CHECK(v.decision == (v.statistic <= cfg.pair.e_q - cfg.pair.e_p ? 1 : 0));
  // Null-typical data should be attributed to the null here.
  CHECK(v.decision == 0);
}

TEST_CASE("epsilon_margin is half the achievability margin") {
  auto p = oracle::example_joint();
  double mi = mutual_information(p);
  ExponentPair inside{0.01, 0.25 * mi};
  double eps = epsilon_margin(p, inside);
  CHECK(eps > 0.0);
  CHECK(eps == doctest::Approx(0.5 * achievability_margin(p, inside)).epsilon(1e-6));
  ExponentPair outside{10.0, 10.0};
  CHECK_THROWS_AS(epsilon_margin(p, outside), std::domain_error);
}
