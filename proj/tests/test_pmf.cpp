#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "indtest/pmf.hpp"
#include "indtest/pmf_io.hpp"
#include "indtest/rational.hpp"

using namespace indtest;

TEST_CASE("pmf construction validates shape and mass") {
  CHECK_THROWS_AS(Pmf::joint(2, 2, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(Pmf::joint(2, 2, {0.5, 0.5, 0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(Pmf::marginal({0.5, -0.5, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Pmf::marginal({}), std::invalid_argument);
  auto p = Pmf::joint(2, 3, {0.1, 0.2, 0.3, 0.1, 0.2, 0.1});
  CHECK(p.nx() == 2);
  CHECK(p.ny() == 3);
  CHECK(p.at(1, 2) == 0.1);
  CHECK_THROWS_AS(p.require_marginal(), std::invalid_argument);
}

TEST_CASE("rational pmf requires exact mass") {
  mpq_class h(1, 2);
  CHECK_THROWS_AS(RationalPmf::marginal({h, h + mpq_class(1, 1000000)}),
                  std::invalid_argument);
  auto p = RationalPmf::marginal({h, h});
  CHECK(p[0] == h);
}

TEST_CASE("marginals and products") {
  auto r = Pmf::joint(2, 2, {0.1, 0.2, 0.3, 0.4});
  auto rx = r.row_marginal();
  auto ry = r.col_marginal();
  CHECK(rx[0] == doctest::Approx(0.3));
  CHECK(ry[0] == doctest::Approx(0.4));
  auto prod = product_pmf(rx, ry);
  CHECK(prod.at(1, 1) == doctest::Approx(0.7 * 0.6));
  CHECK(prod.is_joint());
}

TEST_CASE("empirical type counts") {
  std::vector<std::int64_t> counts{3, 0, 1, 0, 2, 0};
  EmpiricalType t(2, 3, counts);
  CHECK(t.n() == 6);
  CHECK(t.count(0, 0) == 3);
  auto pmf = t.as_pmf();
  CHECK(pmf.at(0, 0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(EmpiricalType(2, 3, {0, 0, 0, 0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalType(2, 3, {1, -1, 0, 0, 0, 2}), std::invalid_argument);
}

TEST_CASE("rational parsing") {
  CHECK(parse_rational("3/4") == mpq_class(3, 4));
  CHECK(parse_rational("-8") == mpq_class(-8));
  CHECK(parse_rational("0.1") == mpq_class(1, 10));  // exact decimal, not binary
  CHECK(parse_rational("1e-4") == mpq_class(1, 10000));
  CHECK(parse_rational("-3.5e2") == mpq_class(-350));
  CHECK(!parse_rational("1/0").has_value());
  CHECK(!parse_rational("abc").has_value());
  CHECK(!parse_rational("").has_value());
  CHECK(rational_string(mpq_class(3, 4)) == "3/4");
  CHECK(rational_string(mpq_class(5)) == "5");
}

TEST_CASE("pmf json round trip") {
  SUBCASE("float joint") {
    auto p = Pmf::joint(2, 2, {0.1, 0.2, 0.3, 0.4});
    std::stringstream ss;
    write_pmf(ss, p);
    auto back = read_pmf(ss);
    CHECK(back.same_shape(p));
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(back[i] == p[i]);
  }
  SUBCASE("rational joint") {
    mpq_class g(9997, 60000), d(1, 10000);
    auto p = RationalPmf::joint(3, 3, {d, g, g, g, d, g, g, g, d});
    std::stringstream ss;
    write_pmf(ss, p);
    auto back = read_rational_pmf(ss);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(back[i] == p[i]);
  }
}

namespace {
Pmf read_pmf_str(const std::string& s) {
  std::istringstream in(s);
  return read_pmf(in);
}
std::vector<std::pair<int, int>> read_samples_str(const std::string& s) {
  std::istringstream in(s);
  return read_samples(in);
}
}  // namespace

TEST_CASE("pmf json rejects malformed input") {
  CHECK_THROWS(read_pmf_str("{}"));
  CHECK_THROWS(read_pmf_str(R"({"shape":[2,2],"mass":[1,0,0]})"));
  CHECK_THROWS(read_pmf_str(R"({"shape":[2,2],"mass":[0.6,0.6,-0.1,-0.1]})"));
  CHECK_THROWS(read_pmf_str("not json"));
  // Mass must sum to one.
  CHECK_THROWS(read_pmf_str(R"({"shape":[2],"mass":[0.5,0.4]})"));
}

TEST_CASE("sample file parsing") {
  auto samples = read_samples_str("# comment\n0 1\n2 0\n\n1 1\n");
  REQUIRE(samples.size() == 3);
  CHECK(samples[0] == std::pair<int, int>{0, 1});
  CHECK(samples[2] == std::pair<int, int>{1, 1});
  CHECK_THROWS_AS(read_samples_str("0\n"), std::invalid_argument);
  CHECK_THROWS_AS(read_samples_str("0 x\n"), std::invalid_argument);
}
