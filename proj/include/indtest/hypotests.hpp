#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "indtest/exponents.hpp"
#include "indtest/pmf.hpp"

namespace indtest {

struct TestConfig {
  ExponentPair pair;
  double epsilon = 0.0;  // must be positive
  Pmf reference;         // the null joint P_XY

  TestConfig(ExponentPair pr, double eps, Pmf ref)
      : pair(pr), epsilon(eps), reference(std::move(ref)) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("test config: epsilon must be positive");
    reference.require_joint();
  }
};

struct Verdict {
  int decision;      // 0 = null, 1 = alternative
  double statistic;  // the thresholded quantity
};

using SamplePair = std::pair<int, int>;  // 0-based indices

// Counts the type of a nonempty sample sequence; indices must lie in range.
EmpiricalType empirical_type(const std::vector<SamplePair>& samples, int nx, int ny);

// Empirical mutual information test: decides 1 iff
// D(R^ || R^_X R^_Y) < E_Q + epsilon.
Verdict emi_test(const EmpiricalType& t, const TestConfig& cfg);

// Hoeffding's test: decides 0 iff D(R^ || P) < E_P + epsilon.
Verdict hoeffding_test(const EmpiricalType& t, const TestConfig& cfg);

// Normalized log generalized likelihood ratio:
// Gamma = D(R^ || R^_X R^_Y) - D(R^ || P); -inf when the KL term is +inf.
double glrt_statistic(const EmpiricalType& t, const Pmf& p);

// GLRT: decides 1 iff Gamma <= E_Q - E_P (boundary to 1).
Verdict glrt_test(const EmpiricalType& t, const TestConfig& cfg);

// Threshold margin epsilon = achievability_margin / 2 for a strictly
// achievable pair; throws std::domain_error when the pair is not achievable.
double epsilon_margin(const Pmf& p, ExponentPair pair, const SolveOptions& opts = {});

}  // namespace indtest
