#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "indtest/hypotests.hpp"
#include "indtest/pmf.hpp"

namespace indtest {

enum class TestKind { Emi, Hoeffding, Glrt };

const char* test_kind_name(TestKind k);

struct SimPlan {
  Pmf null_pmf;
  std::vector<std::pair<Pmf, Pmf>> alternatives;  // marginal pairs (Q_X, Q_Y)
  std::vector<std::int64_t> n_grid;
  std::int64_t trials = 1;
  std::uint64_t seed = 0;
};

struct ErrorPoint {
  TestKind test;
  std::int64_t n;
  int alternative;  // -1 for type-I (null-sampled), else alternative index
  double estimate;
  double wilson_half_width;
  std::int64_t trials;
  bool censored;  // fewer than ~10 observed errors: deep-tail, not trusted
};

struct ErrorCurve {
  std::vector<ErrorPoint> points;
};

// IID draws by inverse-CDF over the flattened alphabet; reproducible per seed.
std::vector<SamplePair> sample_iid(const Pmf& p, std::int64_t n, std::uint64_t seed);

// (n+1)^alphabet_size * exp(-n (exponent + epsilon)); may exceed 1 for small n.
double sanov_envelope(std::int64_t n, int alphabet_size, double exponent, double epsilon);

// Wilson score interval half-width for k successes out of n at ~3 sigma = 1.
double wilson_half_width(std::int64_t k, std::int64_t n);

// Monte Carlo error-probability curves for one test. Trials are independent
// streams keyed by (seed, n, alternative, trial); parallel execution merges
// counts order-independently and matches the serial reference bit-for-bit.
ErrorCurve run_plan(const SimPlan& plan, const TestConfig& cfg, TestKind which);

// Serial reference implementation of run_plan, kept for testing.
ErrorCurve run_plan_serial(const SimPlan& plan, const TestConfig& cfg, TestKind which);

// Grid search over product alternatives maximizing estimated type-II error.
struct WorstAlternative {
  Pmf qx, qy;
  double type2_estimate;
};
WorstAlternative worst_alternative(const Pmf& p, const TestConfig& cfg, TestKind which,
                                   std::int64_t n, double grid_step, std::int64_t trials,
                                   std::uint64_t seed);

// Delimiter-separated table: test,n,alternative,type,estimate,ci_half_width,envelope.
void write_error_curve(std::ostream& os, const ErrorCurve& curve, const TestConfig& cfg,
                       int alphabet_size);

}  // namespace indtest
