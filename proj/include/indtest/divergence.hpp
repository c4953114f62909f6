#pragma once

#include <cstdint>

#include "indtest/pmf.hpp"

namespace indtest {

// Relative entropy sum p log(p/q) in nats. Conventions: 0 log(0/q) = 0 for
// q >= 0, and p log(p/0) = +inf for p > 0. Never NaN.
double kl_divergence(const Pmf& p, const Pmf& q);

// Renyi divergence of order alpha; order one delegates to kl_divergence.
double renyi_divergence(const Pmf& p, const Pmf& q, RenyiOrder order);

// D(r || r_X r_Y); always finite and nonnegative.
double mutual_information(const Pmf& r);

struct JAlphaOptions {
  int starts = 16;
  std::uint64_t seed = 0x1d2f3a4b5c6d7e8full;
  double tol = 1e-13;
  int max_iters = 10000;
};

// Renyi dependence measure: the minimal D_alpha distance from the joint p to
// any product distribution, for alpha in (0,1]. Alternating blockwise-closed-
// form maximization with multistart; alpha = 1 returns mutual_information(p).
double j_alpha(const Pmf& p, RenyiOrder order, const JAlphaOptions& opts = {});

}  // namespace indtest
