#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "indtest/divergence.hpp"
#include "indtest/pmf.hpp"

namespace indtest {

struct ExponentPair {
  double e_p = 0.0;
  double e_q = 0.0;
};

// Result of a one-sided error-exponent optimization. `value` is the best
// feasible objective found (an upper estimate of the true infimum);
// `dual_lower` is the Fenchel-biconjugate lower bound, so the true value lies
// in [dual_lower, value] up to optimizer confidence.
struct ExponentEstimate {
  double value = 0.0;
  std::optional<Pmf> witness;
  double dual_lower = 0.0;
  int starts_used = 0;
};

struct SolveOptions {
  int starts = 32;
  std::uint64_t seed = 0x8c5f1e0d2b3a4968ull;
  int iters_per_rho = 400;
  int polish_iters = 4000;
};

// inf { D(R||p) : D(R||R_X R_Y) <= e_q }, multistart penalized mirror descent
// on the joint simplex plus a KKT fixed-point polish. e_q < 0 yields +inf.
ExponentEstimate ep_of_eq(const Pmf& p, double e_q, const SolveOptions& opts = {});

// inf { D(R||R_X R_Y) : D(R||p) <= e_p }; mirror image of ep_of_eq.
ExponentEstimate eq_of_ep(const Pmf& p, double e_p, const SolveOptions& opts = {});

struct BiconjugateOptions {
  int grid_points = 256;
  double alpha_min = 1e-4;
  JAlphaOptions j_opts = {};
};

// sup over alpha in (0,1] of ((1-alpha)/alpha) (J_alpha(p) - e_q): the
// biconjugate of the E_P error-exponent function.
double ep_biconjugate(const Pmf& p, double e_q, const BiconjugateOptions& opts = {});

// sup over alpha in [0,1) of J_alpha(p) - (alpha/(1-alpha)) e_p, reading the
// alpha = 0 term as zero.
double eq_biconjugate(const Pmf& p, double e_p, const BiconjugateOptions& opts = {});

// Multistart estimate of eta = inf_R max{D(R||p) - e_p, D(R||R_X R_Y) - e_q}.
// The pair is achievable iff eta > 0.
double achievability_margin(const Pmf& p, ExponentPair pair, const SolveOptions& opts = {});

inline bool is_achievable(const Pmf& p, ExponentPair pair, const SolveOptions& opts = {}) {
  return achievability_margin(p, pair, opts) > 0.0;
}

struct DualityOptions {
  double grid_step = 1e-4;
  double alpha_min = 1e-6;
};

// Simple-hypothesis trade-off for PMFs p, q over a common finite alphabet
// (|Z| <= 3 for the grid primal): primal = inf { D(R||p) : D(R||q) <= e_q },
// dual = sup_alpha ((1-alpha)/alpha)(D_alpha(p||q) - e_q). The two agree up
// to grid resolution.
std::pair<double, double> simple_duality(const Pmf& p, const Pmf& q, double e_q,
                                         const DualityOptions& opts = {});

}  // namespace indtest
