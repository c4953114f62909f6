#pragma once

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "indtest/box.hpp"
#include "indtest/exponents.hpp"
#include "indtest/interval.hpp"
#include "indtest/pmf.hpp"

namespace indtest {

// ---------------------------------------------------------------------------
// Certified divergence enclosures over exact rational inputs.

// Enclosure of sum_z r(z) log(r(z)/q(z)). Cells with r(z)=0 contribute 0;
// r(z)>0 with q(z)=0 yields [+inf,+inf].
IntervalScalar kl_enclosure(const RationalPmf& r, const RationalPmf& q, mpfr_prec_t prec);

// Enclosure of D(r || r_X r_Y), marginals taken exactly.
IntervalScalar mutual_information_enclosure(const RationalPmf& r, mpfr_prec_t prec);

// ---------------------------------------------------------------------------
// Lower-bound machinery (3x3 alphabets).

// Enclosure of D = min over (extreme points of the x-bounds) x (extreme
// points of the y-bounds) of sum_z beta(z) (qx(x) qy(y))^{1-alpha}. The
// minimum over the whole box is attained at such a product pair because the
// objective is concave in each marginal separately.
IntervalScalar d_lower(const ProductBox& box, const mpq_class& alpha,
                       const std::array<mpq_class, 9>& beta, mpfr_prec_t prec);

// Enclosure of the certified per-box lower bound
//   -(1/alpha) log( (sum_z (p(z)^alpha + beta(z))^{1/alpha})^alpha - D )
//   - ((1-alpha)/alpha) e_q,
// valid for every product distribution in the box. If the braced quantity
// can touch zero or below, returns lo = -inf (vacuous, never unsound).
IntervalScalar box_lower_bound(const RationalPmf& p, const ProductBox& box,
                             const mpq_class& alpha, const std::array<mpq_class, 9>& beta,
                             const mpq_class& e_q, mpfr_prec_t prec);

// Heuristic (alpha, beta) for a box: a one-parameter family
// beta(z) = max(0, c Q_c(z)^alpha - p(z)^alpha) anchored at the box center
// seeds a projected-gradient refinement of all nine beta components, and the
// result is maximized over an alpha grid. Advisory only; soundness rests on
// box_lower_bound. Returned values are dyadic.
struct ChosenParameters {
  mpq_class alpha;
  std::array<mpq_class, 9> beta;
  double estimate;  // float estimate of the resulting bound
};
ChosenParameters choose_parameters(const RationalPmf& p, const ProductBox& box,
                                   const mpq_class& e_q, int alpha_grid);

// ---------------------------------------------------------------------------
// Certificates.

enum class CertificateKind { LowerBound, UpperBound, Nonconvexity };

struct BoundRecord {
  ProductBox box;
  mpq_class alpha;
  std::array<mpq_class, 9> beta;
  mpq_class bound_lo;        // exact lo endpoint of the certified bound
  int precision_bits = 64;
  bool empty_region = false;  // box misses the simplex; vacuously certified
};

struct SplitEvent {
  std::uint64_t id = 0;      // box that was split
  std::uint64_t child0 = 0, child1 = 0;
  int coord = 0;             // 0..2 = x component, 3..5 = y component
  mpq_class mid;
};

struct Certificate {
  CertificateKind kind = CertificateKind::LowerBound;
  mpq_class e_q;
  mpq_class value;                     // lower: target; upper: claim; composite: gap
  std::optional<RationalPmf> witness;  // upper bound only
  std::vector<BoundRecord> records;    // lower bound leaves
  std::vector<SplitEvent> splits;      // lower bound split tree
  std::uint64_t box_count = 0;
  std::vector<Certificate> components;  // nonconvexity: {upper1, upper2, lower}
};

struct BranchAndBoundOptions {
  std::uint64_t budget = 5'000'000;  // cap on cover size: leaves + pending boxes
  int alpha_grid = 10;
  int max_depth = 120;      // total splits per path; per-coordinate widths stay
                            // above 2^-50 so midpoints are exact in double
  bool keep_records = true; // retain every leaf in Certificate::records
  std::string trace_path;   // stream certificate lines here when nonempty
  std::vector<ProductBox> initial;  // resume frontier; empty = full simplex
  int progress_every = 0;   // stderr progress interval in boxes (0 = silent)
};

struct BranchAndBoundResult {
  bool certified = false;
  std::uint64_t boxes_processed = 0;
  Certificate certificate;            // populated when certified
  std::vector<ProductBox> frontier;   // unresolved boxes when not certified
};

// Certified lower bound E_P(e_q) >= target via box decomposition of the
// product-distribution set. Requires a 3x3 alphabet.
BranchAndBoundResult branch_and_bound(const RationalPmf& p, const mpq_class& e_q,
                                      const mpq_class& target,
                                      const BranchAndBoundOptions& opts = {});

// Checks D(r || r_X r_Y) <= e_q and D(r || p) <= claim by interval
// arithmetic over the exact rational inputs; nullopt when either fails.
std::optional<Certificate> verify_upper_bound(const RationalPmf& p, const RationalPmf& r,
                                              const mpq_class& e_q, const mpq_class& claim,
                                              mpfr_prec_t prec = 256);

// Composite certificate that E_P is non-convex: two upper bounds at eq1/eq2,
// a lower bound at their exact midpoint, and the exact rational comparison
// target_mid > (claim1+claim2)/2. Throws std::runtime_error naming the
// missing piece when a component fails.
Certificate nonconvexity_certificate(const Certificate& upper1, const Certificate& upper2,
                                     const Certificate& lower);

// Exact-rational audit that a lower-bound certificate's leaves tile the full
// product box [0,1]^6 (volume bookkeeping against the split tree) and that
// every record's bound_lo >= value. Throws std::runtime_error on violation.
void audit_cover(const Certificate& cert);

// Certificate file I/O: one JSON object per line, schema-versioned, exact
// rationals serialized as "a/b" strings.
void write_certificate(const Certificate& cert, const std::string& path);
Certificate read_certificate(const std::string& path);

// Independent re-verification of a certificate file: recomputes every leaf
// bound from its recorded (alpha, beta), re-audits the cover, re-runs the
// witness checks. Throws std::runtime_error with a description on failure.
void check_certificate(const RationalPmf& p, const Certificate& cert,
                       mpfr_prec_t prec = 256);

// Streaming variant for certificate files too large to hold in memory:
// replays the split tree and the exact-rational cover audit line by line.
// With recompute_bounds set, every non-empty leaf's box_lower_bound is
// re-evaluated at its recorded precision (slow but fully independent);
// otherwise only the recorded bound_lo values are compared against the
// certified target. Throws std::runtime_error on any violation.
void check_certificate_file(const RationalPmf& p, const std::string& path,
                            bool recompute_bounds = false);

// ---------------------------------------------------------------------------
// Witness refinement for upper bounds.

// Searches for a rational r with D(r||r_X r_Y) <= e_q (strictly, with a tiny
// interior margin) and D(r||p) close to E_P(e_q): float multistart followed
// by a damped Newton solve of the constrained-optimum stationarity system at
// `prec` bits, then rounding to dyadic rationals fine enough to preserve
// both constraints. The result is a candidate for verify_upper_bound.
RationalPmf refine_witness(const RationalPmf& p, const mpq_class& e_q,
                           mpfr_prec_t prec = 256,
                           const SolveOptions& opts = {});

}  // namespace indtest
