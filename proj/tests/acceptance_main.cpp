// Acceptance gate: one self-contained check per criterion, each printing an
// unambiguous pass/fail line. Run with no arguments for the full gate or with
// a list of criterion numbers (e.g. "acceptance 1 2 6") for a subset.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "indtest/certify.hpp"
#include "indtest/divergence.hpp"
#include "indtest/exponents.hpp"
#include "indtest/hypotests.hpp"
#include "indtest/rng.hpp"
#include "indtest/simulate.hpp"
#include "oracle.hpp"

using namespace indtest;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

mpq_class dyadic(const char* num, int bits) {
  mpq_class q{std::string(num)};
  q /= mpz_class(1) << bits;
  return q;
}

// --------------------------------------------------------------------------
// 1. Divergence correctness against the extended-precision oracle.

bool criterion1() {
  CounterRng rng(0xC1);
  double worst = 0.0;
  bool conventions_ok = true;
  for (int i = 0; i < 10000; ++i) {
    int zeros = i % 5 == 0 ? 1 + static_cast<int>(rng.next_u64() % 3) : 0;
    auto p = oracle::random_joint(rng, 3, 3, zeros);
    auto q = oracle::random_joint(rng, 3, 3, i % 7 == 0 ? 1 : 0);
    double kl = kl_divergence(p, q);
    double kl_want = oracle::kl(p.mass(), q.mass());
    if (std::isinf(kl_want)) {
      conventions_ok = conventions_ok && kl == kl_want;  // p log(p/0) = +inf
    } else {
      worst = std::max(worst, std::fabs(kl - kl_want));
    }
    // Keep alpha away from 1: the 1/(alpha-1) factor amplifies double
    // rounding beyond any fixed tolerance as alpha approaches 1.
    double a = i % 2 == 0 ? 0.1 + 0.8 * rng.next_double() : 1.1 + 0.9 * rng.next_double();
    double da = renyi_divergence(p, q, RenyiOrder::of(a));
    double da_want = oracle::renyi(p.mass(), q.mass(), a);
    if (std::isinf(da_want)) {
      conventions_ok = conventions_ok && da == da_want;
    } else {
      worst = std::max(worst, std::fabs(da - da_want));
    }
  }
  // Edge conventions on handcrafted pairs: 0 log 0 = 0, p/0 = +inf, and an
  // order-(<1) divergence that ignores cells outside q's support.
  auto z1 = Pmf::marginal({1.0, 0.0});
  auto z2 = Pmf::marginal({0.5, 0.5});
  conventions_ok = conventions_ok && kl_divergence(z1, z1) == 0.0;
  conventions_ok = conventions_ok && kl_divergence(z2, z1) == kInf;
  conventions_ok =
      conventions_ok && std::isfinite(renyi_divergence(z2, z1, RenyiOrder::of(0.5)));
  conventions_ok = conventions_ok && renyi_divergence(z2, z1, RenyiOrder::of(2.0)) == kInf;
  std::printf("  max |error| = %.3e (tolerance 1e-12), conventions %s\n", worst,
              conventions_ok ? "ok" : "BROKEN");
  return worst <= 1e-12 && conventions_ok;
}

// --------------------------------------------------------------------------
// 2. Chain decomposition of divergence to a product distribution.

bool criterion2() {
  CounterRng rng(0xC2);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    auto r = oracle::random_joint(rng, 3, 3);
    auto qx = oracle::random_marginal(rng, 3);
    auto qy = oracle::random_marginal(rng, 3);
    double lhs = kl_divergence(r, product_pmf(qx, qy));
    double rhs = mutual_information(r) + kl_divergence(r.row_marginal(), qx) +
                 kl_divergence(r.col_marginal(), qy);
    worst = std::max(worst, std::fabs(lhs - rhs));
  }
  std::printf("  max |identity gap| = %.3e (tolerance 1e-10)\n", worst);
  return worst <= 1e-10;
}

// --------------------------------------------------------------------------
// 3. Simple-hypothesis duality: grid primal vs closed-form dual.

bool criterion3() {
  CounterRng rng(0xC3);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    int m = i % 2 == 0 ? 2 : 3;
    auto p = oracle::random_marginal(rng, m);
    auto q = oracle::random_marginal(rng, m);
    double e_q = 0.01 + 0.3 * rng.next_double();
    DualityOptions opts;
    opts.grid_step = 1e-4;
    auto [primal, dual] = simple_duality(p, q, e_q, opts);
    if (std::isinf(primal) || std::isinf(dual)) continue;
    worst = std::max(worst, std::fabs(primal - dual));
  }
  std::printf("  max |primal - dual| = %.3e (tolerance 1e-3)\n", worst);
  return worst <= 1e-3;
}

// --------------------------------------------------------------------------
// 4. Primal trade-off curve vs its convex lower envelope.

bool criterion4() {
  CounterRng rng(0xC4);
  double worst_gap = -kInf;
  double worst_zero = 0.0;
  auto check_p = [&](const Pmf& p) {
    double mi = mutual_information(p);
    for (int k = 0; k < 20; ++k) {
      double e_q = mi * (k + 0.5) / 20.0;
      double primal = ep_of_eq(p, e_q).value;
      double lower = ep_biconjugate(p, e_q);
      worst_gap = std::max(worst_gap, lower - primal);
    }
    worst_zero = std::max(worst_zero, std::fabs(ep_of_eq(p, mi).value));
    worst_zero = std::max(worst_zero, std::fabs(ep_of_eq(p, mi + 0.05).value));
  };
  check_p(oracle::example_joint());
  for (int i = 0; i < 10; ++i) check_p(oracle::random_joint(rng, 3, 3));
  std::printf("  max (biconjugate - primal) = %.3e (tolerance 1e-6), "
              "max |E_P at e_q >= I(P)| = %.3e (tolerance 1e-9)\n",
              worst_gap, worst_zero);
  return worst_gap <= 1e-6 && worst_zero <= 1e-9;
}

// --------------------------------------------------------------------------
// 5. Monte Carlo error estimates against the type-counting envelopes.

bool criterion5() {
  auto p = oracle::example_joint();
  double mi = mutual_information(p);
  ExponentPair pair{0.0, 0.0};
  pair.e_q = 0.25 * mi;
  pair.e_p = 0.5 * ep_of_eq(p, pair.e_q).value;
  double eps = epsilon_margin(p, pair);
  std::printf("  pair (E_P, E_Q) = (%.4f, %.4f), epsilon = %.5f\n", pair.e_p, pair.e_q, eps);
  TestConfig cfg(pair, eps, p);

  SimPlan plan{.null_pmf = p};
  plan.alternatives = {{p.row_marginal(), p.col_marginal()}};
  plan.n_grid = {50, 100, 150, 200, 250, 300, 350, 400};
  plan.trials = 100000;
  plan.seed = 0xC5;

  auto hoeffding = run_plan(plan, cfg, TestKind::Hoeffding);
  auto emi = run_plan(plan, cfg, TestKind::Emi);
  int violations = 0, points = 0;
  auto scan = [&](const ErrorCurve& curve) {
    for (const auto& pt : curve.points) {
      // Null-sampled statistics decay with E_P; alternative-sampled with E_Q.
      double expn = pt.alternative < 0 ? pair.e_p : pair.e_q;
      double env = sanov_envelope(pt.n, 9, expn, eps);
      ++points;
      if (pt.estimate - 3.0 * pt.wilson_half_width > env) ++violations;
    }
  };
  scan(hoeffding);
  scan(emi);
  std::printf("  %d envelope checks, %d violations\n", points, violations);
  return violations == 0 && points >= 32;
}

// --------------------------------------------------------------------------
// 6. The two closed forms of the log likelihood-ratio statistic agree.

bool criterion6() {
  auto p = oracle::example_joint();
  CounterRng rng(0xC6);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::int64_t n = 10 + static_cast<std::int64_t>(rng.next_u64() % 500);
    auto t = empirical_type(sample_iid(p, n, rng.next_u64()), 3, 3);
    auto r = t.as_pmf();
    // Difference-of-divergences form.
    double gamma = glrt_statistic(t, p);
    // Single-sum form: sum_z R(z) log(P(z) / (R_X R_Y)(z)).
    auto rx = r.row_marginal();
    auto ry = r.col_marginal();
    double direct = 0.0;
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 3; ++y)
        if (r.at(x, y) > 0.0) direct += r.at(x, y) * std::log(p.at(x, y) / (rx[x] * ry[y]));
    worst = std::max(worst, std::fabs(gamma - direct));
  }
  std::printf("  max |form gap| = %.3e (tolerance 1e-10)\n", worst);
  return worst <= 1e-10;
}

// --------------------------------------------------------------------------
// 7. Certified upper bounds at the two reference e_q values.

bool criterion7() {
  auto p = oracle::example_joint_rational();
  struct Case {
    long eq_num;
    const char* claim;
  } cases[] = {{3898, "58593464420737815"}, {3984, "58382556630811219"}};
  bool ok = true;
  for (const auto& c : cases) {
    mpq_class e_q(c.eq_num);
    e_q /= 1 << 17;
    mpq_class claim = dyadic(c.claim, 56);
    auto witness = refine_witness(p, e_q);
    auto cert = verify_upper_bound(p, witness, e_q, claim);
    std::printf("  e_q = %ld/2^17: claim %s/2^56 %s\n", c.eq_num, c.claim,
                cert ? "certified" : "NOT certified");
    ok = ok && cert.has_value();
  }
  return ok;
}

// --------------------------------------------------------------------------
// 8. Certified lower bound exceeding the upper-bound chord at the midpoint.

bool criterion8() {
  auto p = oracle::example_joint_rational();
  mpq_class eq1(3898), eq2(3984);
  eq1 /= 1 << 17;
  eq2 /= 1 << 17;
  mpq_class claim1 = dyadic("58593464420737815", 56);
  mpq_class claim2 = dyadic("58382556630811219", 56);
  mpq_class target = dyadic("58488010525784883", 56);
  mpq_class midpoint = (claim1 + claim2) / 2;
  if (target <= midpoint) {
    std::printf("  target does not exceed the claim midpoint\n");
    return false;
  }

  auto lower_path =
      (std::filesystem::temp_directory_path() / "indtest_acceptance_lower.jsonl").string();
  BranchAndBoundOptions opts;
  opts.budget = 5000000;
  opts.keep_records = false;  // stream leaves; the file audit replays them
  opts.trace_path = lower_path;
  opts.progress_every = 500000;
  auto res = branch_and_bound(p, (eq1 + eq2) / 2, target, opts);
  std::printf("  branch and bound: %llu boxes processed, %llu leaves, %s\n",
              static_cast<unsigned long long>(res.boxes_processed),
              static_cast<unsigned long long>(res.certificate.box_count),
              res.certified ? "certified" : "NOT certified");
  if (!res.certified) return false;

  // Full composite: the two certified upper bounds plus the lower bound.
  auto up1 = verify_upper_bound(p, refine_witness(p, eq1), eq1, claim1);
  auto up2 = verify_upper_bound(p, refine_witness(p, eq2), eq2, claim2);
  if (!up1 || !up2) {
    std::printf("  upper-bound components failed\n");
    return false;
  }
  auto composite = nonconvexity_certificate(*up1, *up2, res.certificate);
  mpq_class gap = target - midpoint;
  std::printf("  certified gap above the chord midpoint: %s (~%.3e)\n",
              gap.get_str().c_str(), gap.get_d());

  // Independent streaming audit of the emitted lower-bound certificate.
  check_certificate_file(p, lower_path);
  std::printf("  streamed certificate audit passed (%s)\n", lower_path.c_str());
  return composite.value == gap;
}

// --------------------------------------------------------------------------
// 9. Certifier soundness: enclosures, the box minimum, and cover audits.

bool criterion9() {
  CounterRng rng(0xC9);
  // (a) Interval operations enclose a 320-bit oracle.
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    long den = 1 << 16;
    mpq_class a(static_cast<long>(rng.next_u64() % den) + 1, den);
    mpq_class b(static_cast<long>(rng.next_u64() % den) + 1, den);
    a.canonicalize();
    b.canonicalize();
    auto ia = IntervalScalar::from_rational(a, 64);
    auto ib = IntervalScalar::from_rational(b, 64);
    auto contains = [](const IntervalScalar& iv, const MpReal& x) {
      return mpfr_cmp(iv.lo(), x.raw()) <= 0 && mpfr_cmp(iv.hi(), x.raw()) >= 0;
    };
    MpReal xa(a, 320), xb(b, 320);
    if (!contains(ia + ib, xa + xb)) ++violations;
    if (!contains(ia * ib, xa * xb)) ++violations;
    if (!contains(ia / ib, xa / xb)) ++violations;
    if (!contains(log(ia), log(xa))) ++violations;
    if (!contains(exp(ia), exp(xa))) ++violations;
    if (!contains(pow(ia, ib), pow(xa, xb))) ++violations;
  }
  std::printf("  interval enclosure violations: %d / 60000 ops\n", violations);

  // (b) d_lower versus a fine grid restricted to small random boxes (the
  // grid must resolve the box, so boxes are a few grid cells wide).
  int d_violations = 0;
  const double step = 1e-3;
  for (int trial = 0; trial < 300; ++trial) {
    ProductBox box;
    auto mk = [&](MarginalBounds& b) {
      double c[3];
      double s = 0.0;
      for (double& v : c) s += (v = rng.next_exponential());
      for (double& v : c) v /= s;
      for (int i = 0; i < 3; ++i) {
        double w = (1 + rng.next_u64() % 8) * step;
        b.lo[i] = mpq_class(std::max(0.0, c[i] - w));
        b.hi[i] = mpq_class(std::min(1.0, c[i] + w));
      }
    };
    mk(box.x);
    mk(box.y);
    mpq_class alpha(1 + static_cast<long>(rng.next_u64() % 9), 10);
    alpha.canonicalize();
    std::array<mpq_class, 9> beta;
    for (auto& bz : beta) {
      bz = mpq_class(static_cast<long>(rng.next_u64() % 4096), 1024);
      bz.canonicalize();
    }
    IntervalScalar iv(64);
    try {
      iv = d_lower(box, alpha, beta, 128);
    } catch (const EmptyRegionError&) {
      continue;
    }
    double a = mpq_get_d(alpha.get_mpq_t());
    double bd[9];
    for (int z = 0; z < 9; ++z) bd[z] = mpq_get_d(beta[z].get_mpq_t());
    // March the grid lattice inside each marginal box.
    auto lattice = [&](const MarginalBounds& b) {
      std::vector<std::array<double, 3>> pts;
      double lo0 = mpq_get_d(b.lo[0].get_mpq_t()), hi0 = mpq_get_d(b.hi[0].get_mpq_t());
      double lo1 = mpq_get_d(b.lo[1].get_mpq_t()), hi1 = mpq_get_d(b.hi[1].get_mpq_t());
      double lo2 = mpq_get_d(b.lo[2].get_mpq_t()), hi2 = mpq_get_d(b.hi[2].get_mpq_t());
      for (long i = std::lround(std::ceil(lo0 / step)); i * step <= hi0 + 1e-15; ++i)
        for (long j = std::lround(std::ceil(lo1 / step)); j * step <= hi1 + 1e-15; ++j) {
          double q2 = 1.0 - i * step - j * step;
          if (q2 < lo2 - 1e-15 || q2 > hi2 + 1e-15) continue;
          pts.push_back({i * step, j * step, q2});
        }
      return pts;
    };
    auto px = lattice(box.x);
    auto py = lattice(box.y);
    double best = kInf;
    for (const auto& qx : px)
      for (const auto& qy : py) {
        double obj = 0.0;
        for (int x = 0; x < 3; ++x)
          for (int y = 0; y < 3; ++y) obj += bd[3 * x + y] * std::pow(qx[x] * qy[y], 1.0 - a);
        best = std::min(best, obj);
      }
    if (std::isfinite(best) && iv.lo_d() > best + 1e-9) ++d_violations;
  }
  std::printf("  d_lower grid violations: %d / 300 boxes\n", d_violations);

  // (c) Cover audit on freshly emitted certificates.
  auto p = oracle::example_joint_rational();
  mpq_class e_q = dyadic("3941", 17);
  bool covers_ok = true;
  auto path =
      (std::filesystem::temp_directory_path() / "indtest_acceptance_soundness.jsonl").string();
  for (std::uint64_t budget : {4000ULL, 40000ULL}) {
    BranchAndBoundOptions opts;
    opts.budget = budget;
    opts.trace_path = path;
    auto res = branch_and_bound(p, e_q, mpq_class(-1), opts);
    try {
      if (!res.certified) throw std::runtime_error("trivial target not certified");
      audit_cover(res.certificate);
      check_certificate(p, res.certificate);
      check_certificate_file(p, path, /*recompute_bounds=*/true);
    } catch (const std::exception& e) {
      std::printf("  cover audit failed: %s\n", e.what());
      covers_ok = false;
    }
  }
  std::remove(path.c_str());
  std::printf("  cover audits %s\n", covers_ok ? "passed" : "FAILED");
  return violations == 0 && d_violations == 0 && covers_ok;
}

}  // namespace

int main(int argc, char** argv) {
  struct Entry {
    int number;
    const char* name;
    bool (*fn)();
  };
  const Entry entries[] = {
      {1, "divergence correctness vs extended-precision oracle", criterion1},
      {2, "chain decomposition identity", criterion2},
      {3, "simple-hypothesis duality", criterion3},
      {4, "trade-off curve vs convex envelope", criterion4},
      {5, "Monte Carlo envelope domination", criterion5},
      {6, "likelihood-ratio statistic identity", criterion6},
      {7, "certified upper bounds", criterion7},
      {8, "certified non-convexity gap", criterion8},
      {9, "certifier soundness suite", criterion9},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& e : entries) {
    if (!wanted.empty() &&
        std::find(wanted.begin(), wanted.end(), e.number) == wanted.end())
      continue;
    std::printf("criterion %d: %s\n", e.number, e.name);
    std::fflush(stdout);
    bool ok = false;
    try {
      ok = e.fn();
    } catch (const std::exception& ex) {
      std::printf("  unexpected exception: %s\n", ex.what());
    }
    std::printf("criterion %d: %s\n", e.number, ok ? "PASS" : "FAIL");
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
