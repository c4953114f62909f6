#include "indtest/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>

#include "indtest/divergence.hpp"
#include "indtest/rng.hpp"

namespace indtest {

const char* test_kind_name(TestKind k) {
  switch (k) {
    case TestKind::Emi: return "emi";
    case TestKind::Hoeffding: return "hoeffding";
    case TestKind::Glrt: return "glrt";
  }
  return "?";
}

std::vector<SamplePair> sample_iid(const Pmf& p, std::int64_t n, std::uint64_t seed) {
  p.require_joint();
  if (n < 1) throw std::invalid_argument("sample_iid: n must be positive");
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) cdf[i] = (acc += p[i]);
  cdf.back() = 1.0;

  CounterRng rng(seed);
  std::vector<SamplePair> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    double u = rng.next_double();
    std::size_t idx =
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    if (idx >= p.size()) idx = p.size() - 1;
    out.emplace_back(static_cast<int>(idx / p.ny()), static_cast<int>(idx % p.ny()));
  }
  return out;
}

double sanov_envelope(std::int64_t n, int alphabet_size, double exponent, double epsilon) {
  if (n < 1) throw std::invalid_argument("sanov_envelope: n must be positive");
  double log_env = alphabet_size * std::log(static_cast<double>(n + 1)) -
                   static_cast<double>(n) * (exponent + epsilon);
  return std::exp(log_env);
}

double wilson_half_width(std::int64_t k, std::int64_t n) {
  double p = static_cast<double>(k) / static_cast<double>(n);
  double z2_n = 1.0 / static_cast<double>(n);
  return std::sqrt(p * (1.0 - p) / n + z2_n * z2_n / 4.0) / (1.0 + z2_n);
}

namespace {

Verdict run_test(TestKind which, const EmpiricalType& t, const TestConfig& cfg) {
  switch (which) {
    case TestKind::Emi: return emi_test(t, cfg);
    case TestKind::Hoeffding: return hoeffding_test(t, cfg);
    case TestKind::Glrt: return glrt_test(t, cfg);
  }
  throw std::logic_error("unreachable");
}

std::uint64_t stream_key(std::uint64_t n_idx, std::uint64_t alt, std::uint64_t trial) {
  return (n_idx << 40) ^ (alt << 28) ^ trial;
}

ErrorCurve run_plan_impl(const SimPlan& plan, const TestConfig& cfg, TestKind which,
                         bool parallel) {
  if (plan.trials < 1) throw std::invalid_argument("run_plan: trials must be >= 1");
  plan.null_pmf.require_joint();
  ErrorCurve curve;
  CounterRng root(plan.seed);

  // alt = 0 is the null (type-I); alt >= 1 indexes alternatives (type-II).
  int n_alts = static_cast<int>(plan.alternatives.size());
  for (std::size_t ni = 0; ni < plan.n_grid.size(); ++ni) {
    std::int64_t n = plan.n_grid[ni];
    for (int alt = 0; alt <= n_alts; ++alt) {
      Pmf source = alt == 0 ? plan.null_pmf
                            : product_pmf(plan.alternatives[alt - 1].first,
                                          plan.alternatives[alt - 1].second);
      int bad_decision = alt == 0 ? 1 : 0;
      std::int64_t errors = 0;
#pragma omp parallel for reduction(+ : errors) schedule(static) if (parallel)
      for (std::int64_t trial = 0; trial < plan.trials; ++trial) {
        std::uint64_t s =
            root.derive(stream_key(ni, static_cast<std::uint64_t>(alt), trial)).next_u64();
        auto samples = sample_iid(source, n, s);
        EmpiricalType t = empirical_type(samples, source.nx(), source.ny());
        if (run_test(which, t, cfg).decision == bad_decision) ++errors;
      }
      ErrorPoint pt;
      pt.test = which;
      pt.n = n;
      pt.alternative = alt - 1;
      pt.estimate = static_cast<double>(errors) / static_cast<double>(plan.trials);
      pt.wilson_half_width = wilson_half_width(errors, plan.trials);
      pt.trials = plan.trials;
      pt.censored = errors > 0 && errors < 10;
      curve.points.push_back(pt);
    }
  }
  return curve;
}

}  // namespace

ErrorCurve run_plan(const SimPlan& plan, const TestConfig& cfg, TestKind which) {
  return run_plan_impl(plan, cfg, which, true);
}

ErrorCurve run_plan_serial(const SimPlan& plan, const TestConfig& cfg, TestKind which) {
  return run_plan_impl(plan, cfg, which, false);
}

namespace {

// All probability vectors of dimension m on a grid with the given step.
void simplex_grid(int m, double step, std::vector<std::vector<double>>& out) {
  long k = std::lround(1.0 / step);
  std::vector<long> comp(m, 0);
  // Enumerate compositions of k into m nonnegative parts.
  std::vector<double> v(m);
  auto emit = [&]() {
    for (int i = 0; i < m; ++i) v[i] = static_cast<double>(comp[i]) / k;
    out.push_back(v);
  };
  std::function<void(int, long)> rec = [&](int i, long rem) {
    if (i == m - 1) {
      comp[i] = rem;
      emit();
      return;
    }
    for (long c = 0; c <= rem; ++c) {
      comp[i] = c;
      rec(i + 1, rem - c);
    }
  };
  rec(0, k);
}

}  // namespace

WorstAlternative worst_alternative(const Pmf& p, const TestConfig& cfg, TestKind which,
                                   std::int64_t n, double grid_step, std::int64_t trials,
                                   std::uint64_t seed) {
  p.require_joint();
  if (!(grid_step > 0.0 && grid_step <= 0.5))
    throw std::invalid_argument("worst_alternative: grid_step must lie in (0, 0.5]");

  std::vector<std::vector<double>> gx, gy;
  simplex_grid(p.nx(), grid_step, gx);
  simplex_grid(p.ny(), grid_step, gy);

  WorstAlternative best{Pmf::marginal(gx[0]), Pmf::marginal(gy[0]), -1.0};
  CounterRng root(seed);
  std::uint64_t cand = 0;
  for (const auto& vx : gx) {
    for (const auto& vy : gy) {
      ++cand;
      Pmf qx = Pmf::marginal(vx), qy = Pmf::marginal(vy);
      Pmf prod = product_pmf(qx, qy);
      std::int64_t miss = 0;
      for (std::int64_t trial = 0; trial < trials; ++trial) {
        std::uint64_t s = root.derive(cand, trial).next_u64();
        auto samples = sample_iid(prod, n, s);
        EmpiricalType t = empirical_type(samples, prod.nx(), prod.ny());
        if (run_test(which, t, cfg).decision == 0) ++miss;
      }
      double est = static_cast<double>(miss) / static_cast<double>(trials);
      if (est > best.type2_estimate) best = {qx, qy, est};
    }
  }
  return best;
}

void write_error_curve(std::ostream& os, const ErrorCurve& curve, const TestConfig& cfg,
                       int alphabet_size) {
  os << "test,n,alternative,type,estimate,ci_half_width,envelope\n";
  for (const auto& pt : curve.points) {
    bool type1 = pt.alternative < 0;
    double env = sanov_envelope(pt.n, alphabet_size,
                                type1 ? cfg.pair.e_p : cfg.pair.e_q, cfg.epsilon);
    os << test_kind_name(pt.test) << ',' << pt.n << ',' << pt.alternative << ','
       << (type1 ? "I" : "II") << ',' << pt.estimate << ',' << pt.wilson_half_width << ','
       << env;
    if (pt.censored) os << ",censored";
    os << '\n';
  }
}

}  // namespace indtest
