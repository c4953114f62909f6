#include "indtest/hypotests.hpp"

#include <limits>
#include <stdexcept>

#include "indtest/divergence.hpp"

namespace indtest {

EmpiricalType empirical_type(const std::vector<SamplePair>& samples, int nx, int ny) {
  if (samples.empty()) throw std::invalid_argument("empirical_type: empty sample sequence");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(nx) * ny, 0);
  for (auto [x, y] : samples) {
    if (x < 0 || x >= nx || y < 0 || y >= ny)
      throw std::invalid_argument("empirical_type: sample index out of range");
    ++counts[static_cast<std::size_t>(x) * ny + y];
  }
  return EmpiricalType(nx, ny, std::move(counts));
}

Verdict emi_test(const EmpiricalType& t, const TestConfig& cfg) {
  double stat = mutual_information(t.as_pmf());
  return {stat < cfg.pair.e_q + cfg.epsilon ? 1 : 0, stat};
}

Verdict hoeffding_test(const EmpiricalType& t, const TestConfig& cfg) {
  double stat = kl_divergence(t.as_pmf(), cfg.reference);
  return {stat < cfg.pair.e_p + cfg.epsilon ? 0 : 1, stat};
}

double glrt_statistic(const EmpiricalType& t, const Pmf& p) {
  p.require_joint();
  Pmf r = t.as_pmf();
  double d = kl_divergence(r, p);
  if (std::isinf(d)) return -std::numeric_limits<double>::infinity();
  return mutual_information(r) - d;
}

Verdict glrt_test(const EmpiricalType& t, const TestConfig& cfg) {
  double stat = glrt_statistic(t, cfg.reference);
  return {stat <= cfg.pair.e_q - cfg.pair.e_p ? 1 : 0, stat};
}

double epsilon_margin(const Pmf& p, ExponentPair pair, const SolveOptions& opts) {
  double eta = achievability_margin(p, pair, opts);
  if (!(eta > 0.0))
    throw std::domain_error("epsilon_margin: pair is not strictly achievable");
  return 0.5 * eta;
}

}  // namespace indtest
