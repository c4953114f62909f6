// Compares the OpenMP Monte Carlo kernel against the serial reference and
// reports timings plus a bit-for-bit agreement check.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "indtest/simulate.hpp"

using namespace indtest;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  std::int64_t trials = argc > 1 ? std::atoll(argv[1]) : 20000;

  Pmf p = Pmf::joint(3, 3, {1.0 / 10000, 9997.0 / 60000, 9997.0 / 60000, 9997.0 / 60000,
                            1.0 / 10000, 9997.0 / 60000, 9997.0 / 60000, 9997.0 / 60000,
                            1.0 / 10000});
  TestConfig cfg({0.05, 0.02}, 0.01, p);
  SimPlan plan{.null_pmf = p};
  auto [px, py] = marginals(p);
  plan.alternatives.emplace_back(px, py);
  plan.n_grid = {50, 100, 200, 400};
  plan.trials = trials;
  plan.seed = 0xb3c1;

  std::printf("%-10s %12s %12s %8s %6s\n", "test", "serial_s", "openmp_s", "speedup", "match");
  for (TestKind k : {TestKind::Emi, TestKind::Hoeffding, TestKind::Glrt}) {
    auto t0 = std::chrono::steady_clock::now();
    ErrorCurve serial = run_plan_serial(plan, cfg, k);
    double ts = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    ErrorCurve parallel = run_plan(plan, cfg, k);
    double tp = seconds_since(t0);

    bool match = serial.points.size() == parallel.points.size();
    for (std::size_t i = 0; match && i < serial.points.size(); ++i)
      match = serial.points[i].estimate == parallel.points[i].estimate &&
              serial.points[i].n == parallel.points[i].n;
    std::printf("%-10s %12.3f %12.3f %8.2f %6s\n", test_kind_name(k), ts, tp,
                tp > 0 ? ts / tp : 0.0, match ? "yes" : "NO");
    if (!match) return 1;
  }
  std::printf("threads: %d\n", omp_get_max_threads());
  return 0;
}
