#pragma once

// Independent extended-precision reference implementations used as oracles
// by the unit and acceptance tests. Everything here recomputes from first
// principles with 256-bit MPFR arithmetic; nothing is shared with the
// library code paths under test.

#include <algorithm>
#include <limits>
#include <vector>

#include "indtest/mpreal.hpp"
#include "indtest/pmf.hpp"
#include "indtest/rng.hpp"

namespace oracle {

constexpr mpfr_prec_t kPrec = 256;

inline double infinity() { return std::numeric_limits<double>::infinity(); }

// sum p log(p/q), conventions 0 log 0 = 0 and p log(p/0) = +inf.
inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
  indtest::MpReal acc(0.0, kPrec);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return infinity();
    indtest::MpReal pi(p[i], kPrec), qi(q[i], kPrec);
    acc = acc + pi * log(pi / qi);
  }
  return acc.to_double();
}

// (1/(alpha-1)) log sum p^alpha q^(1-alpha) for alpha in (0,1) u (1,inf).
inline double renyi(const std::vector<double>& p, const std::vector<double>& q, double alpha) {
  indtest::MpReal a(alpha, kPrec), one(1.0, kPrec);
  indtest::MpReal acc(0.0, kPrec);
  bool support_hit = false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) {
      if (alpha > 1.0) return infinity();
      continue;  // alpha < 1: the cell contributes zero
    }
    support_hit = true;
    indtest::MpReal pi(p[i], kPrec), qi(q[i], kPrec);
    acc = acc + pow(pi, a) * pow(qi, one - a);
  }
  if (!support_hit) return infinity();  // disjoint supports
  return (log(acc) / (a - one)).to_double();
}

inline double mutual_information(const indtest::Pmf& r) {
  auto rx = r.row_marginal();
  auto ry = r.col_marginal();
  std::vector<double> prod;
  prod.reserve(r.size());
  for (int x = 0; x < r.nx(); ++x)
    for (int y = 0; y < r.ny(); ++y) prod.push_back(rx[x] * ry[y]);
  // The float product is not exact, so redo it in extended precision.
  indtest::MpReal acc(0.0, kPrec);
  for (int x = 0; x < r.nx(); ++x)
    for (int y = 0; y < r.ny(); ++y) {
      double v = r.at(x, y);
      if (v == 0.0) continue;
      indtest::MpReal rv(v, kPrec), mx(rx[x], kPrec), my(ry[y], kPrec);
      acc = acc + rv * log(rv / (mx * my));
    }
  return acc.to_double();
}

// Dirichlet(1,...,1) draw over `cells` coordinates; optionally zero some
// cells first to exercise boundary conventions.
inline std::vector<double> random_point(indtest::CounterRng& rng, int cells, int zeros = 0) {
  std::vector<double> v(cells);
  double sum = 0.0;
  for (auto& x : v) {
    x = rng.next_exponential();
    sum += x;
  }
  for (int k = 0; k < zeros && k < cells - 1; ++k)
    v[static_cast<std::size_t>(rng.next_u64() % cells)] = 0.0;
  sum = 0.0;
  for (double x : v) sum += x;
  double renorm = 0.0;
  for (auto& x : v) {
    x /= sum;
    renorm += x;
  }
  // Compensate float rounding so the Pmf validator accepts the vector.
  for (auto& x : v)
    if (x == *std::max_element(v.begin(), v.end())) {
      x += 1.0 - renorm;
      break;
    }
  return v;
}

inline indtest::Pmf random_joint(indtest::CounterRng& rng, int nx, int ny, int zeros = 0) {
  return indtest::Pmf::joint(nx, ny, random_point(rng, nx * ny, zeros));
}

inline indtest::Pmf random_marginal(indtest::CounterRng& rng, int m, int zeros = 0) {
  return indtest::Pmf::marginal(random_point(rng, m, zeros));
}

// The near-uniform off-diagonal 3x3 joint used as the running example across
// tests and CLI presets: 1/10000 on the diagonal, 9997/60000 elsewhere.
inline indtest::RationalPmf example_joint_rational() {
  mpq_class g(9997, 60000), d(1, 10000);
  return indtest::RationalPmf::joint(3, 3, {d, g, g, g, d, g, g, g, d});
}

inline indtest::Pmf example_joint() { return indtest::to_double(example_joint_rational()); }

}  // namespace oracle
