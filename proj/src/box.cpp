#include "indtest/box.hpp"

#include <algorithm>

namespace indtest {

namespace {

bool region_nonempty(const MarginalBounds& b) {
  mpq_class sum_lo = 0, sum_hi = 0;
  for (int i = 0; i < 3; ++i) {
    if (b.lo[i] > b.hi[i] || b.lo[i] < 0) return false;
    sum_lo += b.lo[i];
    sum_hi += b.hi[i];
  }
  return sum_lo <= 1 && sum_hi >= 1;
}

}  // namespace

std::vector<std::array<mpq_class, 3>> box_extreme_points(const MarginalBounds& b) {
  if (!region_nonempty(b)) throw EmptyRegionError();

  std::vector<std::array<mpq_class, 3>> pts;
  auto push_unique = [&](std::array<mpq_class, 3> q) {
    for (const auto& e : pts)
      if (e[0] == q[0] && e[1] == q[1] && e[2] == q[2]) return;
    pts.push_back(std::move(q));
  };

  // A vertex of the polygon {lo <= q <= hi, sum q = 1} pins two coordinates
  // at bounds; the third is determined by the simplex constraint.
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      int k = 3 - i - j;
      for (int bi = 0; bi < 2; ++bi)
        for (int bj = 0; bj < 2; ++bj) {
          const mpq_class& qi = bi ? b.hi[i] : b.lo[i];
          const mpq_class& qj = bj ? b.hi[j] : b.lo[j];
          mpq_class qk = 1 - qi - qj;
          if (qk < b.lo[k] || qk > b.hi[k]) continue;
          std::array<mpq_class, 3> q;
          q[i] = qi;
          q[j] = qj;
          q[k] = qk;
          push_unique(std::move(q));
        }
    }

  if (pts.empty() || pts.size() > 6)
    throw std::logic_error("box_extreme_points: enumeration invariant violated");
  return pts;
}

std::array<double, 3> box_center(const MarginalBounds& b) {
  std::array<double, 3> lo, hi, c;
  for (int i = 0; i < 3; ++i) {
    lo[i] = mpq_get_d(b.lo[i].get_mpq_t());
    hi[i] = mpq_get_d(b.hi[i].get_mpq_t());
    c[i] = 0.5 * (lo[i] + hi[i]);
  }
  // Project the midpoint toward the simplex while staying inside the bounds.
  for (int pass = 0; pass < 16; ++pass) {
    double s = c[0] + c[1] + c[2];
    if (s <= 0.0) break;
    for (int i = 0; i < 3; ++i) c[i] = std::clamp(c[i] / s, lo[i], hi[i]);
  }
  double s = c[0] + c[1] + c[2];
  if (s > 0.0)
    for (int i = 0; i < 3; ++i) c[i] /= s;
  return c;
}

mpq_class box_volume(const ProductBox& box) {
  mpq_class v = 1;
  for (int i = 0; i < 3; ++i) v *= box.x.hi[i] - box.x.lo[i];
  for (int i = 0; i < 3; ++i) v *= box.y.hi[i] - box.y.lo[i];
  return v;
}

}  // namespace indtest
