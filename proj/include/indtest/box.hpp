#pragma once

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace indtest {

// Componentwise bounds on a 3-dimensional marginal PMF.
struct MarginalBounds {
  std::array<mpq_class, 3> lo, hi;
};

// Bounds l_{i,1..6}, u_{i,1..6} defining Q_i = Q_{X,i} x Q_{Y,i}.
struct ProductBox {
  MarginalBounds x, y;
  std::uint64_t id = 0;
  std::uint64_t parent = 0;
  int depth = 0;
};

struct EmptyRegionError : std::runtime_error {
  EmptyRegionError() : std::runtime_error("box: empty intersection with the simplex") {}
};

// Exact rational extreme points of {q : lo <= q <= hi, sum q = 1}. The
// region is a polygon (or segment, or point) with at most six vertices;
// every returned point has at least two active bound constraints. Throws
// EmptyRegionError when the region is empty.
std::vector<std::array<mpq_class, 3>> box_extreme_points(const MarginalBounds& b);

// Midpoint of the region's bounding box, renormalized onto the simplex
// (clipped into the bounds); a heuristic center for parameter selection.
std::array<double, 3> box_center(const MarginalBounds& b);

mpq_class box_volume(const ProductBox& box);  // product of the 6 widths

}  // namespace indtest
