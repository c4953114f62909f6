#include "indtest/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "indtest/rng.hpp"

namespace indtest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_shapes(const Pmf& p, const Pmf& q) {
  if (!p.same_shape(q)) throw std::invalid_argument("divergence: shape mismatch");
}

}  // namespace

double kl_divergence(const Pmf& p, const Pmf& q) {
  check_shapes(p, q);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return kInf;
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return acc;
}

double renyi_divergence(const Pmf& p, const Pmf& q, RenyiOrder order) {
  check_shapes(p, q);
  if (order.is_one()) return kl_divergence(p, q);
  double alpha = order.alpha();
  double sum = 0.0;
  if (alpha < 1.0) {
    // p^a q^(1-a): zero whenever p or q vanishes.
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] > 0.0 && q[i] > 0.0)
        sum += std::pow(p[i], alpha) * std::pow(q[i], 1.0 - alpha);
    if (sum <= 0.0) return kInf;  // log 0 = -inf, divided by alpha-1 < 0
  } else {
    // p^a / q^(a-1) with 0/0 = 0 and p/0 = +inf.
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] <= 0.0) continue;
      if (q[i] <= 0.0) return kInf;
      sum += std::pow(p[i], alpha) / std::pow(q[i], alpha - 1.0);
    }
  }
  return std::log(sum) / (alpha - 1.0);
}

double mutual_information(const Pmf& r) {
  r.require_joint();
  auto [rx, ry] = marginals(r);
  double acc = 0.0;
  for (int x = 0; x < r.nx(); ++x)
    for (int y = 0; y < r.ny(); ++y) {
      double v = r.at(x, y);
      if (v <= 0.0) continue;
      acc += v * std::log(v / (rx[x] * ry[y]));
    }
  return std::max(acc, 0.0);
}

namespace {

// One pass of the alternating closed-form update for
// F(qx,qy) = sum_xy p^alpha (qx qy)^(1-alpha); fixing one marginal, the
// optimal other is proportional to [sum p^alpha q^(1-alpha)]^(1/alpha).
double j_alpha_from_start(const Pmf& p, double alpha, std::vector<double> qx,
                          std::vector<double> qy, const JAlphaOptions& opts) {
  const int nx = p.nx(), ny = p.ny();
  std::vector<double> pa(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) pa[i] = std::pow(p[i], alpha);

  auto objective = [&]() {
    double f = 0.0;
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y)
        if (qx[x] > 0.0 && qy[y] > 0.0)
          f += pa[x * ny + y] * std::pow(qx[x] * qy[y], 1.0 - alpha);
    return f;
  };

  double f_prev = objective();
  for (int it = 0; it < opts.max_iters; ++it) {
    // Update qx given qy.
    double zx = 0.0;
    for (int x = 0; x < nx; ++x) {
      double s = 0.0;
      for (int y = 0; y < ny; ++y)
        if (qy[y] > 0.0) s += pa[x * ny + y] * std::pow(qy[y], 1.0 - alpha);
      qx[x] = s > 0.0 ? std::pow(s, 1.0 / alpha) : 0.0;
      zx += qx[x];
    }
    for (int x = 0; x < nx; ++x) qx[x] /= zx;
    // Update qy given qx.
    double zy = 0.0;
    for (int y = 0; y < ny; ++y) {
      double s = 0.0;
      for (int x = 0; x < nx; ++x)
        if (qx[x] > 0.0) s += pa[x * ny + y] * std::pow(qx[x], 1.0 - alpha);
      qy[y] = s > 0.0 ? std::pow(s, 1.0 / alpha) : 0.0;
      zy += qy[y];
    }
    for (int y = 0; y < ny; ++y) qy[y] /= zy;

    double f = objective();
    if (f - f_prev < opts.tol && it > 0) {
      f_prev = std::max(f, f_prev);
      break;
    }
    f_prev = f;
  }
  // D_alpha = log(F) / (alpha - 1); maximizing F minimizes D for alpha < 1.
  if (f_prev <= 0.0) return kInf;
  return std::log(f_prev) / (alpha - 1.0);
}

}  // namespace

double j_alpha(const Pmf& p, RenyiOrder order, const JAlphaOptions& opts) {
  p.require_joint();
  if (order.is_one()) return mutual_information(p);
  double alpha = order.alpha();
  if (alpha > 1.0) throw std::invalid_argument("j_alpha: alpha must lie in (0,1]");

  const int nx = p.nx(), ny = p.ny();
  auto [rx, ry] = marginals(p);

  double best = j_alpha_from_start(p, alpha, rx.mass(), ry.mass(), opts);
  CounterRng rng(opts.seed);
  for (int s = 1; s < opts.starts; ++s) {
    CounterRng r = rng.derive(s);
    std::vector<double> qx(nx), qy(ny);
    double sx = 0.0, sy = 0.0;
    for (int x = 0; x < nx; ++x) sx += qx[x] = r.next_exponential();
    for (int y = 0; y < ny; ++y) sy += qy[y] = r.next_exponential();
    for (int x = 0; x < nx; ++x) qx[x] /= sx;
    for (int y = 0; y < ny; ++y) qy[y] /= sy;
    best = std::min(best, j_alpha_from_start(p, alpha, std::move(qx), std::move(qy), opts));
  }
  return std::max(best, 0.0);
}

}  // namespace indtest
