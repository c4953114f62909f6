#include "indtest/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "indtest/rng.hpp"

namespace indtest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Mass vectors below live on the support of the reference joint; cells
// outside supp(p) stay exactly zero throughout.
struct Workspace {
  const Pmf& p;
  int nx, ny;
  std::vector<double> r;       // current iterate
  std::vector<double> rx, ry;  // marginals of r

  explicit Workspace(const Pmf& ref) : p(ref), nx(ref.nx()), ny(ref.ny()), r(ref.size()) {}

  void set(const std::vector<double>& m) {
    r = m;
    update_marginals();
  }

  void update_marginals() {
    rx.assign(nx, 0.0);
    ry.assign(ny, 0.0);
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y) {
        rx[x] += r[x * ny + y];
        ry[y] += r[x * ny + y];
      }
  }

  double kl_to_p() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i)
      if (r[i] > 0.0) acc += r[i] * std::log(r[i] / p[i]);
    return acc;
  }

  double mi() const {
    double acc = 0.0;
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y) {
        double v = r[x * ny + y];
        if (v > 0.0) acc += v * std::log(v / (rx[x] * ry[y]));
      }
    return std::max(acc, 0.0);
  }

  // grad of D(r||p) on the support: log(r/p) + 1.
  void grad_kl(std::vector<double>& g) const {
    for (std::size_t i = 0; i < r.size(); ++i)
      g[i] = (p[i] > 0.0 && r[i] > 0.0) ? std::log(r[i] / p[i]) + 1.0 : 0.0;
  }

  // grad of D(r||r_X r_Y): log(r/(rx ry)) - 1.
  void grad_mi(std::vector<double>& g) const {
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y) {
        double v = r[x * ny + y];
        g[x * ny + y] = v > 0.0 ? std::log(v / (rx[x] * ry[y])) - 1.0 : 0.0;
      }
  }

  // Exponentiated-gradient step restricted to supp(p).
  void eg_step(const std::vector<double>& g, double eta) {
    double mx = -kInf;
    for (std::size_t i = 0; i < r.size(); ++i)
      if (r[i] > 0.0) mx = std::max(mx, -eta * g[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i] > 0.0) r[i] *= std::exp(-eta * g[i] - mx);
      z += r[i];
    }
    for (auto& v : r) v /= z;
    update_marginals();
  }
};

std::vector<double> dirichlet_on_support(const Pmf& p, CounterRng rng) {
  std::vector<double> m(p.size(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) z += m[i] = rng.next_exponential();
  for (auto& v : m) v /= z;
  return m;
}

enum class Goal { MinKlSubjectMi, MinMiSubjectKl };

// Penalized mirror descent: objective + rho * max(0, constraint - threshold)
// with rho doubling from 1 to 2^10.
void mirror_descent(Workspace& w, Goal goal, double threshold, const SolveOptions& opts) {
  std::vector<double> g(w.r.size()), gc(w.r.size());
  for (double rho = 1.0; rho <= 1024.0; rho *= 2.0) {
    for (int t = 1; t <= opts.iters_per_rho; ++t) {
      double cons = (goal == Goal::MinKlSubjectMi) ? w.mi() : w.kl_to_p();
      if (goal == Goal::MinKlSubjectMi) {
        w.grad_kl(g);
        if (cons > threshold) {
          w.grad_mi(gc);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += rho * gc[i];
        }
      } else {
        w.grad_mi(g);
        if (cons > threshold) {
          w.grad_kl(gc);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += rho * gc[i];
        }
      }
      w.eg_step(g, 0.5 / std::sqrt(static_cast<double>(t)));
    }
  }
}

// KKT fixed-point family for ep_of_eq: stationary points of D(R||P)+mu*I(R)
// satisfy R proportional to (P (R_X R_Y)^mu)^(1/(1+mu)). Iterating this map
// decreases the penalized objective; bisecting mu drives I(R) to the
// threshold from the feasible side.
void tilt_iterate(Workspace& w, Goal goal, double mu, int iters) {
  const int nx = w.nx, ny = w.ny;
  std::vector<double> next(w.r.size());
  for (int it = 0; it < iters; ++it) {
    double z = 0.0, delta = 0.0;
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y) {
        std::size_t i = static_cast<std::size_t>(x) * ny + y;
        if (w.r[i] <= 0.0 || w.p[i] <= 0.0) {
          next[i] = 0.0;
          continue;
        }
        double lp = std::log(w.p[i]);
        double lm = std::log(w.rx[x]) + std::log(w.ry[y]);
        double le = (goal == Goal::MinKlSubjectMi) ? (lp + mu * lm) / (1.0 + mu)
                                                   : (lm + mu * lp) / (1.0 + mu);
        next[i] = std::exp(le);
        z += next[i];
      }
    for (std::size_t i = 0; i < next.size(); ++i) {
      double v = next[i] / z;
      delta = std::max(delta, std::fabs(v - w.r[i]));
      w.r[i] = v;
    }
    w.update_marginals();
    if (delta < 1e-16) break;
  }
}

struct PolishResult {
  double objective;
  double constraint;
  std::vector<double> r;
};

PolishResult tilt_polish(Workspace& w, Goal goal, double threshold, const SolveOptions& opts) {
  auto cons = [&]() { return (goal == Goal::MinKlSubjectMi) ? w.mi() : w.kl_to_p(); };
  auto obj = [&]() { return (goal == Goal::MinKlSubjectMi) ? w.kl_to_p() : w.mi(); };

  // Bracket: mu = 0 keeps the objective pure (constraint typically violated);
  // large mu forces the constraint toward 0.
  double lo = 0.0, hi = 1.0;
  std::vector<double> base = w.r;
  for (int k = 0; k < 60; ++k) {
    w.set(base);
    tilt_iterate(w, goal, hi, opts.polish_iters);
    if (cons() <= threshold) break;
    lo = hi;
    hi *= 2.0;
  }
  for (int k = 0; k < 60; ++k) {
    double mid = 0.5 * (lo + hi);
    w.set(base);
    tilt_iterate(w, goal, mid, opts.polish_iters);
    if (cons() <= threshold)
      hi = mid;
    else
      lo = mid;
  }
  w.set(base);
  tilt_iterate(w, goal, hi, opts.polish_iters);
  return {obj(), cons(), w.r};
}

// Blend toward a feasible anchor until the constraint holds; used as a final
// feasibility repair when optimizer noise leaves a tiny violation.
void repair(Workspace& w, Goal goal, double threshold, const std::vector<double>& anchor) {
  auto cons = [&]() { return (goal == Goal::MinKlSubjectMi) ? w.mi() : w.kl_to_p(); };
  if (cons() <= threshold) return;
  std::vector<double> cur = w.r;
  double lo = 0.0, hi = 1.0;
  for (int k = 0; k < 80; ++k) {
    double t = 0.5 * (lo + hi);
    for (std::size_t i = 0; i < cur.size(); ++i) w.r[i] = (1.0 - t) * cur[i] + t * anchor[i];
    w.update_marginals();
    if (cons() <= threshold)
      hi = t;
    else
      lo = t;
  }
  for (std::size_t i = 0; i < cur.size(); ++i) w.r[i] = (1.0 - hi) * cur[i] + hi * anchor[i];
  w.update_marginals();
}

ExponentEstimate solve_constrained(const Pmf& p, Goal goal, double threshold,
                                   const SolveOptions& opts) {
  ExponentEstimate est;
  est.starts_used = opts.starts;
  est.value = kInf;

  std::vector<double> best_obj(opts.starts, kInf);
  std::vector<std::vector<double>> best_r(opts.starts);

  CounterRng root(opts.seed);
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < opts.starts; ++s) {
    Workspace w(p);
    std::vector<double> start =
        s == 0 ? p.mass() : dirichlet_on_support(p, root.derive(s));
    // Two trajectories per start: mirror descent followed by the tilt
    // polish, and the tilt polish alone from the raw start. The raw-start
    // trajectory explores basins the penalized descent tends to merge.
    for (int path = 0; path < 2; ++path) {
      w.set(start);
      if (path == 0) mirror_descent(w, goal, threshold, opts);
      PolishResult pr = tilt_polish(w, goal, threshold, opts);
      w.set(pr.r);
      if (goal == Goal::MinKlSubjectMi) {
        // Blend toward the iterate's own product approximation, which drives
        // the mutual-information constraint to zero.
        std::vector<double> prod(w.r.size());
        for (int x = 0; x < w.nx; ++x)
          for (int y = 0; y < w.ny; ++y) prod[x * w.ny + y] = w.rx[x] * w.ry[y];
        repair(w, goal, threshold, prod);
      } else {
        repair(w, goal, threshold, p.mass());
      }
      double obj = (goal == Goal::MinKlSubjectMi) ? w.kl_to_p() : w.mi();
      if (obj < best_obj[s]) {
        best_obj[s] = obj;
        best_r[s] = w.r;
      }
    }
  }

  for (int s = 0; s < opts.starts; ++s) {
    if (best_obj[s] < est.value) {
      est.value = best_obj[s];
      est.witness = Pmf::joint(p.nx(), p.ny(), best_r[s]);
    }
  }
  return est;
}

template <typename F>
double golden_max_impl(double lo, double hi, int iters, const F& f) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int k = 0; k < iters; ++k) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    }
  }
  return std::max(f1, f2);
}

}  // namespace

ExponentEstimate ep_of_eq(const Pmf& p, double e_q, const SolveOptions& opts) {
  p.require_joint();
  ExponentEstimate est;
  est.dual_lower = ep_biconjugate(p, e_q);
  est.starts_used = opts.starts;
  if (e_q < 0.0) {
    est.value = kInf;
    return est;
  }
  double ip = mutual_information(p);
  if (e_q >= ip) {
    est.value = 0.0;
    est.witness = p;
    return est;
  }
  ExponentEstimate inner = solve_constrained(p, Goal::MinKlSubjectMi, e_q, opts);
  est.value = inner.value;
  est.witness = std::move(inner.witness);
  return est;
}

ExponentEstimate eq_of_ep(const Pmf& p, double e_p, const SolveOptions& opts) {
  p.require_joint();
  ExponentEstimate est;
  est.dual_lower = eq_biconjugate(p, e_p);
  est.starts_used = opts.starts;
  if (e_p < 0.0) {
    est.value = kInf;
    return est;
  }
  ExponentEstimate inner = solve_constrained(p, Goal::MinMiSubjectKl, e_p, opts);
  est.value = inner.value;
  est.witness = std::move(inner.witness);
  return est;
}

double ep_biconjugate(const Pmf& p, double e_q, const BiconjugateOptions& opts) {
  p.require_joint();
  auto g = [&](double alpha) {
    double j = (alpha >= 1.0) ? mutual_information(p)
                              : j_alpha(p, RenyiOrder::of(alpha), opts.j_opts);
    return (1.0 - alpha) / alpha * (j - e_q);
  };
  // Log-spaced grid on [alpha_min, 1] with alpha = 1 included exactly.
  double best = g(1.0), best_alpha = 1.0;
  double llo = std::log(opts.alpha_min);
  for (int i = 0; i < opts.grid_points; ++i) {
    double alpha = std::exp(llo + (0.0 - llo) * i / (opts.grid_points - 1.0));
    double v = g(alpha);
    if (v > best) {
      best = v;
      best_alpha = alpha;
    }
  }
  double lo = std::max(opts.alpha_min, best_alpha * 0.7);
  double hi = std::min(1.0, best_alpha * 1.4);
  return std::max(best, golden_max_impl(lo, hi, 40, g));
}

double eq_biconjugate(const Pmf& p, double e_p, const BiconjugateOptions& opts) {
  p.require_joint();
  auto g = [&](double alpha) {
    if (alpha <= 0.0) return 0.0;
    double j = j_alpha(p, RenyiOrder::of(alpha), opts.j_opts);
    return j - alpha / (1.0 - alpha) * e_p;
  };
  double hi_alpha = 1.0 - opts.alpha_min;
  double best = 0.0, best_alpha = 0.0;  // alpha = 0 term is zero by convention
  for (int i = 0; i <= opts.grid_points; ++i) {
    double alpha = hi_alpha * i / opts.grid_points;
    double v = g(alpha);
    if (v > best) {
      best = v;
      best_alpha = alpha;
    }
  }
  double lo = std::max(0.0, best_alpha - hi_alpha / opts.grid_points);
  double hi = std::min(hi_alpha, best_alpha + hi_alpha / opts.grid_points);
  return std::max(best, golden_max_impl(lo, hi, 40, g));
}

double achievability_margin(const Pmf& p, ExponentPair pair, const SolveOptions& opts) {
  p.require_joint();

  std::vector<double> best(opts.starts, kInf);
  CounterRng root(opts.seed ^ 0xa5a5a5a5ull);

#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < opts.starts; ++s) {
    Workspace w(p);
    if (s == 0)
      w.set(p.mass());
    else if (s == 1)
      w.set(product_pmf(p.row_marginal(), p.col_marginal()).mass());
    else
      w.set(dirichlet_on_support(p, root.derive(s)));

    std::vector<double> g(p.size()), g2(p.size());
    double local = kInf;
    int total = 11 * opts.iters_per_rho;
    for (int t = 1; t <= total; ++t) {
      double a = w.kl_to_p() - pair.e_p;
      double b = w.mi() - pair.e_q;
      local = std::min(local, std::max(a, b));
      if (std::fabs(a - b) < 1e-12) {
        w.grad_kl(g);
        w.grad_mi(g2);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.5 * (g[i] + g2[i]);
      } else if (a > b) {
        w.grad_kl(g);
      } else {
        w.grad_mi(g);
      }
      w.eg_step(g, 0.5 / std::sqrt(static_cast<double>(t)));
    }
    local = std::min(local, std::max(w.kl_to_p() - pair.e_p, w.mi() - pair.e_q));
    best[s] = local;
  }

  double eta = kInf;
  for (double v : best) eta = std::min(eta, v);
  return eta;
}

std::pair<double, double> simple_duality(const Pmf& p, const Pmf& q, double e_q,
                                         const DualityOptions& opts) {
  if (!p.same_shape(q)) throw std::invalid_argument("simple_duality: shape mismatch");
  if (e_q < 0.0) throw std::invalid_argument("simple_duality: e_q must be nonnegative");
  std::size_t m = p.size();
  if (m < 2 || m > 3)
    throw std::invalid_argument("simple_duality: grid primal supports |Z| in {2,3}");

  auto kl_vec = [](const double* r, const std::vector<double>& s, std::size_t k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (r[i] <= 0.0) continue;
      if (s[i] <= 0.0) return kInf;
      acc += r[i] * std::log(r[i] / s[i]);
    }
    return acc;
  };

  double primal = kInf;
  const double h = opts.grid_step;
  if (m == 2) {
    long steps = std::lround(1.0 / h);
    for (long i = 0; i <= steps; ++i) {
      double r[2] = {static_cast<double>(i) / steps, 1.0 - static_cast<double>(i) / steps};
      if (kl_vec(r, q.mass(), 2) <= e_q) primal = std::min(primal, kl_vec(r, p.mass(), 2));
    }
  } else {
    long steps = std::lround(1.0 / h);
    for (long i = 0; i <= steps; ++i) {
      double r0 = static_cast<double>(i) / steps;
      for (long j = 0; j <= steps - i; ++j) {
        double r[3] = {r0, static_cast<double>(j) / steps,
                       1.0 - r0 - static_cast<double>(j) / steps};
        if (r[2] < 0.0) r[2] = 0.0;
        if (kl_vec(r, q.mass(), 3) <= e_q) primal = std::min(primal, kl_vec(r, p.mass(), 3));
      }
    }
  }

  auto g = [&](double alpha) {
    double d = renyi_divergence(p, q, alpha >= 1.0 ? RenyiOrder::one() : RenyiOrder::of(alpha));
    return (1.0 - alpha) / alpha * (d - e_q);
  };
  double dual = g(1.0), best_alpha = 1.0;
  for (int i = 1; i <= 2000; ++i) {
    double alpha = opts.alpha_min + (1.0 - opts.alpha_min) * i / 2000.0;
    double v = g(alpha);
    if (v > dual) {
      dual = v;
      best_alpha = alpha;
    }
  }
  double lo = std::max(opts.alpha_min, best_alpha - 1e-3);
  double hi = std::min(1.0, best_alpha + 1e-3);
  dual = std::max(dual, golden_max_impl(lo, hi, 50, g));
  return {primal, dual};
}

}  // namespace indtest
