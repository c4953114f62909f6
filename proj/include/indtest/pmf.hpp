#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace indtest {

namespace detail {

inline void check_mass(const std::vector<double>& mass) {
  double sum = 0.0;
  for (double m : mass) {
    if (!(m >= 0.0)) throw std::invalid_argument("pmf: negative or NaN mass entry");
    sum += m;
  }
  if (std::fabs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("pmf: mass does not sum to 1 within 1e-12");
}

inline void check_mass(const std::vector<mpq_class>& mass) {
  mpq_class sum = 0;
  for (const auto& m : mass) {
    if (m < 0) throw std::invalid_argument("pmf: negative mass entry");
    sum += m;
  }
  if (sum != 1) throw std::invalid_argument("pmf: mass does not sum to 1 exactly");
}

}  // namespace detail

// Probability vector over a finite alphabet, either joint ((|X|,|Y|) matrix,
// row-major) or marginal ((m,) vector). Shape and mass are immutable after
// construction. T is double or mpq_class.
template <typename T>
class BasicPmf {
 public:
  static BasicPmf joint(int nx, int ny, std::vector<T> mass) {
    if (nx < 1 || ny < 1 || mass.size() != static_cast<std::size_t>(nx) * ny)
      throw std::invalid_argument("pmf: joint shape/mass mismatch");
    detail::check_mass(mass);
    return BasicPmf(nx, ny, true, std::move(mass));
  }

  static BasicPmf marginal(std::vector<T> mass) {
    if (mass.empty()) throw std::invalid_argument("pmf: empty marginal");
    detail::check_mass(mass);
    int m = static_cast<int>(mass.size());
    return BasicPmf(m, 1, false, std::move(mass));
  }

  bool is_joint() const { return joint_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return mass_.size(); }

  const T& operator[](std::size_t i) const { return mass_[i]; }
  const T& at(int x, int y) const { return mass_[static_cast<std::size_t>(x) * ny_ + y]; }
  const std::vector<T>& mass() const { return mass_; }

  bool same_shape(const BasicPmf& o) const {
    return joint_ == o.joint_ && nx_ == o.nx_ && ny_ == o.ny_;
  }

  BasicPmf row_marginal() const {
    require_joint();
    std::vector<T> r(nx_, T(0));
    for (int x = 0; x < nx_; ++x)
      for (int y = 0; y < ny_; ++y) r[x] += at(x, y);
    return BasicPmf(nx_, 1, false, std::move(r));
  }

  BasicPmf col_marginal() const {
    require_joint();
    std::vector<T> c(ny_, T(0));
    for (int x = 0; x < nx_; ++x)
      for (int y = 0; y < ny_; ++y) c[y] += at(x, y);
    return BasicPmf(ny_, 1, false, std::move(c));
  }

  void require_joint() const {
    if (!joint_) throw std::invalid_argument("pmf: joint shape required");
  }
  void require_marginal() const {
    if (joint_) throw std::invalid_argument("pmf: marginal shape required");
  }

 private:
  BasicPmf(int nx, int ny, bool joint, std::vector<T> mass)
      : nx_(nx), ny_(ny), joint_(joint), mass_(std::move(mass)) {}

  int nx_, ny_;
  bool joint_;
  std::vector<T> mass_;
};

using Pmf = BasicPmf<double>;
using RationalPmf = BasicPmf<mpq_class>;

template <typename T>
BasicPmf<T> product_pmf(const BasicPmf<T>& qx, const BasicPmf<T>& qy) {
  qx.require_marginal();
  qy.require_marginal();
  std::vector<T> mass;
  mass.reserve(qx.size() * qy.size());
  for (std::size_t i = 0; i < qx.size(); ++i)
    for (std::size_t j = 0; j < qy.size(); ++j) mass.push_back(qx[i] * qy[j]);
  return BasicPmf<T>::joint(qx.nx(), qy.nx(), std::move(mass));
}

template <typename T>
std::pair<BasicPmf<T>, BasicPmf<T>> marginals(const BasicPmf<T>& r) {
  return {r.row_marginal(), r.col_marginal()};
}

inline Pmf to_double(const RationalPmf& p) {
  std::vector<double> mass(p.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    mass[i] = p[i].get_d();
    sum += mass[i];
  }
  // Rounding can push the float sum off 1; fold the defect into the largest cell.
  std::size_t imax = 0;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (mass[i] > mass[imax]) imax = i;
  mass[imax] += 1.0 - sum;
  return p.is_joint() ? Pmf::joint(p.nx(), p.ny(), std::move(mass))
                      : Pmf::marginal(std::move(mass));
}

// Integer count matrix plus sample size; the type of a sequence of (x,y) pairs.
class EmpiricalType {
 public:
  EmpiricalType(int nx, int ny, std::vector<std::int64_t> counts)
      : nx_(nx), ny_(ny), counts_(std::move(counts)), n_(0) {
    if (nx < 1 || ny < 1 || counts_.size() != static_cast<std::size_t>(nx) * ny)
      throw std::invalid_argument("empirical type: shape/counts mismatch");
    for (auto c : counts_) {
      if (c < 0) throw std::invalid_argument("empirical type: negative count");
      n_ += c;
    }
    if (n_ < 1) throw std::invalid_argument("empirical type: empty sample");
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::int64_t n() const { return n_; }
  std::int64_t count(int x, int y) const { return counts_[static_cast<std::size_t>(x) * ny_ + y]; }
  const std::vector<std::int64_t>& counts() const { return counts_; }

  Pmf as_pmf() const {
    std::vector<double> mass(counts_.size());
    for (std::size_t i = 0; i < counts_.size(); ++i)
      mass[i] = static_cast<double>(counts_[i]) / static_cast<double>(n_);
    return Pmf::joint(nx_, ny_, std::move(mass));
  }

 private:
  int nx_, ny_;
  std::vector<std::int64_t> counts_;
  std::int64_t n_;
};

// Order of a Renyi divergence; ONE routes to the KL limit exactly.
class RenyiOrder {
 public:
  static RenyiOrder one() { return RenyiOrder(1.0, true); }
  static RenyiOrder of(double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("renyi order: alpha must be positive");
    return RenyiOrder(alpha, alpha == 1.0);
  }

  double alpha() const { return alpha_; }
  bool is_one() const { return one_; }

 private:
  RenyiOrder(double alpha, bool one) : alpha_(alpha), one_(one) {}
  double alpha_;
  bool one_;
};

}  // namespace indtest
