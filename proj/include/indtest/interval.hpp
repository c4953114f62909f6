#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <stdexcept>
#include <string>

namespace indtest {

// Directed-rounded [lo, hi] enclosure of a real number. Every operation
// rounds lo down and hi up, so the exact result of the operation on any
// members of the inputs lies inside the output. Endpoints may be +-inf.
class IntervalScalar {
 public:
  explicit IntervalScalar(mpfr_prec_t prec = 64) : prec_(prec) {
    mpfr_init2(lo_, prec_);
    mpfr_init2(hi_, prec_);
    mpfr_set_zero(lo_, 1);
    mpfr_set_zero(hi_, 1);
  }

  IntervalScalar(const IntervalScalar& o) : prec_(o.prec_) {
    mpfr_init2(lo_, prec_);
    mpfr_init2(hi_, prec_);
    mpfr_set(lo_, o.lo_, MPFR_RNDD);
    mpfr_set(hi_, o.hi_, MPFR_RNDU);
  }

  IntervalScalar(IntervalScalar&& o) noexcept : prec_(o.prec_) {
    mpfr_init2(lo_, prec_);
    mpfr_init2(hi_, prec_);
    mpfr_swap(lo_, o.lo_);
    mpfr_swap(hi_, o.hi_);
  }

  IntervalScalar& operator=(IntervalScalar o) noexcept {
    std::swap(prec_, o.prec_);
    mpfr_swap(lo_, o.lo_);
    mpfr_swap(hi_, o.hi_);
    return *this;
  }

  ~IntervalScalar() {
    mpfr_clear(lo_);
    mpfr_clear(hi_);
  }

  static IntervalScalar from_rational(const mpq_class& q, mpfr_prec_t prec) {
    IntervalScalar r(prec);
    mpfr_set_q(r.lo_, q.get_mpq_t(), MPFR_RNDD);
    mpfr_set_q(r.hi_, q.get_mpq_t(), MPFR_RNDU);
    return r;
  }

  // Doubles are binary rationals, so this is an exact point interval.
  static IntervalScalar from_double(double d, mpfr_prec_t prec) {
    IntervalScalar r(prec);
    mpfr_set_d(r.lo_, d, MPFR_RNDD);
    mpfr_set_d(r.hi_, d, MPFR_RNDU);
    return r;
  }

  static IntervalScalar from_long(long v, mpfr_prec_t prec) {
    IntervalScalar r(prec);
    mpfr_set_si(r.lo_, v, MPFR_RNDD);
    mpfr_set_si(r.hi_, v, MPFR_RNDU);
    return r;
  }

  static IntervalScalar neg_infinity(mpfr_prec_t prec) {
    IntervalScalar r(prec);
    mpfr_set_inf(r.lo_, -1);
    mpfr_set_inf(r.hi_, -1);
    return r;
  }

  mpfr_prec_t prec() const { return prec_; }
  const __mpfr_struct* lo() const { return lo_; }
  const __mpfr_struct* hi() const { return hi_; }
  double lo_d() const { return mpfr_get_d(lo_, MPFR_RNDD); }
  double hi_d() const { return mpfr_get_d(hi_, MPFR_RNDU); }

  bool valid() const { return mpfr_cmp(lo_, hi_) <= 0 && !mpfr_nan_p(lo_) && !mpfr_nan_p(hi_); }
  bool is_neg_infinity() const { return mpfr_inf_p(hi_) && mpfr_sgn(hi_) < 0; }
  bool contains_zero() const { return mpfr_sgn(lo_) <= 0 && mpfr_sgn(hi_) >= 0; }
  bool strictly_positive() const { return mpfr_sgn(lo_) > 0; }

  // Comparisons against exact rationals act on the certified endpoint.
  bool lo_at_least(const mpq_class& q) const { return mpfr_cmp_q(lo_, q.get_mpq_t()) >= 0; }
  bool hi_at_most(const mpq_class& q) const { return mpfr_cmp_q(hi_, q.get_mpq_t()) <= 0; }

  // Largest rational certainly below the interval (the lo endpoint, exactly).
  mpq_class lo_rational() const {
    if (!mpfr_number_p(lo_)) throw std::domain_error("interval: non-finite lo endpoint");
    mpq_class q;
    mpfr_get_q(q.get_mpq_t(), lo_);
    return q;
  }
  mpq_class hi_rational() const {
    if (!mpfr_number_p(hi_)) throw std::domain_error("interval: non-finite hi endpoint");
    mpq_class q;
    mpfr_get_q(q.get_mpq_t(), hi_);
    return q;
  }

  std::string str() const;

  friend IntervalScalar operator+(const IntervalScalar& a, const IntervalScalar& b);
  friend IntervalScalar operator-(const IntervalScalar& a, const IntervalScalar& b);
  friend IntervalScalar operator*(const IntervalScalar& a, const IntervalScalar& b);
  friend IntervalScalar operator/(const IntervalScalar& a, const IntervalScalar& b);
  friend IntervalScalar neg(const IntervalScalar& a);
  friend IntervalScalar log(const IntervalScalar& a);
  friend IntervalScalar exp(const IntervalScalar& a);
  // x^r for x >= 0 and r with r.lo > 0, via exp(r log x); 0^r = 0.
  friend IntervalScalar pow(const IntervalScalar& x, const IntervalScalar& r);
  friend IntervalScalar min(const IntervalScalar& a, const IntervalScalar& b);
  friend IntervalScalar hull(const IntervalScalar& a, const IntervalScalar& b);

 private:
  mpfr_prec_t prec_;
  mpfr_t lo_, hi_;
};

}  // namespace indtest
