#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <utility>

namespace indtest {

// Minimal RAII wrapper over an mpfr_t with round-to-nearest semantics; used
// for high-precision (non-certified) computation such as witness polishing.
// Precision is set per value; binary ops take the max operand precision.
class MpReal {
 public:
  explicit MpReal(mpfr_prec_t prec = 128) : prec_(prec) {
    mpfr_init2(v_, prec_);
    mpfr_set_zero(v_, 1);
  }
  MpReal(double d, mpfr_prec_t prec) : prec_(prec) {
    mpfr_init2(v_, prec_);
    mpfr_set_d(v_, d, MPFR_RNDN);
  }
  MpReal(const mpq_class& q, mpfr_prec_t prec) : prec_(prec) {
    mpfr_init2(v_, prec_);
    mpfr_set_q(v_, q.get_mpq_t(), MPFR_RNDN);
  }
  MpReal(const MpReal& o) : prec_(o.prec_) {
    mpfr_init2(v_, prec_);
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  MpReal(MpReal&& o) noexcept : prec_(o.prec_) {
    mpfr_init2(v_, prec_);
    mpfr_swap(v_, o.v_);
  }
  MpReal& operator=(MpReal o) noexcept {
    std::swap(prec_, o.prec_);
    mpfr_swap(v_, o.v_);
    return *this;
  }
  ~MpReal() { mpfr_clear(v_); }

  mpfr_prec_t prec() const { return prec_; }
  mpfr_srcptr raw() const { return v_; }
  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  mpq_class to_rational() const {
    mpq_class q;
    mpfr_get_q(q.get_mpq_t(), v_);
    return q;
  }
  bool is_positive() const { return mpfr_sgn(v_) > 0; }
  int sign() const { return mpfr_sgn(v_); }

  friend MpReal operator+(const MpReal& a, const MpReal& b) {
    return binary(a, b, mpfr_add);
  }
  friend MpReal operator-(const MpReal& a, const MpReal& b) {
    return binary(a, b, mpfr_sub);
  }
  friend MpReal operator*(const MpReal& a, const MpReal& b) {
    return binary(a, b, mpfr_mul);
  }
  friend MpReal operator/(const MpReal& a, const MpReal& b) {
    return binary(a, b, mpfr_div);
  }
  friend MpReal operator-(const MpReal& a) {
    MpReal r(a.prec_);
    mpfr_neg(r.v_, a.v_, MPFR_RNDN);
    return r;
  }
  friend bool operator<(const MpReal& a, const MpReal& b) { return mpfr_cmp(a.v_, b.v_) < 0; }
  friend bool operator>(const MpReal& a, const MpReal& b) { return mpfr_cmp(a.v_, b.v_) > 0; }
  friend bool operator<=(const MpReal& a, const MpReal& b) { return mpfr_cmp(a.v_, b.v_) <= 0; }
  friend bool operator>=(const MpReal& a, const MpReal& b) { return mpfr_cmp(a.v_, b.v_) >= 0; }

  friend MpReal log(const MpReal& a) {
    MpReal r(a.prec_);
    mpfr_log(r.v_, a.v_, MPFR_RNDN);
    return r;
  }
  friend MpReal exp(const MpReal& a) {
    MpReal r(a.prec_);
    mpfr_exp(r.v_, a.v_, MPFR_RNDN);
    return r;
  }
  friend MpReal pow(const MpReal& a, const MpReal& b) { return binary(a, b, mpfr_pow); }
  friend MpReal abs(const MpReal& a) {
    MpReal r(a.prec_);
    mpfr_abs(r.v_, a.v_, MPFR_RNDN);
    return r;
  }

 private:
  using BinaryFn = int (*)(mpfr_ptr, mpfr_srcptr, mpfr_srcptr, mpfr_rnd_t);
  static MpReal binary(const MpReal& a, const MpReal& b, BinaryFn fn) {
    MpReal r(std::max(a.prec_, b.prec_));
    fn(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }

  mpfr_prec_t prec_;
  mpfr_t v_;
};

}  // namespace indtest
