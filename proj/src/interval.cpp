#include "indtest/interval.hpp"

#include <algorithm>

namespace indtest {

namespace {

// Directed product handling the 0 * inf convention: the enclosure of
// {x*y} with an exact zero endpoint is zero regardless of the other factor.
void mul_dir(mpfr_t out, const mpfr_t a, const mpfr_t b, mpfr_rnd_t rnd) {
  if (mpfr_zero_p(a) || mpfr_zero_p(b)) {
    mpfr_set_zero(out, 1);
    return;
  }
  mpfr_mul(out, a, b, rnd);
}

}  // namespace

IntervalScalar operator+(const IntervalScalar& a, const IntervalScalar& b) {
  IntervalScalar r(std::max(a.prec_, b.prec_));
  mpfr_add(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
  mpfr_add(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
  return r;
}

IntervalScalar operator-(const IntervalScalar& a, const IntervalScalar& b) {
  IntervalScalar r(std::max(a.prec_, b.prec_));
  mpfr_sub(r.lo_, a.lo_, b.hi_, MPFR_RNDD);
  mpfr_sub(r.hi_, a.hi_, b.lo_, MPFR_RNDU);
  return r;
}

IntervalScalar neg(const IntervalScalar& a) {
  IntervalScalar r(a.prec_);
  mpfr_neg(r.lo_, a.hi_, MPFR_RNDD);
  mpfr_neg(r.hi_, a.lo_, MPFR_RNDU);
  return r;
}

IntervalScalar operator*(const IntervalScalar& a, const IntervalScalar& b) {
  IntervalScalar r(std::max(a.prec_, b.prec_));
  mpfr_t t;
  mpfr_init2(t, r.prec_);
  // lo = min of the four directed-down products.
  mul_dir(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
  mul_dir(t, a.lo_, b.hi_, MPFR_RNDD);
  mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
  mul_dir(t, a.hi_, b.lo_, MPFR_RNDD);
  mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
  mul_dir(t, a.hi_, b.hi_, MPFR_RNDD);
  mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
  // hi = max of the four directed-up products.
  mul_dir(r.hi_, a.lo_, b.lo_, MPFR_RNDU);
  mul_dir(t, a.lo_, b.hi_, MPFR_RNDU);
  mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
  mul_dir(t, a.hi_, b.lo_, MPFR_RNDU);
  mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
  mul_dir(t, a.hi_, b.hi_, MPFR_RNDU);
  mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
  mpfr_clear(t);
  return r;
}

IntervalScalar operator/(const IntervalScalar& a, const IntervalScalar& b) {
  if (b.contains_zero()) throw std::domain_error("interval: division by interval containing 0");
  IntervalScalar r(std::max(a.prec_, b.prec_));
  mpfr_t t;
  mpfr_init2(t, r.prec_);
  mpfr_div(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
  mpfr_div(t, a.lo_, b.hi_, MPFR_RNDD);
  mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
  mpfr_div(t, a.hi_, b.lo_, MPFR_RNDD);
  mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
  mpfr_div(t, a.hi_, b.hi_, MPFR_RNDD);
  mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
  mpfr_div(r.hi_, a.lo_, b.lo_, MPFR_RNDU);
  mpfr_div(t, a.lo_, b.hi_, MPFR_RNDU);
  mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
  mpfr_div(t, a.hi_, b.lo_, MPFR_RNDU);
  mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
  mpfr_div(t, a.hi_, b.hi_, MPFR_RNDU);
  mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
  mpfr_clear(t);
  return r;
}

IntervalScalar log(const IntervalScalar& a) {
  if (mpfr_sgn(a.lo_) < 0) throw std::domain_error("interval: log of negative");
  IntervalScalar r(a.prec_);
  if (mpfr_zero_p(a.lo_))
    mpfr_set_inf(r.lo_, -1);
  else
    mpfr_log(r.lo_, a.lo_, MPFR_RNDD);
  if (mpfr_zero_p(a.hi_))
    mpfr_set_inf(r.hi_, -1);
  else
    mpfr_log(r.hi_, a.hi_, MPFR_RNDU);
  return r;
}

IntervalScalar exp(const IntervalScalar& a) {
  IntervalScalar r(a.prec_);
  mpfr_exp(r.lo_, a.lo_, MPFR_RNDD);
  mpfr_exp(r.hi_, a.hi_, MPFR_RNDU);
  return r;
}

IntervalScalar pow(const IntervalScalar& x, const IntervalScalar& r) {
  if (mpfr_sgn(x.lo_) < 0) throw std::domain_error("interval: pow of negative base");
  if (mpfr_sgn(r.lo_) <= 0) throw std::domain_error("interval: pow requires positive exponent");
  if (mpfr_zero_p(x.hi_)) {
    IntervalScalar z(std::max(x.prec_, r.prec_));
    return z;  // [0,0]
  }
  return exp(r * log(x));
}

IntervalScalar min(const IntervalScalar& a, const IntervalScalar& b) {
  IntervalScalar r(std::max(a.prec_, b.prec_));
  mpfr_min(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
  mpfr_min(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
  return r;
}

IntervalScalar hull(const IntervalScalar& a, const IntervalScalar& b) {
  IntervalScalar r(std::max(a.prec_, b.prec_));
  mpfr_min(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
  mpfr_max(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
  return r;
}

std::string IntervalScalar::str() const {
  mpfr_exp_t e;
  char* ls = mpfr_get_str(nullptr, &e, 10, 20, lo_, MPFR_RNDD);
  std::string out = "[";
  out += ls ? ls : "?";
  mpfr_free_str(ls);
  out += "e" + std::to_string(e) + ", ";
  char* hs = mpfr_get_str(nullptr, &e, 10, 20, hi_, MPFR_RNDU);
  out += hs ? hs : "?";
  mpfr_free_str(hs);
  out += "e" + std::to_string(e) + "]";
  return out;
}

}  // namespace indtest
