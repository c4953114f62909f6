#include "indtest/rational.hpp"

#include <cctype>
#include <cstdlib>

namespace indtest {

namespace {

bool is_integer_token(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

}  // namespace

std::optional<mpq_class> parse_rational(const std::string& s) {
  if (s.empty()) return std::nullopt;

  auto slash = s.find('/');
  if (slash != std::string::npos) {
    std::string num = s.substr(0, slash);
    std::string den = s.substr(slash + 1);
    if (!is_integer_token(num) || !is_integer_token(den)) return std::nullopt;
    mpq_class q;
    if (q.set_str(s, 10) != 0) return std::nullopt;
    if (q.get_den() == 0) return std::nullopt;
    q.canonicalize();
    return q;
  }

  // Decimal form: [sign] digits [. digits] [e|E exponent].
  std::string mantissa = s;
  long exp10 = 0;
  auto e = s.find_first_of("eE");
  if (e != std::string::npos) {
    mantissa = s.substr(0, e);
    std::string exp_str = s.substr(e + 1);
    if (!is_integer_token(exp_str)) return std::nullopt;
    exp10 = std::strtol(exp_str.c_str(), nullptr, 10);
  }

  std::string digits = mantissa;
  auto dot = mantissa.find('.');
  if (dot != std::string::npos) {
    digits = mantissa.substr(0, dot) + mantissa.substr(dot + 1);
    exp10 -= static_cast<long>(mantissa.size() - dot - 1);
  }
  if (!is_integer_token(digits)) return std::nullopt;

  mpq_class q;
  if (q.set_str(digits, 10) != 0) return std::nullopt;
  mpz_class pow10;
  mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exp10)));
  if (exp10 >= 0)
    q *= mpq_class(pow10);
  else
    q /= mpq_class(pow10);
  q.canonicalize();
  return q;
}

std::string rational_string(const mpq_class& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

}  // namespace indtest
