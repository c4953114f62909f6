#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>

namespace indtest {

// Parses an exact rational from "a/b", an integer, or a decimal string
// ("0.25", "1e-4", "-3.5e2"). Decimals are converted through their decimal
// fraction, so "0.1" becomes 1/10 exactly. Returns nullopt on malformed input.
std::optional<mpq_class> parse_rational(const std::string& s);

// Canonical "a/b" form ("a" when the denominator is 1).
std::string rational_string(const mpq_class& q);

}  // namespace indtest
