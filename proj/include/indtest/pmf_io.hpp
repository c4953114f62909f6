#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "indtest/pmf.hpp"

namespace indtest {

// PMF file format: a JSON object {"shape": [nx, ny] or [m], "mass": [...]}
// where each mass entry is a number or a string holding an exact rational
// ("3/7", "0.25", "1e-3"). Rational reads parse every entry exactly; float
// reads go through double. An optional "backing" field ("float"/"rational")
// documents intent and is validated when present.

Pmf read_pmf(std::istream& in);
Pmf read_pmf_file(const std::string& path);
RationalPmf read_rational_pmf(std::istream& in);
RationalPmf read_rational_pmf_file(const std::string& path);

void write_pmf(std::ostream& out, const Pmf& p);
void write_pmf(std::ostream& out, const RationalPmf& p);
void write_pmf_file(const std::string& path, const Pmf& p);
void write_pmf_file(const std::string& path, const RationalPmf& p);

// Sample files: one "x y" pair per line (0-based symbol indices), blank
// lines and '#' comments ignored.
std::vector<std::pair<int, int>> read_samples(std::istream& in);
std::vector<std::pair<int, int>> read_samples_file(const std::string& path);

}  // namespace indtest
