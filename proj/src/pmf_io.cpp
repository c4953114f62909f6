#include "indtest/pmf_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "indtest/rational.hpp"

namespace indtest {

using nlohmann::json;

namespace {

json parse_stream(std::istream& in) {
  json j;
  in >> j;
  if (!j.is_object() || !j.contains("shape") || !j.contains("mass"))
    throw std::invalid_argument("pmf file: expected an object with \"shape\" and \"mass\"");
  return j;
}

void check_backing(const json& j, const char* want) {
  if (j.contains("backing") && j.at("backing").get<std::string>() != want)
    throw std::invalid_argument(std::string("pmf file: backing mismatch, expected ") + want);
}

mpq_class entry_rational(const json& e) {
  std::string s = e.is_string() ? e.get<std::string>() : e.dump();
  auto q = parse_rational(s);
  if (!q) throw std::invalid_argument("pmf file: cannot parse mass entry " + e.dump());
  return *q;
}

double entry_double(const json& e) {
  if (e.is_number()) return e.get<double>();
  return mpq_get_d(entry_rational(e).get_mpq_t());
}

template <typename T, typename Extract>
BasicPmf<T> read_impl(const json& j, Extract extract) {
  const json& shape = j.at("shape");
  std::vector<T> mass;
  for (const auto& e : j.at("mass")) mass.push_back(extract(e));
  if (shape.size() == 2)
    return BasicPmf<T>::joint(shape.at(0).get<int>(), shape.at(1).get<int>(), std::move(mass));
  if (shape.size() == 1) return BasicPmf<T>::marginal(std::move(mass));
  throw std::invalid_argument("pmf file: shape must have one or two dimensions");
}

template <typename F>
auto with_file_in(const std::string& path, F f) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("pmf file: cannot open " + path);
  return f(in);
}

json shape_json(int nx, int ny, bool joint) {
  return joint ? json::array({nx, ny}) : json::array({nx});
}

}  // namespace

Pmf read_pmf(std::istream& in) {
  json j = parse_stream(in);
  check_backing(j, "float");
  return read_impl<double>(j, entry_double);
}

RationalPmf read_rational_pmf(std::istream& in) {
  json j = parse_stream(in);
  check_backing(j, "rational");
  return read_impl<mpq_class>(j, entry_rational);
}

Pmf read_pmf_file(const std::string& path) {
  return with_file_in(path, [](std::istream& in) { return read_pmf(in); });
}

RationalPmf read_rational_pmf_file(const std::string& path) {
  return with_file_in(path, [](std::istream& in) { return read_rational_pmf(in); });
}

void write_pmf(std::ostream& out, const Pmf& p) {
  json j;
  j["shape"] = shape_json(p.nx(), p.ny(), p.is_joint());
  j["backing"] = "float";
  json mass = json::array();
  for (std::size_t z = 0; z < p.size(); ++z) mass.push_back(p[z]);
  j["mass"] = mass;
  out << j.dump(2) << '\n';
}

void write_pmf(std::ostream& out, const RationalPmf& p) {
  json j;
  j["shape"] = shape_json(p.nx(), p.ny(), p.is_joint());
  j["backing"] = "rational";
  json mass = json::array();
  for (std::size_t z = 0; z < p.size(); ++z) mass.push_back(rational_string(p[z]));
  j["mass"] = mass;
  out << j.dump(2) << '\n';
}

namespace {
template <typename P>
void write_file_impl(const std::string& path, const P& p) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("pmf file: cannot open " + path);
  write_pmf(out, p);
}
}  // namespace

void write_pmf_file(const std::string& path, const Pmf& p) { write_file_impl(path, p); }
void write_pmf_file(const std::string& path, const RationalPmf& p) { write_file_impl(path, p); }

std::vector<std::pair<int, int>> read_samples(std::istream& in) {
  std::vector<std::pair<int, int>> samples;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    int x, y;
    if (!(ls >> x)) continue;  // blank or comment-only line
    if (!(ls >> y)) throw std::invalid_argument("sample file: line with a single value: " + line);
    samples.emplace_back(x, y);
  }
  return samples;
}

std::vector<std::pair<int, int>> read_samples_file(const std::string& path) {
  return with_file_in(path, [](std::istream& in) { return read_samples(in); });
}

}  // namespace indtest
