#include <omp.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "indtest/certify.hpp"
#include "indtest/divergence.hpp"
#include "indtest/exponents.hpp"
#include "indtest/hypotests.hpp"
#include "indtest/pmf_io.hpp"
#include "indtest/rational.hpp"
#include "indtest/simulate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitBudget = 4;
constexpr int kExitUsage = 64;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The 3x3 distribution of the worked example: 1/10000 on the diagonal,
// 9997/60000 off it. The published reference values below are exact dyadics.
indtest::RationalPmf example1_pmf() {
  mpq_class g(9997, 60000), d(1, 10000);
  return indtest::RationalPmf::joint(3, 3, {d, g, g, g, d, g, g, g, d});
}

mpq_class dyadic(const std::string& numerator, int log2_denominator) {
  mpq_class q{mpz_class(numerator), mpz_class(1) << log2_denominator};
  q.canonicalize();
  return q;
}

const mpq_class kExampleEq1 = dyadic("3898", 17);
const mpq_class kExampleEq2 = dyadic("3984", 17);
const mpq_class kExampleEqMid = dyadic("3941", 17);
const mpq_class kExampleClaim1 = dyadic("58593464420737815", 56);
const mpq_class kExampleClaim2 = dyadic("58382556630811219", 56);
const mpq_class kExampleTarget = dyadic("58488010525784883", 56);

mpq_class parse_rational_arg(const std::string& s, const std::string& name) {
  auto q = indtest::parse_rational(s);
  if (!q) throw InputError("cannot parse " + name + " as a rational: " + s);
  return *q;
}

indtest::RationalPmf load_rational_pmf(const std::string& path, const std::string& preset) {
  if (!preset.empty()) {
    if (preset != "example1") throw InputError("unknown preset: " + preset);
    return example1_pmf();
  }
  if (path.empty()) throw InputError("either --p or --preset is required");
  try {
    return indtest::read_rational_pmf_file(path);
  } catch (const std::exception& e) {
    throw InputError(std::string("reading ") + path + ": " + e.what());
  }
}

indtest::Pmf load_pmf(const std::string& path, const std::string& preset) {
  if (!preset.empty() || path.empty())
    return indtest::to_double(load_rational_pmf(path, preset));
  try {
    return indtest::read_pmf_file(path);
  } catch (const std::exception& e) {
    throw InputError(std::string("reading ") + path + ": " + e.what());
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open output file " + path);
  return out;
}

// All reports go to --output when given, stdout otherwise.
struct Report {
  explicit Report(const std::string& path) {
    if (!path.empty()) file = open_output(path);
  }
  std::ostream& os() { return file ? static_cast<std::ostream&>(*file) : std::cout; }
  std::optional<std::ofstream> file;
};

std::vector<std::int64_t> parse_n_grid(const std::string& s) {
  std::vector<std::int64_t> grid;
  std::string spec = s;
  if (spec.find(':') != std::string::npos) {
    std::int64_t lo, hi, step;
    char c1, c2;
    std::istringstream is(spec);
    if (!(is >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0)
      throw InputError("bad --n-grid, expected lo:hi:step or a comma list");
    for (std::int64_t n = lo; n <= hi; n += step) grid.push_back(n);
  } else {
    for (auto& c : spec)
      if (c == ',') c = ' ';
    std::istringstream is(spec);
    std::int64_t n;
    while (is >> n) grid.push_back(n);
  }
  if (grid.empty()) throw InputError("empty --n-grid");
  return grid;
}

// ---------------------------------------------------------------------------

struct GlobalOptions {
  int threads = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int precision_bits = 256;
  std::string output;
};

int cmd_divergence(const GlobalOptions& g, const std::string& p_path,
                   const std::string& preset, const std::string& q_path,
                   const std::vector<double>& alphas) {
  indtest::Pmf p = load_pmf(p_path, preset);
  Report rep(g.output);
  auto& os = rep.os();
  os.precision(15);
  if (!q_path.empty()) {
    indtest::Pmf q = load_pmf(q_path, "");
    os << "kl_divergence " << indtest::kl_divergence(p, q) << "\n";
    for (double a : alphas)
      os << "renyi_divergence alpha=" << a << " "
         << indtest::renyi_divergence(p, q, indtest::RenyiOrder::of(a)) << "\n";
  }
  if (p.is_joint()) {
    os << "mutual_information " << indtest::mutual_information(p) << "\n";
    for (double a : alphas)
      if (a <= 1.0)
        os << "j_alpha alpha=" << a << " "
           << indtest::j_alpha(p, indtest::RenyiOrder::of(a)) << "\n";
  }
  return kExitOk;
}

int cmd_exponent(const GlobalOptions& g, const std::string& p_path, const std::string& preset,
                 const std::string& eq_str, const std::string& ep_str, int starts,
                 const std::string& witness_out) {
  if (eq_str.empty() == ep_str.empty())
    throw InputError("exactly one of --e-q or --e-p is required");
  indtest::Pmf p = load_pmf(p_path, preset);
  indtest::SolveOptions opts;
  if (starts > 0) opts.starts = starts;
  if (g.seed_set) opts.seed = g.seed;
  Report rep(g.output);
  auto& os = rep.os();
  os.precision(17);

  bool primal_is_ep = !eq_str.empty();
  mpq_class arg = parse_rational_arg(primal_is_ep ? eq_str : ep_str,
                                     primal_is_ep ? "--e-q" : "--e-p");
  double argd = mpq_get_d(arg.get_mpq_t());
  indtest::ExponentEstimate est =
      primal_is_ep ? indtest::ep_of_eq(p, argd, opts) : indtest::eq_of_ep(p, argd, opts);
  double dual = primal_is_ep ? indtest::ep_biconjugate(p, argd) : indtest::eq_biconjugate(p, argd);
  os << (primal_is_ep ? "ep_of_eq" : "eq_of_ep") << " " << est.value << "\n";
  os << "dual_lower " << dual << "\n";
  os << "gap " << est.value - dual << "\n";
  if (std::isinf(est.value)) {
    std::cerr << "infeasible: the requested exponent is +inf\n";
    return kExitInfeasible;
  }
  if (!witness_out.empty()) {
    if (!est.witness) throw InfeasibleError("no witness available");
    auto out = open_output(witness_out);
    indtest::write_pmf(out, *est.witness);
  }
  return kExitOk;
}

int cmd_test(const GlobalOptions& g, const std::string& p_path, const std::string& preset,
             const std::string& samples_path, const std::string& ep_str,
             const std::string& eq_str, double epsilon) {
  indtest::Pmf p = load_pmf(p_path, preset);
  auto samples = indtest::read_samples_file(samples_path);
  indtest::ExponentPair pair{mpq_get_d(parse_rational_arg(ep_str, "--e-p").get_mpq_t()),
                             mpq_get_d(parse_rational_arg(eq_str, "--e-q").get_mpq_t())};
  indtest::SolveOptions sopts;
  if (g.seed_set) sopts.seed = g.seed;
  if (epsilon <= 0.0) epsilon = indtest::epsilon_margin(p, pair, sopts);
  indtest::TestConfig cfg(pair, epsilon, p);
  auto type = indtest::empirical_type(samples, p.nx(), p.ny());
  auto emi = indtest::emi_test(type, cfg);
  auto hoe = indtest::hoeffding_test(type, cfg);
  auto glr = indtest::glrt_test(type, cfg);
  Report rep(g.output);
  auto& os = rep.os();
  os.precision(15);
  os << "n " << type.n() << "\nepsilon " << epsilon << "\n";
  os << "emi " << emi.decision << " statistic " << emi.statistic << "\n";
  os << "hoeffding " << hoe.decision << " statistic " << hoe.statistic << "\n";
  os << "glrt " << glr.decision << " statistic " << glr.statistic << "\n";
  return kExitOk;
}

int cmd_simulate(const GlobalOptions& g, const std::string& p_path, const std::string& preset,
                 const std::string& ep_str, const std::string& eq_str, double epsilon,
                 const std::string& n_grid, std::int64_t trials, const std::string& which,
                 const std::string& alt_qx, const std::string& alt_qy) {
  indtest::Pmf p = load_pmf(p_path, preset);
  indtest::ExponentPair pair{mpq_get_d(parse_rational_arg(ep_str, "--e-p").get_mpq_t()),
                             mpq_get_d(parse_rational_arg(eq_str, "--e-q").get_mpq_t())};
  indtest::SolveOptions sopts;
  if (g.seed_set) sopts.seed = g.seed;
  if (epsilon <= 0.0) epsilon = indtest::epsilon_margin(p, pair, sopts);
  indtest::TestConfig cfg(pair, epsilon, p);

  indtest::SimPlan plan{.null_pmf = p};
  plan.n_grid = parse_n_grid(n_grid);
  plan.trials = trials;
  plan.seed = g.seed_set ? g.seed : 0x5eedu;
  if (alt_qx.empty() != alt_qy.empty())
    throw InputError("--alt-qx and --alt-qy must be given together");
  if (!alt_qx.empty()) {
    plan.alternatives.emplace_back(load_pmf(alt_qx, ""), load_pmf(alt_qy, ""));
  } else {
    auto [px, py] = indtest::marginals(p);
    plan.alternatives.emplace_back(px, py);
  }

  std::vector<indtest::TestKind> kinds;
  if (which == "all")
    kinds = {indtest::TestKind::Emi, indtest::TestKind::Hoeffding, indtest::TestKind::Glrt};
  else if (which == "emi")
    kinds = {indtest::TestKind::Emi};
  else if (which == "hoeffding")
    kinds = {indtest::TestKind::Hoeffding};
  else if (which == "glrt")
    kinds = {indtest::TestKind::Glrt};
  else
    throw InputError("--test must be emi, hoeffding, glrt, or all");

  Report rep(g.output);
  for (auto k : kinds) {
    auto curve = indtest::run_plan(plan, cfg, k);
    indtest::write_error_curve(rep.os(), curve, cfg, p.nx() * p.ny());
  }
  return kExitOk;
}

int cmd_certify_lower(const GlobalOptions& g, const std::string& p_path,
                      const std::string& preset, std::string eq_str, std::string target_str,
                      std::uint64_t budget, int alpha_grid, int progress) {
  indtest::RationalPmf p = load_rational_pmf(p_path, preset);
  if (preset == "example1") {
    if (eq_str.empty()) eq_str = indtest::rational_string(kExampleEqMid);
    if (target_str.empty()) target_str = indtest::rational_string(kExampleTarget);
  }
  mpq_class e_q = parse_rational_arg(eq_str, "--e-q");
  mpq_class target = parse_rational_arg(target_str, "--target");

  indtest::BranchAndBoundOptions opts;
  opts.budget = budget;
  if (alpha_grid > 0) opts.alpha_grid = alpha_grid;
  opts.progress_every = progress;
  opts.keep_records = false;
  opts.trace_path = g.output.empty() ? "lower_certificate.jsonl" : g.output;
  auto res = indtest::branch_and_bound(p, e_q, target, opts);
  std::cout << "certified " << (res.certified ? "yes" : "no") << "\n";
  std::cout << "boxes_processed " << res.boxes_processed << "\n";
  std::cout << "leaves " << res.certificate.box_count << "\n";
  std::cout << "certificate " << opts.trace_path << "\n";
  if (!res.certified)
    throw BudgetError("budget exhausted with " + std::to_string(res.frontier.size()) +
                      " boxes unresolved; frontier written to " + opts.trace_path);
  return kExitOk;
}

int cmd_certify_upper(const GlobalOptions& g, const std::string& p_path,
                      const std::string& preset, std::string eq_str, std::string claim_str,
                      const std::string& witness_path) {
  indtest::RationalPmf p = load_rational_pmf(p_path, preset);
  if (preset == "example1") {
    if (eq_str.empty()) eq_str = indtest::rational_string(kExampleEq1);
    if (claim_str.empty()) claim_str = indtest::rational_string(kExampleClaim1);
  }
  mpq_class e_q = parse_rational_arg(eq_str, "--e-q");
  mpq_class claim = parse_rational_arg(claim_str, "--claim");
  indtest::RationalPmf r = witness_path.empty()
                               ? indtest::refine_witness(p, e_q, g.precision_bits)
                               : indtest::read_rational_pmf_file(witness_path);
  auto cert = indtest::verify_upper_bound(p, r, e_q, claim, g.precision_bits);
  if (!cert) throw InfeasibleError("witness fails the interval checks against the claim");
  std::string path = g.output.empty() ? "upper_certificate.jsonl" : g.output;
  indtest::write_certificate(*cert, path);
  std::cout << "certified yes\ncertificate " << path << "\n";
  return kExitOk;
}

int cmd_certify_nonconvexity(const GlobalOptions& g, const std::string& p_path,
                             const std::string& preset, std::uint64_t budget, int progress) {
  if (!preset.empty() && preset != "example1") throw InputError("unknown preset: " + preset);
  indtest::RationalPmf p = load_rational_pmf(p_path, preset.empty() ? "example1" : preset);

  auto upper = [&](const mpq_class& e_q, const mpq_class& claim) {
    indtest::RationalPmf r = indtest::refine_witness(p, e_q, g.precision_bits);
    auto cert = indtest::verify_upper_bound(p, r, e_q, claim, g.precision_bits);
    if (!cert)
      throw InfeasibleError("upper-bound witness at e_q = " + indtest::rational_string(e_q) +
                            " fails the interval checks");
    return *cert;
  };
  std::cout << "verifying upper bound at e_q = " << indtest::rational_string(kExampleEq1)
            << "\n";
  auto up1 = upper(kExampleEq1, kExampleClaim1);
  std::cout << "verifying upper bound at e_q = " << indtest::rational_string(kExampleEq2)
            << "\n";
  auto up2 = upper(kExampleEq2, kExampleClaim2);

  std::string base = g.output.empty() ? "nonconvexity_certificate" : g.output;
  indtest::BranchAndBoundOptions opts;
  opts.budget = budget;
  opts.keep_records = false;
  opts.progress_every = progress;
  opts.trace_path = base + ".lower.jsonl";
  std::cout << "running branch and bound at the midpoint e_q = "
            << indtest::rational_string(kExampleEqMid) << "\n";
  auto res = indtest::branch_and_bound(p, kExampleEqMid, kExampleTarget, opts);
  std::cout << "lower bound: certified " << (res.certified ? "yes" : "no") << ", "
            << res.boxes_processed << " boxes processed, " << res.certificate.box_count
            << " leaves\n";
  if (!res.certified)
    throw BudgetError("lower-bound budget exhausted; frontier written to " + opts.trace_path);

  auto composite =
      indtest::nonconvexity_certificate(up1, up2, res.certificate);
  std::string path = base + ".jsonl";
  indtest::write_certificate(composite, path);
  std::cout << "gap " << indtest::rational_string(composite.value) << " (~"
            << mpq_get_d(composite.value.get_mpq_t()) << ")\n";
  std::cout << "certificate " << path << "\n";
  std::cout << "lower-bound leaves " << opts.trace_path << "\n";
  return kExitOk;
}

int cmd_certify_check(const GlobalOptions& g, const std::string& p_path,
                      const std::string& preset, const std::string& cert_path,
                      bool recompute) {
  indtest::RationalPmf p = load_rational_pmf(p_path, preset);
  try {
    indtest::check_certificate_file(p, cert_path, recompute);
  } catch (const std::exception& e) {
    std::cerr << "certificate invalid: " << e.what() << "\n";
    return kExitInfeasible;
  }
  std::cout << "certificate valid\n";
  (void)g;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"error-exponent trade-offs for testing against independence"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--threads", g.threads, "OpenMP thread count (0 = default)");
  auto* seed_opt = app.add_option("--seed", g.seed, "random seed");
  app.add_option("--precision-bits", g.precision_bits, "interval/witness precision in bits")
      ->check(CLI::Range(32, 8192));
  app.add_option("--output", g.output, "output file (default: stdout or a default name)");

  std::string p_path, q_path, preset, samples_path, witness_out, witness_in, cert_path;
  std::string eq_str, ep_str, target_str, claim_str, n_grid = "50:400:50", which_test = "all";
  std::string alt_qx, alt_qy;
  std::vector<double> alphas;
  double epsilon = 0.0;
  int starts = 0, alpha_grid = 0, progress = 100000;
  std::int64_t trials = 10000;
  std::uint64_t budget = 5000000;
  bool recompute = false;

  auto add_pmf_opts = [&](CLI::App* c) {
    c->add_option("--p", p_path, "joint PMF file (JSON)");
    c->add_option("--preset", preset, "built-in distribution (example1)");
  };

  auto* div = app.add_subcommand("divergence", "KL/Renyi divergences and dependence measures");
  add_pmf_opts(div);
  div->add_option("--q", q_path, "second PMF file");
  div->add_option("--alpha", alphas, "Renyi orders to evaluate");

  auto* exp = app.add_subcommand("exponent", "error-exponent trade-off values");
  add_pmf_opts(exp);
  exp->add_option("--e-q", eq_str, "compute E_P at this type-II exponent (rational)");
  exp->add_option("--e-p", ep_str, "compute E_Q at this type-I exponent (rational)");
  exp->add_option("--starts", starts, "multistart count");
  exp->add_option("--witness-out", witness_out, "write the optimizing PMF here");

  auto* tst = app.add_subcommand("test", "run the three tests on a sample file");
  add_pmf_opts(tst);
  tst->add_option("--samples", samples_path, "sample file, one 'x y' pair per line")
      ->required();
  tst->add_option("--e-p", ep_str, "type-I exponent")->required();
  tst->add_option("--e-q", eq_str, "type-II exponent")->required();
  tst->add_option("--epsilon", epsilon, "threshold margin (default: achievability margin / 2)");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo error curves with Sanov envelopes");
  add_pmf_opts(sim);
  sim->add_option("--e-p", ep_str, "type-I exponent")->required();
  sim->add_option("--e-q", eq_str, "type-II exponent")->required();
  sim->add_option("--epsilon", epsilon, "threshold margin (default: achievability margin / 2)");
  sim->add_option("--n-grid", n_grid, "sample sizes, lo:hi:step or comma list");
  sim->add_option("--trials", trials, "Monte Carlo trials per point");
  sim->add_option("--test", which_test, "emi, hoeffding, glrt, or all");
  sim->add_option("--alt-qx", alt_qx, "alternative Q_X marginal file");
  sim->add_option("--alt-qy", alt_qy, "alternative Q_Y marginal file");

  auto* cert = app.add_subcommand("certify", "machine-checkable bound certificates");
  cert->require_subcommand(1);
  auto* clo = cert->add_subcommand("lower", "certified lower bound via branch and bound");
  add_pmf_opts(clo);
  clo->add_option("--e-q", eq_str, "type-II exponent (rational)");
  clo->add_option("--target", target_str, "lower bound to certify (rational)");
  clo->add_option("--budget", budget, "maximum number of boxes in the cover");
  clo->add_option("--alpha-grid", alpha_grid, "alpha grid points per box");
  clo->add_option("--progress-every", progress, "progress interval in boxes (0 = silent)");
  auto* cup = cert->add_subcommand("upper", "verified upper bound from a witness");
  add_pmf_opts(cup);
  cup->add_option("--e-q", eq_str, "type-II exponent (rational)");
  cup->add_option("--claim", claim_str, "upper bound to verify (rational)");
  cup->add_option("--witness", witness_in, "rational witness PMF file (default: search)");
  auto* cnc = cert->add_subcommand("nonconvexity", "composite non-convexity certificate");
  add_pmf_opts(cnc);
  cnc->add_option("--budget", budget, "maximum cover size for the lower bound");
  cnc->add_option("--progress-every", progress, "progress interval in boxes (0 = silent)");
  auto* cck = cert->add_subcommand("check", "re-verify a certificate file");
  add_pmf_opts(cck);
  cck->add_option("--certificate", cert_path, "certificate file")->required();
  cck->add_flag("--recompute-bounds", recompute, "re-evaluate every leaf bound (slow)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  g.seed_set = seed_opt->count() > 0;
  if (g.threads > 0) omp_set_num_threads(g.threads);

  try {
    if (div->parsed()) return cmd_divergence(g, p_path, preset, q_path, alphas);
    if (exp->parsed()) return cmd_exponent(g, p_path, preset, eq_str, ep_str, starts, witness_out);
    if (tst->parsed()) return cmd_test(g, p_path, preset, samples_path, ep_str, eq_str, epsilon);
    if (sim->parsed())
      return cmd_simulate(g, p_path, preset, ep_str, eq_str, epsilon, n_grid, trials,
                          which_test, alt_qx, alt_qy);
    if (clo->parsed())
      return cmd_certify_lower(g, p_path, preset, eq_str, target_str, budget, alpha_grid,
                               progress);
    if (cup->parsed()) return cmd_certify_upper(g, p_path, preset, eq_str, claim_str, witness_in);
    if (cnc->parsed()) return cmd_certify_nonconvexity(g, p_path, preset, budget, progress);
    if (cck->parsed()) return cmd_certify_check(g, p_path, preset, cert_path, recompute);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const BudgetError& e) {
    std::cerr << "budget exhausted: " << e.what() << "\n";
    return kExitBudget;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
