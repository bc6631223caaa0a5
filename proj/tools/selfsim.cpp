// selfsim: command-line front end for the self-similar measure toolkit.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "selfsim/io.hpp"
#include "selfsim/selfsim.hpp"

namespace {

using namespace selfsim;
using io::json;

enum ExitCode : int { kOk = 0, kFailure = 1, kBudget = 2, kUsage = 64 };

struct Common {
  std::string lambda;
  std::string digits = "-1,1";
  std::string p;
  std::string ifs_path;
  std::string config;
  std::string format = "json";
  std::string out;
  unsigned workers = 0;
  std::uint64_t seed = 0;
  double budget = 0.0;  ///< 0: per-command default
};

IFSDescriptor resolve_ifs(const Common& c) {
  if (!c.ifs_path.empty()) {
    std::ifstream in(c.ifs_path);
    if (!in) throw DomainError("cannot open IFS file " + c.ifs_path);
    return io::ifs_from_json(json::parse(in));
  }
  if (c.lambda.empty()) throw DomainError("an IFS is required: pass --lambda (with --digits/--p) or --ifs");
  auto digits = io::parse_complex_list(c.digits);
  const ProbabilityVector probs =
      c.p.empty() ? ProbabilityVector::uniform(digits.size()) : ProbabilityVector(io::parse_real_list(c.p));
  return IFSDescriptor(io::parse_complex(c.lambda), std::move(digits), probs);
}

std::size_t budget_or(const Common& c, double fallback) {
  const double b = c.budget > 0.0 ? c.budget : fallback;
  return static_cast<std::size_t>(b);
}

// FNV-1a over the sorted option values, ignoring options that do not change results.
std::uint64_t config_hash(const CLI::App& app) {
  std::map<std::string, std::string> entries;
  const CLI::App* cur = &app;
  std::string path;
  while (cur != nullptr) {
    path += cur->get_name() + "/";
    for (const CLI::Option* opt : cur->get_options()) {
      const std::string name = opt->get_name();
      if (name == "--workers" || name == "--out" || name == "--config" || name == "--help" || name.empty()) continue;
      std::string value;
      if (opt->count() > 0)
        for (const auto& r : opt->reduced_results()) value += r + "\x1f";
      else
        value = "<default>";
      entries[path + name] = value;
    }
    const auto subs = cur->get_subcommands();
    cur = subs.empty() ? nullptr : subs.front();
  }
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& [k, v] : entries)
    for (char ch : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ULL;
    }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

struct Output {
  std::string tool_path;
  std::string hash;
  std::uint64_t seed = 0;

  json meta() const { return {{"tool", "selfsim"}, {"version", kVersion}, {"command", tool_path}, {"config_hash", hash}, {"seed", seed}}; }

  std::string csv_preamble() const {
    return "# tool=selfsim version=" + std::string(kVersion) + " command=" + tool_path + " config_hash=" + hash +
           " seed=" + std::to_string(seed) + "\n";
  }
};

void emit(const Common& c, const std::string& payload) {
  if (c.out.empty()) {
    std::cout << payload;
    std::cout.flush();
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw DomainError("cannot open output file " + c.out);
  f << payload;
}

json bound_json(const DecayBound& b) {
  return {{"regime", to_string(b.regime)}, {"lambda_modulus", b.lambda_modulus}, {"epsilon", b.epsilon},
          {"epsilon_tilde", b.epsilon_tilde}, {"rho", b.rho}, {"eta", b.eta}, {"entropy", b.entropy},
          {"delta", b.delta}, {"branching", b.branching}, {"valid", b.valid}, {"reason", b.reason}};
}

json dimension_bound_json(const DimensionBound& d) {
  return {{"lambda", io::complex_json(d.lambda)}, {"p", d.p}, {"unbiased", d.unbiased}, {"N", d.N},
          {"lambda_N_modulus", d.lambda_N_modulus}, {"base_dim2", d.base_dim2}, {"sigma", d.sigma},
          {"epsilon", d.epsilon}, {"kappa", d.kappa}, {"dim2_lower", d.dim2_lower}, {"diminf_lower", d.diminf_lower},
          {"valid", d.valid}, {"reason", d.reason}, {"diminf_valid", d.diminf_valid}, {"diminf_reason", d.diminf_reason},
          {"young_assumption", DimensionBound::young_assumption}, {"bound", bound_json(d.bound)}};
}

json estimate_json(const DimEstimate& e) {
  json rows = json::array();
  for (const auto& r : e.rows) rows.push_back({{"n", r.n}, {"s_n", r.s_n}, {"log_s_n", r.log_s}});
  return {{"q", std::isinf(e.q) ? json("inf") : json(e.q)}, {"dimension", e.slope}, {"stderr", e.stderr_slope},
          {"raw_slope", e.raw_slope}, {"shifted_slope", e.shifted_slope}, {"clamped", e.clamped},
          {"n_min", e.n_min}, {"n_max", e.n_max}, {"requested_n_max", e.requested_n_max},
          {"resolution", e.resolution}, {"levels", rows}};
}

std::string render_json(const Output& o, const json& result) {
  return json{{"meta", o.meta()}, {"result", result}}.dump(2) + "\n";
}

void require_format(const Common& c, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (c.format == a) return;
  throw DomainError("output format '" + c.format + "' is not available for this command");
}

double parse_real_token(const std::string& s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  return io::parse_double(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fourier decay and dimension toolkit for self-similar measures", "selfsim"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common c;
  if (const char* env = std::getenv("SELFSIM_WORKERS")) {
    try {
      c.workers = static_cast<unsigned>(std::stoul(env));
    } catch (...) {
      c.workers = 0;
    }
  }
  app.add_option("--lambda", c.lambda, "contraction ratio, a+bi");
  app.add_option("--digits", c.digits, "comma-separated digits, a+bi each");
  app.add_option("--p", c.p, "comma-separated probabilities (bias for bernoulli)");
  app.add_option("--ifs", c.ifs_path, "IFS JSON document");
  app.add_option("--config", c.config, "JSON file whose keys override flags");
  app.add_option("--format", c.format, "json, csv or bin")->check(CLI::IsMember({"json", "csv", "bin"}));
  app.add_option("--out", c.out, "output file (default stdout)");
  app.add_option("--workers", c.workers, "worker threads (0 = all cores)");
  app.add_option("--seed", c.seed, "random seed");
  app.add_option("--budget", c.budget, "resource budget (atoms, nodes or cells)");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate mu_hat at frequencies")->fallthrough();
  std::string xi_list = "0";
  double eval_tol = 1e-12;
  eval->add_option("--xi", xi_list, "comma-separated frequencies");
  eval->add_option("--tol", eval_tol, "truncation tolerance");

  // scan
  auto* scan = app.add_subcommand("scan", "maxima of |mu_hat| over unit cells of a disk")->fallthrough();
  double scan_T = 16.0;
  int scan_k = 4;
  double scan_tol = 1e-10;
  scan->add_option("--T", scan_T, "disk radius");
  scan->add_option("--k", scan_k, "samples per cell side");
  scan->add_option("--tol", scan_tol, "truncation tolerance");

  // bounds
  auto* bounds = app.add_subcommand("bounds", "explicit decay exponents")->fallthrough();
  double bounds_eps = 0.01;
  double bounds_kappa = 0.0;
  int bounds_dim = 0;
  std::string bounds_sweep;
  bounds->add_option("--epsilon", bounds_eps, "decay-set exponent");
  bounds->add_option("--kappa", bounds_kappa, "solve kappa = 2 eps + delta(eps) instead");
  bounds->add_option("--dim", bounds_dim, "use the d-dimensional simplex bound (d >= 1)");
  bounds->add_option("--sweep", bounds_sweep, "start,stop,count sweep of epsilon (CSV)");

  // ek
  auto* ek = app.add_subcommand("ek", "Erdos-Kahane digit tools")->fallthrough();
  ek->require_subcommand(1);
  auto* ek_trace_cmd = ek->add_subcommand("trace", "digit trace of one frequency")->fallthrough();
  std::string trace_t = "0.3+0.2i";
  int trace_N = 20;
  ek_trace_cmd->add_option("--t", trace_t, "normalized frequency, |t| < 1");
  ek_trace_cmd->add_option("--N", trace_N, "trace length");
  auto* ek_verify = ek->add_subcommand("verify", "check the digit inequality on random frequencies")->fallthrough();
  std::int64_t verify_samples = 10000;
  int verify_N = 20;
  ek_verify->add_option("--samples", verify_samples, "number of random t");
  ek_verify->add_option("--N", verify_N, "trace length");
  auto* ek_enum = ek->add_subcommand("enumerate", "count admissible digit sequences")->fallthrough();
  double enum_eps_tilde = 0.1;
  int enum_N = 8;
  ek_enum->add_option("--eps-tilde", enum_eps_tilde, "allowed fraction of bad indices");
  ek_enum->add_option("--N", enum_N, "sequence length (<= 14)");
  auto* ek_cover = ek->add_subcommand("cover", "covering report at T = |lambda|^-N")->fallthrough();
  double cover_eps = 0.05;
  int cover_N = 12;
  int cover_k = 4;
  double cover_tol = 1e-10;
  ek_cover->add_option("--epsilon", cover_eps, "decay-set exponent");
  ek_cover->add_option("--N", cover_N, "scale index");
  ek_cover->add_option("--k", cover_k, "samples per cell side");
  ek_cover->add_option("--tol", cover_tol, "truncation tolerance");

  // dim
  auto* dim = app.add_subcommand("dim", "dyadic dimension estimates")->fallthrough();
  std::string dim_q = "2";
  int dim_nmin = 2, dim_nmax = 8, dim_depth = 10;
  std::string dim_measure;
  bool dim_alpha = false;
  std::string dim_T = "8,16,32,64";
  double dim_step = 0.2;
  dim->add_option("--q", dim_q, "moment order (> 1, or inf)");
  dim->add_option("--n-min", dim_nmin, "coarsest dyadic level");
  dim->add_option("--n-max", dim_nmax, "finest dyadic level (clamped to the resolution)");
  dim->add_option("--depth", dim_depth, "approximation depth");
  dim->add_option("--measure", dim_measure, "measure CSV (re,im,weight) instead of the IFS");
  dim->add_flag("--alpha", dim_alpha, "also estimate the Fourier-energy exponent");
  dim->add_option("--T", dim_T, "energy radii for --alpha");
  dim->add_option("--step", dim_step, "energy quadrature step");

  // push
  auto* push = app.add_subcommand("push", "decay of push-forwards under a polynomial map")->fallthrough();
  std::string push_map = "0,0,1";
  std::string push_radii = "16,32,64,128,256,512,1024,2048,4096";
  int push_directions = 256, push_depth = 16;
  bool push_affine = false;
  double push_s = -1.0;
  push->add_option("--map", push_map, "polynomial coefficients c0,c1,... (a+bi)");
  push->add_option("--radii", push_radii, "increasing radii");
  push->add_option("--directions", push_directions, "equispaced directions per radius");
  push->add_option("--depth", push_depth, "approximation depth");
  push->add_flag("--allow-affine", push_affine, "accept degree-1 maps");
  push->add_option("--frostman-s", push_s, "Frostman exponent (negative: estimate)");

  // bernoulli
  auto* bern = app.add_subcommand("bernoulli", "dimension lower bounds for complex Bernoulli convolutions")->fallthrough();
  bool bern_unbiased = false;
  bern->add_flag("--unbiased", bern_unbiased, "use the unbiased pipeline");

  // --config: append its keys as trailing flags so they take precedence.
  std::vector<std::string> args(argv + 1, argv + argc);
  for (std::size_t k = 0; k < args.size(); ++k) {
    std::string path;
    if (args[k] == "--config" && k + 1 < args.size()) path = args[k + 1];
    else if (args[k].rfind("--config=", 0) == 0) path = args[k].substr(9);
    if (path.empty()) continue;
    try {
      std::ifstream in(path);
      if (!in) throw DomainError("cannot open config file " + path);
      const json cfg = json::parse(in);
      if (!cfg.is_object()) throw DomainError("config must be a JSON object");
      for (const auto& [key, value] : cfg.items()) {
        std::string text;
        if (value.is_boolean()) {
          if (value.get<bool>()) args.push_back("--" + key);
          continue;
        }
        if (value.is_string()) text = value.get<std::string>();
        else if (value.is_array()) {
          for (const auto& v : value) text += (text.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
        } else {
          text = value.dump();
        }
        args.push_back("--" + key);
        args.push_back(text);
      }
    } catch (const std::exception& e) {
      std::cout << json{{"error", {{"kind", "usage"}, {"message", e.what()}}}}.dump(2) << "\n";
      return kUsage;
    }
  }
  std::reverse(args.begin(), args.end());

  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cout << json{{"error", {{"kind", "usage"}, {"message", e.what()}}}}.dump(2) << "\n";
    return kUsage;
  }

  const auto started = std::chrono::steady_clock::now();
  Output o;
  o.seed = c.seed;
  o.hash = hex(config_hash(app));
  for (const CLI::App* cur = &app;;) {
    const auto subs = cur->get_subcommands();
    if (subs.empty()) break;
    cur = subs.front();
    o.tool_path += (o.tool_path.empty() ? "" : " ") + cur->get_name();
  }

  try {
    std::string payload;
    if (eval->parsed()) {
      require_format(c, {"json", "csv"});
      const IFSDescriptor ifs = resolve_ifs(c);
      json rows = json::array();
      std::string csv = o.csv_preamble() + "xi_re,xi_im,re,im,abs\n";
      for (const auto& xi : io::parse_complex_list(xi_list)) {
        const Complex v = mu_hat(ifs, xi, eval_tol);
        rows.push_back({{"xi", io::complex_json(xi)}, {"mu_hat", io::complex_json(v)}, {"abs", std::abs(v)}});
        csv += io::format_double(xi.real()) + "," + io::format_double(xi.imag()) + "," + io::format_double(v.real()) + "," +
               io::format_double(v.imag()) + "," + io::format_double(std::abs(v)) + "\n";
      }
      payload = c.format == "csv" ? csv : render_json(o, {{"ifs", io::ifs_to_json(ifs)}, {"tol", eval_tol}, {"values", rows}});
    } else if (scan->parsed()) {
      const IFSDescriptor ifs = resolve_ifs(c);
      const double cells = kPi * (scan_T + 1.5) * (scan_T + 1.5);
      if (cells > static_cast<double>(budget_or(c, 5e6))) throw BudgetError("scan exceeds the cell budget");
      const ScanField field = grid_scan(ifs, scan_T, scan_k, scan_tol, c.workers);
      if (c.format == "bin") {
        std::ostringstream os(std::ios::binary);
        io::write_scan_binary(os, field);
        payload = os.str();
      } else if (c.format == "csv") {
        std::ostringstream os;
        os << o.csv_preamble();
        io::write_scan_csv(os, field);
        payload = os.str();
      } else {
        json cells_json = json::array();
        for (const auto& cell : field.cells) cells_json.push_back({cell.i, cell.j, cell.max_abs});
        payload = render_json(o, {{"T", field.T}, {"subgrid_k", field.subgrid_k}, {"tol", field.tol}, {"cells", cells_json}});
      }
    } else if (bounds->parsed()) {
      require_format(c, {"json", "csv"});
      const IFSDescriptor ifs = resolve_ifs(c);
      auto bound_at = [&](double eps) {
        if (bounds_dim > 0) {
          if (!ifs.lambda_is_real()) throw RegimeError("--dim requires a real lambda");
          return delta_higherdim(ifs.lambda().real(), ifs.probs(), eps, bounds_dim);
        }
        return decay_bound(ifs, eps);
      };
      if (!bounds_sweep.empty()) {
        const auto parts = io::parse_real_list(bounds_sweep);
        if (parts.size() != 3 || parts[2] < 1) throw DomainError("--sweep expects start,stop,count");
        const auto count = static_cast<int>(parts[2]);
        std::string csv = o.csv_preamble() + "lambda_re,lambda_im,epsilon,delta,valid\n";
        json rows = json::array();
        for (int k = 0; k < count; ++k) {
          const double eps = count == 1 ? parts[0] : parts[0] + (parts[1] - parts[0]) * k / (count - 1);
          const DecayBound b = bound_at(eps);
          csv += io::format_double(ifs.lambda().real()) + "," + io::format_double(ifs.lambda().imag()) + "," +
                 io::format_double(eps) + "," + io::format_double(b.delta) + "," + (b.valid ? "1" : "0") + "\n";
          rows.push_back(bound_json(b));
        }
        payload = c.format == "json" ? render_json(o, {{"sweep", rows}}) : csv;
      } else {
        json result;
        if (bounds_kappa > 0.0) {
          const FlatteningSolution s = bounds_dim > 0
                                           ? solve_flattening_epsilon([&](double eps) { return bound_at(eps); }, bounds_kappa)
                                           : solve_flattening_epsilon(ifs, bounds_kappa);
          result = bound_json(s.bound);
          result["kappa"] = bounds_kappa;
          result["sigma"] = s.sigma;
          result["residual"] = s.residual;
        } else {
          result = bound_json(bound_at(bounds_eps));
        }
        if (c.format == "csv") {
          std::string head, row;
          for (const auto& [k, v] : result.items()) {
            head += (head.empty() ? "" : ",") + k;
            row += (row.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
          }
          payload = o.csv_preamble() + head + "\n" + row + "\n";
        } else {
          payload = render_json(o, result);
        }
      }
    } else if (ek->parsed()) {
      require_format(c, {"json"});
      const IFSDescriptor ifs = resolve_ifs(c);
      json result;
      if (ek_trace_cmd->parsed()) {
        const EKTrace tr = ek_trace(ifs.lambda(), io::parse_complex(trace_t), trace_N);
        const DigitCheck chk = check_trace(tr);
        json rows = json::array();
        for (int j = 0; j < tr.N; ++j)
          rows.push_back({{"j", j}, {"c", tr.c(j)}, {"d", tr.d(j)}, {"r", tr.r[static_cast<std::size_t>(j)]},
                          {"eps", tr.eps[static_cast<std::size_t>(j)]}});
        result = {{"t", io::complex_json(tr.t)}, {"N", tr.N}, {"rho", tr.rho}, {"good_count", tr.good_count()},
                  {"good_indices", tr.good_indices}, {"violations", chk.violations}, {"digits", rows}};
      } else if (ek_verify->parsed()) {
        const DigitCheck chk = verify_digit_inequality(ifs.lambda(), verify_samples, verify_N, c.seed, c.workers);
        const TransitionBound tb = digit_transition_bound(ifs.lambda());
        result = {{"samples", verify_samples}, {"N", verify_N}, {"bound", tb.bound}, {"branching", tb.branching},
                  {"checked", chk.checked}, {"violations", chk.violations}, {"uniqueness_checked", chk.uniqueness_checked},
                  {"uniqueness_violations", chk.uniqueness_violations}};
      } else if (ek_enum->parsed()) {
        const auto budget = static_cast<std::int64_t>(budget_or(c, 1e7));
        const EnumerationResult r = enumerate_digit_sequences(ifs.lambda(), enum_eps_tilde, enum_N, budget);
        result = {{"N", enum_N}, {"epsilon_tilde", enum_eps_tilde}, {"count", r.count}, {"bound", r.bound},
                  {"log_bound", r.log_bound}, {"required_good", r.required_good}, {"nodes", r.nodes}};
      } else if (ek_cover->parsed()) {
        const CoveringReport r = covering_report(ifs, cover_eps, cover_N, cover_k, cover_tol, c.workers, budget_or(c, 5e6));
        result = {{"T", r.T}, {"N", r.N}, {"epsilon", r.epsilon}, {"epsilon_tilde", r.epsilon_tilde},
                  {"threshold", r.threshold}, {"empirical_count", r.empirical_count}, {"total_cells", r.total_cells},
                  {"bound_count", r.bound_count}, {"log_bound_count", r.log_bound_count}, {"subgrid_k", r.subgrid_k},
                  {"sampled_points", r.sampled_points}, {"qualifying_samples", r.qualifying_samples},
                  {"inclusion_violations", r.inclusion_violations}, {"degenerate", r.degenerate},
                  {"digit_difference", io::complex_json(r.digit_difference)}, {"bound", bound_json(r.bound)}};
      }
      payload = render_json(o, result);
    } else if (dim->parsed()) {
      require_format(c, {"json", "csv"});
      std::optional<IFSDescriptor> ifs;
      std::optional<DiscreteMeasure> mu;
      if (!dim_measure.empty()) {
        std::ifstream in(dim_measure);
        if (!in) throw DomainError("cannot open measure file " + dim_measure);
        mu = io::read_measure_csv(in);
      } else {
        ifs = resolve_ifs(c);
        mu = finite_approximation(*ifs, dim_depth, -1.0, budget_or(c, static_cast<double>(kDefaultAtomBudget)));
      }
      const DimEstimate e = dim_q_estimate(*mu, parse_real_token(dim_q), dim_nmin, dim_nmax);
      json result = estimate_json(e);
      if (dim_alpha) {
        std::vector<double> radii = io::parse_real_list(dim_T);
        const AlphaEstimate a = ifs ? alpha_estimate(*ifs, radii, dim_step, 1e-9, c.workers)
                                    : alpha_estimate(*mu, radii, dim_step, c.workers);
        json rows = json::array();
        for (const auto& r : a.rows) rows.push_back({{"T", r.T}, {"energy", r.energy}});
        result["alpha"] = {{"alpha", a.alpha}, {"dim2_via_alpha", a.dim2_via_alpha}, {"stderr", a.stderr_alpha},
                           {"step", a.step}, {"energies", rows}};
      }
      if (c.format == "csv") {
        std::ostringstream os;
        os << o.csv_preamble() << "# dimension=" << io::format_double(e.slope) << " stderr=" << io::format_double(e.stderr_slope)
           << "\n";
        os << "n,s_n,log_fit\n";
        double mx = 0.0, my = 0.0;
        for (const auto& r : e.rows) mx += r.abscissa, my += r.log_s;
        mx /= static_cast<double>(e.rows.size());
        my /= static_cast<double>(e.rows.size());
        for (const auto& r : e.rows)
          os << r.n << ',' << io::format_double(r.s_n) << ',' << io::format_double(my + e.raw_slope * (r.abscissa - mx)) << '\n';
        payload = os.str();
      } else {
        payload = render_json(o, result);
      }
    } else if (push->parsed()) {
      require_format(c, {"json", "csv"});
      const IFSDescriptor ifs = resolve_ifs(c);
      const AnalyticMap F(io::parse_complex_list(push_map));
      DecayOptions opt;
      opt.directions = push_directions;
      opt.depth = push_depth;
      opt.seed = c.seed;
      opt.allow_affine = push_affine;
      opt.frostman_s = push_s;
      opt.workers = c.workers;
      const DecayProfile prof = decay_profile(F, ifs, io::parse_real_list(push_radii), opt);
      if (c.format == "csv") {
        std::string csv = o.csv_preamble() + "# slope=" + io::format_double(prof.slope) + "\nT,max_abs_ft,predicted_exponent\n";
        for (const auto& r : prof.rows)
          csv += io::format_double(r.T) + "," + io::format_double(r.max_abs_ft) + "," + io::format_double(prof.predicted_exponent) + "\n";
        payload = csv;
      } else {
        json rows = json::array();
        for (const auto& r : prof.rows) rows.push_back({{"T", r.T}, {"max_abs_ft", r.max_abs_ft}});
        payload = render_json(
            o, {{"slope", prof.slope}, {"stderr", prof.stderr_slope}, {"directions", prof.directions},
                {"jittered", prof.jittered}, {"depth", prof.depth}, {"atoms", prof.atoms}, {"frostman_s", prof.frostman_s},
                {"predicted_exponent", prof.predicted_exponent}, {"predicted_epsilon", prof.predicted_epsilon},
                {"predicted_delta", prof.predicted_delta},
                {"certification",
                 {{"min_abs_F2", prof.certification.min_abs_F2}, {"M", prof.certification.M}, {"L", prof.certification.L},
                  {"samples", prof.certification.samples}, {"spacing", prof.certification.spacing},
                  {"valid", prof.certification.valid}}},
                {"profile", rows},
                {"note", "the exponent is reported only; the constant C is unknown so it is not asserted"}});
      }
    } else if (bern->parsed()) {
      require_format(c, {"json"});
      if (c.lambda.empty()) throw DomainError("--lambda is required");
      const Complex lambda = io::parse_complex(c.lambda);
      const double p = c.p.empty() ? 0.5 : io::parse_double(c.p);
      const DimensionBound d = bern_unbiased ? bernoulli_unbiased_dim_lower(lambda) : bernoulli_dim_lower(lambda, p);
      payload = render_json(o, dimension_bound_json(d));
    }
    emit(c, payload);
  } catch (const std::exception& e) {
    std::string kind = "internal";
    int code = kFailure;
    if (const auto* err = dynamic_cast<const selfsim::Error*>(&e)) {
      kind = err->kind();
      if (dynamic_cast<const BudgetError*>(&e)) code = kBudget;
    } else if (dynamic_cast<const json::exception*>(&e)) {
      kind = "domain";
    }
    if (c.format == "json") std::cout << json{{"error", {{"kind", kind}, {"message", e.what()}}}}.dump(2) << "\n";
    else std::cerr << "error (" << kind << "): " << e.what() << "\n";
    return code;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::cerr << "wall_time_s=" << seconds << "\n";
  return kOk;
}
