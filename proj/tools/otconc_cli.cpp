// Command-line front end: Monte Carlo curves/tails, assumption reports,
// envelope overlays, partition diagnostics, and figure reproduction.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "otconc/otconc.hpp"

namespace {

using namespace otconc;

// Config/usage problems map to exit 2; math/domain problems to exit 3.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::map<std::string, std::string> parse_params(const std::string& spec) {
  std::map<std::string, std::string> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw UsageError("bad --params entry (want k=v): " + item);
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

double param_real(const std::map<std::string, std::string>& p,
                  const std::string& key, std::optional<double> fallback = {}) {
  auto it = p.find(key);
  if (it == p.end()) {
    if (fallback) return *fallback;
    throw UsageError("missing required param: " + key);
  }
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw UsageError("bad numeric param " + key + "=" + it->second);
  }
}

Distribution make_distribution(const std::string& name,
                               const std::map<std::string, std::string>& p) {
  const std::size_t d =
      static_cast<std::size_t>(param_real(p, "d", 1.0));
  if (name == "gaussian") return Distribution::gaussian(param_real(p, "sigma"), d);
  if (name == "geometric") return Distribution::geometric(param_real(p, "q"));
  if (name == "poisson") return Distribution::poisson(param_real(p, "lambda"));
  if (name == "weibull") return Distribution::weibull(param_real(p, "c"));
  if (name == "uniform-ball")
    return Distribution::uniform_ball(param_real(p, "r"), d);
  if (name == "point-mass") {
    auto it = p.find("x");
    std::vector<double> coords;
    if (it != p.end()) {
      std::stringstream ss(it->second);
      std::string tok;
      while (std::getline(ss, tok, ';')) coords.push_back(std::stod(tok));
    }
    if (coords.empty()) coords.assign(d, 0.0);
    return Distribution::point_mass(Point(std::move(coords)));
  }
  throw UsageError("unknown --dist: " + name);
}

RadialCost make_cost(const std::string& kind, double p, double a) {
  if (kind == "power") return RadialCost::power(p);
  if (kind == "exp") {
    if (!(a > 0.0)) throw UsageError("--cost exp requires --a > 0");
    return RadialCost::exponential(p, a);
  }
  throw UsageError("unknown --cost: " + kind);
}

// N-grid mini-language: comma-joined "a:b" (dense) or "a:b:s" segments,
// plus bare integers.
std::vector<std::size_t> parse_n_grid(const std::string& spec) {
  std::vector<std::size_t> out;
  std::stringstream ss(spec);
  std::string seg;
  while (std::getline(ss, seg, ',')) {
    if (seg.empty()) continue;
    std::vector<long long> parts;
    std::stringstream ps(seg);
    std::string tok;
    while (std::getline(ps, tok, ':')) {
      try {
        parts.push_back(std::stoll(tok));
      } catch (const std::exception&) {
        throw UsageError("bad --n-grid token: " + tok);
      }
    }
    if (parts.empty() || parts.size() > 3)
      throw UsageError("bad --n-grid segment: " + seg);
    const long long a = parts[0];
    const long long b = parts.size() >= 2 ? parts[1] : a;
    const long long s = parts.size() == 3 ? parts[2] : 1;
    if (a < 1 || b < a || s < 1)
      throw UsageError("bad --n-grid segment: " + seg);
    for (long long n = a; n <= b; n += s)
      out.push_back(static_cast<std::size_t>(n));
  }
  if (out.empty()) throw UsageError("--n-grid produced no values");
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] <= out[i - 1])
      throw UsageError("--n-grid must be strictly increasing");
  return out;
}

std::vector<double> parse_real_list(const std::string& spec,
                                    const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw UsageError("bad " + flag + " value: " + tok);
    }
  }
  if (out.empty()) throw UsageError(flag + " produced no values");
  return out;
}

unsigned resolve_threads(unsigned flag_value) {
  if (const char* env = std::getenv("OTCONC_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw UsageError("bad OTCONC_THREADS value");
  }
  if (flag_value >= 1) return flag_value;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

void emit(const std::string& content, const std::string& out_path) {
  if (out_path.empty())
    std::cout << content;
  else
    write_file(out_path, content);
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == '=' || c == ',' || c == ' ' || c == '/') c = '_';
  return s;
}

struct CommonOpts {
  std::string dist = "gaussian";
  std::string params;
  std::string cost = "power";
  double p = 1.0;
  double a = 0.0;
  std::string n_grid = "1:20,25:100:5,120:200:20";
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string method = "quantile-1d";
  std::string out;

  void add_dist_flags(CLI::App* app) {
    app->add_option("--dist", dist, "distribution family");
    app->add_option("--params", params, "family parameters k=v,...");
  }
  void add_cost_flags(CLI::App* app) {
    app->add_option("--cost", cost, "cost kind: power|exp");
    app->add_option("--p", p, "growth order p");
    app->add_option("--a", a, "exponential scale a");
  }
  void add_run_flags(CLI::App* app) {
    app->add_option("--n-grid", n_grid, "N grid, e.g. 1:20,25:100:5");
    app->add_option("--trials", trials, "Monte Carlo trials per N");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--threads", threads, "worker threads (0 = cores)");
    app->add_option("--method", method, "quantile-1d|exact-lp");
    app->add_option("--out", out, "output file (default stdout)");
  }

  ExperimentConfig build() const {
    ExperimentConfig cfg;
    cfg.dist = make_distribution(dist, parse_params(params));
    cfg.dist_name = dist;
    cfg.params = params;
    cfg.cost = make_cost(cost, p, a);
    cfg.n_grid = parse_n_grid(n_grid);
    cfg.trials = trials;
    cfg.seed = Seed{seed, 0};
    if (method == "quantile-1d")
      cfg.method = CostMethod::Quantile1d;
    else if (method == "exact-lp")
      cfg.method = CostMethod::ExactLp;
    else
      throw UsageError("unknown --method: " + method);
    cfg.threads = resolve_threads(threads);
    return cfg;
  }
};

// A divergent M_1(mu; G) means the cost has no finite first moment for this
// distribution; surfaced before burning Monte Carlo time.
void check_cost_moment(const ExperimentConfig& cfg) {
  const GrowthPair growth = default_growth(cfg.cost);
  moment_h(
      cfg.dist, [&growth](double r) { return growth.eval_G(r); }, 1.0);
}

int cmd_mean(const CommonOpts& opts) {
  const ExperimentConfig cfg = opts.build();
  check_cost_moment(cfg);
  const CurveTable t = estimate_mean_cost(cfg);
  emit(curve_csv(t), opts.out);
  std::cerr << "mean: " << cfg.dist_name << " " << cfg.params << " "
            << cfg.cost.name() << " p=" << cfg.cost.p << " rows="
            << t.rows.size() << "\n";
  return 0;
}

int cmd_tail(const CommonOpts& opts, const std::string& x_grid) {
  const ExperimentConfig cfg = opts.build();
  check_cost_moment(cfg);
  const TailTable t = estimate_tail(cfg, parse_real_list(x_grid, "--x-grid"));
  emit(tail_csv(t), opts.out);
  std::cerr << "tail: rows=" << t.rows.size() << "\n";
  return 0;
}

int cmd_slope(const std::string& in, const std::string& window,
              const std::string& out) {
  CurveTable t;
  if (in.empty() || in == "-") {
    t = parse_curve_csv(std::cin);
  } else {
    std::ifstream f(in);
    if (!f) throw UsageError("cannot open --in file: " + in);
    t = parse_curve_csv(f);
  }
  std::size_t lo = 50, hi = 200;
  if (!window.empty()) {
    const auto colon = window.find(':');
    if (colon == std::string::npos)
      throw UsageError("bad --window (want a:b): " + window);
    lo = std::stoull(window.substr(0, colon));
    hi = std::stoull(window.substr(colon + 1));
  }
  const SlopeFit fit = loglog_slope(t, lo, hi);
  std::ostringstream os;
  os << "slope=" << fmt_real(fit.slope) << " intercept="
     << fmt_real(fit.intercept) << " r2=" << fmt_real(fit.r2)
     << " points=" << fit.points << "\n";
  emit(os.str(), out);
  return 0;
}

int cmd_check(const CommonOpts& opts, double q, double b, double eps,
              double c0) {
  const auto params = parse_params(opts.params);
  const Distribution dist = make_distribution(opts.dist, params);
  const RadialCost cost = make_cost(opts.cost, opts.p, opts.a);
  const GrowthPair growth = default_growth(cost);
  const double d = static_cast<double>(dist.dim);
  CaseSelection sel;
  if (cost.kind == RadialCost::Kind::Power) {
    if (!(q > 0.0)) throw UsageError("check with power cost needs --q");
    sel = select_case_tp(d, cost.p, q, eps);
  } else {
    if (!(b > 0.0)) throw UsageError("check with exp cost needs --b");
    sel = select_case_exp(d, cost.p, cost.a, b, eps);
  }
  const AssumptionReport rep = certify(dist, cost, growth, sel, d, c0);
  std::ostringstream os;
  os << "case=" << rep.case_id << "\n"
     << "regime=" << regime_name(rep.regime) << "\n"
     << "gamma=" << fmt_real(rep.gamma) << "\n"
     << "eta=" << fmt_real(rep.eta) << "\n"
     << "eps=" << fmt_real(rep.eps) << "\n"
     << "c0=" << fmt_real(rep.c0) << "\n"
     << "S=" << sel.S.name() << "\n"
     << "K_g=" << (rep.kappa.divergent_g ? "DIVERGENT" : fmt_real(rep.kappa.K_g))
     << "\n"
     << "K_G=" << (rep.kappa.divergent_G ? "DIVERGENT" : fmt_real(rep.kappa.K_G))
     << "\n"
     << "M1S=" << fmt_real(rep.M1S) << "\n"
     << "Mp=" << fmt_real(rep.Mp) << "\n"
     << "MgammaG=" << fmt_real(rep.MgammaG) << "\n"
     << "F=" << fmt_real(rep.F) << "\n";
  emit(os.str(), opts.out);
  return 0;
}

int cmd_envelope(const std::string& in, double d, double p, double eta,
                 double A0, double c_given, double C_given,
                 const std::string& out) {
  std::ifstream f(in);
  if (!f) throw UsageError("cannot open --in file: " + in);
  // Tail CSV in, same rows out with an appended envelope column.
  std::string line;
  if (!std::getline(f, line)) throw UsageError("empty tail csv");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTailHeader)
    throw UsageError("unexpected tail header: " + line);
  std::vector<std::vector<std::string>> rows;
  std::vector<TailObservation> obs;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 12) throw UsageError("bad tail row: " + line);
    TailObservation o;
    o.N = std::stoull(fields[5]);
    o.x = std::stod(fields[6]);
    o.phat = std::stod(fields[7]);
    o.trials = std::stoull(fields[10]);
    obs.push_back(o);
    rows.push_back(std::move(fields));
  }
  const RateParams rate(d, p, eta);
  auto shape = [&rate](double c, std::size_t N, double x) {
    return std::exp(-c * static_cast<double>(N) * rate_phi_eta(rate, x));
  };
  EnvelopeParams env;
  env.A0 = A0;
  if (c_given > 0.0 && C_given > 0.0) {
    env.c = c_given;
    env.C = C_given;
  } else {
    env = fit_constants(obs, shape, A0);
    std::cerr << "fitted c=" << fmt_real(env.c) << " C=" << fmt_real(env.C)
              << " A0=" << fmt_real(env.A0) << "\n";
  }
  std::ostringstream os;
  os << kTailHeader << ",envelope\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      os << (j ? "," : "") << rows[i][j];
    const double e =
        obs[i].x <= A0 ? env.C * shape(env.c, obs[i].N, obs[i].x) : 0.0;
    os << ',' << fmt_real(e) << '\n';
  }
  emit(os.str(), out);
  return 0;
}

int cmd_partition_bound(const CommonOpts& opts, std::size_t n) {
  const auto params = parse_params(opts.params);
  const Distribution dist = make_distribution(opts.dist, params);
  const RadialCost cost = make_cost(opts.cost, opts.p, opts.a);
  const GrowthPair growth = default_growth(cost);
  const Seed s1 = derive_stream(Seed{opts.seed, 0}, "instance-mu");
  const Seed s2 = derive_stream(Seed{opts.seed, 0}, "instance-nu");
  const DiscreteMeasure mu = empirical_measure(dist.sample(n, s1), dist.dim);
  const DiscreteMeasure nu = empirical_measure(dist.sample(n, s2), dist.dim);
  const CouplingBoundReport rep = coupling_upper_bound(mu, nu, cost, growth);
  std::ostringstream os;
  os << "term_I=" << fmt_real(rep.term_I) << "\n"
     << "int_G_nu_rem=" << fmt_real(rep.int_G_nu_rem) << "\n"
     << "int_G_lambda_rem=" << fmt_real(rep.int_G_lambda_rem) << "\n"
     << "term_III_x2=" << fmt_real(rep.term_III_x2) << "\n"
     << "term_IV=" << fmt_real(rep.term_IV) << "\n"
     << "rho=" << fmt_real(rep.rho) << "\n"
     << "coupling_cost=" << fmt_real(rep.coupling_cost) << "\n"
     << "total=" << fmt_real(rep.total) << "\n"
     << "exact=" << fmt_real(rep.exact) << "\n";
  emit(os.str(), opts.out);
  return 0;
}

int cmd_selfnorm(const CommonOpts& opts, double alpha, double delta,
                 std::size_t n, const std::string& x_grid) {
  const auto params = parse_params(opts.params);
  const Distribution dist = make_distribution(opts.dist, params);
  const SelfNormConfig cfg(delta, alpha);
  const Seed seed = derive_stream(Seed{opts.seed, 0}, "selfnorm");
  const auto rows = selfnorm_tail_mc(dist, n, cfg,
                                     parse_real_list(x_grid, "--x-grid"),
                                     opts.trials, seed);
  std::ostringstream os;
  os << "dist,params,alpha,delta,N,x,phat,ci_lo,ci_hi,envelope,trials,seed\n";
  for (const auto& r : rows) {
    os << opts.dist << ',' << opts.params << ',' << fmt_real(alpha) << ','
       << fmt_real(delta) << ',' << n << ',' << fmt_real(r.x) << ','
       << fmt_real(r.phat) << ',' << fmt_real(r.ci_lo) << ','
       << fmt_real(r.ci_hi) << ',' << fmt_real(r.envelope) << ','
       << opts.trials << ',' << opts.seed << '\n';
  }
  emit(os.str(), opts.out);
  return 0;
}

int cmd_figures(int fig, std::size_t trials, std::uint64_t seed,
                unsigned threads, const std::string& out_dir,
                const std::string& n_grid_spec) {
  std::vector<std::size_t> grid;
  if (!n_grid_spec.empty()) grid = parse_n_grid(n_grid_spec);
  std::filesystem::create_directories(out_dir);
  const auto tables =
      figure_run(fig, trials, Seed{seed, 0}, resolve_threads(threads), grid);
  std::map<std::string, std::vector<CurveTable>> panels;
  for (const auto& t : tables) {
    const std::string name = "fig" + std::to_string(fig) + "_" +
                             sanitize(t.dist_name + "_" + t.params) +
                             (t.cost_name == "power"
                                  ? "_p" + std::to_string(int(t.p))
                                  : "_exp_p" + std::to_string(int(t.p)));
    write_file(out_dir + "/" + name + ".csv", curve_csv(t));
    panels[t.dist_name].push_back(t);
  }
  for (const auto& [family, series] : panels) {
    const std::string title =
        "fig " + std::to_string(fig) + " - " + family;
    write_file(out_dir + "/fig" + std::to_string(fig) + "_" +
                   sanitize(family) + ".svg",
               loglog_svg(series, title));
  }
  std::cerr << "figures: wrote " << tables.size() << " CSVs to " << out_dir
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"radial optimal-transport concentration toolkit"};
  app.require_subcommand(1);

  CommonOpts mean_opts, tail_opts, check_opts, part_opts, sn_opts;
  std::string tail_x = "0.1,0.2,0.5,1,2";
  std::string slope_in, slope_window = "50:200", slope_out;
  std::string env_in, env_out;
  double env_d = 1, env_p = 1, env_eta = 0.5, env_A0 = 1, env_c = 0,
         env_C = 0;
  double chk_q = 0, chk_b = 0, chk_eps = -1, chk_c0 = -1;
  std::size_t part_n = 32, sn_n = 100;
  double sn_alpha = 0.5, sn_delta = 1.0;
  std::string sn_x = "0.2,0.4,0.6,0.8,1.0";
  int fig = 1;
  std::size_t fig_trials = 1000;
  std::uint64_t fig_seed = 1;
  unsigned fig_threads = 0;
  std::string fig_out_dir = ".", fig_n_grid;

  auto* mean = app.add_subcommand("mean", "mean transport cost curve");
  mean_opts.add_dist_flags(mean);
  mean_opts.add_cost_flags(mean);
  mean_opts.add_run_flags(mean);

  auto* tail = app.add_subcommand("tail", "tail probability table");
  tail_opts.add_dist_flags(tail);
  tail_opts.add_cost_flags(tail);
  tail_opts.add_run_flags(tail);
  tail->add_option("--x-grid", tail_x, "thresholds x, comma separated");

  auto* slope = app.add_subcommand("slope", "log-log slope of a curve CSV");
  slope->add_option("--in", slope_in, "curve CSV file (default stdin)");
  slope->add_option("--window", slope_window, "N window a:b");
  slope->add_option("--out", slope_out, "output file (default stdout)");

  auto* check = app.add_subcommand("check", "assumption report");
  check_opts.add_dist_flags(check);
  check_opts.add_cost_flags(check);
  check->add_option("--q", chk_q, "moment order q (power cost)");
  check->add_option("--b", chk_b, "exponential moment scale b (exp cost)");
  check->add_option("--eps", chk_eps, "eta shrink epsilon");
  check->add_option("--c0", chk_c0, "series exponent c0");
  check->add_option("--out", check_opts.out, "output file");

  auto* envc = app.add_subcommand("envelope", "overlay envelope on tail CSV");
  envc->add_option("--in", env_in, "tail CSV file")->required();
  envc->add_option("--d", env_d, "dimension");
  envc->add_option("--p", env_p, "growth order");
  envc->add_option("--eta", env_eta, "rate exponent eta");
  envc->add_option("--A0", env_A0, "envelope threshold A0");
  envc->add_option("--c", env_c, "rate constant (fit when omitted)");
  envc->add_option("--C", env_C, "prefactor (fit when omitted)");
  envc->add_option("--out", env_out, "output file (default stdout)");

  auto* part = app.add_subcommand("partition-bound",
                                  "annular coupling bound for an instance");
  part_opts.add_dist_flags(part);
  part_opts.add_cost_flags(part);
  part->add_option("--n", part_n, "sample size per side");
  part->add_option("--seed", part_opts.seed, "master seed");
  part->add_option("--out", part_opts.out, "output file");

  auto* sn = app.add_subcommand("selfnorm",
                                "self-normalized statistic tail table");
  sn_opts.add_dist_flags(sn);
  sn->add_option("--alpha", sn_alpha, "normalization exponent");
  sn->add_option("--delta", sn_delta, "dyadic decay exponent");
  sn->add_option("--n", sn_n, "sample size N");
  sn->add_option("--trials", sn_opts.trials, "Monte Carlo trials");
  sn->add_option("--seed", sn_opts.seed, "master seed");
  sn->add_option("--x-grid", sn_x, "thresholds, comma separated");
  sn->add_option("--out", sn_opts.out, "output file");

  auto* figs = app.add_subcommand("figures", "reproduce the study figures");
  figs->add_option("--fig", fig, "figure number 1-4")->required();
  figs->add_option("--trials", fig_trials, "Monte Carlo trials");
  figs->add_option("--seed", fig_seed, "master seed");
  figs->add_option("--threads", fig_threads, "worker threads (0 = cores)");
  figs->add_option("--out-dir", fig_out_dir, "output directory");
  figs->add_option("--n-grid", fig_n_grid, "N grid override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (mean->parsed()) return cmd_mean(mean_opts);
    if (tail->parsed()) return cmd_tail(tail_opts, tail_x);
    if (slope->parsed()) return cmd_slope(slope_in, slope_window, slope_out);
    if (check->parsed())
      return cmd_check(check_opts, chk_q, chk_b, chk_eps, chk_c0);
    if (envc->parsed())
      return cmd_envelope(env_in, env_d, env_p, env_eta, env_A0, env_c, env_C,
                          env_out);
    if (part->parsed()) return cmd_partition_bound(part_opts, part_n);
    if (sn->parsed())
      return cmd_selfnorm(sn_opts, sn_alpha, sn_delta, sn_n, sn_x);
    if (figs->parsed())
      return cmd_figures(fig, fig_trials, fig_seed, fig_threads, fig_out_dir,
                         fig_n_grid);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
