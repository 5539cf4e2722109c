#ifndef OTCONC_HARNESS_HPP_
#define OTCONC_HARNESS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "otconc/common.hpp"
#include "otconc/cost.hpp"
#include "otconc/distribution.hpp"
#include "otconc/measure.hpp"
#include "otconc/ot.hpp"
#include "otconc/rng.hpp"

namespace otconc {

// Runs fn(i) for i in [0, n) across `threads` contiguous chunks. Results
// must be written to disjoint slots; chunking cannot change them.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (n == 0) return;
  if (threads <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

enum class CostMethod { Quantile1d, ExactLp };

struct ExperimentConfig {
  Distribution dist;
  std::string dist_name;
  std::string params;  // "k=v,..." serialization for CSV output
  RadialCost cost;
  std::vector<std::size_t> n_grid;
  std::size_t trials = 1000;
  Seed seed;
  CostMethod method = CostMethod::Quantile1d;
  unsigned threads = 1;

  std::string describe() const {
    std::ostringstream os;
    os << dist_name << '|' << params << '|' << cost.name() << '|' << cost.p
       << '|' << cost.a << '|' << trials << '|' << seed.master;
    return os.str();
  }

  void validate() const {
    if (trials < 1) throw std::invalid_argument("config: trials >= 1");
    if (n_grid.empty()) throw std::invalid_argument("config: N grid empty");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
      if (n_grid[i] <= n_grid[i - 1])
        throw std::invalid_argument("config: N grid strictly increasing");
    if (method == CostMethod::Quantile1d) {
      if (dist.dim != 1)
        throw std::invalid_argument("config: quantile-1d requires d = 1");
      if (!cost.convex())
        throw std::invalid_argument(
            "config: quantile-1d requires a convex cost (p >= 1)");
    }
  }
};

struct CurveTable {
  struct Row {
    std::size_t N = 0;
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t trials = 0;
  };
  std::vector<Row> rows;
  std::string dist_name, params, cost_name;
  double p = 0.0, a = 0.0;
  std::uint64_t seed = 0;
  double reference_C = 0.0;  // caption reference constant, 0 if none
};

struct TailTable {
  struct Row {
    std::size_t N = 0;
    double x = 0.0;
    double phat = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 1.0;
    std::size_t trials = 0;
  };
  std::vector<Row> rows;
  std::string dist_name, params, cost_name;
  double p = 0.0, a = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

// Per-trial transport cost D_f(mu, mu_N) for a fresh empirical sample.
inline double one_trial_cost(const ExperimentConfig& cfg, const Seed& stream,
                             std::size_t N, std::uint64_t trial) {
  std::vector<Point> sample;
  sample.reserve(N);
  for (std::size_t i = 0; i < N; ++i)
    sample.push_back(cfg.dist.sample_point(stream, trial, i));
  const DiscreteMeasure emp = empirical_measure(sample, cfg.dist.dim);
  if (cfg.method == CostMethod::Quantile1d)
    return quantile_cost_semicontinuous(cfg.dist, emp, cfg.cost);
  // Exact LP surrogate: an independent second empirical sample stands in
  // for the continuous marginal.
  std::vector<Point> sample2;
  sample2.reserve(N);
  const Seed alt = derive_stream(stream, "surrogate");
  for (std::size_t i = 0; i < N; ++i)
    sample2.push_back(cfg.dist.sample_point(alt, trial, i));
  const DiscreteMeasure emp2 = empirical_measure(sample2, cfg.dist.dim);
  return exact_ot(emp2, emp, cfg.cost).cost;
}

inline Seed stream_for_n(const ExperimentConfig& cfg, std::size_t N) {
  const std::uint64_t config_tag = fnv1a64(cfg.describe());
  return Seed{cfg.seed.master,
              mix64(cfg.seed.stream ^ mix64(config_tag ^ mix64(N)))};
}

inline void fill_costs(const ExperimentConfig& cfg, std::size_t N,
                       std::vector<double>& values) {
  values.assign(cfg.trials, 0.0);
  const Seed stream = stream_for_n(cfg, N);
  parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
    values[t] = one_trial_cost(cfg, stream, N, t);
  });
}

}  // namespace detail

inline CurveTable estimate_mean_cost(const ExperimentConfig& cfg) {
  cfg.validate();
  CurveTable table;
  table.dist_name = cfg.dist_name;
  table.params = cfg.params;
  table.cost_name = cfg.cost.name();
  table.p = cfg.cost.p;
  table.a = cfg.cost.a;
  table.seed = cfg.seed.master;

  std::vector<double> values;
  for (std::size_t N : cfg.n_grid) {
    detail::fill_costs(cfg, N, values);
    const double tr = static_cast<double>(cfg.trials);
    const double mean = pairwise_sum(values) / tr;
    double se = 0.0;
    if (cfg.trials > 1) {
      std::vector<double> dev2(values.size());
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - mean;
        dev2[i] = d * d;
      }
      const double var = pairwise_sum(dev2) / (tr - 1.0);
      se = std::sqrt(var / tr);
    }
    table.rows.push_back({N, mean, se, cfg.trials});
  }
  return table;
}

inline TailTable estimate_tail(const ExperimentConfig& cfg,
                               const std::vector<double>& x_grid) {
  cfg.validate();
  TailTable table;
  table.dist_name = cfg.dist_name;
  table.params = cfg.params;
  table.cost_name = cfg.cost.name();
  table.p = cfg.cost.p;
  table.a = cfg.cost.a;
  table.seed = cfg.seed.master;

  std::vector<double> values;
  for (std::size_t N : cfg.n_grid) {
    detail::fill_costs(cfg, N, values);
    for (double x : x_grid) {
      double exceed = 0.0;
      for (double v : values)
        if (v > x) exceed += 1.0;
      const double tr = static_cast<double>(cfg.trials);
      const auto ci = wilson_interval(exceed, tr);
      table.rows.push_back({N, x, exceed / tr, ci.lo, ci.hi, cfg.trials});
    }
  }
  return table;
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

// OLS on (log N, log mean) restricted to N in [lo, hi] with mean > 0.
inline SlopeFit loglog_slope(const CurveTable& table, std::size_t lo,
                             std::size_t hi) {
  std::vector<double> xs, ys;
  for (const auto& r : table.rows) {
    if (r.N < lo || r.N > hi || !(r.mean > 0.0)) continue;
    xs.push_back(std::log(static_cast<double>(r.N)));
    ys.push_back(std::log(r.mean));
  }
  if (xs.size() < 5)
    throw std::invalid_argument("loglog_slope: need >= 5 rows in window");
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  SlopeFit fit;
  fit.points = xs.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

// Default N grid: dense at the head, stepped towards 200.
inline std::vector<std::size_t> default_n_grid() {
  std::vector<std::size_t> g;
  for (std::size_t n = 1; n <= 20; ++n) g.push_back(n);
  for (std::size_t n = 25; n <= 100; n += 5) g.push_back(n);
  for (std::size_t n = 120; n <= 200; n += 20) g.push_back(n);
  return g;
}

struct FigureConfig {
  Distribution dist;
  std::string dist_name;
  std::string params;
  RadialCost cost;
  double reference_C = 0.0;
};

// The Monte Carlo study's panel configurations.
inline std::vector<FigureConfig> figure_configs(int fig) {
  auto family12 = [] {
    std::vector<FigureConfig> v;
    auto add = [&v](Distribution d, std::string name, std::string params) {
      v.push_back({std::move(d), std::move(name), std::move(params),
                   RadialCost::power(1.0), 0.0});
    };
    add(Distribution::geometric(0.1), "geometric", "q=0.1");
    add(Distribution::geometric(0.5), "geometric", "q=0.5");
    add(Distribution::geometric(0.9), "geometric", "q=0.9");
    add(Distribution::poisson(1.0), "poisson", "lambda=1");
    add(Distribution::poisson(2.0), "poisson", "lambda=2");
    add(Distribution::poisson(16.0), "poisson", "lambda=16");
    add(Distribution::gaussian(0.5), "gaussian", "sigma=0.5");
    add(Distribution::gaussian(1.0), "gaussian", "sigma=1");
    add(Distribution::gaussian(16.0), "gaussian", "sigma=16");
    add(Distribution::weibull(1.0), "weibull", "c=1");
    add(Distribution::weibull(3.0), "weibull", "c=3");
    add(Distribution::weibull(5.0), "weibull", "c=5");
    return v;
  };
  auto family4 = [] {
    std::vector<std::pair<Distribution, std::pair<std::string, std::string>>>
        v;
    v.push_back({Distribution::geometric(0.5), {"geometric", "q=0.5"}});
    v.push_back({Distribution::poisson(2.0), {"poisson", "lambda=2"}});
    v.push_back({Distribution::gaussian(1.0), {"gaussian", "sigma=1"}});
    v.push_back({Distribution::weibull(3.0), {"weibull", "c=3"}});
    return v;
  };
  const double a8 = std::pow(2.0, -8.0);
  std::vector<FigureConfig> out;
  switch (fig) {
    case 1:
      out = family12();
      for (auto& c : out) c.reference_C = 25.0;
      return out;
    case 2:
      for (auto& [d, names] : family4())
        for (double p : {1.0, 2.0, 3.0})
          out.push_back({d, names.first, names.second,
                         RadialCost::power(p), 25.0});
      return out;
    case 3:
      out = family12();
      for (auto& c : out) {
        c.cost = RadialCost::exponential(1.0, a8);
        c.reference_C = 0.1;
      }
      return out;
    case 4:
      for (auto& [d, names] : family4()) {
        if (names.first != "gaussian" && names.first != "weibull") continue;
        for (double p : {1.0, 2.0, 3.0})
          out.push_back({d, names.first, names.second,
                         RadialCost::exponential(p, a8), 0.01});
      }
      return out;
    default:
      throw std::invalid_argument("figure_configs: fig in {1,2,3,4}");
  }
}

inline std::vector<CurveTable> figure_run(int fig, std::size_t trials,
                                          const Seed& seed,
                                          unsigned threads = 1,
                                          std::vector<std::size_t> n_grid =
                                              {}) {
  if (n_grid.empty()) n_grid = default_n_grid();
  std::vector<CurveTable> out;
  for (const auto& fc : figure_configs(fig)) {
    ExperimentConfig cfg;
    cfg.dist = fc.dist;
    cfg.dist_name = fc.dist_name;
    cfg.params = fc.params;
    cfg.cost = fc.cost;
    cfg.n_grid = n_grid;
    cfg.trials = trials;
    cfg.seed = seed;
    cfg.method = CostMethod::Quantile1d;
    cfg.threads = threads;
    CurveTable t = estimate_mean_cost(cfg);
    t.reference_C = fc.reference_C;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace otconc

#endif  // OTCONC_HARNESS_HPP_
