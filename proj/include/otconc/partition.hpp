#ifndef OTCONC_PARTITION_HPP_
#define OTCONC_PARTITION_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <vector>

#include "otconc/common.hpp"
#include "otconc/cost.hpp"
#include "otconc/distribution.hpp"
#include "otconc/measure.hpp"
#include "otconc/ot.hpp"
#include "otconc/rng.hpp"

namespace otconc {

// Dyadic annulus of |x|: 0 for the closed unit ball, else the unique k >= 1
// with 2^{k-1} < |x| <= 2^k.
inline int annulus_index(double norm) {
  if (norm <= 1.0) return 0;
  int k = static_cast<int>(std::ceil(std::log2(norm)));
  // Guard the boundary against log2 rounding either way.
  while (k >= 1 && norm <= std::ldexp(1.0, k - 1)) --k;
  while (norm > std::ldexp(1.0, k)) ++k;
  return std::max(k, 1);
}

inline int annulus_index(const Point& x) { return annulus_index(x.norm()); }

struct AnnularDecomposition {
  std::map<int, double> masses;
  std::map<int, DiscreteMeasure> conditionals;  // delta_0 when mass is 0
  int max_k = 0;

  double mass(int k) const {
    auto it = masses.find(k);
    return it == masses.end() ? 0.0 : it->second;
  }
  const DiscreteMeasure& conditional(int k) const {
    auto it = conditionals.find(k);
    if (it == conditionals.end())
      throw std::out_of_range("AnnularDecomposition: no such annulus");
    return it->second;
  }
};

inline AnnularDecomposition decompose(const DiscreteMeasure& m) {
  AnnularDecomposition dec;
  std::map<int, std::vector<DiscreteMeasure::Atom>> groups;
  for (const auto& a : m.atoms) {
    const int k = annulus_index(a.point);
    groups[k].push_back(a);
    dec.masses[k] += a.weight;
    dec.max_k = std::max(dec.max_k, k);
  }
  for (auto& [k, atoms] : groups) {
    const double w = dec.masses[k];
    for (auto& a : atoms) a.weight /= w;
    // Renormalization can leave the sum off by a few ulps; rescale exactly.
    double s = 0.0;
    for (const auto& a : atoms) s += a.weight;
    for (auto& a : atoms) a.weight /= s;
    dec.conditionals.emplace(k, DiscreteMeasure(std::move(atoms), m.dim));
  }
  return dec;
}

// Pushforward under T^k(x) = x / 2^k.
inline DiscreteMeasure dilate(const DiscreteMeasure& m, int k) {
  const double scale = std::ldexp(1.0, -k);
  std::vector<DiscreteMeasure::Atom> atoms;
  atoms.reserve(m.size());
  for (const auto& a : m.atoms) {
    std::vector<double> c = a.point.coords;
    for (double& x : c) x *= scale;
    atoms.push_back({Point(std::move(c)), a.weight});
  }
  return DiscreteMeasure(std::move(atoms), m.dim);
}

struct CouplingBoundReport {
  double total = 0.0;        // term_I + G-integrals over both remainders
  double term_I = 0.0;       // sum_k (mu ^ nu)(A^k) D_f(mu^k, nu^k)
  double int_G_nu_rem = 0.0;
  double int_G_lambda_rem = 0.0;
  double term_III_x2 = 0.0;  // 2 * int G d(nu_rem)
  double term_IV = 0.0;      // int G d(lambda_rem) - int G d(nu_rem)
  double coupling_cost = 0.0;  // realized cost of the constructed plan
  double rho = 0.0;          // total remainder mass
  double exact = 0.0;        // reference exact OT cost
};

// The proof coupling: transport annulus-by-annulus where masses overlap and
// pair the leftover marginals as a product measure. Returns both the
// realized plan cost and the G-split upper bound; each dominates the exact
// optimum by construction.
inline CouplingBoundReport coupling_upper_bound(const DiscreteMeasure& mu,
                                                const DiscreteMeasure& nu,
                                                const RadialCost& cost,
                                                const GrowthPair& growth) {
  CouplingBoundReport rep;
  const auto dmu = decompose(mu);
  const auto dnu = decompose(nu);

  std::vector<int> ks;
  for (const auto& [k, w] : dmu.masses) ks.push_back(k);
  for (const auto& [k, w] : dnu.masses)
    if (!dmu.masses.count(k)) ks.push_back(k);
  std::sort(ks.begin(), ks.end());

  // Remainder marginals nu_rem (mu-excess) and lambda_rem (nu-excess).
  std::vector<DiscreteMeasure::Atom> rem_mu, rem_nu;
  double rho = 0.0;
  for (int k : ks) {
    const double wm = dmu.mass(k), wn = dnu.mass(k);
    const double overlap = std::min(wm, wn);
    if (overlap > 0.0) {
      const auto& mk = dmu.conditional(k);
      const auto& nk = dnu.conditional(k);
      const auto plan = exact_ot(mk, nk, cost);
      rep.term_I += overlap * plan.cost;
      rep.coupling_cost += overlap * plan.cost;
    }
    if (wm > wn) {
      rho += wm - wn;
      for (const auto& a : dmu.conditional(k).atoms)
        rem_mu.push_back({a.point, a.weight * (wm - wn)});
    } else if (wn > wm) {
      for (const auto& a : dnu.conditional(k).atoms)
        rem_nu.push_back({a.point, a.weight * (wn - wm)});
    }
  }
  rep.rho = rho;

  if (rho > 1e-15) {
    for (const auto& am : rem_mu) {
      const double Gm = growth.eval_G(am.point.norm());
      rep.int_G_nu_rem += am.weight * Gm;
      for (const auto& an : rem_nu) {
        rep.coupling_cost +=
            am.weight * an.weight / rho * cost(distance(am.point, an.point));
      }
    }
    for (const auto& an : rem_nu)
      rep.int_G_lambda_rem += an.weight * growth.eval_G(an.point.norm());
  }
  rep.term_III_x2 = 2.0 * rep.int_G_nu_rem;
  rep.term_IV = rep.int_G_lambda_rem - rep.int_G_nu_rem;
  rep.total = rep.term_I + rep.int_G_nu_rem + rep.int_G_lambda_rem;
  rep.exact = exact_ot(mu, nu, cost).cost;
  return rep;
}

struct SelfNormConfig {
  double delta = 1.0;   // dyadic decay exponent
  double alpha = 0.5;   // normalization exponent in (0, 1)
  bool true_minus_empirical = true;

  SelfNormConfig(double delta_, double alpha_, bool tme = true)
      : delta(delta_), alpha(alpha_), true_minus_empirical(tme) {
    if (!(delta > 0.0) || !(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("SelfNormConfig: delta > 0, alpha in (0,1)");
  }
};

// sup_k 2^{-k delta} (mu(A^k) - mu_N(A^k))_+ / mu(A^k)^alpha over occupied
// indices, with 0/0 := 0.
inline double selfnorm_stat(const std::map<int, double>& masses,
                            const std::map<int, double>& empirical_masses,
                            const SelfNormConfig& cfg) {
  auto get = [](const std::map<int, double>& m, int k) {
    auto it = m.find(k);
    return it == m.end() ? 0.0 : it->second;
  };
  double sup = 0.0;
  for (const auto& [k, w] : masses) {
    const double we = get(empirical_masses, k);
    const double num = cfg.true_minus_empirical ? w - we : we - w;
    const double den = cfg.true_minus_empirical ? w : we;
    if (num <= 0.0) continue;
    if (den <= 0.0) continue;  // 0/0 := 0 (num > 0 with den = 0 cannot occur
                               // in the true-minus-empirical direction)
    const double v =
        std::pow(2.0, -k * cfg.delta) * num / std::pow(den, cfg.alpha);
    sup = std::max(sup, v);
  }
  if (!cfg.true_minus_empirical) {
    for (const auto& [k, we] : empirical_masses) {
      if (masses.count(k)) continue;
      if (we <= 0.0) continue;
      sup = std::max(sup, std::pow(2.0, -k * cfg.delta) * we /
                              std::pow(we, cfg.alpha));
    }
  }
  return sup;
}

// The analytic annulus-mass map of a distribution, truncated where the
// radial CDF passes 1 - 1e-9; the residual mass is folded into the last
// index (conservative for the statistic).
inline std::map<int, double> annulus_mass_map(const Distribution& dist) {
  std::map<int, double> out;
  const double rq = dist.radial_quantile(1.0 - 1e-9);
  const int kmax = std::max(0, annulus_index(rq));
  double acc = 0.0;
  for (int k = 0; k <= kmax; ++k) {
    const double w = annulus_mass(dist, k);
    if (w > 0.0) out[k] = w;
    acc += w;
  }
  const double residual = 1.0 - acc;
  if (residual > 0.0) out[kmax] += residual;
  return out;
}

struct SelfNormTailRow {
  double x = 0.0;
  double phat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 1.0;
  double envelope = 0.0;
};

inline double selfnorm_envelope(const SelfNormConfig& cfg, std::size_t N,
                                double x) {
  if (x > 1.0) return 0.0;
  const double B = std::pow(2.0, -(3.0 + 2.0 * cfg.alpha));
  const double C =
      std::max(8.0 * std::exp(1.0),
               16.0 / (1.0 - std::pow(4.0, -cfg.delta)));
  const double expo = 2.0 * (1.0 - std::max(cfg.alpha, 0.5));
  return C * std::exp(-B * x * x *
                      std::pow(static_cast<double>(N), expo));
}

// Monte Carlo tail of the statistic with Wilson 95% intervals and the
// theoretical envelope column.
inline std::vector<SelfNormTailRow> selfnorm_tail_mc(
    const Distribution& dist, std::size_t N, const SelfNormConfig& cfg,
    const std::vector<double>& x_grid, std::size_t trials, const Seed& seed,
    std::vector<double>* stats_out = nullptr) {
  if (trials < 1) throw std::invalid_argument("selfnorm_tail_mc: trials >= 1");
  const auto masses = annulus_mass_map(dist);
  const int kmax = masses.empty() ? 0 : masses.rbegin()->first;

  std::vector<double> stats(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    std::map<int, double> emp;
    const double w = N == 0 ? 1.0 : 1.0 / static_cast<double>(N);
    if (N == 0) {
      emp[0] = 1.0;  // mu_N = delta_0 convention
    } else {
      for (std::size_t i = 0; i < N; ++i) {
        const Point p = dist.sample_point(seed, t, i);
        // Fold samples beyond the truncation radius into the last index.
        emp[std::min(annulus_index(p), kmax)] += w;
      }
    }
    stats[t] = selfnorm_stat(masses, emp, cfg);
  }
  if (stats_out) *stats_out = stats;

  std::vector<SelfNormTailRow> rows;
  rows.reserve(x_grid.size());
  for (double x : x_grid) {
    double exceed = 0.0;
    for (double s : stats)
      if (s > x) exceed += 1.0;
    const auto ci = wilson_interval(exceed, static_cast<double>(trials));
    rows.push_back({x, exceed / static_cast<double>(trials), ci.lo, ci.hi,
                    selfnorm_envelope(cfg, N, x)});
  }
  return rows;
}

}  // namespace otconc

#endif  // OTCONC_PARTITION_HPP_
