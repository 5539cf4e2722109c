#ifndef OTCONC_BOUNDS_HPP_
#define OTCONC_BOUNDS_HPP_

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "otconc/common.hpp"
#include "otconc/cost.hpp"
#include "otconc/distribution.hpp"
#include "otconc/measure.hpp"
#include "otconc/rate.hpp"

namespace otconc {

// The weight function S of the K-series: nondecreasing, strictly positive.
struct SFunction {
  enum class Kind { PolyClip, ExpPow, Custom };

  Kind kind = Kind::PolyClip;
  double q = 0.0;  // PolyClip: r -> 1 v r^q
  double b = 0.0;  // ExpPow: r -> e^{b r^p}
  double p = 0.0;
  std::function<double(double)> custom;

  static SFunction poly_clip(double q) {
    if (!(q > 0.0)) throw std::invalid_argument("poly_clip: q > 0");
    SFunction s;
    s.kind = Kind::PolyClip;
    s.q = q;
    return s;
  }
  static SFunction exp_pow(double b, double p) {
    if (!(b > 0.0) || !(p > 0.0))
      throw std::invalid_argument("exp_pow: b > 0 and p > 0");
    SFunction s;
    s.kind = Kind::ExpPow;
    s.b = b;
    s.p = p;
    return s;
  }
  static SFunction custom_s(std::function<double(double)> f) {
    SFunction s;
    s.kind = Kind::Custom;
    s.custom = std::move(f);
    return s;
  }

  double operator()(double r) const {
    switch (kind) {
      case Kind::PolyClip:
        return std::max(1.0, std::pow(r, q));
      case Kind::ExpPow: {
        const double e = b * std::pow(r, p);
        return e > 709.0 ? kInf : std::exp(e);
      }
      case Kind::Custom:
        return custom(r);
    }
    throw std::logic_error("unreachable");
  }

  double log_value(double r) const {
    switch (kind) {
      case Kind::PolyClip:
        return q * std::max(0.0, std::log(r));
      case Kind::ExpPow:
        return b * std::pow(r, p);
      case Kind::Custom: {
        const double v = custom(r);
        return v > 0.0 ? std::log(v) : -kInf;
      }
    }
    throw std::logic_error("unreachable");
  }

  std::string name() const {
    switch (kind) {
      case Kind::PolyClip:
        return "polyclip";
      case Kind::ExpPow:
        return "exppow";
      case Kind::Custom:
        return "custom";
    }
    return "?";
  }
};

struct KappaResult {
  double K_g = 0.0;
  double K_G = 0.0;
  bool divergent_g = false;
  bool divergent_G = false;
  // Largest admissible c0 when S is PolyClip: q(1 - eta) - p.
  double max_c0 = kInf;

  bool finite() const { return !divergent_g && !divergent_G; }
};

namespace detail {

// log g(r) / log G(r) that stay finite where the plain evaluation overflows
// (exponential costs reach e^{a 2^{kp}} within a few dozen annuli).
inline double log_g(const RadialCost& cost, const GrowthPair& growth,
                    double r) {
  const double v = growth.eval_g(r);
  if (std::isfinite(v) && v > 0.0) return std::log(v);
  if (cost.kind == RadialCost::Kind::Exponential)
    return cost.a * std::pow(r, cost.p);  // log(e^x - 1) -> x
  return v > 0.0 ? kInf : -kInf;
}

inline double log_G(const RadialCost& cost, const GrowthPair& growth,
                    double r) {
  const double v = growth.eval_G(r);
  if (std::isfinite(v) && v > 0.0) return std::log(v);
  if (cost.kind == RadialCost::Kind::Exponential)
    return 2.0 * cp_constant(cost.p) * cost.a * std::pow(r, cost.p) -
           std::log(2.0);
  return v > 0.0 ? kInf : -kInf;
}

// Sum exp(log_term(k)) for k >= 1 on top of term0, with ratio-based tail
// certification; DIVERGENT after 50 consecutive non-decreasing log terms.
inline std::pair<double, bool> dyadic_series(
    double term0, const std::function<double(int)>& log_term, double tol) {
  double sum = term0;
  double prev_log = -kInf;
  int bad = 0;
  for (int k = 1; k <= 100000; ++k) {
    const double lt = log_term(k);
    if (lt > 700.0) return {kInf, true};
    const double term = std::exp(lt);
    sum += term;
    if (prev_log > -kInf) {
      if (lt >= prev_log) {
        if (++bad >= 50) return {kInf, true};
      } else {
        bad = 0;
        const double rhat = std::exp(lt - prev_log);
        if (rhat < 0.99 &&
            term * rhat / (1.0 - rhat) < tol * std::max(sum, 1e-300))
          return {sum, false};
      }
    }
    prev_log = lt;
  }
  return {kInf, true};
}

}  // namespace detail

// K_g = g(2) + sum_{k>=1} 2^{k c0} g(2^{k+1}) / S(2^{k-1})^{1-eta} and
// K_G = G(1) + sum_{k>=1} 2^{k c0} G(2^k) / S(2^{k-1})^{1-eta}, evaluated in
// log space. Divergence is a reported outcome, not an error.
inline KappaResult kappa_series(const RadialCost& cost,
                                const GrowthPair& growth, const SFunction& S,
                                double c0, double eta, double tol = 1e-10) {
  if (!(c0 > 0.0)) throw std::invalid_argument("kappa_series: c0 > 0");
  if (!(eta > 0.0 && eta < 1.0))
    throw std::invalid_argument("kappa_series: eta in (0,1)");
  if (!(tol > 0.0)) throw std::invalid_argument("kappa_series: tol > 0");

  KappaResult res;
  if (S.kind == SFunction::Kind::PolyClip)
    res.max_c0 = S.q * (1.0 - eta) - growth.p;

  const double l2 = std::log(2.0);
  auto lt_g = [&](int k) {
    return k * c0 * l2 + detail::log_g(cost, growth, std::ldexp(1.0, k + 1)) -
           (1.0 - eta) * S.log_value(std::ldexp(1.0, k - 1));
  };
  auto lt_G = [&](int k) {
    return k * c0 * l2 + detail::log_G(cost, growth, std::ldexp(1.0, k)) -
           (1.0 - eta) * S.log_value(std::ldexp(1.0, k - 1));
  };
  auto [kg, dg] = detail::dyadic_series(growth.eval_g(2.0), lt_g, tol);
  auto [kG, dG] = detail::dyadic_series(growth.eval_G(1.0), lt_G, tol);
  res.K_g = kg;
  res.divergent_g = dg;
  res.K_G = kG;
  res.divergent_G = dG;
  return res;
}

// Outcome of the eta/gamma selection tables for a given integrability class.
struct CaseSelection {
  int case_id = 0;
  double gamma = 0.0;
  double eta = 0.0;
  double eta_base = 0.0;  // the pre-epsilon value when uses_eps
  double eps = 0.0;
  bool uses_eps = false;
  SFunction S;
};

// Polynomial-moment selection (cost T_p, S(r) = 1 v r^q, gamma = q/p).
inline CaseSelection select_case_tp(double d, double p, double q,
                                    double eps = -1.0) {
  if (!(q > p)) throw std::invalid_argument("select_case_tp: q > p required");
  CaseSelection sel;
  sel.gamma = q / p;
  sel.S = SFunction::poly_clip(q);
  const bool high = p >= d / 2.0;
  const double eta_eps_base = 1.0 - p / q;
  if (eps < 0.0) eps = eta_eps_base / 10.0;
  if (!(eps > 0.0 && eps < eta_eps_base))
    throw std::invalid_argument("select_case_tp: eps in (0, 1 - p/q)");
  if (high) {
    if (q > 2.0 * p) {
      sel.case_id = 1;
      sel.eta = 0.5;
    } else {
      sel.case_id = 2;
      sel.uses_eps = true;
      sel.eta_base = eta_eps_base;
      sel.eps = eps;
      sel.eta = eta_eps_base - eps;
    }
  } else {
    const double mid = d * p / (d - p);
    if (q > 2.0 * p) {
      sel.case_id = 3;
      sel.eta = p / d;
    } else if (q > mid) {
      sel.case_id = 4;
      sel.eta = p / d;
    } else {
      sel.case_id = 5;
      sel.uses_eps = true;
      sel.eta_base = eta_eps_base;
      sel.eps = eps;
      sel.eta = eta_eps_base - eps;
    }
  }
  return sel;
}

// Exponential-moment selection (cost E_{p,a}, S(r) = e^{b r^p},
// gamma = b/(2 c_p a)); requires b > 2^{p+1} c_p a.
inline CaseSelection select_case_exp(double d, double p, double a, double b,
                                     double eps = -1.0) {
  const double cp = cp_constant(p);
  const double t = std::pow(2.0, p + 1.0) * cp * a;
  if (!(b > t))
    throw std::invalid_argument(
        "select_case_exp: need b > 2^{p+1} c_p a");
  CaseSelection sel;
  sel.gamma = b / (2.0 * cp * a);
  sel.S = SFunction::exp_pow(b, p);
  const bool high = p >= d / 2.0;
  const double eta_eps_base = 1.0 - t / b;
  if (eps < 0.0) eps = eta_eps_base / 10.0;
  if (!(eps > 0.0 && eps < eta_eps_base))
    throw std::invalid_argument("select_case_exp: eps in (0, 1 - t/b)");
  if (high) {
    if (b > 2.0 * t) {
      sel.case_id = 1;
      sel.eta = 0.5;
    } else {
      sel.case_id = 2;
      sel.uses_eps = true;
      sel.eta_base = eta_eps_base;
      sel.eps = eps;
      sel.eta = eta_eps_base - eps;
    }
  } else {
    const double mid = t * d / (d - p);
    if (b > mid) {
      sel.case_id = 3;
      sel.eta = p / d;
    } else {
      sel.case_id = 4;
      sel.uses_eps = true;
      sel.eta_base = eta_eps_base;
      sel.eps = eps;
      sel.eta = eta_eps_base - eps;
    }
  }
  return sel;
}

// F = (1 v M_1(mu;S))^{1-eta} + (1 v M_p(mu))^{1/2 - 1/gamma} M_gamma(mu;G)^{1/gamma}
// for gamma > 2; for gamma in (1,2] the middle exponent becomes eps.
// Applied to an empirical measure this is F_N.
template <class Measure>
double compute_F(const Measure& m, const GrowthPair& growth,
                 const SFunction& S, double gamma, double eta,
                 double eps = -1.0) {
  if (!(gamma > 1.0)) throw std::invalid_argument("compute_F: gamma > 1");
  if (!(eta > 0.0 && eta < 1.0))
    throw std::invalid_argument("compute_F: eta in (0,1)");
  const double m1s =
      moment_h(m, [&S](double r) { return S(r); }, 1.0);
  const double mp = moment_poly(m, growth.p);
  const double mgG =
      moment_h(m, [&growth](double r) { return growth.eval_G(r); }, gamma);
  double mid_exp;
  if (gamma > 2.0) {
    mid_exp = 0.5 - 1.0 / gamma;
  } else {
    if (eps < 0.0) eps = (1.0 - 1.0 / gamma) / 2.0;
    mid_exp = eps;
  }
  return std::pow(std::max(1.0, m1s), 1.0 - eta) +
         std::pow(std::max(1.0, mp), mid_exp) * std::pow(mgG, 1.0 / gamma);
}

// Certification bundle for Assumption 2.1(c) plus the deviation functional.
struct AssumptionReport {
  double gamma = 0.0;
  double eta = 0.0;
  double eps = 0.0;   // the eta-shrink epsilon when the case uses one
  double c0 = 0.0;
  int case_id = 0;
  KappaResult kappa;
  double M1S = 0.0;
  double Mp = 0.0;
  double MgammaG = 0.0;
  double F = 0.0;
  RateRegime regime = RateRegime::AboveHalf;
};

template <class Measure>
AssumptionReport certify(const Measure& m, const RadialCost& cost,
                         const GrowthPair& growth, const CaseSelection& sel,
                         double d, double c0 = -1.0, double tol = 1e-10) {
  AssumptionReport rep;
  rep.gamma = sel.gamma;
  rep.eta = sel.eta;
  rep.eps = sel.uses_eps ? sel.eps : 0.0;
  rep.case_id = sel.case_id;
  rep.regime = classify_regime(d, cost.p);
  if (c0 <= 0.0) {
    if (sel.S.kind == SFunction::Kind::PolyClip)
      c0 = (sel.S.q * (1.0 - sel.eta) - cost.p) / 2.0;
    else
      c0 = 1.0;
    if (!(c0 > 0.0)) c0 = 0.5;
  }
  rep.c0 = c0;
  rep.kappa = kappa_series(cost, growth, sel.S, c0, sel.eta, tol);
  rep.M1S = moment_h(m, [&sel](double r) { return sel.S(r); }, 1.0);
  rep.Mp = moment_poly(m, cost.p);
  rep.MgammaG =
      moment_h(m, [&growth](double r) { return growth.eval_G(r); }, sel.gamma);
  rep.F = compute_F(m, growth, sel.S, sel.gamma, sel.eta);
  return rep;
}

struct EnvelopeParams {
  double c = 1.0;
  double C = 1.0;
  double A0 = 1.0;
  std::string case_id;
};

// Theorem envelope: gamma > 2: C e^{-c N phi_eta(x)} 1{x <= A0};
// gamma in (1,2]: C (e^{-c N phi_eta(x)} + e^{-c N^{2(1-1/gamma-eps)} x^2})
// with the same indicator.
inline double envelope_theorem(const EnvelopeParams& params,
                               const RateParams& rate, double gamma,
                               double eps, std::size_t N, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("envelope_theorem: x > 0");
  if (x > params.A0) return 0.0;
  const double Nf = static_cast<double>(N);
  const double main = std::exp(-params.c * Nf * rate_phi_eta(rate, x));
  if (gamma > 2.0) return params.C * main;
  if (eps < 0.0) eps = (1.0 - 1.0 / gamma) / 2.0;
  const double extra =
      std::exp(-params.c * std::pow(Nf, 2.0 * (1.0 - 1.0 / gamma - eps)) * x *
               x);
  return params.C * (main + extra);
}

// Mean-deviation envelopes (empirical mean vs true mean of Y = G(|X|)).
//   a: C(e^{-cNx^2} 1{x<=1} + e^{-cNx^beta} 1{x>1})          [beta >= 1]
//   b: C(e^{-cNx^2} + e^{-c(Nx)^beta})                        [beta in (0,1)]
//   c: e^{-cNx^2} + C N (Nx)^{-t}                             [t > 2]
//   d: C N (Nx)^{-t}                                          [t in [1,2]]
inline double envelope_meandev(char clause, const EnvelopeParams& params,
                               std::size_t N, double x, double beta_or_t) {
  if (!(x > 0.0)) throw std::invalid_argument("envelope_meandev: x > 0");
  const double Nf = static_cast<double>(N);
  switch (clause) {
    case 'a': {
      const double beta = beta_or_t;
      if (!(beta >= 1.0))
        throw std::invalid_argument("envelope_meandev(a): beta >= 1");
      return params.C * (x <= 1.0
                             ? std::exp(-params.c * Nf * x * x)
                             : std::exp(-params.c * Nf * std::pow(x, beta)));
    }
    case 'b': {
      const double beta = beta_or_t;
      if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("envelope_meandev(b): beta in (0,1)");
      return params.C * (std::exp(-params.c * Nf * x * x) +
                         std::exp(-params.c * std::pow(Nf * x, beta)));
    }
    case 'c': {
      const double t = beta_or_t;
      if (!(t > 2.0)) throw std::invalid_argument("envelope_meandev(c): t > 2");
      return std::exp(-params.c * Nf * x * x) +
             params.C * Nf * std::pow(Nf * x, -t);
    }
    case 'd': {
      const double t = beta_or_t;
      if (!(t >= 1.0 && t <= 2.0))
        throw std::invalid_argument("envelope_meandev(d): t in [1,2]");
      return params.C * Nf * std::pow(Nf * x, -t);
    }
    default:
      throw std::invalid_argument("envelope_meandev: clause in {a,b,c,d}");
  }
}

// Example-specific parameters carried by envelope_example.
struct ExampleAux {
  double q = 0.0;     // polynomial moment order
  double beta = 0.0;  // exponential moment exponent
  double a = 0.0;     // cost scale
  double b = 0.0;     // moment scale
  double eps = 0.0;
};

// Evaluates the displayed tail/mean bound of the named example clause.
inline double envelope_example(const std::string& id,
                               const EnvelopeParams& params,
                               const RateParams& rate, const ExampleAux& aux,
                               std::size_t N, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("envelope_example: x > 0");
  const double Nf = static_cast<double>(N);
  const double d = rate.d, p = rate.p;
  const double c = params.c, C = params.C;
  const double ind1 = x <= 1.0 ? 1.0 : 0.0;
  auto phi = [&](double y) { return rate_phi(d, p, y); };
  auto poly_tail = [&](double expo) { return Nf * std::pow(Nf * x, -expo); };
  auto sub_gauss = [&](double theta) {
    // e^{-c N^{2 theta} x^2}
    return std::exp(-c * std::pow(Nf, 2.0 * theta) * x * x);
  };
  auto mean_rate_by_regime = [&]() {
    switch (rate.regime) {
      case RateRegime::AboveHalf:
        return std::pow(Nf, -0.5);
      case RateRegime::Critical:
        return std::log(Nf + 1.0) * std::pow(Nf, -0.5);
      case RateRegime::BelowHalf:
        return std::pow(Nf, -p / d);
    }
    return 0.0;
  };

  if (id == "3.2") {
    return x <= params.A0 ? C * std::exp(-c * Nf * phi(x)) : 0.0;
  }
  if (id == "3.3a") {
    return C * (std::exp(-c * Nf * phi(x)) * ind1 + poly_tail(aux.q / p));
  }
  if (id == "3.3b" || id == "3.3e") {
    const double theta = 1.0 - p / aux.q - aux.eps;
    return C * (sub_gauss(theta) * ind1 + poly_tail(aux.q / p));
  }
  if (id == "3.3c") {
    const double e0 = 1.0 - p / aux.q - aux.eps;
    const double l = std::log(2.0 + 1.0 / x);
    const double crit =
        std::exp(-c * Nf * std::pow(x, 1.0 / e0) / (l * l));
    return C * ((crit + sub_gauss(e0)) * ind1 + poly_tail(aux.q / p));
  }
  if (id == "3.3d") {
    const double e0 = 1.0 - p / aux.q - aux.eps;
    const double low = std::exp(-c * Nf * std::pow(x, d / p));
    return C * ((low + sub_gauss(e0)) * ind1 + poly_tail(aux.q / p));
  }
  if (id == "3.4a") {
    const double tail =
        x >= 1.0 ? std::exp(-c * Nf * std::pow(x, aux.beta / p)) : 0.0;
    return C * (std::exp(-c * Nf * phi(x)) * ind1 + tail);
  }
  if (id == "3.4b") {
    return C * (std::exp(-c * Nf * phi(x)) * ind1 +
                std::exp(-c * std::pow(Nf * x, aux.beta / p)));
  }
  if (id == "3.5a" || id == "3.5b") {
    const double expo = aux.b / (std::pow(2.0, p) * aux.a);
    if (id == "3.5a")
      return C * (std::exp(-c * Nf * phi(x)) * ind1 + poly_tail(expo));
    const double eta = 1.0 - std::pow(4.0, p) * aux.a / aux.b - aux.eps;
    const RateParams r_eta(d, p, std::min(eta, rate.eta_max()));
    return C * (std::exp(-c * Nf * rate_phi_eta(r_eta, x)) * ind1 +
                poly_tail(expo));
  }
  if (id == "3.6.1" || id == "3.6.2" || id == "3.6.3") {
    const double expo = aux.b / (2.0 * aux.a);
    const double eta_b = 1.0 - std::pow(2.0, p + 1.0) * aux.a / aux.b - aux.eps;
    const bool low_d = p < d / 2.0;
    const double ratio = std::pow(2.0, p) * d / (d - p);  // vs 2 sub-split
    if (id == "3.6.1")
      return C * (std::exp(-c * Nf * phi(x)) * ind1 + poly_tail(expo));
    auto phi_eta_term = [&]() {
      const RateParams r_eta(d, p, std::min(eta_b, rate.eta_max()));
      return std::exp(-c * Nf * rate_phi_eta(r_eta, x));
    };
    const double theta2 = 1.0 - 2.0 * aux.a / aux.b - aux.eps;
    if (id == "3.6.2") {
      double body;
      if (!low_d || ratio > 2.0) {
        body = phi_eta_term();
      } else {
        body = std::exp(-c * Nf * phi(x)) + sub_gauss(theta2);
      }
      return C * (body * ind1 + poly_tail(expo));
    }
    return C * ((phi_eta_term() + sub_gauss(theta2)) * ind1 +
                poly_tail(expo));
  }
  if (id == "3.8a" || id == "3.9a") {
    return C * mean_rate_by_regime();
  }
  if (id == "3.8b") {
    const double expo = 1.0 - std::pow(4.0, p) * aux.a / aux.b - aux.eps;
    return C * std::pow(Nf, -expo);
  }
  if (id == "3.9b") {
    const double expo =
        1.0 - std::pow(2.0, p + 1.0) * aux.a / aux.b - aux.eps;
    return C * std::pow(Nf, -expo);
  }
  if (id == "tp-mean") {
    return C * (mean_rate_by_regime() +
                std::pow(Nf, -(aux.q - p - aux.eps) / aux.q));
  }
  throw std::invalid_argument("envelope_example: unknown id " + id);
}

struct TailObservation {
  std::size_t N = 0;
  double x = 0.0;
  double phat = 0.0;
  std::size_t trials = 0;
};

class InfeasibleFit : public std::runtime_error {
 public:
  explicit InfeasibleFit(const std::string& what) : std::runtime_error(what) {}
};

// Fits (c, C) on log grids so that C * shape(c, N, x) dominates the Wilson
// upper bound at every observation with x <= A0. Smallest feasible C wins;
// ties broken by the largest c. A reporting aid, not a theorem.
inline EnvelopeParams fit_constants(
    const std::vector<TailObservation>& rows,
    const std::function<double(double, std::size_t, double)>& shape,
    double A0, const std::string& case_id = "") {
  if (rows.empty()) throw std::invalid_argument("fit_constants: empty table");
  for (const auto& r : rows)
    if (!(r.phat >= 0.0 && r.phat <= 1.0))
      throw std::invalid_argument("fit_constants: phat in [0,1]");

  std::vector<std::pair<std::size_t, double>> targets;  // (row idx, hi)
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].x > A0) continue;  // outside the indicator's support
    const double n = static_cast<double>(std::max<std::size_t>(1, rows[i].trials));
    targets.emplace_back(i, wilson_interval(rows[i].phat * n, n).hi);
  }

  const int per_decade = 25;
  auto log_grid = [&](double lo, double hi) {
    std::vector<double> g;
    const int n =
        static_cast<int>(std::round(std::log10(hi / lo) * per_decade));
    for (int i = 0; i <= n; ++i)
      g.push_back(lo * std::pow(10.0, static_cast<double>(i) / per_decade));
    return g;
  };
  const auto c_grid = log_grid(1e-4, 1e2);
  const auto C_grid = log_grid(1e-2, 1e4);

  bool found = false;
  EnvelopeParams best;
  best.A0 = A0;
  best.case_id = case_id;
  for (double c : c_grid) {
    // Minimal C that dominates all targets at this c.
    double need = 0.0;
    bool ok = true;
    for (const auto& [i, hi] : targets) {
      const double s = shape(c, rows[i].N, rows[i].x);
      if (!(s > 0.0)) {
        if (hi > 0.0) ok = false;
        continue;
      }
      need = std::max(need, hi / s);
      if (need > C_grid.back()) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    // Snap up to the C grid.
    double Cfit = C_grid.back();
    for (double Cv : C_grid)
      if (Cv >= need) {
        Cfit = Cv;
        break;
      }
    if (!found || Cfit < best.C ||
        (Cfit == best.C && c > best.c)) {
      best.c = c;
      best.C = Cfit;
      found = true;
    }
  }
  if (!found)
    throw InfeasibleFit("fit_constants: no (c, C) on the grid dominates");
  return best;
}

}  // namespace otconc

#endif  // OTCONC_BOUNDS_HPP_
