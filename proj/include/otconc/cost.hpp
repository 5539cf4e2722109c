#ifndef OTCONC_COST_HPP_
#define OTCONC_COST_HPP_

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>

#include "otconc/common.hpp"

namespace otconc {

// c_p = 2^{p-1} for p >= 1, otherwise 1 (the radial triangle constant).
inline double cp_constant(double p) {
  return p >= 1.0 ? std::pow(2.0, p - 1.0) : 1.0;
}

// Radial cost f with growth order p. Power: f(r) = r^p.
// Exponential: f(r) = e^{a r^p} - 1. Overflow maps to +inf.
struct RadialCost {
  enum class Kind { Power, Exponential, Custom };

  Kind kind = Kind::Power;
  double p = 1.0;
  double a = 0.0;
  std::function<double(double)> custom;

  static RadialCost power(double p) {
    if (!(p > 0.0)) throw std::invalid_argument("power cost: p > 0");
    RadialCost c;
    c.kind = Kind::Power;
    c.p = p;
    return c;
  }
  static RadialCost exponential(double p, double a) {
    if (!(p > 0.0) || !(a > 0.0))
      throw std::invalid_argument("exponential cost: p > 0 and a > 0");
    RadialCost c;
    c.kind = Kind::Exponential;
    c.p = p;
    c.a = a;
    return c;
  }
  static RadialCost custom_cost(std::function<double(double)> f, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("custom cost: p > 0");
    RadialCost c;
    c.kind = Kind::Custom;
    c.p = p;
    c.custom = std::move(f);
    return c;
  }

  // Convex nondecreasing on [0, inf)? True for the built-ins with p >= 1.
  bool convex() const {
    return kind != Kind::Custom && p >= 1.0;
  }

  double operator()(double r) const {
    if (r < 0.0) throw std::invalid_argument("cost: r >= 0");
    switch (kind) {
      case Kind::Power:
        if (p == 1.0) return r;
        if (p == 2.0) return r * r;
        if (p == 3.0) return r * r * r;
        return std::pow(r, p);
      case Kind::Exponential: {
        double rp;
        if (p == 1.0)
          rp = r;
        else if (p == 2.0)
          rp = r * r;
        else if (p == 3.0)
          rp = r * r * r;
        else
          rp = std::pow(r, p);
        const double e = a * rp;
        if (e > 709.0) return kInf;
        return std::expm1(e);
      }
      case Kind::Custom: {
        const double v = custom(r);
        return std::isfinite(v) ? v : kInf;
      }
    }
    throw std::logic_error("unreachable");
  }

  std::string name() const {
    switch (kind) {
      case Kind::Power:
        return "power";
      case Kind::Exponential:
        return "exp";
      case Kind::Custom:
        return "custom";
    }
    return "?";
  }
};

inline double eval_f(const RadialCost& c, double r) { return c(r); }

class LocalGrowthViolation : public std::runtime_error {
 public:
  explicit LocalGrowthViolation(const std::string& what)
      : std::runtime_error(what) {}
};

// g bounds dilations (f(R|x|) <= g(R)|x|^p for |x| <= 1); G splits the cost
// across the two endpoints (f(|x-y|) <= G(|x|) + G(|y|), G nondecreasing).
struct GrowthPair {
  double p = 1.0;
  std::function<double(double)> g;
  std::function<double(double)> G;
  // G memoized on dyadic points: the K-series queries exactly G(2^k).
  mutable std::map<int, double> dyadic_G;

  GrowthPair() = default;
  GrowthPair(double p_, std::function<double(double)> g_,
             std::function<double(double)> G_)
      : p(p_), g(std::move(g_)), G(std::move(G_)) {}
  GrowthPair(const GrowthPair& o) : p(o.p), g(o.g), G(o.G) {}
  GrowthPair& operator=(const GrowthPair& o) {
    p = o.p;
    g = o.g;
    G = o.G;
    dyadic_G.clear();
    return *this;
  }

  double eval_g(double R) const {
    const double v = g(R);
    return std::isfinite(v) ? v : kInf;
  }
  double eval_G(double r) const {
    const double v = G(r);
    return std::isfinite(v) ? v : kInf;
  }
  double eval_G_dyadic(int k) const {
    auto it = dyadic_G.find(k);
    if (it != dyadic_G.end()) return it->second;
    const double v = eval_G(std::ldexp(1.0, k));
    dyadic_G.emplace(k, v);
    return v;
  }
};

// The paper's standard choices: Power -> (g(R)=R^p, G(r)=c_p r^p);
// Exponential -> (g = f, G(r) = (e^{2 c_p a r^p} - 1)/2). Custom costs get
// grid-evaluated suprema (512 log points per octave).
inline GrowthPair default_growth(const RadialCost& cost) {
  const double p = cost.p;
  switch (cost.kind) {
    case RadialCost::Kind::Power: {
      const double cp = cp_constant(p);
      return GrowthPair(
          p, [p](double R) { return std::pow(R, p); },
          [p, cp](double r) { return cp * std::pow(r, p); });
    }
    case RadialCost::Kind::Exponential: {
      const double a = cost.a;
      const double cp = cp_constant(p);
      return GrowthPair(
          p, [cost](double R) { return cost(R); },
          [p, a, cp](double r) {
            const double e = 2.0 * cp * a * std::pow(r, p);
            if (e > 709.0) return kInf;
            return 0.5 * std::expm1(e);
          });
    }
    case RadialCost::Kind::Custom: {
      // Check local growth near zero: f(r)/r^p must stay bounded. Baseline
      // the ratio on [2^-20, 1); if it keeps growing by another factor of 64
      // deeper down, declare f(r)/r^p unbounded.
      double baseline = 0.0;
      for (int k = -20; k < 0; ++k) {
        const double lo = std::ldexp(1.0, k);
        for (int j = 0; j < 8; ++j) {
          const double r = lo * std::pow(2.0, j / 8.0);
          const double ratio = cost(r) / std::pow(r, p);
          if (std::isfinite(ratio)) baseline = std::max(baseline, ratio);
        }
      }
      for (int k = -40; k < -20; ++k) {
        const double r = std::ldexp(1.0, k);
        const double ratio = cost(r) / std::pow(r, p);
        if (std::isfinite(ratio) && ratio > 64.0 * std::max(baseline, 1.0))
          throw LocalGrowthViolation(
              "custom cost: f(r)/r^p unbounded near 0 on test grid");
      }
      auto f = cost;
      auto sup_ratio = [f, p](double R) {
        // sup_{0<r<=R} f(r)/r^p on 512 log points per octave below R.
        double s = 0.0;
        const int octaves = 60;
        for (int k = 0; k < octaves; ++k) {
          for (int j = 0; j < 512; ++j) {
            const double r =
                R * std::pow(2.0, -(k + j / 512.0));
            if (r <= 0.0) break;
            const double v = f(r) / std::pow(r, p);
            if (std::isfinite(v)) s = std::max(s, v);
          }
        }
        return s;
      };
      return GrowthPair(
          p,
          [sup_ratio, p](double R) {
            return std::pow(R, p) * sup_ratio(R);
          },
          [f](double R) {
            // sup_{r<=2R} f(r); f need not be monotone for Custom.
            double s = 0.0;
            const int octaves = 60;
            for (int k = 0; k < octaves; ++k) {
              for (int j = 0; j < 512; ++j) {
                const double r = 2.0 * R * std::pow(2.0, -(k + j / 512.0));
                const double v = f(r);
                if (std::isfinite(v))
                  s = std::max(s, v);
                else
                  return kInf;
              }
            }
            return s;
          });
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace otconc

#endif  // OTCONC_COST_HPP_
