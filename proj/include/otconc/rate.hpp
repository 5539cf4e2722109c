#ifndef OTCONC_RATE_HPP_
#define OTCONC_RATE_HPP_

#include <cmath>
#include <stdexcept>
#include <string>

#include "otconc/common.hpp"

namespace otconc {

enum class RateRegime { AboveHalf, Critical, BelowHalf };  // p vs d/2

inline RateRegime classify_regime(double d, double p) {
  // Exact when d and 2p are integers; otherwise relative tolerance 1e-12.
  const double two_p = 2.0 * p;
  bool critical;
  if (d == std::floor(d) && two_p == std::floor(two_p)) {
    critical = (two_p == d);
  } else {
    critical = std::abs(two_p - d) <= 1e-12 * std::max(two_p, d);
  }
  if (critical) return RateRegime::Critical;
  return p > d / 2.0 ? RateRegime::AboveHalf : RateRegime::BelowHalf;
}

inline std::string regime_name(RateRegime r) {
  switch (r) {
    case RateRegime::AboveHalf:
      return "p>d/2";
    case RateRegime::Critical:
      return "p=d/2";
    case RateRegime::BelowHalf:
      return "p<d/2";
  }
  return "?";
}

struct RateParams {
  double d = 1.0;
  double p = 1.0;
  double eta = 0.5;
  RateRegime regime = RateRegime::AboveHalf;

  RateParams(double d_, double p_, double eta_) : d(d_), p(p_), eta(eta_) {
    if (!(d >= 1.0) || !(p > 0.0))
      throw std::invalid_argument("RateParams: d >= 1 and p > 0");
    const double eta_max = std::min(0.5, p / d);
    if (!(eta > 0.0 && eta <= eta_max + 1e-15))
      throw std::invalid_argument("RateParams: eta in (0, 1/2 ^ p/d]");
    regime = classify_regime(d, p);
  }

  double eta_max() const { return std::min(0.5, p / d); }
};

inline double rate_phi(double d, double p, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("rate_phi: x > 0");
  switch (classify_regime(d, p)) {
    case RateRegime::AboveHalf:
      return x * x;
    case RateRegime::Critical: {
      const double r = x / std::log(2.0 + 1.0 / x);
      return r * r;
    }
    case RateRegime::BelowHalf:
      return std::pow(x, d / p);
  }
  throw std::logic_error("unreachable");
}

inline double rate_phi_eta(const RateParams& params, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("rate_phi_eta: x > 0");
  const double base = std::pow(x, 1.0 / params.eta);
  if (params.regime == RateRegime::Critical) {
    const double l = std::log(2.0 + 1.0 / x);
    return base / (l * l);
  }
  return base;
}

// The explicit constant A with phi_eta(x/a) >= A phi_eta(x) for a >= x.
inline double phi_eta_scale_constant(double a, const RateParams& params) {
  if (!(a > 0.0)) throw std::invalid_argument("scale constant: a > 0");
  const double lead = std::pow(a, -1.0 / params.eta);
  if (params.regime != RateRegime::Critical) return lead;
  const double la = std::log(2.0 + 1.0 / a);
  const double ratio = la / (std::log(std::max(a, 1.0)) + la);
  return lead * ratio * ratio;
}

}  // namespace otconc

#endif  // OTCONC_RATE_HPP_
