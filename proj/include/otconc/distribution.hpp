#ifndef OTCONC_DISTRIBUTION_HPP_
#define OTCONC_DISTRIBUTION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "otconc/common.hpp"
#include "otconc/measure.hpp"
#include "otconc/rng.hpp"

namespace otconc {

namespace detail {

// Adaptive Simpson on [lo, hi] with absolute budget.
inline double adaptive_simpson(const std::function<double(double)>& f,
                               double lo, double hi, double flo, double fmid,
                               double fhi, double whole, double budget,
                               int depth) {
  const double mid = 0.5 * (lo + hi);
  const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
  const double flm = f(lm), frm = f(rm);
  const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
  const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
  const double delta = left + right - whole;
  if (!std::isfinite(left + right))
    throw DivergenceError("quadrature: integrand overflow");
  if (depth <= 0 || std::abs(delta) <= 15.0 * budget)
    return left + right + delta / 15.0;
  return adaptive_simpson(f, lo, mid, flo, flm, fmid, left, budget / 2.0,
                          depth - 1) +
         adaptive_simpson(f, mid, hi, fmid, frm, fhi, right, budget / 2.0,
                          depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double lo,
                        double hi, double budget) {
  const double mid = 0.5 * (lo + hi);
  const double flo = f(lo), fmid = f(mid), fhi = f(hi);
  const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
  return adaptive_simpson(f, lo, hi, flo, fmid, fhi, whole, budget, 20);
}

}  // namespace detail

// Analytic sampler + radial CDF + moment functionals for the built-in
// families. Geometric/Poisson/Weibull are one-dimensional.
struct Distribution {
  enum class Family {
    Gaussian,
    Geometric,
    Poisson,
    Weibull,
    UniformBall,
    PointMass,
    Empirical
  };

  Family family = Family::PointMass;
  std::size_t dim = 1;
  double sigma = 0.0;   // Gaussian
  double q = 0.0;       // Geometric
  double lambda = 0.0;  // Poisson
  double shape = 0.0;   // Weibull c
  double radius = 0.0;  // UniformBall R
  Point mass_point;     // PointMass
  DiscreteMeasure emp;  // Empirical

  static Distribution gaussian(double sigma, std::size_t d = 1) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian: sigma > 0");
    if (d < 1) throw std::invalid_argument("gaussian: d >= 1");
    Distribution m;
    m.family = Family::Gaussian;
    m.dim = d;
    m.sigma = sigma;
    return m;
  }
  static Distribution geometric(double q) {
    if (!(q > 0.0 && q < 1.0))
      throw std::invalid_argument("geometric: q in (0,1)");
    Distribution m;
    m.family = Family::Geometric;
    m.dim = 1;
    m.q = q;
    return m;
  }
  static Distribution poisson(double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("poisson: lambda > 0");
    Distribution m;
    m.family = Family::Poisson;
    m.dim = 1;
    m.lambda = lambda;
    return m;
  }
  // Density c x^{c-1} e^{-x^c} on x > 0 (scale 1).
  static Distribution weibull(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("weibull: c > 0");
    Distribution m;
    m.family = Family::Weibull;
    m.dim = 1;
    m.shape = c;
    return m;
  }
  static Distribution uniform_ball(double r, std::size_t d) {
    if (!(r > 0.0)) throw std::invalid_argument("uniform_ball: R > 0");
    if (d < 1) throw std::invalid_argument("uniform_ball: d >= 1");
    Distribution m;
    m.family = Family::UniformBall;
    m.dim = d;
    m.radius = r;
    return m;
  }
  static Distribution point_mass(Point x) {
    Distribution m;
    m.family = Family::PointMass;
    m.dim = x.dim();
    m.mass_point = std::move(x);
    return m;
  }
  static Distribution empirical(DiscreteMeasure mu) {
    Distribution m;
    m.family = Family::Empirical;
    m.dim = mu.dim;
    m.emp = std::move(mu);
    return m;
  }

  bool discrete() const {
    return family == Family::Geometric || family == Family::Poisson ||
           family == Family::PointMass || family == Family::Empirical;
  }

  // Draws consumed per sample point; fixed so that draw indices are a pure
  // function of the point index.
  std::uint64_t draw_stride() const {
    switch (family) {
      case Family::Gaussian:
        return dim;
      case Family::UniformBall:
        return dim + 1;
      case Family::PointMass:
        return 1;  // reserved, unused
      default:
        return 1;
    }
  }

  Point sample_point(const Seed& seed, std::uint64_t trial,
                     std::uint64_t index) const {
    const std::uint64_t base = index * draw_stride();
    switch (family) {
      case Family::Gaussian: {
        std::vector<double> c(dim);
        for (std::size_t j = 0; j < dim; ++j)
          c[j] = sigma * counter_normal(seed, trial, base + j);
        return Point(std::move(c));
      }
      case Family::Geometric: {
        const double u = counter_uniform_open(seed, trial, base);
        const double k = std::ceil(std::log1p(-u) / std::log1p(-q));
        return Point(std::max(1.0, k));
      }
      case Family::Poisson: {
        const double u = counter_uniform_open(seed, trial, base);
        return Point(static_cast<double>(poisson_quantile(u)));
      }
      case Family::Weibull: {
        const double u = counter_uniform_open(seed, trial, base);
        return Point(std::pow(-std::log1p(-u), 1.0 / shape));
      }
      case Family::UniformBall: {
        const double u = counter_uniform_open(seed, trial, base + dim);
        const double r =
            radius * std::pow(u, 1.0 / static_cast<double>(dim));
        if (dim == 1) {
          const double sgn =
              counter_uniform(seed, trial, base) < 0.5 ? -1.0 : 1.0;
          return Point(sgn * r);
        }
        std::vector<double> c(dim);
        double norm2 = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
          c[j] = counter_normal(seed, trial, base + j);
          norm2 += c[j] * c[j];
        }
        const double scale = r / std::max(std::sqrt(norm2), 1e-300);
        for (double& x : c) x *= scale;
        return Point(std::move(c));
      }
      case Family::PointMass:
        return mass_point;
      case Family::Empirical: {
        const double u = counter_uniform(seed, trial, base);
        double acc = 0.0;
        for (const auto& a : emp.atoms) {
          acc += a.weight;
          if (u < acc) return a.point;
        }
        return emp.atoms.back().point;
      }
    }
    throw std::logic_error("unreachable");
  }

  std::vector<Point> sample(std::size_t n, const Seed& seed,
                            std::uint64_t trial = 0) const {
    std::vector<Point> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      out.push_back(sample_point(seed, trial, i));
    return out;
  }

  // P(|X| <= r), exact per family.
  double radial_cdf(double r) const {
    if (r < 0.0) return 0.0;
    switch (family) {
      case Family::Gaussian:
        if (dim == 1) return std::erf(r / (sigma * std::sqrt(2.0)));
        return gamma_p(static_cast<double>(dim) / 2.0,
                       r * r / (2.0 * sigma * sigma));
      case Family::Geometric: {
        const double k = std::floor(r);
        if (k < 1.0) return 0.0;
        return 1.0 - std::pow(1.0 - q, k);
      }
      case Family::Poisson: {
        const double k = std::floor(r);
        double pmf = std::exp(-lambda), cdf = pmf;
        for (double j = 1.0; j <= k; ++j) {
          pmf *= lambda / j;
          cdf += pmf;
        }
        return std::min(1.0, cdf);
      }
      case Family::Weibull:
        return -std::expm1(-std::pow(r, shape));
      case Family::UniformBall:
        return std::min(1.0, std::pow(r / radius, static_cast<double>(dim)));
      case Family::PointMass:
        return r >= mass_point.norm() ? 1.0 : 0.0;
      case Family::Empirical: {
        double s = 0.0;
        for (const auto& a : emp.atoms)
          if (a.point.norm() <= r) s += a.weight;
        return s;
      }
    }
    throw std::logic_error("unreachable");
  }

  // One-dimensional CDF P(X <= v); the exact inverse of quantile().
  double cdf1d(double v) const {
    if (dim != 1) throw std::invalid_argument("cdf1d: d != 1");
    switch (family) {
      case Family::Gaussian:
        return normal_cdf(v / sigma);
      case Family::Weibull:
        return v <= 0.0 ? 0.0 : -std::expm1(-std::pow(v, shape));
      case Family::UniformBall:
        return std::clamp((v + radius) / (2.0 * radius), 0.0, 1.0);
      case Family::Geometric:
        return v < 1.0 ? 0.0 : 1.0 - std::pow(1.0 - q, std::floor(v));
      case Family::Poisson: {
        if (v < 0.0) return 0.0;
        double pmf = std::exp(-lambda), cdf = pmf;
        for (double j = 1.0; j <= std::floor(v); ++j) {
          pmf *= lambda / j;
          cdf += pmf;
        }
        return std::min(1.0, cdf);
      }
      case Family::PointMass:
        return v >= mass_point.coords[0] ? 1.0 : 0.0;
      case Family::Empirical: {
        double s = 0.0;
        for (const auto& a : emp.atoms)
          if (a.point.coords[0] <= v) s += a.weight;
        return s;
      }
    }
    throw std::logic_error("unreachable");
  }

  // Smallest radius r with radial_cdf(r) >= u, by doubling + bisection.
  double radial_quantile(double u) const {
    if (u <= 0.0) return 0.0;
    double hi = 1.0;
    int guard = 0;
    while (radial_cdf(hi) < u && guard++ < 4096) hi *= 2.0;
    double lo = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (radial_cdf(mid) >= u)
        hi = mid;
      else
        lo = mid;
    }
    return hi;
  }

  // One-dimensional (signed) quantile function.
  double quantile(double u) const {
    if (dim != 1)
      throw std::invalid_argument("quantile: QUANTILE_UNAVAILABLE for d != 1");
    if (!(u > 0.0 && u < 1.0))
      throw std::invalid_argument("quantile: u in (0,1)");
    switch (family) {
      case Family::Gaussian:
        return sigma * normal_quantile(u);
      case Family::Geometric:
        return std::max(1.0, std::ceil(std::log1p(-u) / std::log1p(-q)));
      case Family::Poisson:
        return static_cast<double>(poisson_quantile(u));
      case Family::Weibull:
        return std::pow(-std::log1p(-u), 1.0 / shape);
      case Family::UniformBall:
        return radius * (2.0 * u - 1.0);
      case Family::PointMass:
        return mass_point.coords[0];
      case Family::Empirical: {
        double acc = 0.0;
        for (const auto& a : emp.atoms) {
          acc += a.weight;
          if (u <= acc + 1e-15) return a.point.coords[0];
        }
        return emp.atoms.back().point.coords[0];
      }
    }
    throw std::logic_error("unreachable");
  }

  // Atom list (value, prob) of a 1-d discrete family, covering all mass up
  // to tail_tol (remaining tail is dropped).
  std::vector<std::pair<double, double>> discrete_atoms(
      double tail_tol = 1e-15) const {
    if (!discrete())
      throw std::invalid_argument("discrete_atoms: continuous family");
    std::vector<std::pair<double, double>> out;
    switch (family) {
      case Family::Geometric: {
        // Remaining tail after k atoms is (1-q)^k, tracked directly so a
        // tiny tail_tol cannot round away against 1.0.
        double pmf = q, rem = 1.0;
        for (double k = 1.0; k < 1e7; k += 1.0) {
          out.emplace_back(k, pmf);
          rem *= 1.0 - q;
          if (rem < tail_tol || pmf == 0.0) break;
          pmf *= 1.0 - q;
        }
        break;
      }
      case Family::Poisson: {
        double pmf = std::exp(-lambda), rem = 1.0;
        for (double k = 0.0; k < 1e7; k += 1.0) {
          if (pmf > 0.0) out.emplace_back(k, pmf);
          rem -= pmf;
          if ((rem < tail_tol && k > lambda) || (pmf == 0.0 && k > lambda))
            break;
          pmf *= lambda / (k + 1.0);
        }
        break;
      }
      case Family::PointMass:
        out.emplace_back(mass_point.coords[0], 1.0);
        break;
      case Family::Empirical:
        for (const auto& a : emp.atoms)
          out.emplace_back(a.point.coords[0], a.weight);
        break;
      default:
        throw std::logic_error("unreachable");
    }
    return out;
  }

  // Radial density of |X| for the continuous families.
  double radial_density(double r) const {
    switch (family) {
      case Family::Gaussian: {
        const double d = static_cast<double>(dim);
        if (dim == 1)
          return std::sqrt(2.0 / M_PI) / sigma *
                 std::exp(-r * r / (2.0 * sigma * sigma));
        const double logc = (1.0 - d / 2.0) * std::log(2.0) -
                            std::lgamma(d / 2.0) - d * std::log(sigma);
        return std::exp(logc + (d - 1.0) * std::log(r) -
                        r * r / (2.0 * sigma * sigma));
      }
      case Family::Weibull:
        return shape * std::pow(r, shape - 1.0) * std::exp(-std::pow(r, shape));
      case Family::UniformBall: {
        if (r > radius) return 0.0;
        const double d = static_cast<double>(dim);
        return d * std::pow(r, d - 1.0) / std::pow(radius, d);
      }
      default:
        throw std::logic_error("radial_density: discrete family");
    }
  }

  int poisson_quantile(double u) const {
    double pmf = std::exp(-lambda), cdf = pmf;
    int k = 0;
    while (cdf < u && k < 100000000) {
      ++k;
      pmf *= lambda / k;
      cdf += pmf;
      if (pmf == 0.0 && cdf < u) break;  // numeric tail exhausted
    }
    return k;
  }
};

// mu(A^k) from the radial CDF; A^0 = closed unit ball,
// A^k = (2^{k-1}, 2^k] in radius.
inline double annulus_mass(const Distribution& dist, int k) {
  if (k < 0) throw std::invalid_argument("annulus_mass: k >= 0");
  if (k == 0) return dist.radial_cdf(1.0);
  return std::max(0.0, dist.radial_cdf(std::ldexp(1.0, k)) -
                           dist.radial_cdf(std::ldexp(1.0, k - 1)));
}

namespace detail {

// Sum of w_i * h(r_i)^q over ascending radii with a ratio-based decay test:
// divergence is declared when 50 consecutive terms fail the ratio test.
inline double radial_series(const std::vector<std::pair<double, double>>& rw,
                            const std::function<double(double)>& h, double q) {
  double sum = 0.0, prev = 0.0;
  int bad = 0;
  for (const auto& [r, w] : rw) {
    const double hv = h(r);
    double term = w * std::pow(hv, q);
    if (!std::isfinite(term))
      throw DivergenceError("moment series: term overflow");
    if (prev > 0.0 && term >= prev) {
      if (++bad >= 50) throw DivergenceError("moment series: no decay");
    } else if (term < prev) {
      bad = 0;
    }
    sum += term;
    prev = term;
  }
  if (!std::isfinite(sum)) throw DivergenceError("moment series: overflow");
  return sum;
}

}  // namespace detail

// M_q(mu; h) for a distribution: exact sums for discrete families, octave
// quadrature with geometric tail certification for continuous ones.
inline double moment_h(const Distribution& dist,
                       const std::function<double(double)>& h, double q,
                       double rel_tol = 1e-9) {
  if (q <= 0.0) throw std::invalid_argument("moment_h: q must be > 0");
  if (dist.family == Distribution::Family::PointMass) {
    const double hv = h(dist.mass_point.norm());
    if (!std::isfinite(hv)) throw DivergenceError("moment_h: h overflow");
    return std::pow(hv, q);
  }
  if (dist.discrete()) {
    if (dist.family == Distribution::Family::Empirical)
      return moment_h(dist.emp, h, q);
    std::vector<std::pair<double, double>> rw;
    for (const auto& [v, w] : dist.discrete_atoms(1e-16))
      rw.emplace_back(std::abs(v), w);
    return detail::radial_series(rw, h, q);
  }
  const auto integrand = [&](double r) {
    const double hv = h(r);
    const double dens = dist.radial_density(r);
    if (dens == 0.0) return 0.0;
    const double v = std::pow(hv, q) * dens;
    if (!std::isfinite(v)) throw DivergenceError("moment_h: overflow");
    return v;
  };
  if (dist.family == Distribution::Family::UniformBall) {
    return detail::integrate(integrand, 0.0, dist.radius,
                             rel_tol * std::max(1.0, h(dist.radius)));
  }
  // Octave segmentation: [0,1], [1,2], [2,4], ...
  double sum = detail::integrate(integrand, 0.0, 1.0, rel_tol);
  double lo = 1.0, prev = -1.0;
  int bad = 0;
  for (int k = 0; k < 1200; ++k) {
    const double hi = 2.0 * lo;
    const double seg =
        detail::integrate(integrand, lo, hi,
                          rel_tol * std::max(std::abs(sum), 1.0) / 64.0);
    sum += seg;
    if (prev >= 0.0) {
      if (seg >= prev && seg > 0.0) {
        if (++bad >= 50) throw DivergenceError("moment_h: no tail decay");
      } else {
        bad = 0;
        const double ratio = prev > 0.0 ? seg / prev : 0.0;
        if (ratio < 0.5 &&
            seg / (1.0 - ratio) < rel_tol * std::max(std::abs(sum), 1e-300))
          break;
      }
    }
    prev = seg;
    lo = hi;
  }
  if (!std::isfinite(sum)) throw DivergenceError("moment_h: overflow");
  return sum;
}

inline double moment_poly(const Distribution& dist, double q,
                          double rel_tol = 1e-9) {
  return moment_h(
      dist, [](double r) { return r; }, q, rel_tol);
}

}  // namespace otconc

#endif  // OTCONC_DISTRIBUTION_HPP_
