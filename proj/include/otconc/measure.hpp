#ifndef OTCONC_MEASURE_HPP_
#define OTCONC_MEASURE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "otconc/common.hpp"

namespace otconc {

struct Point {
  std::vector<double> coords;

  Point() = default;
  explicit Point(std::vector<double> c) : coords(std::move(c)) {
    for (double x : coords) {
      if (!std::isfinite(x))
        throw std::invalid_argument("Point: non-finite coordinate");
    }
  }
  explicit Point(double x) : Point(std::vector<double>{x}) {}

  std::size_t dim() const { return coords.size(); }

  double norm() const {
    double s = 0.0;
    for (double x : coords) s += x * x;
    return std::sqrt(s);
  }

  friend double distance(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.coords.size(); ++i) {
      const double d = a.coords[i] - b.coords[i];
      s += d * d;
    }
    return std::sqrt(s);
  }

  friend bool operator==(const Point& a, const Point& b) {
    return a.coords == b.coords;
  }
  friend bool operator<(const Point& a, const Point& b) {
    return a.coords < b.coords;
  }
};

inline Point origin(std::size_t d) {
  return Point(std::vector<double>(d, 0.0));
}

// Weighted atoms in R^d. Construction canonicalizes: zero-weight atoms are
// dropped, exact duplicates coalesced, atoms sorted lexicographically.
struct DiscreteMeasure {
  struct Atom {
    Point point;
    double weight;
  };

  std::vector<Atom> atoms;
  std::size_t dim = 0;

  DiscreteMeasure() = default;

  DiscreteMeasure(std::vector<Atom> in, std::size_t d) : dim(d) {
    std::vector<Atom> kept;
    kept.reserve(in.size());
    for (auto& a : in) {
      if (a.point.dim() != d)
        throw std::invalid_argument("DiscreteMeasure: dimension mismatch");
      if (a.weight < 0.0)
        throw std::invalid_argument("DiscreteMeasure: negative weight");
      if (a.weight > 0.0) kept.push_back(std::move(a));
    }
    std::sort(kept.begin(), kept.end(),
              [](const Atom& x, const Atom& y) { return x.point < y.point; });
    for (auto& a : kept) {
      if (!atoms.empty() && atoms.back().point == a.point)
        atoms.back().weight += a.weight;
      else
        atoms.push_back(std::move(a));
    }
    std::vector<double> w;
    w.reserve(atoms.size());
    for (const auto& a : atoms) w.push_back(a.weight);
    // Pairwise summation keeps the check meaningful for ~1e6 atoms.
    if (std::abs(pairwise_sum(w) - 1.0) > 1e-12)
      throw std::invalid_argument("DiscreteMeasure: weights must sum to 1");
  }

  static DiscreteMeasure dirac(Point x) {
    const std::size_t d = x.dim();
    return DiscreteMeasure({{std::move(x), 1.0}}, d);
  }

  static DiscreteMeasure dirac_origin(std::size_t d) {
    return dirac(origin(d));
  }

  std::size_t size() const { return atoms.size(); }

  double total_weight() const {
    std::vector<double> w;
    w.reserve(atoms.size());
    for (const auto& a : atoms) w.push_back(a.weight);
    return pairwise_sum(w);
  }
};

// Uniform weights 1/N; the empty sample maps to delta_0 (the N=0 convention).
inline DiscreteMeasure empirical_measure(const std::vector<Point>& samples,
                                         std::size_t d) {
  if (samples.empty()) return DiscreteMeasure::dirac_origin(d);
  std::vector<DiscreteMeasure::Atom> atoms;
  atoms.reserve(samples.size());
  const double w = 1.0 / static_cast<double>(samples.size());
  for (const auto& p : samples) {
    if (p.dim() != d)
      throw std::invalid_argument("empirical_measure: dimension mismatch");
    atoms.push_back({p, w});
  }
  return DiscreteMeasure(std::move(atoms), d);
}

// M_q(mu) for a discrete measure: exact finite sum.
inline double moment_poly(const DiscreteMeasure& m, double q) {
  if (q <= 0.0) throw std::invalid_argument("moment_poly: q must be > 0");
  double s = 0.0;
  for (const auto& a : m.atoms) s += a.weight * std::pow(a.point.norm(), q);
  if (!std::isfinite(s)) throw DivergenceError("moment_poly: non-finite sum");
  return s;
}

// M_q(mu; h) for a discrete measure.
inline double moment_h(const DiscreteMeasure& m,
                       const std::function<double(double)>& h, double q) {
  if (q <= 0.0) throw std::invalid_argument("moment_h: q must be > 0");
  double s = 0.0;
  for (const auto& a : m.atoms) {
    const double hv = h(a.point.norm());
    if (!std::isfinite(hv)) throw DivergenceError("moment_h: h overflowed");
    s += a.weight * std::pow(hv, q);
  }
  if (!std::isfinite(s)) throw DivergenceError("moment_h: non-finite sum");
  return s;
}

}  // namespace otconc

#endif  // OTCONC_MEASURE_HPP_
