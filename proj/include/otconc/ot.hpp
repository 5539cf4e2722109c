#ifndef OTCONC_OT_HPP_
#define OTCONC_OT_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "otconc/common.hpp"
#include "otconc/cost.hpp"
#include "otconc/distribution.hpp"
#include "otconc/measure.hpp"

namespace otconc {

struct Coupling {
  struct Entry {
    std::size_t i;  // source atom index
    std::size_t j;  // target atom index
    double mass;
  };
  std::vector<Entry> entries;
};

enum class OtMethod { Monotone, ExactLp, BruteForce };

struct OtResult {
  double cost = 0.0;
  Coupling coupling;
  OtMethod method = OtMethod::ExactLp;
  // Set when the optimal plan had to use an edge whose cost overflowed.
  bool inf_cost = false;
};

// Max of |row sum - source weight| and |col sum - target weight|.
inline double coupling_marginal_error(const Coupling& c,
                                      const DiscreteMeasure& mu,
                                      const DiscreteMeasure& nu) {
  std::vector<double> row(mu.size(), 0.0), col(nu.size(), 0.0);
  for (const auto& e : c.entries) {
    row[e.i] += e.mass;
    col[e.j] += e.mass;
  }
  double err = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    err = std::max(err, std::abs(row[i] - mu.atoms[i].weight));
  for (std::size_t j = 0; j < nu.size(); ++j)
    err = std::max(err, std::abs(col[j] - nu.atoms[j].weight));
  return err;
}

inline double coupling_cost(const Coupling& c, const DiscreteMeasure& mu,
                            const DiscreteMeasure& nu, const RadialCost& f) {
  double s = 0.0;
  for (const auto& e : c.entries)
    s += e.mass * f(distance(mu.atoms[e.i].point, nu.atoms[e.j].point));
  return s;
}

// Quantile (north-west-corner) coupling of sorted 1-d atoms. Optimal for
// convex radial costs.
inline OtResult monotone_cost_1d(const DiscreteMeasure& mu,
                                 const DiscreteMeasure& nu,
                                 const RadialCost& cost,
                                 bool assume_convex = false) {
  if (mu.dim != 1 || nu.dim != 1)
    throw std::invalid_argument("monotone_cost_1d: NOT_1D");
  if (!cost.convex() && !assume_convex)
    throw std::invalid_argument(
        "monotone_cost_1d: cost not convex; pass assume_convex to override");
  OtResult res;
  res.method = OtMethod::Monotone;
  std::size_t i = 0, j = 0;
  double ri = mu.atoms.empty() ? 0.0 : mu.atoms[0].weight;
  double rj = nu.atoms.empty() ? 0.0 : nu.atoms[0].weight;
  while (i < mu.size() && j < nu.size()) {
    const double m = std::min(ri, rj);
    if (m > 0.0) {
      res.coupling.entries.push_back({i, j, m});
      res.cost += m * cost(std::abs(mu.atoms[i].point.coords[0] -
                                    nu.atoms[j].point.coords[0]));
    }
    ri -= m;
    rj -= m;
    if (ri <= rj && i + 1 <= mu.size()) {
      ++i;
      if (i < mu.size()) ri = mu.atoms[i].weight;
    } else {
      ++j;
      if (j < nu.size()) rj = nu.atoms[j].weight;
    }
  }
  return res;
}

namespace detail {

// Integrate a smooth integrand over [lo, hi]: Gauss-Legendre 8 vs 16
// estimates, bisecting while they disagree beyond the budget.
template <class Fn>
double segment_integral(const Fn& integrand, double lo, double hi,
                        double budget, int depth) {
  const auto& gl8 = gauss_legendre_8();
  const auto& gl16 = gauss_legendre_16();
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  double coarse = 0.0, fine = 0.0;
  for (const auto& [x, w] : gl8) coarse += w * integrand(mid + half * x);
  for (const auto& [x, w] : gl16) fine += w * integrand(mid + half * x);
  coarse *= half;
  fine *= half;
  if (depth <= 0 || std::abs(fine - coarse) <= budget) return fine;
  return segment_integral(integrand, lo, mid, budget / 2.0, depth - 1) +
         segment_integral(integrand, mid, hi, budget / 2.0, depth - 1);
}

}  // namespace detail

// Exact D_f between a 1-d distribution and a discrete measure through the
// quantile coupling: int_0^1 f(|Q_dist(u) - Q_nu(u)|) du. [0,1] is split at
// every CDF breakpoint of both quantile functions; segments are summed
// exactly when the distribution is discrete and integrated otherwise.
inline double quantile_cost_semicontinuous(const Distribution& dist,
                                           const DiscreteMeasure& nu,
                                           const RadialCost& cost,
                                           double tol = 1e-10) {
  if (dist.dim != 1 || nu.dim != 1)
    throw std::invalid_argument("quantile_cost_semicontinuous: NOT_1D");
  // Breakpoints of Q_nu: cumulative weights.
  std::vector<double> nu_cum;
  nu_cum.reserve(nu.size());
  {
    double acc = 0.0;
    for (const auto& a : nu.atoms) {
      acc += a.weight;
      nu_cum.push_back(std::min(acc, 1.0));
    }
    if (!nu_cum.empty()) nu_cum.back() = 1.0;
  }
  auto nu_value_at = [&](std::size_t seg) {
    return nu.atoms[seg].point.coords[0];
  };

  if (dist.discrete()) {
    auto atoms = dist.discrete_atoms(1e-15);
    std::sort(atoms.begin(), atoms.end());
    std::vector<double> d_cum;
    d_cum.reserve(atoms.size());
    double acc = 0.0;
    for (const auto& [v, w] : atoms) {
      acc += w;
      d_cum.push_back(std::min(acc, 1.0));
    }
    if (!d_cum.empty()) d_cum.back() = 1.0;  // fold truncation residual
    // Merge-walk both cumulative arrays; both quantiles are constant
    // between consecutive breakpoints.
    double lo = 0.0, sum = 0.0;
    std::size_t si = 0, sj = 0;
    while (si < atoms.size() && sj < nu.size() && lo < 1.0) {
      const double hi = std::min(d_cum[si], nu_cum[sj]);
      if (hi > lo)
        sum += (hi - lo) * cost(std::abs(atoms[si].first - nu_value_at(sj)));
      const bool adv_i = d_cum[si] <= hi;
      const bool adv_j = nu_cum[sj] <= hi;
      if (adv_i) ++si;
      if (adv_j) ++sj;
      lo = hi;
    }
    return sum;
  }

  // Continuous distribution: integrate per nu-segment, splitting each
  // segment at the crossing u* with Q(u*) = c so that every piece is smooth
  // (f(|q - c|) has a kink at q = c for odd growth orders).
  double lo = 0.0, sum = 0.0;
  const double budget = tol / static_cast<double>(std::max<std::size_t>(
                                  1, nu.size()));
  const double eps = 1e-14;
  for (std::size_t seg = 0; seg < nu.size(); ++seg) {
    const double hi = nu_cum[seg];
    if (hi > lo) {
      const double c = nu_value_at(seg);
      auto integrand = [&](double u) {
        return cost(std::abs(dist.quantile(u) - c));
      };
      const double a = std::max(lo, eps), b = std::min(hi, 1.0 - eps);
      if (b > a) {
        const double ustar = dist.cdf1d(c);
        if (ustar > a + eps && ustar < b - eps) {
          sum += detail::segment_integral(integrand, a, ustar, budget / 2.0,
                                          12) +
                 detail::segment_integral(integrand, ustar, b, budget / 2.0,
                                          12);
        } else {
          sum += detail::segment_integral(integrand, a, b, budget, 12);
        }
      }
    }
    lo = hi;
  }
  return sum;
}

// Transportation simplex for the finite OT linear program. Exactness is
// certified through the dual: all reduced costs >= -1e-9 at termination.
inline OtResult exact_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const RadialCost& cost) {
  const std::size_t m = mu.size(), n = nu.size();
  if (m + n > 4096) throw std::invalid_argument("exact_ot: SIZE_LIMIT");
  if (mu.dim != nu.dim)
    throw std::invalid_argument("exact_ot: dimension mismatch");
  if (m == 0 || n == 0) throw std::invalid_argument("exact_ot: empty measure");

  constexpr double kSentinel = 1e300;  // stands in for +inf edges
  std::vector<double> C(m * n);
  bool any_inf = false;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double v = cost(distance(mu.atoms[i].point, nu.atoms[j].point));
      if (!std::isfinite(v)) {
        v = kSentinel;
        any_inf = true;
      }
      C[i * n + j] = v;
    }

  struct Cell {
    std::size_t i, j;
    double mass;
    bool basic;
  };
  std::vector<Cell> cells;
  cells.reserve(m + n);

  // North-west-corner start: exactly m + n - 1 basic cells (degenerate
  // zero-mass cells kept to preserve the spanning tree).
  {
    std::vector<double> a(m), b(n);
    for (std::size_t i = 0; i < m; ++i) a[i] = mu.atoms[i].weight;
    for (std::size_t j = 0; j < n; ++j) b[j] = nu.atoms[j].weight;
    std::size_t i = 0, j = 0;
    while (true) {
      const double t = std::min(a[i], b[j]);
      cells.push_back({i, j, t, true});
      a[i] -= t;
      b[j] -= t;
      if (i == m - 1 && j == n - 1) break;
      if (i < m - 1 && (a[i] <= b[j] || j == n - 1))
        ++i;
      else
        ++j;
    }
  }

  // Tree adjacency: basic cell indices per row / column node.
  std::vector<std::vector<std::size_t>> row_adj(m), col_adj(n);
  auto rebuild_adj = [&] {
    for (auto& v : row_adj) v.clear();
    for (auto& v : col_adj) v.clear();
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!cells[c].basic) continue;
      row_adj[cells[c].i].push_back(c);
      col_adj[cells[c].j].push_back(c);
    }
  };
  rebuild_adj();

  std::vector<double> u(m), v(n);
  auto compute_potentials = [&] {
    std::vector<char> ru(m, 0), rv(n, 0);
    std::deque<std::size_t> q;  // node ids: rows [0,m), cols [m, m+n)
    u[0] = 0.0;
    ru[0] = 1;
    q.push_back(0);
    while (!q.empty()) {
      const std::size_t node = q.front();
      q.pop_front();
      if (node < m) {
        for (std::size_t c : row_adj[node]) {
          const std::size_t j = cells[c].j;
          if (!rv[j]) {
            v[j] = C[node * n + j] - u[node];
            rv[j] = 1;
            q.push_back(m + j);
          }
        }
      } else {
        const std::size_t j = node - m;
        for (std::size_t c : col_adj[j]) {
          const std::size_t i = cells[c].i;
          if (!ru[i]) {
            u[i] = C[i * n + j] - v[j];
            ru[i] = 1;
            q.push_back(i);
          }
        }
      }
    }
    for (std::size_t i = 0; i < m; ++i)
      if (!ru[i]) throw std::runtime_error("exact_ot: basis not spanning");
    for (std::size_t j = 0; j < n; ++j)
      if (!rv[j]) throw std::runtime_error("exact_ot: basis not spanning");
  };

  const double rc_tol = 1e-9;
  const std::size_t dantzig_cap = 20 * (m + n) + 2000;
  std::size_t iter = 0;
  const std::size_t hard_cap = 2000 * (m + n) + 100000;

  while (true) {
    if (++iter > hard_cap)
      throw std::runtime_error("exact_ot: iteration limit (cycling?)");
    compute_potentials();

    // Entering variable: most negative reduced cost; Bland's first-negative
    // rule after a cap, to rule out cycling under degeneracy.
    std::size_t bi = 0, bj = 0;
    double best = -rc_tol;
    bool found = false;
    const bool bland = iter > dantzig_cap;
    for (std::size_t i = 0; i < m && !(found && bland); ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double rc = C[i * n + j] - u[i] - v[j];
        if (rc < best) {
          best = rc;
          bi = i;
          bj = j;
          found = true;
          if (bland) break;
        }
      }
    }
    if (!found) break;  // optimal

    // Unique tree path from row bi to column bj.
    const std::size_t nn = m + n;
    std::vector<std::size_t> parent_cell(nn, SIZE_MAX), parent_node(nn, SIZE_MAX);
    std::vector<char> seen(nn, 0);
    std::deque<std::size_t> q;
    seen[bi] = 1;
    q.push_back(bi);
    while (!q.empty() && !seen[m + bj]) {
      const std::size_t node = q.front();
      q.pop_front();
      if (node < m) {
        for (std::size_t c : row_adj[node]) {
          const std::size_t nxt = m + cells[c].j;
          if (!seen[nxt]) {
            seen[nxt] = 1;
            parent_cell[nxt] = c;
            parent_node[nxt] = node;
            q.push_back(nxt);
          }
        }
      } else {
        for (std::size_t c : col_adj[node - m]) {
          const std::size_t nxt = cells[c].i;
          if (!seen[nxt]) {
            seen[nxt] = 1;
            parent_cell[nxt] = c;
            parent_node[nxt] = node;
            q.push_back(nxt);
          }
        }
      }
    }
    if (!seen[m + bj]) throw std::runtime_error("exact_ot: broken tree");

    // Walk back: cells along the path alternate -theta, +theta, ... starting
    // from the column end (the entering cell itself takes +theta).
    std::vector<std::size_t> path;
    for (std::size_t node = m + bj; node != bi; node = parent_node[node])
      path.push_back(parent_cell[node]);
    // path[0] touches column bj: sign -, then alternate.
    double theta = kInf;
    std::size_t leave = SIZE_MAX;
    for (std::size_t t = 0; t < path.size(); t += 2) {
      const std::size_t c = path[t];
      if (cells[c].mass < theta ||
          (cells[c].mass == theta && (leave == SIZE_MAX || c < leave))) {
        theta = cells[c].mass;
        leave = c;
      }
    }
    for (std::size_t t = 0; t < path.size(); ++t)
      cells[path[t]].mass += (t % 2 == 0) ? -theta : theta;
    cells[leave].basic = false;
    cells.push_back({bi, bj, theta, true});
    rebuild_adj();
  }

  // Final certification.
  compute_potentials();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (C[i * n + j] - u[i] - v[j] < -rc_tol)
        throw std::runtime_error("exact_ot: optimality certificate failed");

  OtResult res;
  res.method = OtMethod::ExactLp;
  for (const auto& c : cells) {
    if (!c.basic || c.mass <= 0.0) continue;
    res.coupling.entries.push_back({c.i, c.j, c.mass});
    if (any_inf && C[c.i * n + c.j] >= kSentinel) res.inf_cost = true;
    res.cost += c.mass * C[c.i * n + c.j];
  }
  if (res.inf_cost) res.cost = kInf;
  return res;
}

// Exhaustive permutation oracle for small uniform instances.
inline OtResult brute_force_ot(const DiscreteMeasure& mu,
                               const DiscreteMeasure& nu,
                               const RadialCost& cost) {
  const std::size_t n = mu.size();
  if (n != nu.size() || n == 0 || n > 7)
    throw std::invalid_argument("brute_force_ot: UNSUPPORTED_SHAPE");
  const double w = 1.0 / static_cast<double>(n);
  for (const auto& a : mu.atoms)
    if (std::abs(a.weight - w) > 1e-12)
      throw std::invalid_argument("brute_force_ot: UNSUPPORTED_SHAPE");
  for (const auto& a : nu.atoms)
    if (std::abs(a.weight - w) > 1e-12)
      throw std::invalid_argument("brute_force_ot: UNSUPPORTED_SHAPE");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = kInf;
  std::vector<std::size_t> best_perm = perm;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      s += w * cost(distance(mu.atoms[i].point, nu.atoms[perm[i]].point));
    if (s < best) {
      best = s;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  OtResult res;
  res.method = OtMethod::BruteForce;
  res.cost = best;
  for (std::size_t i = 0; i < n; ++i)
    res.coupling.entries.push_back({i, best_perm[i], w});
  return res;
}

}  // namespace otconc

#endif  // OTCONC_OT_HPP_
