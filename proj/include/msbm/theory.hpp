// Computable consistency quantities: the C0 margin, the separation delta,
// exact binomial expectations of sigma, the Taylor-remainder bound on
// N(E sigma(x) - sigma(p)) - 1/2, expected profile terms g(z) and h(z), and
// the minimum number of nodes for two balanced classes.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "msbm/core.hpp"
#include "msbm/likelihood.hpp"

namespace msbm {

inline double c0_of(const ProbArray& p) {
  double c = 0.5;
  for (const auto& m : p.mats) c = std::min(c, std::min(m.minCoeff(), 1.0 - m.maxCoeff()));
  return std::max(c, 0.0);
}

/// Jensen gap sigma(a) + sigma(b) - 2 sigma((a+b)/2).
inline double jensen_gap(double a, double b) { return sigma(a) + sigma(b) - 2.0 * sigma(0.5 * (a + b)); }

inline double delta_of(const ProbArray& p) {
  if (p.num_classes() < 2) throw std::invalid_argument("delta_of: needs at least two classes");
  double d = std::numeric_limits<double>::infinity();
  for (const auto& m : p.mats)
    for (Eigen::Index k = 0; k < m.rows(); ++k)
      for (Eigen::Index l = k + 1; l < m.rows(); ++l) {
        double best = 0.0;
        for (Eigen::Index c = 0; c < m.cols(); ++c) best = std::max(best, jensen_gap(m(k, c), m(l, c)));
        d = std::min(d, best);
      }
  return d;
}

/// E[sigma(X/n)] for X ~ Bin(n, p), summed exactly over the mass function.
inline double binomial_expected_sigma(long long n, double p) {
  if (n < 1) throw std::invalid_argument("binomial_expected_sigma: n must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial_expected_sigma: p must lie in [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  const double lp = std::log(p), lq = std::log1p(-p);
  const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
  const double nd = static_cast<double>(n);
  double e = 0.0;
  for (long long x = 1; x < n; ++x) {
    const double xd = static_cast<double>(x);
    const double lpmf = lgn - std::lgamma(xd + 1.0) - std::lgamma(nd - xd + 1.0) + xd * lp + (nd - xd) * lq;
    if (lpmf < -745.0) continue;
    e += std::exp(lpmf) * sigma(xd / nd);
  }
  return e;
}

/// N (E[sigma(X/N)] - sigma(p)) - 1/2 with X ~ Bin(N, p).
inline double exact_sigma_gap(long long n, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("exact_sigma_gap: p must lie in (0,1)");
  return static_cast<double>(n) * (binomial_expected_sigma(n, p) - sigma(p)) - 0.5;
}

struct BoundConstants {
  double m0 = 0.0, m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
};

/// Maxima of |sigma^(j)| over [C0, 1 - C0].
inline BoundConstants bound_constants(double c0) {
  if (!(c0 > 0.0 && c0 <= 0.5)) throw std::invalid_argument("bound_constants: C0 must lie in (0, 0.5]");
  const double d = 1.0 - c0;
  return {-sigma(0.5), std::log(d) - std::log(c0), 1.0 / c0 + 1.0 / d, 1.0 / (c0 * c0) - 1.0 / (d * d),
          1.0 / (2.0 * c0 * c0 * c0) + 1.0 / (2.0 * d * d * d)};
}

/// Upper bound on exact_sigma_gap(N, p) from a fourth-order Taylor expansion
/// on [p/2, 1 - p/2] plus a Chernoff tail.
inline double lemma3_bound(long long n, double p) {
  if (n < 1) throw std::invalid_argument("lemma3_bound: N must be >= 1");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("lemma3_bound: p must lie in (0,1)");
  if (p > 0.5) p = 1.0 - p;
  const BoundConstants b = bound_constants(p / 2.0);
  const double nd = static_cast<double>(n);
  return b.m3 / (24.0 * nd) + b.m4 / 24.0 * (1.0 / (2.0 * nd * nd) + 1.0 / (4.0 * nd)) +
         2.0 * nd * (1.0 + b.m1 + b.m3 / 6.0) * std::exp(-nd * p * p / 2.0);
}

struct ExpectedProfileTerms {
  /// sum_t sum_{k<=l} n_kl E[sigma(Bin(n_kl, Pbar_kl) / n_kl)]
  double g = 0.0;
  /// sum_t sum_{k<=l} n_kl sigma(Pbar_kl)
  double h = 0.0;
  /// Per layer, the average true connection probability within each block of z.
  std::vector<Eigen::MatrixXd> pbar;
};

inline ExpectedProfileTerms expected_profile_terms(const ClassLabels& z, const ClassLabels& c, const ProbArray& p) {
  if (z.size() != c.size()) throw std::invalid_argument("expected_profile_terms: label lengths differ");
  if (p.num_classes() != c.num_classes())
    throw std::invalid_argument("expected_profile_terms: ProbArray K differs from true label K");
  const int kz = z.num_classes(), kc = c.num_classes();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(kz, kc);  // nodes of z-class k with true class a
  for (int i = 0; i < z.size(); ++i) m(z[i], c[i]) += 1.0;
  const auto sizes = z.class_sizes();

  ExpectedProfileTerms out;
  for (const auto& pt : p.mats) {
    Eigen::MatrixXd pb = Eigen::MatrixXd::Zero(kz, kz);
    for (int k = 0; k < kz; ++k)
      for (int l = k; l < kz; ++l) {
        const long long n = block_pairs(sizes[static_cast<std::size_t>(k)], sizes[static_cast<std::size_t>(l)], k == l);
        if (n == 0) continue;
        double s = 0.0;
        for (int a = 0; a < kc; ++a)
          for (int b = 0; b < kc; ++b) {
            const double pairs = k == l ? (a == b ? m(k, a) * (m(k, a) - 1.0) / 2.0 : (a < b ? m(k, a) * m(k, b) : 0.0))
                                        : m(k, a) * m(l, b);
            s += pairs * pt(a, b);
          }
        const double v = std::clamp(s / static_cast<double>(n), 0.0, 1.0);
        pb(k, l) = pb(l, k) = v;
        out.h += static_cast<double>(n) * sigma(v);
        out.g += static_cast<double>(n) * binomial_expected_sigma(n, v);
      }
    out.pbar.push_back(std::move(pb));
  }
  return out;
}

namespace detail {

/// Balanced two-class truth and the two boundary assignments: one node of
/// class 0 moved to class 1, and a z-class holding just two class-0 nodes.
struct BoundaryAssignments {
  ClassLabels truth, single_moved, two_split;
};

inline BoundaryAssignments boundary_assignments(int n) {
  const int half = n / 2;
  std::vector<int> c(static_cast<std::size_t>(n)), one(static_cast<std::size_t>(n)), two(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    c[static_cast<std::size_t>(i)] = i < half ? 0 : 1;
    one[static_cast<std::size_t>(i)] = i < half - 1 ? 0 : 1;
    two[static_cast<std::size_t>(i)] = i < 2 ? 0 : 1;
  }
  return {ClassLabels(2, c), ClassLabels(2, one), ClassLabels(2, two)};
}

inline bool exact_boundary_ok(const ProbArray& p, int n, bool single, bool two) {
  const auto z = boundary_assignments(n);
  const double gc = expected_profile_terms(z.truth, z.truth, p).g;
  if (single && !(gc > expected_profile_terms(z.single_moved, z.truth, p).g)) return false;
  if (two && !(gc > expected_profile_terms(z.two_split, z.truth, p).g)) return false;
  return true;
}

/// Diagonal a in [c0, 1 - c0] with jensen_gap(a, c0) = delta, clamped to the
/// feasible end when delta sits just above the attainable maximum.
inline double diagonal_for_delta(double c0, double delta) {
  double lo = c0, hi = 1.0 - c0;
  if (jensen_gap(hi, c0) <= delta) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (jensen_gap(mid, c0) < delta ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Smallest even N (balanced classes) at which the expected summed profile
/// of the truth beats both boundary assignments, for a given 2x2 matrix.
/// The comparison is not monotone in N for small N, so the threshold is
/// placed just past the last failure below n_max.
inline int min_nodes_exact_k2(const ProbArray& p, int n_max = 400) {
  if (p.num_classes() != 2) throw std::invalid_argument("min_nodes_exact_k2: needs K = 2");
  int last_fail = 2;
  for (int n = 4; n <= n_max; n += 2)
    if (!detail::exact_boundary_ok(p, n, true, true)) last_fail = n;
  if (last_fail >= n_max) throw std::runtime_error("min_nodes_exact_k2: no threshold below n_max");
  return last_fail + 2;
}

/// Minimum even N for two balanced classes with margin c0 and separation
/// delta. A single misclassified node costs at least delta * N/2 in h; the
/// threshold is the first N at which that loss exceeds the summed remainder
/// bounds of every block of the truth and of the single-move assignment.
/// The two-node boundary assignment is checked exactly on the matrix
/// [[a, c0], [c0, a]] with separation delta.
inline int min_nodes_k2(double c0, double delta, int n_max = 100000) {
  if (!(c0 > 0.0 && c0 < 0.5)) throw std::invalid_argument("min_nodes_k2: c0 must lie in (0, 0.5)");
  if (!(delta > 0.0)) throw std::invalid_argument("min_nodes_k2: delta must be positive");
  const double attainable = jensen_gap(1.0 - c0, c0);
  if (delta - 1e-3 > attainable)
    throw std::invalid_argument("min_nodes_k2: delta is not attainable with margin c0 (max " +
                                std::to_string(attainable) + ")");
  const double a = detail::diagonal_for_delta(c0, delta);
  Eigen::MatrixXd m(2, 2);
  m << a, c0, c0, a;
  const ProbArray p = ProbArray::constant(m, 1);

  for (int n = 6; n <= n_max; n += 2) {
    const long long h = n / 2;
    const long long blocks[] = {h * (h - 1) / 2, h * (h - 1) / 2, h * h,
                                (h - 1) * (h - 2) / 2, (h + 1) * h / 2, (h - 1) * (h + 1)};
    double rhs = 0.0;
    for (long long b : blocks)
      if (b > 0) rhs += lemma3_bound(b, c0);
    if (delta * static_cast<double>(h) > rhs && detail::exact_boundary_ok(p, n, false, true)) return n;
  }
  throw std::runtime_error("min_nodes_k2: no threshold below n_max");
}

struct TheoryReport {
  double c0 = 0.0;
  double delta = 0.0;
  std::optional<BoundConstants> constants;
  std::optional<int> min_nodes;
};

/// C0, delta and the bound constants of P; the minimum-node threshold is
/// filled in for K = 2 when the margin is strictly positive.
inline TheoryReport theory_report(const ProbArray& p) {
  TheoryReport r;
  r.c0 = c0_of(p);
  r.delta = p.num_classes() >= 2 ? delta_of(p) : 0.0;
  if (r.c0 > 0.0) r.constants = bound_constants(r.c0);
  if (p.num_classes() == 2 && r.c0 > 0.0 && r.c0 < 0.5 && r.delta > 0.0) {
    try {
      r.min_nodes = min_nodes_k2(r.c0, r.delta);
    } catch (const std::exception&) {
    }
  }
  return r;
}

}  // namespace msbm
