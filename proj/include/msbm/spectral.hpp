// Spectral clustering on the mean graph, with optional off-diagonal low-rank
// refinement and seeded k-means++ restarts.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "msbm/core.hpp"
#include "msbm/rng.hpp"

namespace msbm {

struct SpectralOptions {
  /// Unset: refine with the off-diagonal iteration only when N < 64.
  std::optional<bool> use_offdiag_svd;
  int kmeans_restarts = 10;
  int kmeans_max_iter = 100;
  int offdiag_max_iter = 100;
  double offdiag_tol = 1e-8;
  std::uint64_t seed = 0;

  void validate() const {
    if (kmeans_restarts < 1 || kmeans_max_iter < 1 || offdiag_max_iter < 1)
      throw std::invalid_argument("SpectralOptions: iteration caps must be >= 1");
    if (!(offdiag_tol >= 0.0)) throw std::invalid_argument("SpectralOptions: offdiag_tol must be >= 0");
  }
};

/// Entrywise average of the layers.
inline Eigen::MatrixXd mean_graph(const MultiGraph& g) {
  const int n = g.num_nodes();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int t = 0; t < g.num_layers(); ++t)
    for (int i = 0; i < n; ++i) {
      const auto r = g.row(t, i);
      for (int j = 0; j < n; ++j) m(i, j) += r[static_cast<std::size_t>(j)];
    }
  m /= static_cast<double>(g.num_layers());
  return m;
}

/// Rank-K symmetric factor X ~ U diag(S) U'.
struct LowRankFactor {
  Eigen::MatrixXd u;
  Eigen::VectorXd s;
  int iterations = 0;
  bool converged = false;
  /// Off-diagonal squared error sum_{i<j} (A_ij - (U S U')_ij)^2 after each iteration.
  std::vector<double> residuals;

  Eigen::MatrixXd reconstruct() const { return u * s.asDiagonal() * u.transpose(); }
};

/// Best rank-K approximation of a symmetric matrix: the K eigenpairs of
/// largest magnitude (ties resolved by eigenvalue order).
inline LowRankFactor truncated_eigen(const Eigen::MatrixXd& a, int k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw std::runtime_error("truncated_eigen: eigensolver failed");
  const auto& vals = es.eigenvalues();
  std::vector<int> order(static_cast<std::size_t>(vals.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return std::abs(vals(x)) > std::abs(vals(y)); });
  LowRankFactor f;
  f.u.resize(a.rows(), k);
  f.s.resize(k);
  for (int c = 0; c < k; ++c) {
    f.u.col(c) = es.eigenvectors().col(order[static_cast<std::size_t>(c)]);
    f.s(c) = vals(order[static_cast<std::size_t>(c)]);
  }
  f.iterations = 1;
  return f;
}

inline double offdiag_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& r) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i) {
      const double d = a(i, j) - r(i, j);
      s += d * d;
    }
  return s;
}

/// Low-rank fit that ignores the diagonal: alternate a rank-K eigen
/// truncation with replacing the diagonal by the reconstruction's diagonal.
/// Stops when the diagonal moves by less than opts.offdiag_tol (max-abs).
inline LowRankFactor offdiag_svd(const Eigen::MatrixXd& gbar, int k, const SpectralOptions& opts) {
  opts.validate();
  if (gbar.rows() != gbar.cols()) throw std::invalid_argument("offdiag_svd: matrix must be square");
  if (k < 1 || k > gbar.rows()) throw std::invalid_argument("offdiag_svd: K must lie in [1, N]");
  if ((gbar - gbar.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("offdiag_svd: matrix must be symmetric");
  Eigen::MatrixXd x = gbar;
  LowRankFactor f;
  for (int it = 1; it <= opts.offdiag_max_iter; ++it) {
    LowRankFactor step = truncated_eigen(x, k);
    const Eigen::MatrixXd r = step.reconstruct();
    step.residuals = std::move(f.residuals);
    step.residuals.push_back(offdiag_residual(gbar, r));
    const double change = (r.diagonal() - x.diagonal()).cwiseAbs().maxCoeff();
    x.diagonal() = r.diagonal();
    step.iterations = it;
    f = std::move(step);
    if (change < opts.offdiag_tol) {
      f.converged = true;
      break;
    }
  }
  return f;
}

struct KMeansResult {
  std::vector<int> labels;
  double inertia = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool ok = false;
};

namespace detail {

inline KMeansResult kmeans_once(const Eigen::MatrixXd& x, int k, int max_iter, std::uint64_t seed) {
  const auto n = x.rows();
  Rng rng(seed);
  // k-means++ seeding
  Eigen::MatrixXd centers(k, x.cols());
  centers.row(0) = x.row(rng.below(static_cast<int>(n)));
  Eigen::VectorXd d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2(i) = (x.row(i) - centers.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = n - 1;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (u < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(static_cast<int>(n));
    }
    centers.row(c) = x.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) d2(i) = std::min(d2(i), (x.row(i) - centers.row(c)).squaredNorm());
  }

  KMeansResult res;
  res.labels.assign(static_cast<std::size_t>(n), -1);
  for (int it = 1; it <= max_iter; ++it) {
    bool changed = false;
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (x.row(i) - centers.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      inertia += bd;
      if (res.labels[static_cast<std::size_t>(i)] != best) {
        res.labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    res.inertia = inertia;
    res.iterations = it;
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    centers.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = res.labels[static_cast<std::size_t>(i)];
      centers.row(c) += x.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    if (std::find(counts.begin(), counts.end(), 0) != counts.end()) {
      res.ok = false;
      return res;
    }
    for (int c = 0; c < k; ++c) centers.row(c) /= counts[static_cast<std::size_t>(c)];
    if (!changed) break;
  }
  res.ok = true;
  return res;
}

}  // namespace detail

/// Best-of-restarts Lloyd k-means on the rows of x. A restart that ends with
/// an empty cluster is re-seeded a few times before it counts as failed.
inline KMeansResult kmeans(const Eigen::MatrixXd& x, int k, int restarts, int max_iter, std::uint64_t seed) {
  if (k < 1 || k > x.rows()) throw std::invalid_argument("kmeans: K must lie in [1, N]");
  constexpr int reseeds = 5;
  KMeansResult best, best_failed;
  for (int r = 0; r < restarts; ++r) {
    KMeansResult run;
    for (int a = 0; a < reseeds; ++a) {
      run = detail::kmeans_once(x, k, max_iter,
                                derive_seed(seed, static_cast<std::uint64_t>(r) + static_cast<std::uint64_t>(a) * restarts));
      if (run.ok) break;
    }
    KMeansResult& slot = run.ok ? best : best_failed;
    if (run.inertia < slot.inertia) slot = std::move(run);
  }
  return best.ok ? best : best_failed;
}

inline bool resolve_offdiag(const SpectralOptions& opts, int n) { return opts.use_offdiag_svd.value_or(n < 64); }

/// Spectral factor of the mean graph used for clustering (N x K).
inline Eigen::MatrixXd spectral_embedding(const MultiGraph& g, int k, const SpectralOptions& opts) {
  const Eigen::MatrixXd gbar = mean_graph(g);
  return resolve_offdiag(opts, g.num_nodes()) ? offdiag_svd(gbar, k, opts).u : truncated_eigen(gbar, k).u;
}

/// K-means on the rows of the top-K eigenvectors of the mean graph. The
/// objective reported is the k-means within-cluster sum of squares, negated.
inline FitResult spectral_cluster(const MultiGraph& g, int k, const SpectralOptions& opts) {
  opts.validate();
  if (k < 1 || k > g.num_nodes()) throw std::invalid_argument("spectral_cluster: K must lie in [1, N]");
  const Eigen::MatrixXd u = spectral_embedding(g, k, opts);
  KMeansResult km = kmeans(u, k, opts.kmeans_restarts, opts.kmeans_max_iter, opts.seed);
  FitResult r;
  r.labels = ClassLabels(k, std::move(km.labels));
  r.objective = -km.inertia;
  r.iterations = std::max(1, km.iterations);
  r.converged = km.ok;
  r.seed = opts.seed;
  return r;
}

}  // namespace msbm
