// Variational EM for the multi-graph SBM with mean-field class
// responsibilities, the evidence lower bound, and ICL-based choice of K.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "msbm/core.hpp"
#include "msbm/likelihood.hpp"
#include "msbm/rng.hpp"
#include "msbm/spectral.hpp"

namespace msbm {

struct VariationalState {
  /// N x K responsibilities b_ik; rows on the simplex.
  Eigen::MatrixXd responsibilities;
  Eigen::VectorXd class_probs;
  ProbArray prob_array;

  ClassLabels hard_labels() const {
    std::vector<int> z(static_cast<std::size_t>(responsibilities.rows()));
    for (Eigen::Index i = 0; i < responsibilities.rows(); ++i) {
      Eigen::Index best = 0;
      responsibilities.row(i).maxCoeff(&best);
      z[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return ClassLabels(static_cast<int>(responsibilities.cols()), std::move(z));
  }
};

struct VemOptions {
  int max_iter = 500;
  /// Relative ELBO change below which a run stops.
  double tol = 1e-6;
  int restarts = 5;
  InitKind init = InitKind::spectral;
  std::uint64_t seed = 0;
  double prob_floor = 1e-6;
  std::optional<ClassLabels> initial;
  SpectralOptions spectral;
  /// Called after every iteration with the updated state and its ELBO.
  std::function<void(const VariationalState&, double)> on_iteration;

  void validate() const {
    if (max_iter < 1 || restarts < 1) throw std::invalid_argument("VemOptions: caps must be >= 1");
    if (!(tol >= 0.0)) throw std::invalid_argument("VemOptions: tol must be >= 0");
    if (!(prob_floor > 0.0 && prob_floor < 0.5)) throw std::invalid_argument("VemOptions: prob_floor must lie in (0, 0.5)");
    if (init == InitKind::given && !initial) throw std::invalid_argument("VemOptions: init=given needs initial labels");
  }
};

struct VemResult {
  VariationalState state;
  FitResult fit;
  /// ELBO after every iteration of the selected run.
  std::vector<double> trace;
};

namespace detail {

using Neighbors = std::vector<std::vector<std::vector<int>>>;  // [t][i] -> neighbors

inline Neighbors neighbor_lists(const MultiGraph& g) {
  Neighbors nb(static_cast<std::size_t>(g.num_layers()),
               std::vector<std::vector<int>>(static_cast<std::size_t>(g.num_nodes())));
  for (int t = 0; t < g.num_layers(); ++t)
    for (int i = 0; i < g.num_nodes(); ++i) {
      const auto r = g.row(t, i);
      for (int j = 0; j < g.num_nodes(); ++j)
        if (r[static_cast<std::size_t>(j)]) nb[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)].push_back(j);
    }
  return nb;
}

/// S_t = G^t B for every layer.
inline std::vector<Eigen::MatrixXd> neighbor_mass(const Neighbors& nb, const Eigen::MatrixXd& b) {
  std::vector<Eigen::MatrixXd> s;
  s.reserve(nb.size());
  for (const auto& layer : nb) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(b.rows(), b.cols());
    for (std::size_t i = 0; i < layer.size(); ++i)
      for (int j : layer[i]) m.row(static_cast<Eigen::Index>(i)) += b.row(j);
    s.push_back(std::move(m));
  }
  return s;
}

/// Ordered-pair block edge mass sum_{i!=j} b_ik b_jl g_ij and pair mass
/// sum_{i!=j} b_ik b_jl.
struct BlockMass {
  std::vector<Eigen::MatrixXd> edges;
  Eigen::MatrixXd pairs;
};

inline BlockMass block_mass(const std::vector<Eigen::MatrixXd>& s, const Eigen::MatrixXd& b) {
  BlockMass m;
  for (const auto& st : s) m.edges.push_back(b.transpose() * st);
  const Eigen::VectorXd col = b.colwise().sum().transpose();
  m.pairs = col * col.transpose() - b.transpose() * b;
  return m;
}

inline void m_step(const BlockMass& mass, const Eigen::MatrixXd& b, double floor, VariationalState& st) {
  const auto k = b.cols();
  st.class_probs = b.colwise().sum().transpose() / static_cast<double>(b.rows());
  std::vector<Eigen::MatrixXd> mats;
  mats.reserve(mass.edges.size());
  for (const auto& e : mass.edges) {
    Eigen::MatrixXd p(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index c = a; c < k; ++c) {
        const double den = 0.5 * (mass.pairs(a, c) + mass.pairs(c, a));
        const double num = 0.5 * (e(a, c) + e(c, a));
        const double v = den > 0.0 ? num / den : 0.0;
        p(a, c) = p(c, a) = std::clamp(v, floor, 1.0 - floor);
      }
    mats.push_back(std::move(p));
  }
  st.prob_array.mats = std::move(mats);
}

/// x log y with 0 log 0 = 0.
inline double xlogy(double x, double y) {
  if (x <= 0.0) return 0.0;
  return x * std::log(y);
}

inline double elbo_from_mass(const BlockMass& mass, const VariationalState& st) {
  const Eigen::MatrixXd& b = st.responsibilities;
  const auto k = b.cols();
  double q = 0.0;
  const Eigen::VectorXd col = b.colwise().sum().transpose();
  for (Eigen::Index c = 0; c < k; ++c) {
    if (col(c) <= 0.0) continue;
    if (st.class_probs(c) <= 0.0) return -std::numeric_limits<double>::infinity();
    q += col(c) * std::log(st.class_probs(c));
  }
  for (std::size_t t = 0; t < mass.edges.size(); ++t) {
    const auto& p = st.prob_array.mats[t];
    const auto& e = mass.edges[t];
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index c = 0; c < k; ++c)
        q += 0.5 * (xlogy(e(a, c), p(a, c)) + xlogy(mass.pairs(a, c) - e(a, c), 1.0 - p(a, c)));
  }
  for (Eigen::Index i = 0; i < b.rows(); ++i)
    for (Eigen::Index c = 0; c < k; ++c) q -= xlogx(b(i, c));
  return q;
}

/// One sequential sweep of exact coordinate updates of each row of b.
inline void e_step(const Neighbors& nb, std::vector<Eigen::MatrixXd>& s, VariationalState& st) {
  Eigen::MatrixXd& b = st.responsibilities;
  const auto n = b.rows(), k = b.cols();
  const auto layers = static_cast<Eigen::Index>(nb.size());
  std::vector<Eigen::MatrixXd> logit(static_cast<std::size_t>(layers));
  Eigen::MatrixXd log_off = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index t = 0; t < layers; ++t) {
    const auto& p = st.prob_array.mats[static_cast<std::size_t>(t)];
    logit[static_cast<std::size_t>(t)] = p.array().log() - (-p.array()).log1p();
    log_off.array() += (-p.array()).log1p();
  }
  Eigen::VectorXd log_pi(k);
  for (Eigen::Index c = 0; c < k; ++c)
    log_pi(c) = st.class_probs(c) > 0.0 ? std::log(st.class_probs(c)) : -std::numeric_limits<double>::infinity();

  Eigen::RowVectorXd col = b.colwise().sum();
  Eigen::RowVectorXd score(k), fresh(k), delta(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    score = log_pi.transpose();
    for (Eigen::Index t = 0; t < layers; ++t) score += s[static_cast<std::size_t>(t)].row(i) * logit[static_cast<std::size_t>(t)].transpose();
    score += (col - b.row(i)) * log_off.transpose();
    const double top = score.maxCoeff();
    for (Eigen::Index c = 0; c < k; ++c) fresh(c) = std::isfinite(score(c)) ? std::exp(score(c) - top) : 0.0;
    fresh /= fresh.sum();
    delta = fresh - b.row(i);
    b.row(i) = fresh;
    col += delta;
    for (Eigen::Index t = 0; t < layers; ++t)
      for (int j : nb[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]) s[static_cast<std::size_t>(t)].row(j) += delta;
  }
}

struct RunOutcome {
  VariationalState state;
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
};

inline RunOutcome vem_run(const Neighbors& nb, Eigen::MatrixXd b0, const VemOptions& opts) {
  RunOutcome out;
  VariationalState& st = out.state;
  st.responsibilities = std::move(b0);
  auto s = neighbor_mass(nb, st.responsibilities);
  m_step(block_mass(s, st.responsibilities), st.responsibilities, opts.prob_floor, st);
  double prev = elbo_from_mass(block_mass(s, st.responsibilities), st);
  out.trace.push_back(prev);
  for (int it = 1; it <= opts.max_iter; ++it) {
    e_step(nb, s, st);
    // refresh the incrementally updated neighbor sums to keep rounding bounded
    s = neighbor_mass(nb, st.responsibilities);
    const BlockMass mass = block_mass(s, st.responsibilities);
    m_step(mass, st.responsibilities, opts.prob_floor, st);
    const double cur = elbo_from_mass(mass, st);
    out.trace.push_back(cur);
    out.iterations = it;
    if (opts.on_iteration) opts.on_iteration(st, cur);
    if (std::abs(cur - prev) <= opts.tol * std::max(1.0, std::abs(prev))) {
      out.converged = true;
      break;
    }
    prev = cur;
  }
  out.degenerate = (st.class_probs.array() * static_cast<double>(st.responsibilities.rows()) < 1e-8).any();
  return out;
}

inline Eigen::MatrixXd responsibilities_from_labels(const ClassLabels& z, double smoothing = 1e-3) {
  const int k = z.num_classes();
  Eigen::MatrixXd b = Eigen::MatrixXd::Constant(z.size(), k, smoothing / k);
  for (int i = 0; i < z.size(); ++i) b(i, z[i]) += 1.0 - smoothing;
  return b;
}

inline Eigen::MatrixXd random_responsibilities(int n, int k, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd b(n, k);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) b(i, c) = -std::log1p(-rng.uniform());  // Dirichlet(1) via exponentials
    b.row(i) /= b.row(i).sum();
  }
  return b;
}

}  // namespace detail

/// Variational lower bound Q of the complete log-likelihood at a given state.
inline double elbo(const MultiGraph& g, const VariationalState& st) {
  const auto nb = detail::neighbor_lists(g);
  const auto s = detail::neighbor_mass(nb, st.responsibilities);
  return detail::elbo_from_mass(detail::block_mass(s, st.responsibilities), st);
}

/// ICL = -2 Q + (K-1) log N + T K (K+1)/2 log(N (N-1)/2); lower is better.
inline double icl_from_elbo(double q, int n, int t, int k) {
  const double pairs = static_cast<double>(n) * (n - 1) / 2.0;
  return -2.0 * q + (k - 1) * std::log(static_cast<double>(n)) +
         static_cast<double>(t) * k * (k + 1) / 2.0 * std::log(pairs);
}

inline double icl(const MultiGraph& g, const VariationalState& st, int k) {
  return icl_from_elbo(elbo(g, st), g.num_nodes(), g.num_layers(), k);
}

/// Best-of-restarts variational EM. Restart 0 is warm-started from spectral
/// clustering (or the given labels); the rest start from random soft
/// responsibilities. Runs whose class proportions collapse to zero are kept
/// only if every run collapses, in which case the result is flagged.
inline VemResult vem_fit(const MultiGraph& g, int k, const VemOptions& opts) {
  opts.validate();
  if (k < 1 || k > g.num_nodes()) throw std::invalid_argument("vem_fit: K must lie in [1, N]");
  const auto nb = detail::neighbor_lists(g);
  std::optional<detail::RunOutcome> best, best_degenerate;
  for (int r = 0; r < opts.restarts; ++r) {
    const std::uint64_t rs = derive_seed(opts.seed, static_cast<std::uint64_t>(r));
    Eigen::MatrixXd b0;
    if (r == 0 && opts.init == InitKind::given) {
      b0 = detail::responsibilities_from_labels(*opts.initial);
    } else if (r == 0 && opts.init == InitKind::spectral) {
      SpectralOptions so = opts.spectral;
      so.seed = rs;
      b0 = detail::responsibilities_from_labels(spectral_cluster(g, k, so).labels);
    } else {
      b0 = detail::random_responsibilities(g.num_nodes(), k, rs);
    }
    detail::RunOutcome run = detail::vem_run(nb, std::move(b0), opts);
    auto& slot = run.degenerate ? best_degenerate : best;
    if (!slot || run.trace.back() > slot->trace.back()) slot = std::move(run);
  }
  const bool failed = !best.has_value();
  detail::RunOutcome& chosen = failed ? *best_degenerate : *best;

  VemResult res;
  res.fit.labels = chosen.state.hard_labels();
  res.fit.objective = chosen.trace.back();
  res.fit.icl = icl_from_elbo(res.fit.objective, g.num_nodes(), g.num_layers(), k);
  res.fit.iterations = std::max(1, chosen.iterations);
  res.fit.converged = chosen.converged && !failed;
  res.fit.seed = opts.seed;
  res.state = std::move(chosen.state);
  res.trace = std::move(chosen.trace);
  return res;
}

struct KSelectionRow {
  int k = 0;
  double elbo = 0.0;
  double icl = 0.0;
};

struct KSelection {
  int best_k = 0;
  std::vector<KSelectionRow> table;
};

/// Fits every K in [k_min, k_max] and picks the smallest ICL (ties: smaller K).
inline KSelection select_k(const MultiGraph& g, int k_min, int k_max, const VemOptions& opts) {
  if (k_min < 1 || k_min > k_max || k_max > g.num_nodes())
    throw std::invalid_argument("select_k: need 1 <= k_min <= k_max <= N");
  KSelection sel;
  double best = std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    VemOptions o = opts;
    o.seed = derive_seed(opts.seed, static_cast<std::uint64_t>(k));
    const VemResult r = vem_fit(g, k, o);
    sel.table.push_back({k, r.fit.objective, *r.fit.icl});
    if (*r.fit.icl < best) {
      best = *r.fit.icl;
      sel.best_k = k;
    }
  }
  return sel;
}

}  // namespace msbm
