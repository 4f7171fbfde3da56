// Profile and complete log-likelihoods of the multi-graph SBM, the exact
// profile maximum-likelihood estimate by canonical enumeration, and a
// single-node-move local search for larger graphs.
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "msbm/core.hpp"
#include "msbm/rng.hpp"
#include "msbm/spectral.hpp"

namespace msbm {

/// Negative Bernoulli entropy p log p + (1-p) log(1-p), with sigma(0) = sigma(1) = 0.
inline double sigma(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("sigma: argument outside [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return p * std::log(p) + (1.0 - p) * std::log1p(-p);
}

inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

/// n * sigma(o / n) for integer counts; zero for empty blocks.
inline double block_profile_term(std::int64_t n, std::int64_t o) {
  if (n <= 0) return 0.0;
  return xlogx(static_cast<double>(o)) + xlogx(static_cast<double>(n - o)) - xlogx(static_cast<double>(n));
}

inline double profile_loglik(const BlockStats& s) {
  const auto k = s.pair_counts.rows();
  double f = 0.0;
  for (const auto& o : s.edge_counts)
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = a; b < k; ++b) f += block_profile_term(s.pair_counts(a, b), o(a, b));
  return f;
}

/// Sum over layers of sum_{k<=l} n_kl sigma(o_kl / n_kl).
inline double profile_loglik(const ClassLabels& z, const MultiGraph& g) { return profile_loglik(block_stats(z, g)); }

/// Sum over layers and unordered pairs of the Bernoulli log-likelihood.
/// Returns -infinity when P puts probability 0 on an observed outcome.
inline double complete_loglik(const ClassLabels& z, const ProbArray& p, const MultiGraph& g) {
  if (p.num_layers() != g.num_layers()) throw std::invalid_argument("complete_loglik: layer count mismatch");
  if (p.num_classes() != z.num_classes()) throw std::invalid_argument("complete_loglik: class count mismatch");
  const BlockStats s = block_stats(z, g);
  const int k = z.num_classes();
  constexpr double ninf = -std::numeric_limits<double>::infinity();
  double l = 0.0;
  for (int t = 0; t < g.num_layers(); ++t) {
    const auto& m = p.mats[static_cast<std::size_t>(t)];
    const auto& o = s.edge_counts[static_cast<std::size_t>(t)];
    for (int a = 0; a < k; ++a)
      for (int b = a; b < k; ++b) {
        const auto on = static_cast<double>(o(a, b));
        const auto off = static_cast<double>(s.pair_counts(a, b) - o(a, b));
        const double q = m(a, b);
        if (on > 0) {
          if (q <= 0.0) return ninf;
          l += on * std::log(q);
        }
        if (off > 0) {
          if (q >= 1.0) return ninf;
          l += off * std::log1p(-q);
        }
      }
  }
  return l;
}

/// Block empirical means o_kl / n_kl per layer (0 for empty blocks).
inline ProbArray empirical_block_means(const ClassLabels& z, const MultiGraph& g) {
  const BlockStats s = block_stats(z, g);
  const int k = z.num_classes();
  std::vector<Eigen::MatrixXd> mats;
  for (const auto& o : s.edge_counts) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        if (s.pair_counts(a, b) > 0) m(a, b) = static_cast<double>(o(a, b)) / static_cast<double>(s.pair_counts(a, b));
    mats.push_back(std::move(m));
  }
  return ProbArray(std::move(mats));
}

namespace detail {

/// Adjacency rows packed into 64-bit words, one row per (layer, node).
struct LayerBits {
  int n = 0, t = 0, words = 0;
  std::vector<std::uint64_t> bits;

  explicit LayerBits(const MultiGraph& g) : n(g.num_nodes()), t(g.num_layers()), words((n + 63) / 64) {
    bits.assign(static_cast<std::size_t>(t) * n * words, 0);
    for (int l = 0; l < t; ++l)
      for (int i = 0; i < n; ++i) {
        const auto r = g.row(l, i);
        auto* w = row(l, i);
        for (int j = 0; j < n; ++j)
          if (r[static_cast<std::size_t>(j)]) w[j / 64] |= std::uint64_t{1} << (j % 64);
      }
  }
  std::uint64_t* row(int l, int i) { return bits.data() + (static_cast<std::size_t>(l) * n + i) * words; }
  const std::uint64_t* row(int l, int i) const {
    return bits.data() + (static_cast<std::size_t>(l) * n + i) * words;
  }
  int count(int l, int i, const std::uint64_t* mask) const {
    const auto* r = row(l, i);
    int c = 0;
    for (int w = 0; w < words; ++w) c += std::popcount(r[w] & mask[w]);
    return c;
  }
};

/// x log x for integer x, tabulated up to the largest possible block size.
class XLogXTable {
 public:
  explicit XLogXTable(std::int64_t max_x) : v_(static_cast<std::size_t>(max_x) + 1) {
    for (std::size_t x = 0; x < v_.size(); ++x) v_[x] = xlogx(static_cast<double>(x));
  }
  double term(std::int64_t n, std::int64_t o) const {
    return n <= 0 ? 0.0 : v_[static_cast<std::size_t>(o)] + v_[static_cast<std::size_t>(n - o)] - v_[static_cast<std::size_t>(n)];
  }

 private:
  std::vector<double> v_;
};

inline std::int64_t max_pairs(int n) { return static_cast<std::int64_t>(n) * (n - 1) / 2 + 1; }

/// Labels, class sizes, per-layer block edge counts and class bitmasks kept
/// in sync so single-node moves can be scored in O(T K^2).
class ProfileState {
 public:
  ProfileState(const LayerBits& bits, const XLogXTable& table, const ClassLabels& z)
      : bits_(bits), table_(table), k_(z.num_classes()), z_(z.values()) {
    sizes_.assign(static_cast<std::size_t>(k_), 0);
    masks_.assign(static_cast<std::size_t>(k_) * bits.words, 0);
    o_.assign(static_cast<std::size_t>(bits.t) * k_ * k_, 0);
    e_.assign(static_cast<std::size_t>(bits.t) * k_, 0);
    for (int i = 0; i < bits.n; ++i) {
      ++sizes_[static_cast<std::size_t>(z_[static_cast<std::size_t>(i)])];
      mask(z_[static_cast<std::size_t>(i)])[i / 64] |= std::uint64_t{1} << (i % 64);
    }
    for (int l = 0; l < bits.t; ++l)
      for (int i = 0; i < bits.n; ++i) {
        const int a = z_[static_cast<std::size_t>(i)];
        for (int b = 0; b < k_; ++b) o(l, a, b) += bits.count(l, i, mask(b));
      }
    // each within-class edge was seen from both ends; each between-class edge once per side
    for (int l = 0; l < bits.t; ++l)
      for (int a = 0; a < k_; ++a) o(l, a, a) /= 2;
  }

  double objective() const {
    double f = 0.0;
    for (int l = 0; l < bits_.t; ++l)
      for (int a = 0; a < k_; ++a)
        for (int b = a; b < k_; ++b) f += table_.term(pairs(a, b, sizes_), o(l, a, b));
    return f;
  }

  /// Best class for node i and the objective gain of moving it there
  /// (gain 0 and current class when no other class is better).
  std::pair<int, double> best_move(int i) {
    const int a = z_[static_cast<std::size_t>(i)];
    for (int l = 0; l < bits_.t; ++l)
      for (int b = 0; b < k_; ++b) e(l, b) = bits_.count(l, i, mask(b));
    int best = a;
    double best_gain = 0.0;
    for (int b = 0; b < k_; ++b) {
      if (b == a) continue;
      const double gain = move_gain(a, b);
      if (gain > best_gain + 1e-10) {
        best_gain = gain;
        best = b;
      }
    }
    return {best, best_gain};
  }

  /// Applies a move; requires best_move(i) to have been called for the same i.
  void apply_move(int i, int b) {
    const int a = z_[static_cast<std::size_t>(i)];
    if (a == b) return;
    for (int l = 0; l < bits_.t; ++l) {
      o(l, a, a) -= e(l, a);
      o(l, b, b) += e(l, b);
      const std::int64_t ab = o(l, a, b) + e(l, a) - e(l, b);
      o(l, a, b) = o(l, b, a) = ab;
      for (int c = 0; c < k_; ++c) {
        if (c == a || c == b) continue;
        o(l, a, c) = o(l, c, a) = o(l, a, c) - e(l, c);
        o(l, b, c) = o(l, c, b) = o(l, b, c) + e(l, c);
      }
    }
    --sizes_[static_cast<std::size_t>(a)];
    ++sizes_[static_cast<std::size_t>(b)];
    mask(a)[i / 64] &= ~(std::uint64_t{1} << (i % 64));
    mask(b)[i / 64] |= std::uint64_t{1} << (i % 64);
    z_[static_cast<std::size_t>(i)] = b;
  }

  const std::vector<int>& labels() const { return z_; }

 private:
  static std::int64_t pairs(int a, int b, const std::vector<std::int64_t>& n) {
    return block_pairs(n[static_cast<std::size_t>(a)], n[static_cast<std::size_t>(b)], a == b);
  }

  double move_gain(int a, int b) const {
    std::vector<std::int64_t> after = sizes_;
    --after[static_cast<std::size_t>(a)];
    ++after[static_cast<std::size_t>(b)];
    double gain = 0.0;
    for (int l = 0; l < bits_.t; ++l) {
      const auto aa = o(l, a, a), bb = o(l, b, b), ab = o(l, a, b);
      gain += table_.term(pairs(a, a, after), aa - e(l, a)) - table_.term(pairs(a, a, sizes_), aa);
      gain += table_.term(pairs(b, b, after), bb + e(l, b)) - table_.term(pairs(b, b, sizes_), bb);
      gain += table_.term(pairs(a, b, after), ab + e(l, a) - e(l, b)) - table_.term(pairs(a, b, sizes_), ab);
      for (int c = 0; c < k_; ++c) {
        if (c == a || c == b) continue;
        const auto ac = o(l, a, c), bc = o(l, b, c);
        gain += table_.term(pairs(a, c, after), ac - e(l, c)) - table_.term(pairs(a, c, sizes_), ac);
        gain += table_.term(pairs(b, c, after), bc + e(l, c)) - table_.term(pairs(b, c, sizes_), bc);
      }
    }
    return gain;
  }

  std::uint64_t* mask(int c) { return masks_.data() + static_cast<std::size_t>(c) * bits_.words; }
  std::int64_t& o(int l, int a, int b) { return o_[(static_cast<std::size_t>(l) * k_ + a) * k_ + b]; }
  std::int64_t o(int l, int a, int b) const { return o_[(static_cast<std::size_t>(l) * k_ + a) * k_ + b]; }
  std::int64_t& e(int l, int b) { return e_[static_cast<std::size_t>(l) * k_ + b]; }
  std::int64_t e(int l, int b) const { return e_[static_cast<std::size_t>(l) * k_ + b]; }

  const LayerBits& bits_;
  const XLogXTable& table_;
  int k_;
  std::vector<int> z_;
  std::vector<std::int64_t> sizes_;
  std::vector<std::uint64_t> masks_;
  std::vector<std::int64_t> o_;
  std::vector<std::int64_t> e_;
};

}  // namespace detail

/// Number of labelings of n nodes into at most k classes up to renaming of
/// the classes (sum of Stirling numbers of the second kind), as a double.
inline double canonical_assignment_count(int n, int k) {
  std::vector<double> s(static_cast<std::size_t>(k) + 1, 0.0);
  s[0] = 1.0;  // S(0,0)
  for (int m = 1; m <= n; ++m)
    for (int j = std::min(m, k); j >= 0; --j) s[static_cast<std::size_t>(j)] = j == 0 ? 0.0 : j * s[static_cast<std::size_t>(j)] + s[static_cast<std::size_t>(j) - 1];
  double total = 0.0;
  for (int j = 1; j <= k; ++j) total += s[static_cast<std::size_t>(j)];
  return total;
}

/// Global maximizer of the summed profile log-likelihood by enumerating every
/// labeling in canonical form (classes numbered in order of first use).
inline FitResult exact_profile_mle(const MultiGraph& g, int k, double max_assignments = 1e7) {
  const int n = g.num_nodes();
  if (k < 1 || k > n) throw std::invalid_argument("exact_profile_mle: K must lie in [1, N]");
  const double count = canonical_assignment_count(n, k);
  if (count > max_assignments)
    throw std::invalid_argument("exact_profile_mle: " + std::to_string(static_cast<long double>(count)) +
                                " candidate labelings exceed the enumeration cap; use local search instead");
  if (n > 64) throw std::invalid_argument("exact_profile_mle: enumeration supports at most 64 nodes");

  const detail::LayerBits bits(g);
  const detail::XLogXTable table(detail::max_pairs(n));
  const int layers = g.num_layers();
  std::vector<int> z(static_cast<std::size_t>(n), 0);
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(k), 0);
  std::vector<std::uint64_t> masks(static_cast<std::size_t>(k), 0);
  std::vector<std::int64_t> o(static_cast<std::size_t>(layers) * k * k, 0);
  auto oref = [&](int l, int a, int b) -> std::int64_t& { return o[(static_cast<std::size_t>(l) * k + a) * k + b]; };

  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> best_z;
  bool tied = false;

  auto evaluate = [&] {
    double f = 0.0;
    for (int l = 0; l < layers; ++l)
      for (int a = 0; a < k; ++a)
        for (int b = a; b < k; ++b)
          f += table.term(block_pairs(sizes[static_cast<std::size_t>(a)], sizes[static_cast<std::size_t>(b)], a == b), oref(l, a, b));
    if (best_z.empty()) {
      best = f;
      best_z = z;
      return;
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(best));
    if (f > best + tol) {
      best = f;
      best_z = z;
      tied = false;
    } else if (f >= best - tol) {
      tied = true;
    }
  };

  std::function<void(int, int)> place = [&](int node, int used) {
    if (node == n) {
      evaluate();
      return;
    }
    const int limit = std::min(used + 1, k);
    std::vector<int> local(static_cast<std::size_t>(layers) * k);
    for (int l = 0; l < layers; ++l) {
      const std::uint64_t r = bits.row(l, node)[0];
      for (int b = 0; b < k; ++b) local[static_cast<std::size_t>(l) * k + b] = std::popcount(r & masks[static_cast<std::size_t>(b)]);
    }
    for (int c = 0; c < limit; ++c) {
      for (int l = 0; l < layers; ++l)
        for (int b = 0; b < k; ++b) {
          const int e = local[static_cast<std::size_t>(l) * k + b];
          if (e == 0) continue;
          oref(l, c, b) += e;
          if (b != c) oref(l, b, c) += e;
        }
      z[static_cast<std::size_t>(node)] = c;
      ++sizes[static_cast<std::size_t>(c)];
      masks[static_cast<std::size_t>(c)] |= std::uint64_t{1} << node;
      place(node + 1, std::max(used, c + 1));
      masks[static_cast<std::size_t>(c)] &= ~(std::uint64_t{1} << node);
      --sizes[static_cast<std::size_t>(c)];
      for (int l = 0; l < layers; ++l)
        for (int b = 0; b < k; ++b) {
          const int e = local[static_cast<std::size_t>(l) * k + b];
          if (e == 0) continue;
          oref(l, c, b) -= e;
          if (b != c) oref(l, b, c) -= e;
        }
    }
  };
  place(0, 0);

  FitResult r;
  r.labels = ClassLabels(k, best_z);
  r.objective = profile_loglik(r.labels, g);
  r.iterations = 1;
  r.converged = true;
  r.tied = tied;
  return r;
}

enum class InitKind { random, spectral, given };

struct SearchOptions {
  int restarts = 10;
  int max_sweeps = 100;
  InitKind init = InitKind::spectral;
  std::uint64_t seed = 0;
  /// Starting labels for InitKind::given.
  std::optional<ClassLabels> initial;
  SpectralOptions spectral;

  void validate() const {
    if (restarts < 1 || max_sweeps < 1) throw std::invalid_argument("SearchOptions: caps must be >= 1");
    if (init == InitKind::given && !initial) throw std::invalid_argument("SearchOptions: init=given needs initial labels");
  }
};

struct AscentResult {
  ClassLabels labels;
  double objective = 0.0;
  int sweeps = 0;
  bool converged = false;
};

/// Greedy coordinate ascent from `start`: each node in turn moves to the
/// class with the largest strictly positive gain. `trace`, when given,
/// receives the objective after every accepted move.
inline AscentResult greedy_ascent(const MultiGraph& g, const ClassLabels& start, int max_sweeps,
                                  std::vector<double>* trace = nullptr) {
  const detail::LayerBits bits(g);
  const detail::XLogXTable table(detail::max_pairs(g.num_nodes()));
  detail::ProfileState st(bits, table, start);
  AscentResult res;
  double f = st.objective();
  if (trace) trace->push_back(f);
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    bool moved = false;
    for (int i = 0; i < g.num_nodes(); ++i) {
      const auto [b, gain] = st.best_move(i);
      if (b == st.labels()[static_cast<std::size_t>(i)]) continue;
      st.apply_move(i, b);
      f += gain;
      moved = true;
      if (trace) trace->push_back(st.objective());
    }
    res.sweeps = sweep;
    if (!moved) {
      res.converged = true;
      break;
    }
  }
  res.labels = ClassLabels(start.num_classes(), st.labels());
  res.objective = profile_loglik(res.labels, g);
  return res;
}

inline ClassLabels random_labels(int n, int k, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> z(static_cast<std::size_t>(n));
  for (auto& v : z) v = rng.below(k);
  return ClassLabels(k, std::move(z));
}

/// Best-of-restarts greedy ascent on the summed profile log-likelihood.
/// Restart 0 starts from the spectral (or given) labels when requested; the
/// others start from uniformly random labels.
inline FitResult local_search_profile_mle(const MultiGraph& g, int k, const SearchOptions& opts) {
  opts.validate();
  if (k < 1 || k > g.num_nodes()) throw std::invalid_argument("local_search_profile_mle: K must lie in [1, N]");
  FitResult best;
  best.objective = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < opts.restarts; ++r) {
    const std::uint64_t rs = derive_seed(opts.seed, static_cast<std::uint64_t>(r));
    ClassLabels start;
    if (r == 0 && opts.init == InitKind::given) {
      start = *opts.initial;
    } else if (r == 0 && opts.init == InitKind::spectral) {
      SpectralOptions so = opts.spectral;
      so.seed = rs;
      start = spectral_cluster(g, k, so).labels;
    } else {
      start = random_labels(g.num_nodes(), k, rs);
    }
    AscentResult a = greedy_ascent(g, start, opts.max_sweeps);
    if (a.objective > best.objective) {
      best.labels = std::move(a.labels);
      best.objective = a.objective;
      best.iterations = a.sweeps;
      best.converged = a.converged;
    }
  }
  best.seed = opts.seed;
  return best;
}

}  // namespace msbm
