// Domain types shared by every estimator: multi-layer adjacency arrays,
// class labelings, per-layer class connection matrices and block counts.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace msbm {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// T symmetric binary layers over a common node set, no self-edges.
///
/// Stored densely (one byte per ordered pair per layer); symmetry and the zero
/// diagonal are maintained by the mutators so no instance can violate them.
class MultiGraph {
 public:
  MultiGraph() = default;

  MultiGraph(int num_nodes, int num_layers) : n_(num_nodes), t_(num_layers) {
    if (num_nodes < 1) throw std::invalid_argument("MultiGraph: num_nodes must be positive");
    if (num_layers < 1) throw std::invalid_argument("MultiGraph: num_layers must be positive");
    adj_.assign(static_cast<std::size_t>(t_) * n_ * n_, 0);
    edges_.assign(static_cast<std::size_t>(t_), 0);
  }

  int num_nodes() const { return n_; }
  int num_layers() const { return t_; }

  bool edge(int t, int i, int j) const { return adj_[index(t, i, j)] != 0; }

  void set_edge(int t, int i, int j, bool present = true) {
    check(t, i, j);
    if (i == j) throw std::invalid_argument("MultiGraph: self-edges are not allowed");
    auto& a = adj_[index(t, i, j)];
    const std::uint8_t v = present ? 1 : 0;
    if (a == v) return;
    a = v;
    adj_[index(t, j, i)] = v;
    edges_[static_cast<std::size_t>(t)] += present ? 1 : -1;
  }

  /// Row i of layer t as a contiguous span of N bytes.
  std::span<const std::uint8_t> row(int t, int i) const {
    return {adj_.data() + index(t, i, 0), static_cast<std::size_t>(n_)};
  }

  std::int64_t edge_count(int t) const { return edges_[static_cast<std::size_t>(t)]; }

  std::int64_t total_edges() const {
    std::int64_t s = 0;
    for (auto e : edges_) s += e;
    return s;
  }

  /// Layers [first, first + count) as a new multigraph.
  MultiGraph layers(int first, int count) const {
    if (first < 0 || count < 1 || first + count > t_)
      throw std::out_of_range("MultiGraph::layers: range outside [0, T)");
    MultiGraph out(n_, count);
    const auto stride = static_cast<std::size_t>(n_) * n_;
    std::copy(adj_.begin() + static_cast<std::ptrdiff_t>(first * stride),
              adj_.begin() + static_cast<std::ptrdiff_t>((first + count) * stride), out.adj_.begin());
    std::copy(edges_.begin() + first, edges_.begin() + first + count, out.edges_.begin());
    return out;
  }

  MultiGraph layer(int t) const { return layers(t, 1); }

  bool operator==(const MultiGraph&) const = default;

 private:
  std::size_t index(int t, int i, int j) const {
    return (static_cast<std::size_t>(t) * n_ + static_cast<std::size_t>(i)) * n_ +
           static_cast<std::size_t>(j);
  }
  void check(int t, int i, int j) const {
    if (t < 0 || t >= t_ || i < 0 || i >= n_ || j < 0 || j >= n_)
      throw std::out_of_range("MultiGraph: index out of range");
  }

  int n_ = 0;
  int t_ = 0;
  std::vector<std::uint8_t> adj_;
  std::vector<std::int64_t> edges_;
};

/// Assignment of N nodes into K classes, 0-based.
class ClassLabels {
 public:
  ClassLabels() = default;

  ClassLabels(int num_classes, std::vector<int> labels) : k_(num_classes), z_(std::move(labels)) {
    if (k_ < 1) throw std::invalid_argument("ClassLabels: num_classes must be positive");
    for (int v : z_)
      if (v < 0 || v >= k_) throw std::invalid_argument("ClassLabels: label outside [0, K)");
  }

  int num_classes() const { return k_; }
  int size() const { return static_cast<int>(z_.size()); }
  int operator[](int i) const { return z_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& values() const { return z_; }

  std::vector<int> class_sizes() const {
    std::vector<int> n(static_cast<std::size_t>(k_), 0);
    for (int v : z_) ++n[static_cast<std::size_t>(v)];
    return n;
  }

  bool all_classes_nonempty() const {
    const auto n = class_sizes();
    return std::none_of(n.begin(), n.end(), [](int c) { return c == 0; });
  }

  /// Relabel: node i gets perm[z_i].
  ClassLabels permuted(std::span<const int> perm) const {
    if (static_cast<int>(perm.size()) != k_)
      throw std::invalid_argument("ClassLabels::permuted: permutation size differs from K");
    std::vector<int> out(z_.size());
    for (std::size_t i = 0; i < z_.size(); ++i) out[i] = perm[static_cast<std::size_t>(z_[i])];
    return ClassLabels(k_, std::move(out));
  }

  bool operator==(const ClassLabels&) const = default;

 private:
  int k_ = 1;
  std::vector<int> z_;
};

/// T symmetric K x K matrices with entries in [0, 1].
struct ProbArray {
  std::vector<Eigen::MatrixXd> mats;

  ProbArray() = default;
  explicit ProbArray(std::vector<Eigen::MatrixXd> m) : mats(std::move(m)) { validate(); }

  /// The same matrix repeated for every layer.
  static ProbArray constant(const Eigen::MatrixXd& m, int num_layers) {
    return ProbArray(std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(num_layers), m));
  }

  int num_layers() const { return static_cast<int>(mats.size()); }
  int num_classes() const { return mats.empty() ? 0 : static_cast<int>(mats.front().rows()); }

  void validate() const {
    if (mats.empty()) throw std::invalid_argument("ProbArray: no layers");
    const auto k = mats.front().rows();
    for (const auto& m : mats) {
      if (m.rows() != k || m.cols() != k)
        throw std::invalid_argument("ProbArray: every layer must be K x K with a common K");
      for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b) {
          const double v = m(a, b);
          if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("ProbArray: entry outside [0,1]");
          if (std::abs(v - m(b, a)) > 1e-12) throw std::invalid_argument("ProbArray: layer not symmetric");
        }
    }
  }
};

/// Per-block node, pair and edge counts of a labeling against a multigraph.
/// pair_counts and edge_counts are stored as full symmetric K x K matrices.
struct BlockStats {
  std::vector<std::int64_t> class_sizes;
  CountMatrix pair_counts;
  std::vector<CountMatrix> edge_counts;

  std::int64_t min_class_size() const {
    return class_sizes.empty() ? 0 : *std::min_element(class_sizes.begin(), class_sizes.end());
  }
};

struct FitResult {
  ClassLabels labels;
  double objective = 0.0;
  std::optional<double> icl;
  int iterations = 1;
  bool converged = true;
  std::uint64_t seed = 0;
  /// Set when an exhaustive search found more than one maximizer.
  bool tied = false;
};

/// Number of unordered node pairs inside block (k, l) given its class sizes.
inline std::int64_t block_pairs(std::int64_t nk, std::int64_t nl, bool diagonal) {
  return diagonal ? nk * (nk - 1) / 2 : nk * nl;
}

inline BlockStats block_stats(const ClassLabels& z, const MultiGraph& g) {
  if (z.size() != g.num_nodes()) throw std::invalid_argument("block_stats: label count differs from N");
  const int k = z.num_classes();
  const int n = g.num_nodes();
  BlockStats s;
  s.class_sizes.assign(static_cast<std::size_t>(k), 0);
  for (int i = 0; i < n; ++i) ++s.class_sizes[static_cast<std::size_t>(z[i])];
  s.pair_counts = CountMatrix::Zero(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      s.pair_counts(a, b) = block_pairs(s.class_sizes[static_cast<std::size_t>(a)],
                                        s.class_sizes[static_cast<std::size_t>(b)], a == b);
  s.edge_counts.assign(static_cast<std::size_t>(g.num_layers()), CountMatrix::Zero(k, k));
  for (int t = 0; t < g.num_layers(); ++t) {
    auto& o = s.edge_counts[static_cast<std::size_t>(t)];
    for (int i = 0; i < n; ++i) {
      const auto r = g.row(t, i);
      for (int j = i + 1; j < n; ++j)
        if (r[static_cast<std::size_t>(j)]) {
          const int a = z[i], b = z[j];
          ++o(a, b);
          if (a != b) ++o(b, a);
        }
    }
  }
  return s;
}

/// Nodes whose true class is not the strict majority inside their assigned
/// class. A class with no strict majority counts all of its nodes.
inline int majority_mismatch_r(const ClassLabels& z, const ClassLabels& c) {
  if (z.size() != c.size()) throw std::invalid_argument("majority_mismatch_r: label vectors differ in length");
  const int kz = z.num_classes(), kc = c.num_classes();
  std::vector<int> counts(static_cast<std::size_t>(kz) * kc, 0);
  for (int i = 0; i < z.size(); ++i) ++counts[static_cast<std::size_t>(z[i]) * kc + c[i]];
  int r = 0;
  for (int a = 0; a < kz; ++a) {
    const auto first = counts.begin() + static_cast<std::ptrdiff_t>(a) * kc;
    const auto last = first + kc;
    int total = 0;
    for (auto it = first; it != last; ++it) total += *it;
    const auto top = std::max_element(first, last);
    const bool strict = std::count(first, last, *top) == 1;
    r += strict ? total - *top : total;
  }
  return r;
}

}  // namespace msbm
