// Sampling of class labels, class connection probability processes and
// multi-graph SBM instances.
#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "msbm/core.hpp"
#include "msbm/rng.hpp"

namespace msbm {

enum class ProcessKind { constant, finite_mixture, noisy_stationary };

/// How the per-layer matrices P^t are produced. Layers are drawn
/// independently; `bases` holds one matrix for constant, the mixture
/// components for finite_mixture, and the mean matrix for noisy_stationary.
struct PProcessSpec {
  ProcessKind kind = ProcessKind::constant;
  std::vector<Eigen::MatrixXd> bases;
  std::vector<double> weights;
  double eps = 0.0;
  int num_layers = 1;

  static PProcessSpec constant(Eigen::MatrixXd m, int t) {
    return {ProcessKind::constant, {std::move(m)}, {1.0}, 0.0, t};
  }
  static PProcessSpec mixture(std::vector<Eigen::MatrixXd> ms, std::vector<double> w, int t) {
    return {ProcessKind::finite_mixture, std::move(ms), std::move(w), 0.0, t};
  }
  static PProcessSpec noisy(Eigen::MatrixXd mean, double eps, int t) {
    return {ProcessKind::noisy_stationary, {std::move(mean)}, {1.0}, eps, t};
  }

  void validate() const {
    if (num_layers < 1) throw std::invalid_argument("PProcessSpec: num_layers must be positive");
    if (bases.empty()) throw std::invalid_argument("PProcessSpec: no base matrix");
    ProbArray(bases).validate();
    if (kind == ProcessKind::finite_mixture) {
      if (weights.size() != bases.size())
        throw std::invalid_argument("PProcessSpec: one weight per mixture component required");
      double s = 0.0;
      for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("PProcessSpec: negative mixture weight");
        s += w;
      }
      if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("PProcessSpec: mixture weights must sum to 1");
    }
    if (kind == ProcessKind::noisy_stationary) {
      if (eps < 0.0) throw std::invalid_argument("PProcessSpec: eps must be nonnegative");
      const auto& m = bases.front();
      if ((m.array() - eps).minCoeff() < 0.0 || (m.array() + eps).maxCoeff() > 1.0)
        throw std::invalid_argument("PProcessSpec: mean +/- eps leaves [0,1]; truncation would bias the mean");
    }
  }
};

inline ProbArray sample_p_array(const PProcessSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<Eigen::MatrixXd> mats;
  mats.reserve(static_cast<std::size_t>(spec.num_layers));
  for (int t = 0; t < spec.num_layers; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    switch (spec.kind) {
      case ProcessKind::constant:
        mats.push_back(spec.bases.front());
        break;
      case ProcessKind::finite_mixture: {
        const double u = rng.uniform();
        double acc = 0.0;
        std::size_t pick = spec.bases.size() - 1;
        for (std::size_t c = 0; c < spec.weights.size(); ++c) {
          acc += spec.weights[c];
          if (u < acc) {
            pick = c;
            break;
          }
        }
        mats.push_back(spec.bases[pick]);
        break;
      }
      case ProcessKind::noisy_stationary: {
        Eigen::MatrixXd m = spec.bases.front();
        for (Eigen::Index a = 0; a < m.rows(); ++a)
          for (Eigen::Index b = a; b < m.cols(); ++b) {
            m(a, b) += rng.uniform(-spec.eps, spec.eps);
            m(b, a) = m(a, b);
          }
        mats.push_back(std::move(m));
        break;
      }
    }
  }
  return ProbArray(std::move(mats));
}

/// Edges drawn independently per layer and unordered pair; layer t uses its
/// own stream, so any subset of layers can be regenerated in isolation.
inline MultiGraph sample_multigraph(const ClassLabels& c, const ProbArray& p, std::uint64_t seed) {
  if (p.num_classes() != c.num_classes())
    throw std::invalid_argument("sample_multigraph: ProbArray K differs from label K");
  const int n = c.size();
  MultiGraph g(n, p.num_layers());
  for (int t = 0; t < p.num_layers(); ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    const auto& m = p.mats[static_cast<std::size_t>(t)];
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.bernoulli(m(c[i], c[j]))) g.set_edge(t, i, j);
  }
  return g;
}

inline Eigen::MatrixXd planted_partition(int k, double p_in, double p_out) {
  if (k < 1) throw std::invalid_argument("planted_partition: K must be positive");
  if (!(p_in >= 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0))
    throw std::invalid_argument("planted_partition: probabilities must lie in [0,1]");
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(k, k, p_out);
  m.diagonal().setConstant(p_in);
  return m;
}

inline ClassLabels sample_labels(std::span<const double> pi, int n, std::uint64_t seed) {
  if (pi.empty()) throw std::invalid_argument("sample_labels: empty class distribution");
  double s = 0.0;
  for (double v : pi) {
    if (!(v >= 0.0)) throw std::invalid_argument("sample_labels: negative class probability");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("sample_labels: class probabilities must sum to 1");
  Rng rng(seed);
  std::vector<int> z(static_cast<std::size_t>(n));
  const int k = static_cast<int>(pi.size());
  for (auto& v : z) {
    const double u = rng.uniform();
    double acc = 0.0;
    v = k - 1;
    for (int c = 0; c < k; ++c) {
      acc += pi[static_cast<std::size_t>(c)];
      if (u < acc && pi[static_cast<std::size_t>(c)] > 0.0) {
        v = c;
        break;
      }
    }
    while (pi[static_cast<std::size_t>(v)] == 0.0) --v;
  }
  return ClassLabels(k, std::move(z));
}

/// Contiguous equal-size classes: node i belongs to class floor(i K / N).
inline ClassLabels balanced_labels(int n, int k) {
  std::vector<int> z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = static_cast<int>(static_cast<long long>(i) * k / n);
  return ClassLabels(k, std::move(z));
}

/// The two-state process whose layers alternate at random between an
/// assortative and a disassortative 2 x 2 matrix with equal probability.
inline PProcessSpec two_state_mixture(int num_layers, double hi = 0.7, double lo = 0.3) {
  Eigen::MatrixXd a(2, 2), b(2, 2);
  a << hi, lo, lo, hi;
  b << lo, hi, hi, lo;
  return PProcessSpec::mixture({a, b}, {0.5, 0.5}, num_layers);
}

}  // namespace msbm
