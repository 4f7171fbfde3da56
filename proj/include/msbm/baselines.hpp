// Layer-by-layer estimation and sequential majority voting across layers.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "msbm/core.hpp"
#include "msbm/hungarian.hpp"
#include "msbm/rng.hpp"
#include "msbm/spectral.hpp"
#include "msbm/variational.hpp"

namespace msbm {

enum class LayerMethod { spectral, vem };

struct PerLayerFits {
  std::vector<ClassLabels> labels;
  /// false where the layer's fit reported a failure; its labels are best effort.
  std::vector<bool> converged;
};

/// Fits every layer as its own single-network problem. Layer t uses the seed
/// derive_seed(seed, t).
inline PerLayerFits per_layer_fit(const MultiGraph& g, int k, LayerMethod method, std::uint64_t seed,
                                  const VemOptions& vem = {}, const SpectralOptions& spectral = {}) {
  if (k < 1 || k > g.num_nodes()) throw std::invalid_argument("per_layer_fit: K must lie in [1, N]");
  PerLayerFits out;
  for (int t = 0; t < g.num_layers(); ++t) {
    const MultiGraph layer = g.layers(t, 1);
    const std::uint64_t ls = derive_seed(seed, static_cast<std::uint64_t>(t));
    FitResult fit;
    if (method == LayerMethod::spectral) {
      SpectralOptions o = spectral;
      o.seed = ls;
      fit = spectral_cluster(layer, k, o);
    } else {
      VemOptions o = vem;
      o.seed = ls;
      fit = vem_fit(layer, k, o).fit;
    }
    out.labels.push_back(std::move(fit.labels));
    out.converged.push_back(fit.converged);
  }
  return out;
}

/// Absorbs layers in order: each is aligned to the vote over the layers
/// before it, then added. Node ties go to the lower class index.
inline ClassLabels majority_vote(const std::vector<ClassLabels>& per_layer) {
  if (per_layer.empty()) throw std::invalid_argument("majority_vote: no layers");
  const int n = per_layer.front().size(), k = per_layer.front().num_classes();
  std::vector<std::vector<int>> votes(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(k), 0));
  std::vector<int> current(static_cast<std::size_t>(n));

  auto tally = [&] {
    for (int i = 0; i < n; ++i) {
      const auto& v = votes[static_cast<std::size_t>(i)];
      int best = 0;
      for (int c = 1; c < k; ++c)
        if (v[static_cast<std::size_t>(c)] > v[static_cast<std::size_t>(best)]) best = c;
      current[static_cast<std::size_t>(i)] = best;
    }
  };

  for (std::size_t t = 0; t < per_layer.size(); ++t) {
    const ClassLabels& l = per_layer[t];
    if (l.size() != n || l.num_classes() != k) throw std::invalid_argument("majority_vote: layers differ in N or K");
    std::vector<int> perm(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) perm[static_cast<std::size_t>(c)] = c;
    if (t > 0) perm = align_labels(l, ClassLabels(k, current));
    for (int i = 0; i < n; ++i) ++votes[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(l[i])])];
    tally();
  }
  return ClassLabels(k, current);
}

}  // namespace msbm
