#include <gtest/gtest.h>

#include <random>

#include "msbm/baselines.hpp"
#include "msbm/generator.hpp"
#include "msbm/hungarian.hpp"
#include "msbm/spectral.hpp"
#include "oracles.hpp"

using namespace msbm;

TEST(PerLayer, SingleLayerMatchesDirectFit) {
  const ClassLabels c = balanced_labels(30, 2);
  const MultiGraph g = sample_multigraph(c, ProbArray::constant(planted_partition(2, 0.7, 0.1), 1), 4);
  const PerLayerFits f = per_layer_fit(g, 2, LayerMethod::spectral, 11);
  ASSERT_EQ(f.labels.size(), 1u);
  SpectralOptions o;
  o.seed = derive_seed(11, 0);
  EXPECT_TRUE(f.labels[0] == spectral_cluster(g, 2, o).labels);
  EXPECT_TRUE(majority_vote(f.labels) == f.labels[0]);
}

TEST(PerLayer, SeparatedLayersRecoverTruth) {
  const ClassLabels c = balanced_labels(40, 2);
  const MultiGraph g = sample_multigraph(c, ProbArray::constant(planted_partition(2, 0.8, 0.05), 5), 9);
  for (LayerMethod m : {LayerMethod::spectral, LayerMethod::vem}) {
    const PerLayerFits f = per_layer_fit(g, 2, m, 3);
    ASSERT_EQ(f.labels.size(), 5u);
    for (const auto& l : f.labels) EXPECT_EQ(accuracy(l, c), 1.0);
    EXPECT_EQ(accuracy(majority_vote(f.labels), c), 1.0);
  }
}

TEST(PerLayer, Errors) {
  EXPECT_THROW(per_layer_fit(MultiGraph(3, 2), 4, LayerMethod::spectral, 0), std::invalid_argument);
}

TEST(MajorityVote, IdenticalLayers) {
  const ClassLabels z(3, {2, 0, 1, 1, 2, 0});
  EXPECT_TRUE(majority_vote({z, z, z}) == z);
}

TEST(MajorityVote, RelabeledLayersAgree) {
  // the same partition under different class names
  const ClassLabels a(2, {0, 0, 0, 1, 1, 1}), b(2, {1, 1, 1, 0, 0, 0});
  EXPECT_TRUE(majority_vote({a, b, b}) == a);
}

TEST(MajorityVote, OutvotesNoisyLayer) {
  const ClassLabels a(2, {0, 0, 0, 1, 1, 1}), noisy(2, {1, 0, 0, 0, 1, 1});
  EXPECT_TRUE(majority_vote({a, a, noisy}) == a);
  // two layers disagreeing on node 0 and 3: ties go to the lower index
  EXPECT_EQ(majority_vote({a, noisy}).values(), (std::vector<int>{0, 0, 0, 0, 1, 1}));
}

TEST(MajorityVote, NodePermutationEquivariance) {
  std::mt19937_64 rng(14);
  std::vector<ClassLabels> layers;
  const auto base = oracle::random_labels(20, 3, rng);
  for (int t = 0; t < 7; ++t) {
    auto z = base;
    for (int i = 0; i < 20; ++i)
      if (rng() % 5 == 0) z[i] = static_cast<int>(rng() % 3);
    layers.emplace_back(3, z);
  }
  const ClassLabels v = majority_vote(layers);
  std::vector<int> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<ClassLabels> moved;
  for (const auto& l : layers) {
    std::vector<int> z(20);
    for (int i = 0; i < 20; ++i) z[perm[i]] = l[i];
    moved.emplace_back(3, z);
  }
  const ClassLabels w = majority_vote(moved);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(w[perm[i]], v[i]);
}

TEST(MajorityVote, Errors) {
  EXPECT_THROW(majority_vote({}), std::invalid_argument);
  EXPECT_THROW(majority_vote({ClassLabels(2, {0, 1}), ClassLabels(2, {0, 1, 1})}), std::invalid_argument);
  EXPECT_THROW(majority_vote({ClassLabels(2, {0, 1}), ClassLabels(3, {0, 1})}), std::invalid_argument);
}
