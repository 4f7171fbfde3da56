#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "msbm/generator.hpp"
#include "msbm/hungarian.hpp"
#include "msbm/spectral.hpp"
#include "oracles.hpp"

using namespace msbm;

namespace {

MultiGraph two_cliques(int size) {
  MultiGraph g(2 * size, 1);
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < size; ++i)
      for (int j = i + 1; j < size; ++j) g.set_edge(0, b * size + i, b * size + j);
  return g;
}

Eigen::MatrixXd block_expectation(const ClassLabels& c, const Eigen::MatrixXd& m) {
  Eigen::MatrixXd a(c.size(), c.size());
  for (int i = 0; i < c.size(); ++i)
    for (int j = 0; j < c.size(); ++j) a(i, j) = m(c[i], c[j]);
  return a;
}

double mean_accuracy(int layers, int seeds, double hi, double lo) {
  double s = 0.0;
  const ClassLabels c = balanced_labels(32, 2);
  for (int r = 0; r < seeds; ++r) {
    const MultiGraph g = sample_multigraph(c, ProbArray::constant(planted_partition(2, hi, lo), layers), 1000 + r);
    SpectralOptions o;
    o.seed = r;
    s += accuracy(spectral_cluster(g, 2, o).labels, c);
  }
  return s / seeds;
}

}  // namespace

TEST(MeanGraph, Examples) {
  std::mt19937_64 rng(1);
  const MultiGraph one = oracle::random_graph(6, 1, 0.5, rng);
  const Eigen::MatrixXd m = mean_graph(one);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) EXPECT_EQ(m(i, j), one.edge(0, i, j) ? 1.0 : 0.0);

  MultiGraph mixed(4, 2);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) mixed.set_edge(0, i, j);
  const Eigen::MatrixXd half = mean_graph(mixed);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_EQ(half(i, j), i == j ? 0.0 : 0.5);

  MultiGraph triple(6, 3);
  for (int t = 0; t < 3; ++t)
    for (int i = 0; i < 6; ++i)
      for (int j = i + 1; j < 6; ++j)
        if (one.edge(0, i, j)) triple.set_edge(t, i, j);
  EXPECT_EQ(mean_graph(triple), m);
}

TEST(OffdiagSvd, ExactRankKConvergesImmediately) {
  Eigen::MatrixXd u(5, 2);
  u << 1, 0, 2, 1, 0, 1, 1, 1, 3, -1;
  const Eigen::MatrixXd a = u * u.transpose();
  SpectralOptions o;
  const LowRankFactor f = offdiag_svd(a, 2, o);
  EXPECT_EQ(f.iterations, 1);
  EXPECT_TRUE(f.converged);
  EXPECT_LT(f.residuals.back(), 1e-20);
}

TEST(OffdiagSvd, RecoversBlockExpectationOffDiagonal) {
  const ClassLabels c = balanced_labels(20, 2);
  Eigen::MatrixXd m(2, 2);
  m << 0.7, 0.3, 0.3, 0.6;
  const Eigen::MatrixXd cmc = block_expectation(c, m);
  Eigen::MatrixXd a = cmc;
  a.diagonal().setZero();
  SpectralOptions o;
  o.offdiag_max_iter = 20000;
  o.offdiag_tol = 1e-14;
  const LowRankFactor f = offdiag_svd(a, 2, o);
  const Eigen::MatrixXd r = f.reconstruct();
  double worst = 0.0;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j)
      if (i != j) worst = std::max(worst, std::abs(r(i, j) - cmc(i, j)));
  EXPECT_LT(worst, 1e-8);
}

TEST(OffdiagSvd, SingleIterationIsTruncatedEigen) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd g = mean_graph(oracle::random_graph(12, 3, 0.4, rng));
  SpectralOptions o;
  o.offdiag_max_iter = 1;
  const LowRankFactor f = offdiag_svd(g, 3, o);
  const LowRankFactor e = truncated_eigen(g, 3);
  EXPECT_EQ(f.iterations, 1);
  EXPECT_LT((f.reconstruct() - e.reconstruct()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(OffdiagSvd, ResidualNonIncreasing) {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd g = mean_graph(oracle::random_graph(10 + rep, 1 + rep % 4, 0.3, rng));
    SpectralOptions o;
    o.offdiag_max_iter = 200;
    const LowRankFactor f = offdiag_svd(g, 1 + rep % 3, o);
    for (std::size_t i = 1; i < f.residuals.size(); ++i)
      EXPECT_LE(f.residuals[i], f.residuals[i - 1] * (1 + 1e-12) + 1e-12);
  }
}

TEST(OffdiagSvd, Errors) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  a(0, 1) = 1.0;
  EXPECT_THROW(offdiag_svd(a, 1, {}), std::invalid_argument);
  EXPECT_THROW(offdiag_svd(Eigen::MatrixXd::Zero(3, 3), 4, {}), std::invalid_argument);
}

TEST(TruncatedEigen, BestRankKByMagnitude) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  a.diagonal() << 1.0, -5.0, 2.0;
  const LowRankFactor f = truncated_eigen(a, 2);
  EXPECT_DOUBLE_EQ(f.s(0), -5.0);
  EXPECT_DOUBLE_EQ(f.s(1), 2.0);
}

TEST(KMeans, EmptyClusterIsReported) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 2);
  const KMeansResult r = kmeans(x, 2, 3, 50, 1);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.labels.size(), 4u);
}

TEST(KMeans, SeparatedPoints) {
  Eigen::MatrixXd x(6, 1);
  x << 0.0, 0.1, 0.2, 10.0, 10.1, 10.2;
  const KMeansResult r = kmeans(x, 2, 5, 50, 3);
  EXPECT_TRUE(r.ok);
  EXPECT_EQ(accuracy(ClassLabels(2, r.labels), ClassLabels(2, {0, 0, 0, 1, 1, 1})), 1.0);
  EXPECT_NEAR(r.inertia, 0.04, 1e-12);
}

TEST(SpectralCluster, TwoCliques) {
  const MultiGraph g = two_cliques(8);
  const ClassLabels truth = balanced_labels(16, 2);
  for (bool off : {false, true}) {
    SpectralOptions o;
    o.use_offdiag_svd = off;
    const FitResult r = spectral_cluster(g, 2, o);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(accuracy(r.labels, truth), 1.0);
  }
}

TEST(SpectralCluster, IdentifiableMeanRecoversLabels) {
  const ClassLabels c = balanced_labels(32, 2);
  int perfect = 0;
  for (int r = 0; r < 100; ++r) {
    const MultiGraph g = sample_multigraph(c, ProbArray::constant(planted_partition(2, 0.7, 0.3), 100), 500 + r);
    SpectralOptions o;
    o.seed = r;
    perfect += accuracy(spectral_cluster(g, 2, o).labels, c) == 1.0;
  }
  EXPECT_GE(perfect, 95);
}

TEST(SpectralCluster, UnidentifiableMeanFails) {
  // exactly T/2 assortative and T/2 disassortative layers: the realized mean
  // graph has a constant expectation, so spectral clustering is at chance
  const ClassLabels c = balanced_labels(32, 2);
  const PProcessSpec mix = two_state_mixture(2);
  double s = 0.0;
  for (int r = 0; r < 30; ++r) {
    std::vector<Eigen::MatrixXd> mats;
    for (int t = 0; t < 200; ++t) mats.push_back(mix.bases[static_cast<std::size_t>(t % 2)]);
    std::shuffle(mats.begin(), mats.end(), std::mt19937_64(r));
    SpectralOptions o;
    o.seed = r;
    s += accuracy(spectral_cluster(sample_multigraph(c, ProbArray(mats), derive_seed(r, 2)), 2, o).labels, c);
  }
  EXPECT_LE(s / 30, 0.6);
}

TEST(SpectralCluster, ImbalancedMixtureLeavesSignal) {
  // iid layer draws leave a realized mean with planted structure
  const ClassLabels c = balanced_labels(32, 2);
  double s = 0.0;
  for (int r = 0; r < 30; ++r) {
    const ProbArray p = sample_p_array(two_state_mixture(200), derive_seed(r, 1));
    SpectralOptions o;
    o.seed = r;
    s += accuracy(spectral_cluster(sample_multigraph(c, p, derive_seed(r, 2)), 2, o).labels, c);
  }
  EXPECT_GT(s / 30, 0.6);
}

TEST(SpectralCluster, Deterministic) {
  std::mt19937_64 rng(2);
  const MultiGraph g = oracle::random_graph(30, 4, 0.3, rng);
  SpectralOptions o;
  o.seed = 9;
  EXPECT_TRUE(spectral_cluster(g, 3, o).labels == spectral_cluster(g, 3, o).labels);
}

TEST(SpectralCluster, NodeRelabelingInvariance) {
  const ClassLabels c = balanced_labels(40, 2);
  const MultiGraph g = sample_multigraph(c, ProbArray::constant(planted_partition(2, 0.6, 0.2), 10), 3);
  std::vector<int> perm(40);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(5));
  MultiGraph h(40, 10);
  for (int t = 0; t < 10; ++t)
    for (int i = 0; i < 40; ++i)
      for (int j = i + 1; j < 40; ++j)
        if (g.edge(t, i, j)) h.set_edge(t, perm[i], perm[j]);
  const FitResult a = spectral_cluster(g, 2, {}), b = spectral_cluster(h, 2, {});
  std::vector<int> back(40);
  for (int i = 0; i < 40; ++i) back[i] = b.labels[perm[i]];
  EXPECT_EQ(accuracy(a.labels, ClassLabels(2, back)), 1.0);
}

TEST(SpectralCluster, AccuracyGrowsWithLayers) {
  const double a1 = mean_accuracy(1, 50, 0.6, 0.4), a4 = mean_accuracy(4, 50, 0.6, 0.4),
               a16 = mean_accuracy(16, 50, 0.6, 0.4);
  EXPECT_GE(a4, a1 - 0.05);
  EXPECT_GE(a16, a4 - 0.05);
  EXPECT_GT(a16, a1);
}

TEST(SpectralCluster, Errors) {
  EXPECT_THROW(spectral_cluster(MultiGraph(3, 1), 4, {}), std::invalid_argument);
  SpectralOptions o;
  o.kmeans_restarts = 0;
  EXPECT_THROW(spectral_cluster(MultiGraph(3, 1), 2, o), std::invalid_argument);
}
