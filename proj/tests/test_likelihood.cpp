#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "msbm/generator.hpp"
#include "msbm/hungarian.hpp"
#include "msbm/likelihood.hpp"
#include "oracles.hpp"

using namespace msbm;

namespace {

MultiGraph four_node_example() {
  MultiGraph g(4, 1);
  g.set_edge(0, 0, 1);
  g.set_edge(0, 0, 2);
  return g;
}

ProbArray perturbed(const ProbArray& p, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  ProbArray q = p;
  for (auto& m : q.mats)
    for (Eigen::Index a = 0; a < m.rows(); ++a)
      for (Eigen::Index b = a; b < m.cols(); ++b) m(a, b) = m(b, a) = std::clamp(m(a, b) + u(rng), 0.01, 0.99);
  return q;
}

}  // namespace

TEST(Sigma, Examples) {
  EXPECT_NEAR(sigma(0.5), -std::log(2.0), 1e-15);
  EXPECT_EQ(sigma(0.0), 0.0);
  EXPECT_EQ(sigma(1.0), 0.0);
  EXPECT_NEAR(sigma(0.25), static_cast<double>(oracle::sigma(0.25L)), 1e-15);
  EXPECT_NEAR(sigma(0.25), -0.562335, 1e-6);
  EXPECT_THROW(sigma(-0.1), std::domain_error);
  EXPECT_THROW(sigma(1.1), std::domain_error);
  for (double p = 0.0; p <= 1.0; p += 0.01) {
    EXPECT_LE(sigma(p), 0.0);
    EXPECT_NEAR(sigma(p), sigma(1.0 - p), 1e-14);
  }
}

TEST(ProfileLoglik, EmptyAndComplete) {
  const ClassLabels z(2, {0, 1, 0, 1, 1});
  EXPECT_EQ(profile_loglik(z, MultiGraph(5, 3)), 0.0);
  MultiGraph full(5, 2);
  for (int t = 0; t < 2; ++t)
    for (int i = 0; i < 5; ++i)
      for (int j = i + 1; j < 5; ++j) full.set_edge(t, i, j);
  EXPECT_EQ(profile_loglik(z, full), 0.0);
}

TEST(ProfileLoglik, FourNodeExample) {
  const double f = profile_loglik(ClassLabels(2, {0, 0, 1, 1}), four_node_example());
  EXPECT_NEAR(f, static_cast<double>(4 * oracle::sigma(0.25L)), 1e-12);
  EXPECT_NEAR(f, -2.249341, 1e-6);
}

TEST(ProfileLoglik, MatchesPairWalkOracle) {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + rep % 14, k = 1 + rep % 4, t = 1 + rep % 3;
    const MultiGraph g = oracle::random_graph(n, t, 0.1 + 0.008 * rep, rng);
    const auto z = oracle::random_labels(n, k, rng);
    EXPECT_NEAR(profile_loglik(ClassLabels(k, z), g), static_cast<double>(oracle::profile_loglik(z, k, g)), 1e-9);
  }
}

TEST(ProfileLoglik, ClassNamePermutationInvariance) {
  std::mt19937_64 rng(2);
  const MultiGraph g = oracle::random_graph(12, 2, 0.4, rng);
  const ClassLabels z(3, oracle::random_labels(12, 3, rng));
  std::vector<int> perm{0, 1, 2};
  const double base = profile_loglik(z, g);
  do EXPECT_NEAR(profile_loglik(z.permuted(perm), g), base, 1e-12);
  while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(CompleteLoglik, Examples) {
  MultiGraph one(2, 1);
  one.set_edge(0, 0, 1);
  EXPECT_NEAR(complete_loglik(ClassLabels(1, {0, 0}), ProbArray::constant(Eigen::MatrixXd::Constant(1, 1, 0.5), 1), one),
              -std::log(2.0), 1e-15);
  const ClassLabels z(2, {0, 0, 1, 1});
  const MultiGraph g = four_node_example();
  EXPECT_NEAR(complete_loglik(z, empirical_block_means(z, g), g), -2.249341, 1e-6);
  // an observed edge in a block with probability 0
  EXPECT_EQ(complete_loglik(z, ProbArray::constant(Eigen::MatrixXd::Zero(2, 2), 1), g),
            -std::numeric_limits<double>::infinity());
}

TEST(CompleteLoglik, ProfilingIdentity) {
  std::mt19937_64 rng(41);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 4 + rep % 10, k = 1 + rep % 3;
    const MultiGraph g = oracle::random_graph(n, 1 + rep % 3, 0.35, rng);
    const ClassLabels z(k, oracle::random_labels(n, k, rng));
    const ProbArray hat = empirical_block_means(z, g);
    const double f = profile_loglik(z, g);
    EXPECT_NEAR(complete_loglik(z, hat, g), f, 1e-9);
    for (int j = 0; j < 5; ++j) EXPECT_LE(complete_loglik(z, perturbed(hat, rng, 0.1), g), f + 1e-9);
  }
}

TEST(ExactMle, SingleClass) {
  std::mt19937_64 rng(1);
  const FitResult r = exact_profile_mle(oracle::random_graph(7, 2, 0.5, rng), 1);
  EXPECT_EQ(r.labels.values(), std::vector<int>(7, 0));
}

TEST(ExactMle, CanonicalCount) {
  EXPECT_DOUBLE_EQ(canonical_assignment_count(4, 2), 8.0);   // S(4,1) + S(4,2)
  EXPECT_DOUBLE_EQ(canonical_assignment_count(5, 3), 41.0);  // 1 + 15 + 25
  EXPECT_DOUBLE_EQ(canonical_assignment_count(16, 2), 32768.0);
}

TEST(ExactMle, MatchesFullEnumeration) {
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 4 + rep % 5, k = 2 + rep % 2, t = 1 + rep % 3;
    const MultiGraph g = oracle::random_graph(n, t, 0.45, rng);
    const FitResult r = exact_profile_mle(g, k);
    EXPECT_NEAR(r.objective, static_cast<double>(oracle::exhaustive_profile_max(g, k)), 1e-9);
    EXPECT_NEAR(r.objective, profile_loglik(r.labels, g), 1e-12);
  }
}

TEST(ExactMle, DominatesRandomLabelings) {
  std::mt19937_64 rng(5);
  for (int inst = 0; inst < 3; ++inst) {
    const MultiGraph g = oracle::random_graph(10, 3, 0.3, rng);
    const FitResult r = exact_profile_mle(g, 3);
    for (int i = 0; i < 1000; ++i)
      EXPECT_GE(r.objective + 1e-9, profile_loglik(ClassLabels(3, oracle::random_labels(10, 3, rng)), g));
  }
}

TEST(ExactMle, CapAndErrors) {
  EXPECT_THROW(exact_profile_mle(MultiGraph(30, 1), 3), std::invalid_argument);
  EXPECT_THROW(exact_profile_mle(MultiGraph(12, 1), 2, 100.0), std::invalid_argument);
  EXPECT_THROW(exact_profile_mle(MultiGraph(3, 1), 4), std::invalid_argument);
}

TEST(ExactMle, TieFlaggedOnSymmetricGraph) {
  // the empty graph: every labeling has objective 0
  const FitResult r = exact_profile_mle(MultiGraph(5, 1), 2);
  EXPECT_TRUE(r.tied);
  EXPECT_EQ(r.labels.values(), std::vector<int>(5, 0));
}

TEST(ExactMle, SeparatedCaseRecoversTruth) {
  const ClassLabels c = balanced_labels(16, 2);
  int perfect = 0;
  for (int r = 0; r < 5; ++r) {
    const MultiGraph g = sample_multigraph(c, ProbArray::constant(planted_partition(2, 0.55, 0.45), 1000), 900 + r);
    perfect += accuracy(exact_profile_mle(g, 2).labels, c) == 1.0;
  }
  EXPECT_GE(perfect, 4);
}

TEST(LocalSearch, TruthIsFixedPoint) {
  const ClassLabels c = balanced_labels(30, 3);
  const MultiGraph g = sample_multigraph(c, ProbArray::constant(planted_partition(3, 0.8, 0.1), 4), 3);
  SearchOptions o;
  o.init = InitKind::given;
  o.initial = c;
  o.restarts = 1;
  const FitResult r = local_search_profile_mle(g, 3, o);
  EXPECT_TRUE(r.labels == c);
  EXPECT_TRUE(r.converged);
}

TEST(LocalSearch, AcceptedMovesStrictlyIncrease) {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 30; ++rep) {
    const MultiGraph g = oracle::random_graph(15, 2, 0.3, rng);
    std::vector<double> trace;
    const AscentResult a = greedy_ascent(g, ClassLabels(3, oracle::random_labels(15, 3, rng)), 100, &trace);
    for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_GT(trace[i], trace[i - 1]);
    EXPECT_NEAR(a.objective, trace.back(), 1e-9);
    EXPECT_GE(a.objective + 1e-9, trace.front());
  }
}

TEST(LocalSearch, AgreesWithExhaustiveSearch) {
  std::mt19937_64 rng(123);
  int hits = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const MultiGraph g = oracle::random_graph(10, 5, 0.2 + 0.005 * rep, rng);
    SearchOptions o;
    o.restarts = 20;
    o.seed = rep;
    const double local = local_search_profile_mle(g, 2, o).objective;
    const double exact = exact_profile_mle(g, 2).objective;
    EXPECT_LE(local, exact + 1e-9);
    hits += local >= exact - 1e-9;
  }
  EXPECT_GE(hits, 95);
}

TEST(LocalSearch, Deterministic) {
  std::mt19937_64 rng(4);
  const MultiGraph g = oracle::random_graph(25, 3, 0.3, rng);
  SearchOptions o;
  o.seed = 5;
  EXPECT_TRUE(local_search_profile_mle(g, 3, o).labels == local_search_profile_mle(g, 3, o).labels);
}
