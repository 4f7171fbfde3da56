// Kuhn-Munkres assignment and permutation-invariant label comparison.
#pragma once

#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "msbm/core.hpp"

namespace msbm {

namespace detail {

/// Minimum-cost perfect matching on a square integer cost matrix
/// (potential-based O(n^3) formulation). Returns row -> column.
inline std::vector<int> hungarian_min(const std::vector<std::vector<std::int64_t>>& cost) {
  const int n = static_cast<int>(cost.size());
  constexpr std::int64_t inf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      std::int64_t delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assign(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] != 0) assign[p[j] - 1] = j - 1;
  return assign;
}

/// Best total weight with rows [0, fixed.size()) pinned to the given columns.
inline std::int64_t best_with_prefix(const std::vector<std::vector<std::int64_t>>& weight,
                                     const std::vector<int>& fixed) {
  const int k = static_cast<int>(weight.size());
  std::vector<char> col_used(k, 0);
  std::int64_t total = 0;
  for (std::size_t a = 0; a < fixed.size(); ++a) {
    total += weight[a][fixed[a]];
    col_used[fixed[a]] = 1;
  }
  std::vector<int> rows, cols;
  for (int a = static_cast<int>(fixed.size()); a < k; ++a) rows.push_back(a);
  for (int b = 0; b < k; ++b)
    if (!col_used[b]) cols.push_back(b);
  if (rows.empty()) return total;
  std::vector<std::vector<std::int64_t>> cost(rows.size(), std::vector<std::int64_t>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) cost[r][c] = -weight[rows[r]][cols[c]];
  const auto a = hungarian_min(cost);
  for (std::size_t r = 0; r < rows.size(); ++r) total += weight[rows[r]][cols[a[r]]];
  return total;
}

}  // namespace detail

/// Maximum-weight assignment; among optimal assignments returns the
/// lexicographically smallest (row 0's column as small as possible, then row 1, ...).
inline std::vector<int> max_weight_assignment(const std::vector<std::vector<std::int64_t>>& weight) {
  const int k = static_cast<int>(weight.size());
  const std::int64_t optimum = detail::best_with_prefix(weight, {});
  std::vector<int> fixed;
  std::vector<char> used(k, 0);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      if (used[b]) continue;
      fixed.push_back(b);
      if (detail::best_with_prefix(weight, fixed) == optimum) {
        used[b] = 1;
        break;
      }
      fixed.pop_back();
    }
  }
  return fixed;
}

/// Class permutation perm with perm[est_class] = ref_class maximizing agreement.
inline std::vector<int> align_labels(const ClassLabels& est, const ClassLabels& ref) {
  if (est.size() != ref.size()) throw std::invalid_argument("align_labels: label vectors differ in length");
  if (est.num_classes() != ref.num_classes())
    throw std::invalid_argument("align_labels: label vectors differ in K");
  const int k = est.num_classes();
  std::vector<std::vector<std::int64_t>> agree(k, std::vector<std::int64_t>(k, 0));
  for (int i = 0; i < est.size(); ++i) ++agree[est[i]][ref[i]];
  return max_weight_assignment(agree);
}

inline int agreement(const ClassLabels& est, const ClassLabels& ref) {
  const auto perm = align_labels(est, ref);
  int hits = 0;
  for (int i = 0; i < est.size(); ++i) hits += perm[est[i]] == ref[i];
  return hits;
}

/// Fraction of nodes labelled correctly after optimal class matching.
inline double accuracy(const ClassLabels& est, const ClassLabels& truth) {
  if (truth.size() == 0) throw std::invalid_argument("accuracy: empty labeling");
  return static_cast<double>(agreement(est, truth)) / truth.size();
}

}  // namespace msbm
