// Simulation sweeps that write CSV tables. Replications run on a small thread
// pool; each job owns its seed and its output row slot, so the table does not
// depend on the number of threads.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "msbm/baselines.hpp"
#include "msbm/generator.hpp"
#include "msbm/hungarian.hpp"
#include "msbm/likelihood.hpp"
#include "msbm/spectral.hpp"
#include "msbm/theory.hpp"
#include "msbm/variational.hpp"

namespace msbm::experiments {

/// Runs job(0..count-1) on up to `threads` workers. The first exception is
/// rethrown after all workers stop.
inline void parallel_for(int count, int threads, const std::function<void(int)>& job) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lk(err_mu);
          if (!err) err = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

struct Settings {
  std::uint64_t seed = 0;
  int threads = 1;
  /// Replications per setting; 0 picks the sweep's default.
  int reps = 0;
};

inline int reps_or(const Settings& s, int def) { return s.reps > 0 ? s.reps : def; }

/// Exact gap and its bound over N = 10..1000 for three values of p.
inline void fig2(std::ostream& out, const Settings&) {
  out << "n,p,exact_gap,bound\n";
  for (double p : {0.1, 0.25, 0.4})
    for (int n = 10; n <= 1000; n += 10)
      out << n << ',' << p << ',' << fmt(exact_sigma_gap(n, p)) << ',' << fmt(lemma3_bound(n, p)) << '\n';
}

inline const std::vector<double>& table1_deltas() {
  static const std::vector<double> v{0.165, 0.091, 0.040, 0.010};
  return v;
}
inline const std::vector<double>& table1_c0s() {
  static const std::vector<double> v{0.3, 0.25, 0.2, 0.15, 0.1, 0.05};
  return v;
}

inline std::vector<std::vector<int>> table1_grid(int threads = 1) {
  const auto& ds = table1_deltas();
  const auto& cs = table1_c0s();
  std::vector<std::vector<int>> grid(ds.size(), std::vector<int>(cs.size(), 0));
  parallel_for(static_cast<int>(ds.size() * cs.size()), threads, [&](int job) {
    const auto r = static_cast<std::size_t>(job) / cs.size(), c = static_cast<std::size_t>(job) % cs.size();
    grid[r][c] = min_nodes_k2(cs[c], ds[r]);
  });
  return grid;
}

inline void table1(std::ostream& out, const Settings& s) {
  const auto grid = table1_grid(s.threads);
  out << "delta,c0,min_nodes\n";
  for (std::size_t r = 0; r < grid.size(); ++r)
    for (std::size_t c = 0; c < grid[r].size(); ++c)
      out << table1_deltas()[r] << ',' << table1_c0s()[c] << ',' << grid[r][c] << '\n';
}

struct ToyRow {
  int case_id = 0;
  int rep = 0;
  double accuracy = 0.0;
  double objective = 0.0;
  bool tied = false;
};

/// Exhaustive profile MLE on N=16, T=1000 for a well separated and a nearly
/// unidentifiable 2x2 matrix.
inline std::vector<ToyRow> toy51_rows(const Settings& s) {
  const int reps = reps_or(s, 20);
  const double p_in[2] = {0.55, 0.51}, p_out[2] = {0.45, 0.49};
  std::vector<ToyRow> rows(static_cast<std::size_t>(2 * reps));
  parallel_for(2 * reps, s.threads, [&](int job) {
    const int cs = job / reps, rep = job % reps;
    const std::uint64_t seed = derive_seed(derive_seed(s.seed, static_cast<std::uint64_t>(cs)), static_cast<std::uint64_t>(rep));
    const ClassLabels c = balanced_labels(16, 2);
    const MultiGraph g = sample_multigraph(c, ProbArray::constant(planted_partition(2, p_in[cs], p_out[cs]), 1000), seed);
    const FitResult f = exact_profile_mle(g, 2);
    rows[static_cast<std::size_t>(job)] = {cs + 1, rep, accuracy(f.labels, c), f.objective, f.tied};
  });
  return rows;
}

inline void toy51(std::ostream& out, const Settings& s) {
  out << "case,rep,accuracy,objective,tied\n";
  for (const auto& r : toy51_rows(s))
    out << r.case_id << ',' << r.rep << ',' << fmt(r.accuracy) << ',' << fmt(r.objective) << ',' << r.tied << '\n';
}

struct MethodRow {
  int t = 0;
  std::string method;
  int rep = 0;
  double accuracy = 0.0;
};

/// N=32 balanced, two classes whose layers switch at random between an
/// assortative and a disassortative matrix; the mean matrix is constant.
inline std::vector<MethodRow> counterexample41_rows(const Settings& s) {
  const int reps = reps_or(s, 50);
  constexpr int n = 32, layers = 200;
  std::vector<MethodRow> rows(static_cast<std::size_t>(2 * reps));
  parallel_for(reps, s.threads, [&](int rep) {
    const std::uint64_t seed = derive_seed(s.seed, static_cast<std::uint64_t>(rep));
    const ClassLabels c = balanced_labels(n, 2);
    const ProbArray p = sample_p_array(two_state_mixture(layers), derive_seed(seed, 1));
    const MultiGraph g = sample_multigraph(c, p, derive_seed(seed, 2));
    SpectralOptions so;
    so.seed = derive_seed(seed, 3);
    VemOptions vo;
    vo.seed = derive_seed(seed, 4);
    vo.restarts = 10;
    rows[static_cast<std::size_t>(2 * rep)] = {layers, "spectral", rep, accuracy(spectral_cluster(g, 2, so).labels, c)};
    rows[static_cast<std::size_t>(2 * rep + 1)] = {layers, "vem", rep, accuracy(vem_fit(g, 2, vo).fit.labels, c)};
  });
  return rows;
}

inline const std::vector<int>& fig3_layers() {
  static const std::vector<int> v{1, 5, 10, 20, 50};
  return v;
}

inline const std::vector<std::string>& fig3_methods() {
  static const std::vector<std::string> v{"spectral", "profile_mle", "majority_spectral", "majority_vem"};
  return v;
}

/// N=128, K=4 planted partition near the single-layer detectability limit.
/// Each replication samples 50 layers once; the sweep over T uses prefixes.
inline std::vector<MethodRow> fig3_rows(const Settings& s) {
  const int reps = reps_or(s, 20);
  constexpr int n = 128, k = 4;
  const auto& ts = fig3_layers();
  const auto& methods = fig3_methods();
  const std::size_t per_rep = ts.size() * methods.size();
  std::vector<MethodRow> rows(per_rep * static_cast<std::size_t>(reps));
  parallel_for(reps * static_cast<int>(ts.size()), s.threads, [&](int job) {
    const int rep = job / static_cast<int>(ts.size());
    const auto ti = static_cast<std::size_t>(job % static_cast<int>(ts.size()));
    const std::uint64_t seed = derive_seed(s.seed, static_cast<std::uint64_t>(rep));
    const ClassLabels c = balanced_labels(n, k);
    const MultiGraph full = sample_multigraph(c, ProbArray::constant(planted_partition(k, 0.0968, 0.0521), ts.back()), seed);
    const int t = ts[ti];
    const MultiGraph g = full.layers(0, t);
    const std::uint64_t fs = derive_seed(seed, static_cast<std::uint64_t>(t));

    SpectralOptions so;
    so.seed = derive_seed(fs, 0);
    const FitResult sp = spectral_cluster(g, k, so);
    SearchOptions lo;
    lo.seed = derive_seed(fs, 1);
    lo.restarts = 5;
    const FitResult pm = local_search_profile_mle(g, k, lo);
    const ClassLabels mv_s = majority_vote(per_layer_fit(g, k, LayerMethod::spectral, derive_seed(fs, 2)).labels);
    VemOptions vo;
    vo.restarts = 3;
    const ClassLabels mv_v = majority_vote(per_layer_fit(g, k, LayerMethod::vem, derive_seed(fs, 3), vo).labels);

    const double acc[] = {accuracy(sp.labels, c), accuracy(pm.labels, c), accuracy(mv_s, c), accuracy(mv_v, c)};
    for (std::size_t m = 0; m < methods.size(); ++m)
      rows[static_cast<std::size_t>(rep) * per_rep + ti * methods.size() + m] = {t, methods[m], rep, acc[m]};
  });
  return rows;
}

inline void write_method_rows(std::ostream& out, const std::vector<MethodRow>& rows) {
  out << "t,method,rep,accuracy\n";
  for (const auto& r : rows) out << r.t << ',' << r.method << ',' << r.rep << ',' << fmt(r.accuracy) << '\n';
}

inline void run(const std::string& name, std::ostream& out, const Settings& s) {
  if (name == "fig2") return fig2(out, s);
  if (name == "table1") return table1(out, s);
  if (name == "toy51") return toy51(out, s);
  if (name == "counterexample41") return write_method_rows(out, counterexample41_rows(s));
  if (name == "fig3") return write_method_rows(out, fig3_rows(s));
  throw std::invalid_argument("unknown experiment '" + name + "' (fig2|fig3|table1|toy51|counterexample41)");
}

}  // namespace msbm::experiments
