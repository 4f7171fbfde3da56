// msbm: generate multigraphs, fit block models, evaluate bounds, and run the
// simulation sweeps.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "msbm/baselines.hpp"
#include "msbm/experiments.hpp"
#include "msbm/generator.hpp"
#include "msbm/hungarian.hpp"
#include "msbm/io.hpp"
#include "msbm/likelihood.hpp"
#include "msbm/spectral.hpp"
#include "msbm/theory.hpp"
#include "msbm/variational.hpp"

namespace {

using msbm::io::json;

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw msbm::io::FormatError(path + ": cannot open for writing");
  out << text;
}

std::optional<bool> offdiag_flag(const std::string& v) {
  if (v == "on") return true;
  if (v == "off") return false;
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-graph stochastic block model estimation"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Sample a multigraph with planted classes");
  int g_n = 0, g_k = 2, g_t = 1;
  double g_in = 0.5, g_out = 0.5, g_eps = 0.0;
  std::uint64_t g_seed = 0;
  std::string g_out_path, g_labels, g_prob_in, g_prob_out, g_process = "constant";
  bool g_random_labels = false;
  gen->add_option("--n", g_n, "Number of nodes")->required()->check(CLI::PositiveNumber);
  gen->add_option("--k", g_k, "Number of classes")->check(CLI::PositiveNumber);
  gen->add_option("--t", g_t, "Number of layers")->check(CLI::PositiveNumber);
  gen->add_option("--p-in", g_in, "Within-class edge probability")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--p-out", g_out, "Between-class edge probability")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--prob", g_prob_in, "Base K x K matrix as a one-layer ProbArray JSON (overrides --p-in/--p-out)");
  gen->add_option("--process", g_process, "Layer process")->check(CLI::IsMember({"constant", "mixture", "noisy"}));
  gen->add_option("--eps", g_eps, "Noise half-width for --process noisy")->check(CLI::NonNegativeNumber);
  gen->add_flag("--random-labels", g_random_labels, "Draw labels uniformly at random instead of balanced blocks");
  gen->add_option("--seed", g_seed, "Random seed")->required();
  gen->add_option("-o,--output", g_out_path, "Multigraph file (.mgr)")->required();
  gen->add_option("--labels-out", g_labels, "True labels file (default: labels.csv next to the output)");
  gen->add_option("--prob-out", g_prob_out, "Write the sampled per-layer matrices as JSON");

  // fit
  auto* fit = app.add_subcommand("fit", "Estimate class labels");
  std::string f_method = "spectral", f_in, f_out, f_truth, f_offdiag = "auto";
  int f_k = 2, f_restarts = 0, f_max_iter = 0;
  double f_tol = -1.0;
  std::uint64_t f_seed = 0;
  fit->add_option("--method", f_method, "Estimator")
      ->check(CLI::IsMember({"spectral", "vem", "exact-mle", "local-mle", "majority-spectral", "majority-vem"}));
  fit->add_option("-i,--input", f_in, "Multigraph file (.mgr)")->required();
  fit->add_option("--k", f_k, "Number of classes")->check(CLI::PositiveNumber);
  fit->add_option("--seed", f_seed, "Random seed");
  fit->add_option("--restarts", f_restarts, "Restarts (method default when omitted)")->check(CLI::PositiveNumber);
  fit->add_option("--tol", f_tol, "Relative ELBO tolerance (vem)")->check(CLI::NonNegativeNumber);
  fit->add_option("--max-iter", f_max_iter, "Iteration cap (vem iterations, local-mle sweeps)")->check(CLI::PositiveNumber);
  fit->add_option("--offdiag", f_offdiag, "Off-diagonal refinement for spectral")->check(CLI::IsMember({"auto", "on", "off"}));
  fit->add_option("--truth", f_truth, "True labels file; adds accuracy to the result");
  fit->add_option("-o,--output", f_out, "Result JSON (default: stdout)");

  // bounds
  auto* bounds = app.add_subcommand("bounds", "Margin, separation, bound constants, or the bound curve");
  std::string b_prob, b_out;
  double b_in = -1.0, b_out_p = -1.0, b_p = -1.0;
  int b_k = 2, b_nmax = 1000, b_step = 10;
  bounds->add_option("--prob", b_prob, "ProbArray JSON");
  bounds->add_option("--p-in", b_in, "Within-class probability (with --p-out, --k)")->check(CLI::Range(0.0, 1.0));
  bounds->add_option("--p-out", b_out_p, "Between-class probability")->check(CLI::Range(0.0, 1.0));
  bounds->add_option("--k", b_k, "Number of classes")->check(CLI::PositiveNumber);
  bounds->add_option("--curve-p", b_p, "Emit exact gap and bound over N for this p as CSV")->check(CLI::Range(0.0, 1.0));
  bounds->add_option("--n-max", b_nmax, "Largest N on the curve")->check(CLI::PositiveNumber);
  bounds->add_option("--n-step", b_step, "Step in N on the curve")->check(CLI::PositiveNumber);
  bounds->add_option("-o,--output", b_out, "Output file (default: stdout)");

  // min-nodes
  auto* mn = app.add_subcommand("min-nodes", "Minimum balanced N for two classes");
  double m_c0 = 0.0, m_delta = 0.0;
  mn->add_option("--c0", m_c0, "Probability margin C0")->required();
  mn->add_option("--delta", m_delta, "Separation delta")->required();

  // select-k
  auto* sk = app.add_subcommand("select-k", "Choose K by ICL over a range");
  std::string s_in, s_out;
  int s_kmin = 1, s_kmax = 4, s_restarts = 5, s_max_iter = 500;
  double s_tol = 1e-6;
  std::uint64_t s_seed = 0;
  sk->add_option("-i,--input", s_in, "Multigraph file (.mgr)")->required();
  sk->add_option("--k-min", s_kmin, "Smallest K")->check(CLI::PositiveNumber);
  sk->add_option("--k-max", s_kmax, "Largest K")->check(CLI::PositiveNumber);
  sk->add_option("--restarts", s_restarts, "VEM restarts per K")->check(CLI::PositiveNumber);
  sk->add_option("--tol", s_tol, "Relative ELBO tolerance")->check(CLI::NonNegativeNumber);
  sk->add_option("--max-iter", s_max_iter, "VEM iteration cap")->check(CLI::PositiveNumber);
  sk->add_option("--seed", s_seed, "Random seed")->required();
  sk->add_option("-o,--output", s_out, "Result JSON (default: stdout)");

  // experiment
  auto* ex = app.add_subcommand("experiment", "Run a simulation sweep and write CSV");
  std::string e_name, e_out;
  msbm::experiments::Settings e_set;
  e_set.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  ex->add_option("--name", e_name, "Sweep")->required()
      ->check(CLI::IsMember({"fig2", "fig3", "table1", "toy51", "counterexample41"}));
  ex->add_option("--seed", e_set.seed, "Random seed")->required();
  ex->add_option("--threads", e_set.threads, "Worker threads")->check(CLI::PositiveNumber);
  ex->add_option("--reps", e_set.reps, "Replications per setting")->check(CLI::PositiveNumber);
  ex->add_option("-o,--output", e_out, "CSV file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      msbm::ProbArray base;
      if (!g_prob_in.empty()) {
        base = msbm::io::read_prob_array(g_prob_in);
        g_k = base.num_classes();
      } else {
        base = msbm::ProbArray::constant(msbm::planted_partition(g_k, g_in, g_out), 1);
      }
      if (g_k > g_n) throw std::invalid_argument("--k must not exceed --n");
      msbm::PProcessSpec spec;
      if (g_process == "constant") {
        spec = msbm::PProcessSpec::constant(base.mats.front(), g_t);
      } else if (g_process == "noisy") {
        spec = msbm::PProcessSpec::noisy(base.mats.front(), g_eps, g_t);
      } else {
        if (g_prob_in.empty())
          spec = msbm::PProcessSpec::mixture({msbm::planted_partition(g_k, g_in, g_out), msbm::planted_partition(g_k, g_out, g_in)},
                                             {0.5, 0.5}, g_t);
        else
          spec = msbm::PProcessSpec::mixture(base.mats, std::vector<double>(base.mats.size(), 1.0 / static_cast<double>(base.mats.size())), g_t);
      }
      msbm::ClassLabels c;
      if (g_random_labels) {
        const std::vector<double> pi(static_cast<std::size_t>(g_k), 1.0 / g_k);
        c = msbm::sample_labels(pi, g_n, msbm::derive_seed(g_seed, 0));
      } else {
        c = msbm::balanced_labels(g_n, g_k);
      }
      const msbm::ProbArray p = msbm::sample_p_array(spec, msbm::derive_seed(g_seed, 1));
      const msbm::MultiGraph g = msbm::sample_multigraph(c, p, msbm::derive_seed(g_seed, 2));
      msbm::io::write_multigraph(g_out_path, g);
      if (g_labels.empty()) g_labels = (std::filesystem::path(g_out_path).parent_path() / "labels.csv").string();
      msbm::io::write_labels(g_labels, c);
      if (!g_prob_out.empty()) msbm::io::write_json(g_prob_out, msbm::io::to_json(p));
      return 0;
    }

    if (*fit) {
      const msbm::MultiGraph g = msbm::io::read_multigraph(f_in);
      if (f_k > g.num_nodes()) throw std::invalid_argument("--k exceeds the number of nodes in " + f_in);
      msbm::SpectralOptions so;
      so.use_offdiag_svd = offdiag_flag(f_offdiag);
      so.seed = f_seed;
      msbm::FitResult r;
      std::optional<msbm::ProbArray> fitted_p;
      if (f_method == "spectral") {
        if (f_restarts > 0) so.kmeans_restarts = f_restarts;
        r = msbm::spectral_cluster(g, f_k, so);
      } else if (f_method == "vem" || f_method == "majority-vem") {
        msbm::VemOptions vo;
        vo.seed = f_seed;
        vo.spectral = so;
        if (f_restarts > 0) vo.restarts = f_restarts;
        if (f_tol >= 0.0) vo.tol = f_tol;
        if (f_max_iter > 0) vo.max_iter = f_max_iter;
        if (f_method == "vem") {
          auto res = msbm::vem_fit(g, f_k, vo);
          r = std::move(res.fit);
          fitted_p = std::move(res.state.prob_array);
        } else {
          auto fits = msbm::per_layer_fit(g, f_k, msbm::LayerMethod::vem, f_seed, vo, so);
          r.labels = msbm::majority_vote(fits.labels);
          r.objective = msbm::profile_loglik(r.labels, g);
          r.converged = std::all_of(fits.converged.begin(), fits.converged.end(), [](bool b) { return b; });
          r.seed = f_seed;
        }
      } else if (f_method == "exact-mle") {
        r = msbm::exact_profile_mle(g, f_k);
      } else if (f_method == "local-mle") {
        msbm::SearchOptions lo;
        lo.seed = f_seed;
        lo.spectral = so;
        if (f_restarts > 0) lo.restarts = f_restarts;
        if (f_max_iter > 0) lo.max_sweeps = f_max_iter;
        r = msbm::local_search_profile_mle(g, f_k, lo);
      } else {
        if (f_restarts > 0) so.kmeans_restarts = f_restarts;
        auto fits = msbm::per_layer_fit(g, f_k, msbm::LayerMethod::spectral, f_seed, {}, so);
        r.labels = msbm::majority_vote(fits.labels);
        r.objective = msbm::profile_loglik(r.labels, g);
        r.converged = std::all_of(fits.converged.begin(), fits.converged.end(), [](bool b) { return b; });
        r.seed = f_seed;
      }
      std::optional<double> acc;
      if (!f_truth.empty()) {
        const msbm::ClassLabels truth = msbm::io::read_labels(f_truth, f_k);
        if (truth.size() != g.num_nodes()) throw std::invalid_argument(f_truth + ": label count differs from N");
        acc = msbm::accuracy(r.labels, truth);
      }
      json j = msbm::io::to_json(r, acc);
      if (fitted_p) j["prob_array"] = msbm::io::to_json(*fitted_p);
      emit(f_out, j.dump(2) + "\n");
      return 0;
    }

    if (*bounds) {
      if (b_p >= 0.0) {
        std::string csv = "n,exact_gap,bound\n";
        for (int n = b_step; n <= b_nmax; n += b_step)
          csv += std::to_string(n) + "," + msbm::experiments::fmt(msbm::exact_sigma_gap(n, b_p)) + "," +
                 msbm::experiments::fmt(msbm::lemma3_bound(n, b_p)) + "\n";
        emit(b_out, csv);
        return 0;
      }
      msbm::ProbArray p;
      if (!b_prob.empty())
        p = msbm::io::read_prob_array(b_prob);
      else if (b_in >= 0.0 && b_out_p >= 0.0)
        p = msbm::ProbArray::constant(msbm::planted_partition(b_k, b_in, b_out_p), 1);
      else
        throw std::invalid_argument("bounds needs --prob, --p-in with --p-out, or --curve-p");
      const msbm::TheoryReport rep = msbm::theory_report(p);
      json j;
      j["c0"] = rep.c0;
      j["delta"] = rep.delta;
      if (rep.constants)
        j["constants"] = {{"M0", rep.constants->m0}, {"M1", rep.constants->m1}, {"M2", rep.constants->m2},
                          {"M3", rep.constants->m3}, {"M4", rep.constants->m4}};
      else
        j["constants"] = nullptr;
      j["min_nodes"] = rep.min_nodes ? json(*rep.min_nodes) : json(nullptr);
      emit(b_out, j.dump(2) + "\n");
      return 0;
    }

    if (*mn) {
      std::cout << msbm::min_nodes_k2(m_c0, m_delta) << '\n';
      return 0;
    }

    if (*sk) {
      const msbm::MultiGraph g = msbm::io::read_multigraph(s_in);
      msbm::VemOptions vo;
      vo.seed = s_seed;
      vo.restarts = s_restarts;
      vo.tol = s_tol;
      vo.max_iter = s_max_iter;
      const auto sel = msbm::select_k(g, s_kmin, s_kmax, vo);
      json rows = json::array();
      for (const auto& r : sel.table) rows.push_back({{"k", r.k}, {"elbo", r.elbo}, {"icl", r.icl}});
      emit(s_out, json{{"best_k", sel.best_k}, {"table", rows}}.dump(2) + "\n");
      return 0;
    }

    if (*ex) {
      std::ostringstream csv;
      msbm::experiments::run(e_name, csv, e_set);
      emit(e_out, csv.str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "msbm: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
