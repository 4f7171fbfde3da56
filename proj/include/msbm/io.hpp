// Text formats: multigraph edge lists (.mgr), label files, probability
// arrays and fit results as JSON.
#pragma once

#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "msbm/core.hpp"

namespace msbm::io {

using json = nlohmann::json;

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string where(const std::string& name, std::size_t line) {
  return name + ":" + std::to_string(line) + ": ";
}

inline bool blank(const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open for writing");
  return out;
}

}  // namespace detail

/// First line `N T`, then one `t i j` line per undirected edge with i < j.
inline MultiGraph read_multigraph(std::istream& in, const std::string& name = "<input>") {
  std::string line;
  std::size_t lineno = 0;
  long long n = 0, t = 0;
  for (;;) {
    if (!std::getline(in, line)) throw FormatError(name + ": missing `N T` header");
    ++lineno;
    if (!detail::blank(line)) break;
  }
  {
    std::istringstream hs(line);
    std::string extra;
    if (!(hs >> n >> t) || (hs >> extra)) throw FormatError(detail::where(name, lineno) + "header must be `N T`");
    if (n < 1 || t < 1 || n > 1000000 || t > 1000000)
      throw FormatError(detail::where(name, lineno) + "N and T must be positive");
  }
  MultiGraph g(static_cast<int>(n), static_cast<int>(t));
  std::set<std::tuple<long long, long long, long long>> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    std::istringstream ls(line);
    long long a = 0, i = 0, j = 0;
    std::string extra;
    if (!(ls >> a >> i >> j) || (ls >> extra)) throw FormatError(detail::where(name, lineno) + "expected `t i j`");
    if (a < 0 || a >= t) throw FormatError(detail::where(name, lineno) + "layer index outside [0, T)");
    if (i < 0 || j >= n || i >= j) throw FormatError(detail::where(name, lineno) + "need 0 <= i < j < N");
    if (!seen.emplace(a, i, j).second) throw FormatError(detail::where(name, lineno) + "duplicate edge");
    g.set_edge(static_cast<int>(a), static_cast<int>(i), static_cast<int>(j));
  }
  return g;
}

inline MultiGraph read_multigraph(const std::string& path) {
  auto in = detail::open_in(path);
  return read_multigraph(in, path);
}

inline void write_multigraph(std::ostream& out, const MultiGraph& g) {
  out << g.num_nodes() << ' ' << g.num_layers() << '\n';
  for (int t = 0; t < g.num_layers(); ++t)
    for (int i = 0; i < g.num_nodes(); ++i) {
      const auto r = g.row(t, i);
      for (int j = i + 1; j < g.num_nodes(); ++j)
        if (r[static_cast<std::size_t>(j)]) out << t << ' ' << i << ' ' << j << '\n';
    }
}

inline void write_multigraph(const std::string& path, const MultiGraph& g) {
  auto out = detail::open_out(path);
  write_multigraph(out, g);
}

/// One class index per line. K defaults to the largest label plus one.
inline ClassLabels read_labels(std::istream& in, std::optional<int> k = std::nullopt,
                               const std::string& name = "<input>") {
  std::vector<int> z;
  std::string line;
  std::size_t lineno = 0;
  int top = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    std::istringstream ls(line);
    long long v = 0;
    std::string extra;
    if (!(ls >> v) || (ls >> extra)) throw FormatError(detail::where(name, lineno) + "expected one class index");
    if (v < 0 || v > 1000000) throw FormatError(detail::where(name, lineno) + "class index out of range");
    if (k && v >= *k) throw FormatError(detail::where(name, lineno) + "class index >= K");
    z.push_back(static_cast<int>(v));
    top = std::max(top, static_cast<int>(v));
  }
  if (z.empty()) throw FormatError(name + ": no labels");
  return ClassLabels(k.value_or(top + 1), std::move(z));
}

inline ClassLabels read_labels(const std::string& path, std::optional<int> k = std::nullopt) {
  auto in = detail::open_in(path);
  return read_labels(in, k, path);
}

inline void write_labels(std::ostream& out, const ClassLabels& z) {
  for (int v : z.values()) out << v << '\n';
}

inline void write_labels(const std::string& path, const ClassLabels& z) {
  auto out = detail::open_out(path);
  write_labels(out, z);
}

inline json to_json(const ProbArray& p) {
  json mats = json::array();
  for (const auto& m : p.mats) {
    json rows = json::array();
    for (Eigen::Index a = 0; a < m.rows(); ++a) {
      json row = json::array();
      for (Eigen::Index b = 0; b < m.cols(); ++b) row.push_back(m(a, b));
      rows.push_back(std::move(row));
    }
    mats.push_back(std::move(rows));
  }
  return {{"T", p.num_layers()}, {"K", p.num_classes()}, {"mats", std::move(mats)}};
}

inline ProbArray prob_array_from_json(const json& j, const std::string& name = "<input>") {
  try {
    const int t = j.at("T").get<int>(), k = j.at("K").get<int>();
    const auto& mats = j.at("mats");
    if (t < 1 || k < 1 || static_cast<int>(mats.size()) != t) throw FormatError(name + ": \"mats\" must hold T matrices");
    std::vector<Eigen::MatrixXd> out;
    for (const auto& mj : mats) {
      if (static_cast<int>(mj.size()) != k) throw FormatError(name + ": each matrix must have K rows");
      Eigen::MatrixXd m(k, k);
      for (int a = 0; a < k; ++a) {
        if (static_cast<int>(mj[static_cast<std::size_t>(a)].size()) != k)
          throw FormatError(name + ": each row must have K entries");
        for (int b = 0; b < k; ++b) m(a, b) = mj[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)].get<double>();
      }
      out.push_back(std::move(m));
    }
    return ProbArray(std::move(out));
  } catch (const json::exception& e) {
    throw FormatError(name + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(name + ": " + e.what());
  }
}

inline ProbArray read_prob_array(const std::string& path) {
  auto in = detail::open_in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return prob_array_from_json(j, path);
}

inline void write_json(const std::string& path, const json& j) {
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
}

inline json to_json(const FitResult& r, std::optional<double> accuracy = std::nullopt) {
  json j;
  j["labels"] = r.labels.values();
  j["objective"] = r.objective;
  j["icl"] = r.icl ? json(*r.icl) : json(nullptr);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["seed"] = r.seed;
  if (accuracy) j["accuracy"] = *accuracy;
  return j;
}

}  // namespace msbm::io
