#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "msbm/io.hpp"
#include "oracles.hpp"

using namespace msbm;

namespace {

MultiGraph parse(const std::string& s) {
  std::istringstream in(s);
  return io::read_multigraph(in, "g.txt");
}

std::string error_of(const std::string& s) {
  try {
    parse(s);
  } catch (const io::FormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(GraphFormat, RoundTrip) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    const MultiGraph g = oracle::random_graph(3 + rep, 1 + rep % 4, 0.3, rng);
    std::ostringstream out;
    io::write_multigraph(out, g);
    EXPECT_TRUE(parse(out.str()) == g);
  }
}

TEST(GraphFormat, SmallExample) {
  const MultiGraph g = parse("3 2\n0 0 1\n\n1 1 2\n");
  EXPECT_TRUE(g.edge(0, 1, 0));
  EXPECT_TRUE(g.edge(1, 2, 1));
  EXPECT_EQ(g.total_edges(), 2);
  EXPECT_TRUE(parse("4 1\n") == MultiGraph(4, 1));
}

TEST(GraphFormat, Malformed) {
  EXPECT_NE(error_of("").find("header"), std::string::npos);
  EXPECT_NE(error_of("3\n").find("g.txt:1"), std::string::npos);
  EXPECT_NE(error_of("3 1 7\n").find("header"), std::string::npos);
  EXPECT_NE(error_of("0 1\n").find("positive"), std::string::npos);
  EXPECT_NE(error_of("3 1\n0 1 1\n").find("g.txt:2"), std::string::npos);
  EXPECT_NE(error_of("3 1\n0 2 1\n").find("i < j"), std::string::npos);
  EXPECT_NE(error_of("3 1\n0 0 3\n").find("i < j"), std::string::npos);
  EXPECT_NE(error_of("3 1\n1 0 1\n").find("layer"), std::string::npos);
  EXPECT_NE(error_of("3 1\n0 0 1\n0 0 1\n").find("g.txt:3: duplicate"), std::string::npos);
  EXPECT_NE(error_of("3 1\n0 0 x\n").find("t i j"), std::string::npos);
}

TEST(Labels, RoundTripAndErrors) {
  const ClassLabels z(3, {0, 2, 1, 1});
  std::ostringstream out;
  io::write_labels(out, z);
  std::istringstream in(out.str());
  EXPECT_TRUE(io::read_labels(in) == z);
  std::istringstream narrow("0\n1\n");
  EXPECT_EQ(io::read_labels(narrow, 4).num_classes(), 4);
  std::istringstream bad("0\n-1\n"), over("0\n5\n"), empty("\n"), junk("0 1\n");
  EXPECT_THROW(io::read_labels(bad), io::FormatError);
  EXPECT_THROW(io::read_labels(over, 3), io::FormatError);
  EXPECT_THROW(io::read_labels(empty), io::FormatError);
  EXPECT_THROW(io::read_labels(junk), io::FormatError);
}

TEST(ProbArrayJson, RoundTripAndErrors) {
  Eigen::MatrixXd a(2, 2), b(2, 2);
  a << 0.7, 0.3, 0.3, 0.7;
  b << 0.1, 0.25, 0.25, 0.9;
  const ProbArray p({a, b});
  const ProbArray q = io::prob_array_from_json(io::json::parse(io::to_json(p).dump()));
  ASSERT_EQ(q.num_layers(), 2);
  EXPECT_EQ(q.mats[0], a);
  EXPECT_EQ(q.mats[1], b);
  EXPECT_THROW(io::prob_array_from_json(io::json::parse(R"({"T":2,"K":1,"mats":[[[0.5]]]})")), io::FormatError);
  EXPECT_THROW(io::prob_array_from_json(io::json::parse(R"({"T":1,"K":2,"mats":[[[0.5,0.1],[0.2,0.5]]]})")),
               io::FormatError);
  EXPECT_THROW(io::prob_array_from_json(io::json::parse(R"({"K":1})")), io::FormatError);
  EXPECT_THROW(io::read_prob_array("/nonexistent/p.json"), io::FormatError);
}

TEST(FitJson, Fields) {
  FitResult r;
  r.labels = ClassLabels(2, {0, 1, 1});
  r.objective = -3.5;
  r.seed = 7;
  const io::json j = io::to_json(r, 0.75);
  EXPECT_EQ(j["labels"], io::json::parse("[0,1,1]"));
  EXPECT_TRUE(j["icl"].is_null());
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["accuracy"], 0.75);
  EXPECT_FALSE(io::to_json(r).contains("accuracy"));
}
