#include <doctest.h>

#include <random>

#include "amrgen/amr.hpp"
#include "amrgen/errors.hpp"
#include "support.hpp"

using namespace amrgen;

namespace {

// Canonical form for isomorphism checks on labeled graphs with unique labels
// per position: relabel by serialize order, compare label multisets and edges.
bool isomorphic_by_serialization(const AmrGraph& a, const AmrGraph& b) { return serialize(a) == serialize(b); }

}  // namespace

TEST_CASE("parse the running example") {
  const auto g = parse_penman(testing::kOpeningPenman);
  CHECK(g.size() == 5);
  CHECK(g.edges.size() == 4);
  CHECK(g.root == 0);
  CHECK(g.concepts == std::vector<std::string>{"open-01", "center", "date-entity", "2009", "formal"});
  CHECK(g.edges[0] == Edge{0, 1, "ARG1"});
  CHECK(g.edges[1] == Edge{0, 2, "time"});
  CHECK(g.edges[2] == Edge{2, 3, "year"});
  CHECK(g.edges[3] == Edge{0, 4, "manner"});
}

TEST_CASE("constants written as variables parse the same way") {
  const auto g = parse_penman(
      "(o / open-01 :ARG1 (c / center) :time (d / date-entity :year (y2 / 2009)) :manner (f / formal))");
  CHECK(g.size() == 5);
  CHECK(g.edges.size() == 4);
  CHECK(g.root == 0);
  CHECK(g.concepts[3] == "2009");
}

TEST_CASE("single node") {
  const auto g = parse_penman("(a / alpha)");
  CHECK(g.size() == 1);
  CHECK(g.edges.empty());
  CHECK(serialize(g) == "(c0 / alpha)");
}

TEST_CASE("reentrancy adds an edge, not a vertex") {
  const auto g = parse_penman("(a / alpha :mod (b / beta) :mod b)");
  CHECK(g.size() == 2);
  REQUIRE(g.edges.size() == 2);
  CHECK(g.edges[0] == Edge{0, 1, "mod"});
  CHECK(g.edges[1] == Edge{0, 1, "mod"});
}

TEST_CASE("forward references resolve") {
  const auto g = parse_penman("(w / want-01 :ARG0 b :ARG1 (g / go-02 :ARG0 (b / boy)))");
  CHECK(g.size() == 3);
  CHECK(g.edges[0] == Edge{0, 2, "ARG0"});
  CHECK(g.edges[1] == Edge{0, 1, "ARG1"});
  CHECK(g.edges[2] == Edge{1, 2, "ARG0"});
}

TEST_CASE("quoted constants and comments") {
  const auto g = parse_penman("# ::snt hello\n(n / name :op1 \"New York\" :op2 -)");
  CHECK(g.concepts == std::vector<std::string>{"name", "New York", "-"});
}

TEST_CASE("malformed input") {
  CHECK_THROWS_AS(parse_penman("(a / alpha"), MalformedPenman);
  CHECK_THROWS_AS(parse_penman("(a / alpha))"), MalformedPenman);
  CHECK_THROWS_AS(parse_penman("(a / alpha :mod (a / beta))"), MalformedPenman);
  CHECK_THROWS_AS(parse_penman("(a / alpha :mod b)"), MalformedPenman);
  CHECK_THROWS_AS(parse_penman("(a / alpha :mod a)"), MalformedPenman);
  CHECK_THROWS_AS(parse_penman(""), MalformedPenman);
  CHECK_THROWS_AS(parse_penman("(a alpha)"), MalformedPenman);
}

TEST_CASE("preprocessing labels") {
  CHECK(preprocess_label("run-02") == "run");
  CHECK(preprocess_label("center") == "center");
  CHECK(preprocess_label("Open-01") == "open");
  CHECK(preprocess_label("2009") == "2009");
  CHECK(preprocess_label("date-entity") == "date-entity");
  CHECK(preprocess_label("x-1") == "x-1");

  const auto g = parse_penman(testing::kOpeningPenman);
  const auto p = preprocess_labels(g);
  CHECK(p.concepts[0] == "open");
  CHECK(p.size() == g.size());
  CHECK(p.edges == g.edges);
  CHECK(preprocess_labels(p).concepts == p.concepts);
}

TEST_CASE("serialize round trips") {
  const auto g = parse_penman(testing::kOpeningPenman);
  const auto back = parse_penman(serialize(g));
  CHECK(back.size() == 5);
  CHECK(back.edges.size() == 4);
  CHECK(isomorphic_by_serialization(g, back));

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 8)(rng);
    auto r = testing::random_connected_graph(n, trial % 3, rng);
    for (int i = 0; i < n; ++i) r.concepts[i] = "l" + std::to_string(std::uniform_int_distribution<int>(0, 3)(rng));
    const auto again = parse_penman(serialize(r));
    CHECK(again.size() == r.size());
    CHECK(again.edges.size() == r.edges.size());
    CHECK(serialize(again) == serialize(r));
  }
}

TEST_CASE("quoted labels survive serialization") {
  AmrGraph g;
  g.concepts = {"name", "New York"};
  g.edges = {{0, 1, "op1"}};
  CHECK(parse_penman(serialize(g)).concepts == g.concepts);
}

TEST_CASE("breadth-first order and adjacency") {
  const auto g = parse_penman(testing::kOpeningPenman);
  CHECK(g.breadth_first_order() == std::vector<ConceptId>{0, 1, 2, 4, 3});
  CHECK(g.connected());
  const auto adj = g.undirected_adjacency();
  CHECK(adj[0].size() == 3);
  CHECK(adj[3].size() == 1);
}

TEST_CASE("penman blocks") {
  const auto gs = parse_penman_blocks("(a / alpha)\n\n# c\n(b / beta :ARG0 (c / gamma))\n");
  REQUIRE(gs.size() == 2);
  CHECK(gs[1].size() == 2);
}
