#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace amrgen {

// Positional vertex index, dense in [0, n).
using ConceptId = std::int32_t;

struct Edge {
  ConceptId src = 0;
  ConceptId dst = 0;
  std::string label;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Rooted directed graph of labeled concepts and relations.
struct AmrGraph {
  std::vector<std::string> concepts;
  std::vector<Edge> edges;
  ConceptId root = 0;

  std::size_t size() const noexcept { return concepts.size(); }
  bool empty() const noexcept { return concepts.empty(); }

  // (neighbor, edge index) pairs, ignoring direction.
  std::vector<std::vector<std::pair<ConceptId, std::size_t>>> undirected_adjacency() const;
  // Children in edge-list order.
  std::vector<std::vector<std::size_t>> outgoing_edges() const;
  bool connected() const;
  // Breadth-first rank of every concept from the root over outgoing edges;
  // unreachable concepts follow in id order.
  std::vector<ConceptId> breadth_first_order() const;
};

// Parses one PENMAN graph. Attribute constants become ordinary concepts and
// variable names are discarded. Throws MalformedPenman.
AmrGraph parse_penman(std::string_view text);

// Parses every graph in a blank-line-separated stream of PENMAN blocks.
std::vector<AmrGraph> parse_penman_blocks(std::string_view text);

// Lowercases labels and drops a trailing PropBank sense suffix ("-NN").
AmrGraph preprocess_labels(AmrGraph g);
std::string preprocess_label(std::string_view label);

// Canonical PENMAN with variables c0, c1, ... assigned in depth-first order.
// Every concept must be reachable from the root along outgoing edges.
std::string serialize(const AmrGraph& g);

}  // namespace amrgen
