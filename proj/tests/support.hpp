#pragma once

// Shared fixtures and independent reference implementations for the tests.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "amrgen/corpus.hpp"
#include "amrgen/model.hpp"
#include "amrgen/render.hpp"
#include "amrgen/transition.hpp"

namespace testing {

using amrgen::AmrGraph;
using amrgen::ConceptId;

inline const char* kOpeningPenman =
    "(o / open-01 :ARG1 (c / center) :time (d / date-entity :year 2009) :manner (f / formal))";

inline const char* kOpeningCorpus =
    "the center will formally open in 2009 .\n"
    "(o / open-01\n"
    "   :ARG1 (c / center)\n"
    "   :time (d / date-entity :year 2009)\n"
    "   :manner (f / formal))\n"
    "ALIGN 0 3 1\n"
    "ALIGN 3 4 4\n"
    "ALIGN 4 6 0\n"
    "ALIGN 6 8 3\n";

// Concept ids of the running example in parse order.
enum Opening : ConceptId { kOpen = 0, kCenter = 1, kDate = 2, kYear = 3, kFormal = 4 };

inline amrgen::AlignedExample opening_example() { return amrgen::parse_corpus(kOpeningCorpus).at(0); }

// Rendered run of the opening example, one row per configuration.
inline const std::vector<amrgen::RunRow> kOpeningRun = {
    amrgen::RunRow{"[]", "[$, $, $]", "{o, c, d, f, 2}", "{A, t, m, y}", "---", "---"},
    amrgen::RunRow{"[1, $]", "[$, $, c]", "{o, d, f, 2}", "{A, t, m, y}", "the center will", "Push(c, 1)"},
    amrgen::RunRow{"[1, $, 1, $]", "[$, c, f]", "{o, d, 2}", "{A, t, m, y}", "formally", "Push(f, 1)"},
    amrgen::RunRow{"[1, $, 1, $, 1, $]", "[c, f, o]", "{d, 2}", "{t, y}", "open in", "Push(o, 1)"},
    amrgen::RunRow{"[1, $, 1, $, 1, $, 1, c]", "[f, o, d]", "{2}", "{y}", "---", "Push(d, 1)"},
    amrgen::RunRow{"[1, $, 1, $, 1, $, 1, c, 1, f]", "[o, d, 2]", "{}", "{}", "2009 .", "Push(2, 1)"},
    amrgen::RunRow{"[1, $, 1, $, 1, $, 1, c]", "[f, o, d]", "{}", "{}", "---", "Pop"},
    amrgen::RunRow{"[1, $, 1, $, 1, $]", "[c, f, o]", "{}", "{}", "---", "Pop"},
    amrgen::RunRow{"[1, $, 1, $]", "[$, c, f]", "{}", "{}", "---", "Pop"},
    amrgen::RunRow{"[1, $]", "[$, $, c]", "{}", "{}", "---", "Pop"},
    amrgen::RunRow{"[]", "[$, $, $]", "{}", "{}", "---", "Pop"},
};

// Three concepts with a reentrancy.
inline const char* kWantCorpus =
    "the boy wants to go\n"
    "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))\n"
    "ALIGN 0 2 1\n"
    "ALIGN 2 3 0\n"
    "ALIGN 3 5 2\n";

inline amrgen::ModelConfig small_config(amrgen::DecoderKind kind, int hidden = 16, std::uint64_t seed = 1) {
  amrgen::ModelConfig c;
  c.hidden = hidden;
  c.embed = 8;
  c.edge_dim = 4;
  c.enc_steps = 2;
  c.cache = 3;
  c.decoder = kind;
  c.seed = seed;
  c.max_span = 6;
  return c;
}

inline amrgen::Model model_for(const std::vector<amrgen::AlignedExample>& corpus, const amrgen::ModelConfig& c,
                               const amrgen::EmbeddingTable* pretrained = nullptr) {
  return amrgen::Model::create(c, amrgen::build_vocabulary(corpus), amrgen::build_edge_vocabulary(corpus),
                               pretrained);
}

inline AmrGraph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  AmrGraph g;
  for (int i = 0; i < n; ++i) g.concepts.push_back("v" + std::to_string(i));
  for (auto [a, b] : edges) g.edges.push_back({a, b, "r"});
  return g;
}

inline bool connected(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> parent(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (auto [a, b] : edges) parent[find(a)] = find(b);
  for (int i = 1; i < n; ++i)
    if (find(i) != find(0)) return false;
  return true;
}

// Every connected labeled simple graph on n vertices, edges oriented low->high.
inline std::vector<AmrGraph> connected_graphs(int n) {
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) pairs.push_back({a, b});
  std::vector<AmrGraph> out;
  for (std::uint32_t mask = 0; mask < (1u << pairs.size()); ++mask) {
    std::vector<std::pair<int, int>> edges;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (mask & (1u << i)) edges.push_back(pairs[i]);
    if (connected(n, edges)) out.push_back(graph_from_edges(n, edges));
  }
  return out;
}

// Self-contained Push/Pop simulator: does any run that pushes vertices in
// `order` with a cache of k slots cover every edge? Exhaustive over eviction
// indices and Pop placements.
class CoveringRunOracle {
 public:
  CoveringRunOracle(const AmrGraph& g, std::vector<ConceptId> order, int k)
      : order_(std::move(order)), k_(k), n_(static_cast<int>(g.size())) {
    for (const auto& e : g.edges) edges_.push_back({e.src, e.dst});
  }

  bool exists() {
    State s;
    s.cache.assign(static_cast<std::size_t>(k_), -1);
    s.covered.assign(edges_.size(), false);
    return search(s);
  }

  // Replays Push(i)/Pop pairs; returns false on an illegal step.
  bool replay(const std::vector<std::pair<bool, int>>& steps, bool& all_covered) {
    State s;
    s.cache.assign(static_cast<std::size_t>(k_), -1);
    s.covered.assign(edges_.size(), false);
    for (auto [push, index] : steps) {
      if (push) {
        if (s.next >= n_ || index < 1 || index > k_) return false;
        s = do_push(s, index);
      } else {
        if (s.stack.empty()) return false;
        s = do_pop(s);
      }
    }
    all_covered = std::all_of(s.covered.begin(), s.covered.end(), [](bool b) { return b; });
    return s.next == n_ && s.stack.empty();
  }

 private:
  struct State {
    int next = 0;
    std::vector<int> cache;
    std::vector<std::pair<int, int>> stack;
    std::vector<bool> covered;
  };

  void cover(State& s, int v) const {
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto [a, b] = edges_[e];
      const int other = a == v ? b : (b == v ? a : -1);
      if (other >= 0 && std::find(s.cache.begin(), s.cache.end(), other) != s.cache.end()) s.covered[e] = true;
    }
  }

  State do_push(State s, int index) const {
    const int v = order_[static_cast<std::size_t>(s.next++)];
    s.stack.push_back({index, s.cache[static_cast<std::size_t>(index - 1)]});
    s.cache.erase(s.cache.begin() + index - 1);
    s.cache.push_back(v);
    cover(s, v);
    return s;
  }

  State do_pop(State s) const {
    const auto [index, u] = s.stack.back();
    s.stack.pop_back();
    s.cache.pop_back();
    s.cache.insert(s.cache.begin() + index - 1, u);
    if (u >= 0) cover(s, u);
    return s;
  }

  std::string key(const State& s) const {
    std::string k = std::to_string(s.next) + "|";
    for (int c : s.cache) k += std::to_string(c) + ",";
    k += "|";
    for (auto [i, u] : s.stack) k += std::to_string(i) + ":" + std::to_string(u) + ",";
    k += "|";
    for (bool b : s.covered) k += b ? '1' : '0';
    return k;
  }

  bool search(const State& s) {
    if (s.next == n_ && s.stack.empty())
      return std::all_of(s.covered.begin(), s.covered.end(), [](bool b) { return b; });
    if (!failed_.insert(key(s)).second) return false;
    if (s.next < n_)
      for (int i = 1; i <= k_; ++i)
        if (search(do_push(s, i))) return true;
    if (!s.stack.empty() && search(do_pop(s))) return true;
    return false;
  }

  std::vector<ConceptId> order_;
  int k_;
  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::set<std::string> failed_;
};

struct AxiomReport {
  bool vertices_covered = true;
  bool edges_covered = true;
  bool running_intersection = true;
  int width = -1;
};

// Checks the three tree-decomposition axioms over bags linked by `parent`.
inline AxiomReport check_tree_decomposition(const AmrGraph& g, const std::vector<std::vector<ConceptId>>& bags,
                                            const std::vector<int>& parent) {
  AxiomReport r;
  const int n = static_cast<int>(g.size());
  auto contains = [&](std::size_t b, ConceptId v) {
    return std::find(bags[b].begin(), bags[b].end(), v) != bags[b].end();
  };
  for (const auto& b : bags) r.width = std::max(r.width, static_cast<int>(b.size()) - 1);
  for (ConceptId v = 0; v < n; ++v) {
    std::vector<std::size_t> holding;
    for (std::size_t b = 0; b < bags.size(); ++b)
      if (contains(b, v)) holding.push_back(b);
    if (holding.empty()) {
      r.vertices_covered = false;
      continue;
    }
    // Occurrences are connected iff exactly one of them has its parent outside the set.
    int tops = 0;
    for (std::size_t b : holding)
      if (parent[b] < 0 || !contains(static_cast<std::size_t>(parent[b]), v)) ++tops;
    if (tops != 1) r.running_intersection = false;
  }
  for (const auto& e : g.edges) {
    bool found = false;
    for (std::size_t b = 0; b < bags.size() && !found; ++b) found = contains(b, e.src) && contains(b, e.dst);
    if (!found) r.edges_covered = false;
  }
  // A valid tree: exactly one root, and parents precede children.
  int roots = 0;
  for (std::size_t b = 0; b < parent.size(); ++b) {
    if (parent[b] < 0) ++roots;
    else if (parent[b] >= static_cast<int>(b)) r.running_intersection = false;
  }
  if (!bags.empty() && roots != 1) r.running_intersection = false;
  return r;
}

// Random connected graph: a random tree plus `extra` random chords.
inline AmrGraph random_connected_graph(int n, int extra, std::mt19937_64& rng) {
  std::vector<std::pair<int, int>> edges;
  std::set<std::pair<int, int>> seen;
  for (int v = 1; v < n; ++v) {
    const int u = std::uniform_int_distribution<int>(0, v - 1)(rng);
    edges.push_back({u, v});
    seen.insert({u, v});
  }
  for (int i = 0; i < extra; ++i) {
    int a = std::uniform_int_distribution<int>(0, n - 1)(rng);
    int b = std::uniform_int_distribution<int>(0, n - 1)(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (seen.insert({a, b}).second) edges.push_back({a, b});
  }
  return graph_from_edges(n, edges);
}

}  // namespace testing
