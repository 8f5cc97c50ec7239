#include "amrgen/oracle.hpp"

#include <algorithm>
#include <limits>
#include <unordered_set>

#include "amrgen/errors.hpp"

namespace amrgen {

std::vector<ConceptId> oracle_buffer_order(const AlignedExample& ex) {
  const AmrGraph& g = ex.graph;
  const auto n = static_cast<ConceptId>(g.size());
  if (n == 0) return {};
  const auto out = g.outgoing_edges();

  std::vector<ConceptId> preorder, tree_parent(n, -1);
  std::vector<bool> seen(n, false);
  auto walk = [&](auto&& self, ConceptId v) -> void {
    seen[v] = true;
    preorder.push_back(v);
    for (std::size_t e : out[v]) {
      const ConceptId w = g.edges[e].dst;
      if (!seen[w]) {
        tree_parent[w] = v;
        self(self, w);
      }
    }
  };
  walk(walk, g.root);
  for (ConceptId v = 0; v < n; ++v)
    if (!seen[v]) walk(walk, v);

  auto aligned = [&](ConceptId v) { return v < static_cast<ConceptId>(ex.spans.size()) && ex.spans[v].has_value(); };
  std::vector<ConceptId> order;
  for (ConceptId v = 0; v < n; ++v)
    if (aligned(v)) order.push_back(v);
  std::sort(order.begin(), order.end(),
            [&](ConceptId a, ConceptId b) { return ex.spans[a]->start < ex.spans[b]->start; });
  if (order.empty()) return preorder;

  auto first_aligned_descendant = [&](ConceptId u) -> ConceptId {
    std::vector<bool> visited(n, false);
    ConceptId found = -1;
    auto search = [&](auto&& self, ConceptId v) -> void {
      visited[v] = true;
      for (std::size_t e : out[v]) {
        if (found >= 0) return;
        const ConceptId w = g.edges[e].dst;
        if (visited[w]) continue;
        if (aligned(w)) {
          found = w;
          return;
        }
        self(self, w);
      }
    };
    search(search, u);
    return found;
  };

  std::vector<ConceptId> placed_after(n, -1);
  auto trails = [&](ConceptId x, ConceptId p) {
    for (; x >= 0; x = placed_after[x])
      if (placed_after[x] == p) return true;
    return false;
  };
  for (ConceptId u : preorder) {
    if (aligned(u)) continue;
    if (const ConceptId anchor = first_aligned_descendant(u); anchor >= 0) {
      order.insert(std::find(order.begin(), order.end(), anchor), u);
      continue;
    }
    const ConceptId p = tree_parent[u];
    if (p < 0) {
      order.push_back(u);
      continue;
    }
    auto pos = std::find(order.begin(), order.end(), p);
    ++pos;
    while (pos != order.end() && trails(*pos, p)) ++pos;
    order.insert(pos, u);
    placed_after[u] = p;
  }
  return order;
}

namespace {

constexpr int kNever = std::numeric_limits<int>::max();

class CoveringRunSearch {
 public:
  CoveringRunSearch(const AmrGraph& g, const std::vector<ConceptId>& order, int k, const OracleOptions& options)
      : init_(init_config(g, order, k)), options_(options) {}

  std::vector<Action> run() {
    if (!search(init_)) {
      throw TreewidthExceeded("no run with cache size " + std::to_string(init_.k()) + " covers all " +
                              std::to_string(init_.graph().edges.size()) + " edges in this vertex order");
    }
    return actions_;
  }

 private:
  static bool dead(const ParserConfiguration& c) {
    const auto& edges = c.graph().edges;
    std::vector<bool> pending(c.graph().size(), false);
    for (ConceptId v : c.buffer) pending[v] = true;
    for (std::size_t e = 0; e < edges.size(); ++e)
      if (!c.covered[e] && !pending[edges[e].src] && !pending[edges[e].dst]) return true;
    return false;
  }

  static std::string key(const ParserConfiguration& c) {
    std::string s = std::to_string(c.buffer.size()) + ':';
    for (CacheSlot x : c.cache) s += std::to_string(x.concept_id()) + ',';
    s += '|';
    for (const auto& e : c.stack) s += std::to_string(e.index) + '.' + std::to_string(e.slot.concept_id()) + ',';
    s += '|';
    for (bool b : c.covered) s += b ? '1' : '0';
    return s;
  }

  // Buffer position of the first vertex still owed an edge by u.
  static int next_use(const ParserConfiguration& c, CacheSlot slot) {
    if (slot.is_sentinel()) return kNever;
    int best = kNever;
    for (const auto& [w, e] : c.index->adjacency[slot.concept_id()]) {
      if (c.covered[e]) continue;
      auto it = std::find(c.buffer.begin(), c.buffer.end(), w);
      if (it != c.buffer.end()) best = std::min(best, static_cast<int>(it - c.buffer.begin()));
    }
    return best;
  }

  std::vector<Action> candidates(const ParserConfiguration& c) const {
    const ConceptId v = c.buffer.front();
    std::vector<bool> needed(c.graph().size(), false);
    bool needs_pop = false;
    for (const auto& [w, e] : c.index->adjacency[v]) {
      if (c.covered[e]) continue;
      if (std::find(c.buffer.begin(), c.buffer.end(), w) != c.buffer.end()) continue;
      needed[w] = true;
      if (!c.in_cache(w)) needs_pop = true;
    }
    std::vector<Action> out;
    if (needs_pop) {
      if (!c.stack.empty()) out.push_back(Action::pop());
      return out;
    }
    std::vector<std::pair<int, int>> ranked;  // (next use, index)
    for (int i = 1; i <= c.k(); ++i) {
      const CacheSlot s = c.cache[i - 1];
      if (!s.is_sentinel() && needed[s.concept_id()]) continue;
      ranked.emplace_back(next_use(c, s), i);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (const auto& [use, i] : ranked) out.push_back(Action::push(i));
    if (!c.stack.empty()) out.push_back(Action::pop());
    return out;
  }

  bool search(const ParserConfiguration& c) {
    if (dead(c)) return false;
    if (c.buffer.empty()) {
      for (std::size_t i = 0; i < c.stack.size(); ++i) actions_.push_back(Action::pop());
      return true;
    }
    const std::string state = key(c);
    if (failed_.count(state)) return false;
    if (++explored_ > options_.max_states)
      throw SearchBudgetExceeded("oracle explored " + std::to_string(options_.max_states) + " states");
    for (const Action& a : candidates(c)) {
      actions_.push_back(a);
      if (search(apply(c, a))) return true;
      actions_.pop_back();
    }
    failed_.insert(state);
    return false;
  }

  ParserConfiguration init_;
  OracleOptions options_;
  std::vector<Action> actions_;
  std::unordered_set<std::string> failed_;
  std::size_t explored_ = 0;
};

}  // namespace

std::vector<Action> extract_actions(const AmrGraph& g, const std::vector<ConceptId>& order, int k,
                                    const OracleOptions& options) {
  return CoveringRunSearch(g, order, k, options).run();
}

OracleTrace extract_trace(const AlignedExample& ex, int k, const OracleOptions& options) {
  OracleTrace t;
  t.buffer_order = oracle_buffer_order(ex);
  t.actions = extract_actions(ex.graph, t.buffer_order, k, options);
  for (const auto& a : t.actions)
    if (a.kind == ActionKind::Push) t.evict_indices.push_back(a.index);
  t.spans = attach_unaligned(ex, t.buffer_order);
  t.increments = build_increment_sequence(t);
  return t;
}

bool verify_trace(const AmrGraph& g, const OracleTrace& t, int k) {
  try {
    ParserConfiguration c = init_config(g, t.buffer_order, k);
    std::size_t pushes = 0;
    for (const auto& a : t.actions) {
      if (a.kind == ActionKind::Push) {
        if (pushes >= t.evict_indices.size() || t.evict_indices[pushes] != a.index) return false;
        ++pushes;
      }
      c = apply(c, a);
    }
    return pushes == t.evict_indices.size() && is_terminal(c) && c.all_covered();
  } catch (const DataError&) {
    return false;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

std::string to_string(const std::vector<TargetToken>& y) {
  std::string out;
  for (const auto& t : y) {
    if (!out.empty()) out += ' ';
    switch (t.kind) {
      case TargetToken::Kind::Push: out += "Push"; break;
      case TargetToken::Kind::Pop: out += "Pop"; break;
      case TargetToken::Kind::EndPhrase: out += "</ph>"; break;
      case TargetToken::Kind::Word: out += t.word; break;
    }
  }
  return out;
}

std::vector<TargetToken> build_interleaved_target(const OracleTrace& t) {
  std::vector<TargetToken> y;
  std::size_t pushes = 0;
  for (const auto& a : t.actions) {
    if (a.kind == ActionKind::Pop) {
      y.push_back(TargetToken::pop());
      continue;
    }
    y.push_back(TargetToken::push());
    const auto& span = t.spans.at(t.buffer_order.at(pushes++));
    for (const auto& w : span) y.push_back(TargetToken::text(w));
    if (!span.empty()) y.push_back(TargetToken::end_phrase());
  }
  return y;
}

SplitTarget split_interleaved_target(const std::vector<TargetToken>& y) {
  SplitTarget out;
  bool in_span = false;
  int open = 0;
  for (const auto& tok : y) {
    switch (tok.kind) {
      case TargetToken::Kind::Push:
        if (in_span) throw IllegalTrace("Push inside an open span");
        out.actions.push_back(ActionKind::Push);
        out.push_spans.emplace_back();
        ++open;
        break;
      case TargetToken::Kind::Pop:
        if (in_span) throw IllegalTrace("Pop inside an open span");
        if (--open < 0) throw IllegalTrace("Pop without a matching Push");
        out.actions.push_back(ActionKind::Pop);
        break;
      case TargetToken::Kind::Word:
        if (out.push_spans.empty() || (!in_span && !out.push_spans.back().empty()) || out.actions.back() != ActionKind::Push)
          throw IllegalTrace("word '" + tok.word + "' outside a span");
        in_span = true;
        out.push_spans.back().push_back(tok.word);
        break;
      case TargetToken::Kind::EndPhrase:
        if (!in_span) throw IllegalTrace("</ph> without an open span");
        in_span = false;
        break;
    }
  }
  if (in_span) throw IllegalTrace("unterminated span");
  if (open != 0) throw IllegalTrace("unbalanced Push/Pop");
  return out;
}

std::vector<ConceptId> pointer_sequence(const OracleTrace& t) {
  std::vector<ConceptId> seq;
  for (ConceptId c : t.buffer_order)
    if (!t.spans.at(c).empty()) seq.push_back(c);
  return seq;
}

std::vector<int> build_increment_sequence(const OracleTrace& t) {
  std::vector<int> r;
  for (ConceptId c : pointer_sequence(t))
    for (std::size_t i = 0; i < t.spans[c].size(); ++i) r.push_back(i == 0 && !r.empty() ? 1 : 0);
  return r;
}

}  // namespace amrgen
