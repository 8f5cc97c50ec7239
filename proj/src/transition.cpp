#include "amrgen/transition.hpp"

#include <algorithm>
#include <set>

#include "amrgen/errors.hpp"

namespace amrgen {

std::string to_string(const Action& a) {
  switch (a.kind) {
    case ActionKind::Shift:
      return "Shift";
    case ActionKind::PushIndex:
      return "PushIndex(" + std::to_string(a.index) + ")";
    case ActionKind::Arc:
      return "Arc(" + std::to_string(a.index) + ", " + (a.direction == ArcDirection::Left ? "L" : "R") + ", " +
             a.label + ")";
    case ActionKind::Pop:
      return "Pop";
    case ActionKind::Push:
      return "Push(" + std::to_string(a.index) + ")";
  }
  return "?";
}

GraphIndex::GraphIndex(AmrGraph g) : graph(std::move(g)), adjacency(graph.undirected_adjacency()) {}

bool ParserConfiguration::all_covered() const {
  return std::all_of(covered.begin(), covered.end(), [](bool b) { return b; });
}

std::size_t ParserConfiguration::uncovered_count() const {
  return static_cast<std::size_t>(std::count(covered.begin(), covered.end(), false));
}

bool ParserConfiguration::in_cache(ConceptId v) const {
  return std::any_of(cache.begin(), cache.end(), [v](CacheSlot s) { return s.concept_id() == v; });
}

bool ParserConfiguration::on_stack(ConceptId v) const {
  return std::any_of(stack.begin(), stack.end(), [v](const StackEntry& e) { return e.slot.concept_id() == v; });
}

ParserConfiguration init_config(const AmrGraph& g, const std::vector<ConceptId>& order, int k,
                                TransitionSystem system) {
  return init_config(std::make_shared<const GraphIndex>(g), order, k, system);
}

ParserConfiguration init_config(std::shared_ptr<const GraphIndex> index, const std::vector<ConceptId>& order,
                                int k, TransitionSystem system) {
  if (k < 1) throw std::invalid_argument("cache size must be at least 1");
  const std::size_t n = index->graph.size();
  if (order.size() != n) throw BadPermutation("order has " + std::to_string(order.size()) + " entries for " +
                                              std::to_string(n) + " concepts");
  std::vector<bool> seen(n, false);
  for (ConceptId v : order) {
    if (v < 0 || static_cast<std::size_t>(v) >= n || seen[v])
      throw BadPermutation("order is not a permutation of the concepts");
    seen[v] = true;
  }
  ParserConfiguration c;
  c.covered.assign(index->graph.edges.size(), false);
  c.index = std::move(index);
  c.system = system;
  c.buffer = order;
  c.cache.assign(k, CacheSlot::sentinel());
  return c;
}

namespace {

void cover_with_cache(ParserConfiguration& c, ConceptId v) {
  for (const auto& [w, e] : c.index->adjacency[v])
    if (!c.covered[e] && c.in_cache(w)) c.covered[e] = true;
}

std::vector<std::string> edge_labels(const AmrGraph& g) {
  std::set<std::string> labels;
  for (const auto& e : g.edges) labels.insert(e.label);
  return {labels.begin(), labels.end()};
}

bool has_arc(const ParserConfiguration& c, const Edge& e) {
  return std::find(c.arcs.begin(), c.arcs.end(), e) != c.arcs.end();
}

Edge arc_edge(const ParserConfiguration& c, const Action& a) {
  const ConceptId right = c.cache.back().concept_id();
  const ConceptId other = c.cache[a.index - 1].concept_id();
  return a.direction == ArcDirection::Left ? Edge{right, other, a.label} : Edge{other, right, a.label};
}

void push_front_to_cache(ParserConfiguration& c, int i) {
  const ConceptId v = c.buffer.front();
  c.buffer.erase(c.buffer.begin());
  c.stack.push_back({i, c.cache[i - 1]});
  c.cache.erase(c.cache.begin() + (i - 1));
  c.cache.push_back(CacheSlot(v));
}

void pop_to_cache(ParserConfiguration& c) {
  const StackEntry top = c.stack.back();
  c.stack.pop_back();
  const CacheSlot evicted = c.cache.back();
  c.cache.pop_back();
  c.cache.insert(c.cache.begin() + (top.index - 1), top.slot);
  if (!evicted.is_sentinel()) ++c.retired;
}

}  // namespace

bool is_legal(const ParserConfiguration& c, const Action& a) {
  const int k = c.k();
  const bool simplified = c.system == TransitionSystem::Simplified;
  switch (a.kind) {
    case ActionKind::Push:
      return simplified && !c.buffer.empty() && a.index >= 1 && a.index <= k;
    case ActionKind::Pop:
      return !c.stack.empty() && !c.shifted;
    case ActionKind::Shift:
      return !simplified && !c.buffer.empty() && !c.shifted;
    case ActionKind::PushIndex:
      return !simplified && c.shifted && a.index >= 1 && a.index <= k;
    case ActionKind::Arc: {
      if (simplified || c.shifted || a.index < 1 || a.index >= k) return false;
      if (c.cache.back().is_sentinel() || c.cache[a.index - 1].is_sentinel()) return false;
      return !has_arc(c, arc_edge(c, a));
    }
  }
  return false;
}

std::vector<Action> legal_actions(const ParserConfiguration& c) {
  std::vector<Action> out;
  const int k = c.k();
  if (c.system == TransitionSystem::Simplified) {
    if (!c.buffer.empty())
      for (int i = 1; i <= k; ++i) out.push_back(Action::push(i));
    if (!c.stack.empty()) out.push_back(Action::pop());
    return out;
  }
  if (c.shifted) {
    for (int i = 1; i <= k; ++i) out.push_back(Action::push_index(i));
    return out;
  }
  if (!c.buffer.empty()) out.push_back(Action::shift());
  const auto labels = edge_labels(c.graph());
  for (int i = 1; i < k; ++i)
    for (ArcDirection d : {ArcDirection::Left, ArcDirection::Right})
      for (const auto& l : labels) {
        Action a = Action::arc(i, d, l);
        if (is_legal(c, a)) out.push_back(std::move(a));
      }
  if (!c.stack.empty()) out.push_back(Action::pop());
  return out;
}

ParserConfiguration apply(const ParserConfiguration& c, const Action& a) {
  if (!is_legal(c, a)) throw IllegalAction(to_string(a) + " in the current configuration");
  ParserConfiguration next = c;
  switch (a.kind) {
    case ActionKind::Push:
      push_front_to_cache(next, a.index);
      cover_with_cache(next, next.cache.back().concept_id());
      break;
    case ActionKind::Pop: {
      const CacheSlot restored = next.stack.back().slot;
      pop_to_cache(next);
      if (next.system == TransitionSystem::Simplified && !restored.is_sentinel())
        cover_with_cache(next, restored.concept_id());
      break;
    }
    case ActionKind::Shift:
      next.shifted = true;
      break;
    case ActionKind::PushIndex:
      push_front_to_cache(next, a.index);
      next.shifted = false;
      break;
    case ActionKind::Arc: {
      const Edge e = arc_edge(next, a);
      next.arcs.push_back(e);
      const auto& edges = next.graph().edges;
      for (std::size_t i = 0; i < edges.size(); ++i)
        if (!next.covered[i] && edges[i] == e) {
          next.covered[i] = true;
          break;
        }
      break;
    }
  }
  return next;
}

bool is_terminal(const ParserConfiguration& c) { return c.buffer.empty() && c.stack.empty() && !c.shifted; }

ParserConfiguration select_front(const ParserConfiguration& c, std::size_t pos) {
  if (pos >= c.buffer.size()) throw EmptyBuffer("buffer position " + std::to_string(pos) + " out of range");
  ParserConfiguration next = c;
  std::rotate(next.buffer.begin(), next.buffer.begin() + static_cast<std::ptrdiff_t>(pos),
              next.buffer.begin() + static_cast<std::ptrdiff_t>(pos) + 1);
  return next;
}

int TreeDecomposition::width() const {
  std::size_t widest = 0;
  for (const auto& b : bags) widest = std::max(widest, b.size());
  return static_cast<int>(widest) - 1;
}

TreeDecomposition tree_decomposition(const std::vector<Action>& trace, const ParserConfiguration& init) {
  TreeDecomposition td;
  ParserConfiguration c = init;
  int current = -1;  // bag of the current cache state; -1 is the empty initial cache
  int first_root = -1;
  std::vector<int> saved;
  for (const auto& a : trace) {
    try {
      c = apply(c, a);
    } catch (const IllegalAction& e) {
      throw IllegalTrace(e.what());
    }
    if (a.kind == ActionKind::Push || a.kind == ActionKind::PushIndex) {
      std::vector<ConceptId> bag;
      for (CacheSlot s : c.cache)
        if (!s.is_sentinel()) bag.push_back(s.concept_id());
      std::sort(bag.begin(), bag.end());
      // Subtrees hanging off the empty initial cache are vertex-disjoint, so
      // chaining them under the first root keeps a single tree.
      const int parent = current >= 0 ? current : first_root;
      td.bags.push_back(std::move(bag));
      td.parent.push_back(parent);
      saved.push_back(current);
      current = static_cast<int>(td.bags.size()) - 1;
      if (first_root < 0) first_root = current;
    } else if (a.kind == ActionKind::Pop) {
      current = saved.back();
      saved.pop_back();
    }
  }
  if (!is_terminal(c)) throw IllegalTrace("trace does not reach a terminal configuration");
  return td;
}

}  // namespace amrgen
