#pragma once

#include <memory>
#include <string>
#include <vector>

#include "amrgen/amr.hpp"

namespace amrgen {

// A cache slot holds either a concept or the sentinel "$".
class CacheSlot {
 public:
  constexpr CacheSlot() = default;
  constexpr explicit CacheSlot(ConceptId id) : id_(id) {}
  static constexpr CacheSlot sentinel() { return CacheSlot(); }

  constexpr bool is_sentinel() const noexcept { return id_ < 0; }
  constexpr ConceptId concept_id() const noexcept { return id_; }
  friend constexpr bool operator==(CacheSlot, CacheSlot) = default;

 private:
  ConceptId id_ = -1;
};

struct StackEntry {
  int index = 1;  // 1-based cache position the slot was displaced from
  CacheSlot slot;
  friend bool operator==(const StackEntry&, const StackEntry&) = default;
};

enum class ActionKind { Shift, PushIndex, Arc, Pop, Push };
enum class ArcDirection { Left, Right };  // Left: eta[k] -> eta[i]; Right: eta[i] -> eta[k]

struct Action {
  ActionKind kind = ActionKind::Push;
  int index = 0;  // 1-based cache index for PushIndex, Arc and Push
  ArcDirection direction = ArcDirection::Left;
  std::string label;

  static Action push(int i) { return {ActionKind::Push, i, ArcDirection::Left, {}}; }
  static Action pop() { return {ActionKind::Pop, 0, ArcDirection::Left, {}}; }
  static Action shift() { return {ActionKind::Shift, 0, ArcDirection::Left, {}}; }
  static Action push_index(int i) { return {ActionKind::PushIndex, i, ArcDirection::Left, {}}; }
  static Action arc(int i, ArcDirection d, std::string l) { return {ActionKind::Arc, i, d, std::move(l)}; }

  friend bool operator==(const Action&, const Action&) = default;
};

std::string to_string(const Action& a);

enum class TransitionSystem { Full, Simplified };

// Graph plus undirected adjacency, shared by every configuration of a run.
struct GraphIndex {
  explicit GraphIndex(AmrGraph g);
  AmrGraph graph;
  std::vector<std::vector<std::pair<ConceptId, std::size_t>>> adjacency;
};

// C = (buffer, cache, stack, partial graph) with edge-coverage bookkeeping.
// Values are immutable in practice: apply() returns a new configuration.
struct ParserConfiguration {
  std::shared_ptr<const GraphIndex> index;
  TransitionSystem system = TransitionSystem::Simplified;
  std::vector<ConceptId> buffer;  // front is beta[0]
  std::vector<CacheSlot> cache;   // position 1 is cache[0]
  std::vector<StackEntry> stack;  // back is the top
  std::vector<bool> covered;      // per edge of the graph
  std::vector<Edge> arcs;         // G_p, full system only
  bool shifted = false;           // full system: Shift taken, PushIndex pending
  int retired = 0;

  int k() const noexcept { return static_cast<int>(cache.size()); }
  const AmrGraph& graph() const { return index->graph; }
  CacheSlot rightmost() const { return cache.back(); }
  bool all_covered() const;
  std::size_t uncovered_count() const;
  // Vertices that have left the buffer and not been evicted for good.
  bool in_cache(ConceptId v) const;
  bool on_stack(ConceptId v) const;
};

// Throws BadPermutation when `order` is not a permutation of the concepts, or
// std::invalid_argument when k < 1.
ParserConfiguration init_config(const AmrGraph& g, const std::vector<ConceptId>& order, int k,
                                TransitionSystem system = TransitionSystem::Simplified);
ParserConfiguration init_config(std::shared_ptr<const GraphIndex> index, const std::vector<ConceptId>& order,
                                int k, TransitionSystem system = TransitionSystem::Simplified);

std::vector<Action> legal_actions(const ParserConfiguration& c);
bool is_legal(const ParserConfiguration& c, const Action& a);
// Throws IllegalAction.
ParserConfiguration apply(const ParserConfiguration& c, const Action& a);
bool is_terminal(const ParserConfiguration& c);

// Moves buffer element `pos` to the front so that the next Push takes it. Used
// when the buffer is an unordered set and the push order is being predicted.
ParserConfiguration select_front(const ParserConfiguration& c, std::size_t pos);

struct TreeDecomposition {
  std::vector<std::vector<ConceptId>> bags;  // sorted members
  std::vector<int> parent;                   // -1 for the root
  int width() const;
};

// One bag per Push (the non-sentinel cache members after it), linked to the
// bag of the cache state the Push started from. Throws IllegalTrace.
TreeDecomposition tree_decomposition(const std::vector<Action>& trace, const ParserConfiguration& init);

}  // namespace amrgen
