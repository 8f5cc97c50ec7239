#pragma once

#include <string>
#include <vector>

#include "amrgen/corpus.hpp"
#include "amrgen/transition.hpp"

namespace amrgen {

struct OracleTrace {
  std::vector<Action> actions;            // n Push + n Pop
  std::vector<ConceptId> buffer_order;    // order vertices leave the buffer
  std::vector<int> evict_indices;         // 1-based cache index, one per Push
  std::vector<std::vector<std::string>> spans;  // per ConceptId, unaligned tokens attached
  std::vector<int> increments;            // one 0/1 per sentence token
};

// Aligned concepts in word order; each unaligned concept goes immediately
// before its first aligned descendant (depth-first), or else right after its
// parent.
std::vector<ConceptId> oracle_buffer_order(const AlignedExample& example);

struct OracleOptions {
  // States explored before the backtracking fallback gives up.
  std::size_t max_states = 2'000'000;
};

// Push/Pop sequence covering every edge with vertices pushed in `order`.
// Greedy policy first, with backtracking over alternatives when it dead-ends.
// Throws TreewidthExceeded when no run at cache size k covers the graph.
std::vector<Action> extract_actions(const AmrGraph& g, const std::vector<ConceptId>& order, int k,
                                    const OracleOptions& options = {});

OracleTrace extract_trace(const AlignedExample& example, int k, const OracleOptions& options = {});

// Replay is legal, reaches a terminal configuration and covers every edge.
bool verify_trace(const AmrGraph& g, const OracleTrace& trace, int k);

struct TargetToken {
  enum class Kind { Push, Pop, Word, EndPhrase };
  Kind kind = Kind::Word;
  std::string word;

  static TargetToken push() { return {Kind::Push, {}}; }
  static TargetToken pop() { return {Kind::Pop, {}}; }
  static TargetToken end_phrase() { return {Kind::EndPhrase, {}}; }
  static TargetToken text(std::string w) { return {Kind::Word, std::move(w)}; }
  friend bool operator==(const TargetToken&, const TargetToken&) = default;
};

std::string to_string(const std::vector<TargetToken>& y);

// Push, then the pushed concept's span and </ph> when the span is nonempty;
// Pops in place.
std::vector<TargetToken> build_interleaved_target(const OracleTrace& trace);

struct SplitTarget {
  std::vector<ActionKind> actions;                     // Push/Pop skeleton
  std::vector<std::vector<std::string>> push_spans;    // one span per Push, in push order
};
// Throws IllegalTrace for a malformed stream.
SplitTarget split_interleaved_target(const std::vector<TargetToken>& y);

// Concepts of buffer_order whose attached span is nonempty.
std::vector<ConceptId> pointer_sequence(const OracleTrace& trace);

// r_j = 1 iff word j (j > 0) opens a new concept span along pointer_sequence.
std::vector<int> build_increment_sequence(const OracleTrace& trace);

}  // namespace amrgen
