#pragma once

#include <cstdint>
#include <vector>

#include "amrgen/corpus.hpp"

namespace amrgen {

struct SyntheticOptions {
  int examples = 50;
  int max_concepts = 8;
  int cache = 3;           // every example must have a covering run at this k
  double reentrancy = 0.2; // chance of one extra ARG edge to an existing noun
  double unaligned = 0.3;  // chance of an unaligned date-entity child on the root
  std::uint64_t seed = 1;
};

// Small aligned corpus over a fixed toy lexicon. Every concept label has one
// fixed phrase, and the sentence lists the phrases in a global label order, so
// the text is a deterministic function of the graph. Labels are unique within
// a graph; date-entity concepts are never aligned.
std::vector<AlignedExample> synthetic_corpus(const SyntheticOptions& options);

}  // namespace amrgen
