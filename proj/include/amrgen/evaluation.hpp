#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "amrgen/errors.hpp"

namespace amrgen {

using Sentence = std::vector<std::string>;

struct NgramMatch {
  long clipped = 0;
  long total = 0;
};

// Clipped n-gram matches of one candidate against one reference.
NgramMatch modified_precision(const Sentence& candidate, const Sentence& reference, int n);

struct BleuStats {
  std::array<NgramMatch, 4> matches{};
  long candidate_length = 0;
  long reference_length = 0;
  double brevity_penalty = 0.0;
  double score = 0.0;
};

// Corpus BLEU-4, uniform weights, brevity penalty, case-sensitive over
// pre-tokenized sentences. Throws EmptyCorpus, DimensionMismatch on count
// mismatch.
BleuStats bleu_stats(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references);
double bleu(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references);

// (2n choose n)/(n+1). Throws Overflow once the value leaves uint64.
std::uint64_t catalan(int n);

// Legal Push/Pop skeletons from an n-vertex buffer, by enumeration over the
// transition system. n <= 8.
std::uint64_t count_action_skeletons(int n);

struct SizedResult {
  int concepts = 0;
  Sentence candidate;
  Sentence reference;
};

struct SizeBin {
  int lower = 0;  // bin covers [lower, lower + width)
  int count = 0;
  double bleu = 0.0;
};

// BLEU per graph-size bin, ascending; empty bins are omitted.
std::vector<SizeBin> bin_by_size(const std::vector<SizedResult>& results, int width = 10);

void write_bins_csv(std::ostream& out, const std::vector<SizeBin>& bins);

Sentence tokenize(const std::string& line);

}  // namespace amrgen
