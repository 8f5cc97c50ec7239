#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "amrgen/model.hpp"
#include "amrgen/transition.hpp"

namespace amrgen {

// Teacher-forced per-sequence accuracies: w, a, i_beta, i_eta, r.
enum class Sequence { Word = 0, Action = 1, BufferIndex = 2, CacheIndex = 3, Increment = 4 };
inline constexpr std::array<Sequence, 5> kAllSequences{Sequence::Word, Sequence::Action, Sequence::BufferIndex,
                                                       Sequence::CacheIndex, Sequence::Increment};
std::string to_string(Sequence s);

struct Accuracy {
  std::array<long, 5> correct{};
  std::array<long, 5> total{};

  void record(Sequence s, bool ok) {
    ++total[static_cast<int>(s)];
    if (ok) ++correct[static_cast<int>(s)];
  }
  // NaN when the sequence type never occurred.
  double rate(Sequence s) const {
    const int i = static_cast<int>(s);
    return total[i] ? static_cast<double>(correct[i]) / static_cast<double>(total[i])
                    : std::numeric_limits<double>::quiet_NaN();
  }
  Accuracy& operator+=(const Accuracy& o) {
    for (int i = 0; i < 5; ++i) {
      correct[i] += o.correct[i];
      total[i] += o.total[i];
    }
    return *this;
  }
};

struct DecodeOptions {
  int beam = 1;
  double length_reward = 0.0;  // epsilon, per English token
};

struct GenerationResult {
  std::vector<std::string> words;
  std::vector<Action> actions;
  std::vector<ConceptId> buffer_order;
  double action_logprob = 0.0;   // actions plus buffer and cache indices
  double english_logprob = 0.0;  // words, increments, end symbols
  double score = 0.0;            // total logprob + epsilon * |words|
};

std::string join_words(const std::vector<std::string>& words);

namespace detail {

// Index of the largest entry; ties go to the lowest index.
int argmax(const Vec& v);
// Allowed entries of the word distribution: non-reserved tokens plus `extra`.
std::vector<bool> word_mask(const Vocabulary& vocab, int extra);
// The two Push/Pop logits' legality under c.
std::vector<bool> action_mask(const ParserConfiguration& c);
Var null_or(Tape& tape, const std::vector<Var>& states, CacheSlot slot, Var null);

}  // namespace detail

}  // namespace amrgen
