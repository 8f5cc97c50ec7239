#pragma once

#include <random>
#include <vector>

#include "amrgen/decoding.hpp"
#include "amrgen/encoder.hpp"

namespace amrgen {

void init_conditioned_params(Params& params, const ModelConfig& config, int vocab_size, std::mt19937_64& rng);

// Action-conditioned decoder: the full Push/Pop sequence first, then English
// words with hard attention on a pointer into the push order.
class ConditionedDecoder {
 public:
  // Encodes the graph onto `tape`.
  ConditionedDecoder(Tape& tape, const Model& model, const GraphInput& input);

  static constexpr int kPushOut = 0;
  static constexpr int kPopOut = 1;

  // W_a [h(stack top); h(rightmost cache); s_prev] + b_a; sentinels and an
  // empty stack read the null vector.
  Var action_context(const ParserConfiguration& c, Var s_prev);

  struct ActionStep {
    LstmState state;
    Var context;
    Var logits;               // {Push, Pop}
    std::vector<bool> legal;  // mask applied to logits
  };
  ActionStep predict_action(const LstmState& prev, int prev_token, const ParserConfiguration& c);

  struct IndexLogits {
    Var buffer;  // one row per buffer element, in buffer order
    Var cache;   // one row per cache slot
  };
  // Throws EmptyBuffer.
  IndexLogits predict_indices(const ParserConfiguration& c, Var s);

  // Increment logits over {stay, advance} from rows [pointer[p]; pointer[p+1]
  // or null]; advancing is disallowed at the last concept.
  Var increment_logits(const std::vector<ConceptId>& pointer, std::size_t p, Var s_prev);
  std::vector<bool> increment_mask(const std::vector<ConceptId>& pointer, std::size_t p) const;

  struct WordStep {
    LstmState state;
    Var logits;  // over the vocabulary
  };
  WordStep english_step(const LstmState& prev, int prev_word, ConceptId attended);
  // Real words, plus </s> only once the pointer reached the last concept.
  std::vector<bool> word_mask(bool at_last) const;

  const EncodedGraph& encoded() const { return encoded_; }
  Tape& tape() { return tape_; }

 private:
  Tape& tape_;
  const Model& model_;
  const GraphInput& input_;
  EncodedGraph encoded_;
  Var null_;
  std::vector<bool> words_, words_eos_;
};

// L_c over one teacher-forced example.
Var loss_conditioned(Tape& tape, const Model& model, const Instance& instance, Accuracy* accuracy = nullptr);

// Two-stage beam search: actions and indices, then words over the best push
// order. Throws NoCompleteHypothesis.
GenerationResult generate_conditioned(const Model& model, const AmrGraph& graph, const DecodeOptions& options,
                                      std::vector<GenerationResult>* final_beam = nullptr);

// Step-by-step argmax decoding.
GenerationResult greedy_conditioned(const Model& model, const AmrGraph& graph);

// Concepts of a predicted push order that get an English pointer position.
std::vector<ConceptId> inference_pointer(const Model& model, const GraphInput& input,
                                         const std::vector<ConceptId>& order);

}  // namespace amrgen
