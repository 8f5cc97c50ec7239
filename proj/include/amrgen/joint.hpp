#pragma once

#include <random>
#include <vector>

#include "amrgen/decoding.hpp"
#include "amrgen/encoder.hpp"

namespace amrgen {

void init_joint_params(Params& params, const ModelConfig& config, int vocab_size, std::mt19937_64& rng);

// Joint decoder: one stream of Push, the pushed concept's phrase and </ph>,
// and Pop. An action LSTM and an English LSTM take turns.
class JointDecoder {
 public:
  JointDecoder(Tape& tape, const Model& model, const GraphInput& input);

  static constexpr int kPushOut = 0;
  static constexpr int kPopOut = 1;

  // W_a [mean h(stack); mean h(cache); s_prev] + b_a, where s_prev is the
  // hidden state of whichever LSTM produced the previous token.
  Var action_context(const ParserConfiguration& c, Var s_prev);

  struct ActionStep {
    LstmState state;
    Var context;
    Var logits;
    std::vector<bool> legal;
  };
  ActionStep predict_action(const LstmState& prev, int prev_token, const ParserConfiguration& c, Var s_prev);

  // Query [s; s_a of the previous Push, or zeros].
  Var index_query(Var s, const Var* previous_push);
  // Rows [h_v; e_in(v)/k; e_out(v)/k] for buffer vertices, with edges counted
  // against the current cache. Throws EmptyBuffer.
  Var buffer_logits(const ParserConfiguration& c, Var query);
  // Rows [h_u; e_in(u)/k; e_out(u)/k] per cache slot, with edges counted
  // against the buffer. Sentinels read the null vector and zero edge blocks.
  Var cache_logits(const ParserConfiguration& c, Var query);

  struct WordStep {
    LstmState state;
    Var logits;
  };
  WordStep english_step(const LstmState& prev, int prev_word, ConceptId pushed, Var push_state);
  // Real words, <unk> and </ph>. An immediate </ph> is an empty phrase.
  const std::vector<bool>& word_mask() const { return words_; }

  Var zero_hidden() const { return zero_h_; }
  const EncodedGraph& encoded() const { return encoded_; }

 private:
  Var edge_block(const std::vector<std::size_t>& edges);

  Tape& tape_;
  const Model& model_;
  EncodedGraph encoded_;
  Var null_, zero_h_, zero_e_;
  std::vector<bool> words_;
  std::vector<std::vector<std::size_t>> incoming_, outgoing_;
};

// L_j over one teacher-forced example. Phrases are skipped for concepts with
// empty spans.
Var loss_joint(Tape& tape, const Model& model, const Instance& instance, Accuracy* accuracy = nullptr);

// Beam search over the interleaved stream. Throws NoCompleteHypothesis.
GenerationResult generate_joint(const Model& model, const AmrGraph& graph, const DecodeOptions& options,
                                std::vector<GenerationResult>* final_beam = nullptr);

GenerationResult greedy_joint(const Model& model, const AmrGraph& graph);

// Dispatch on the model's decoder kind.
Var loss(Tape& tape, const Model& model, const Instance& instance, Accuracy* accuracy = nullptr);
GenerationResult generate(const Model& model, const AmrGraph& graph, const DecodeOptions& options,
                          std::vector<GenerationResult>* final_beam = nullptr);
GenerationResult greedy(const Model& model, const AmrGraph& graph);

}  // namespace amrgen
