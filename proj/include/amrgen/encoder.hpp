#pragma once

#include <random>
#include <vector>

#include "amrgen/model.hpp"

namespace amrgen {

struct EncodedGraph {
  std::vector<Var> states;          // per concept, [hidden; label embedding]
  std::vector<Var> edge_embeddings;  // per edge of the graph
};

void init_encoder_params(Params& params, const ModelConfig& config, int vocab_size, int edge_vocab_size,
                         std::mt19937_64& rng);

// T synchronous updates
//   h_i <- tanh(W [x_i; h_i; sum_in h_j; sum_in e_ji; sum_out h_j; sum_out e_ij] + b)
// from h_i = 0, where x_i is the label embedding; each state is then
// concatenated with x_i. steps < 0 uses the model's configured T.
EncodedGraph encode_graph(Tape& tape, const Model& model, const GraphInput& input, int steps = -1);

}  // namespace amrgen
