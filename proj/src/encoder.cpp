#include "amrgen/encoder.hpp"

namespace amrgen {

void init_encoder_params(Params& params, const ModelConfig& cfg, int vocab_size, int edge_vocab_size,
                         std::mt19937_64& rng) {
  const int H = cfg.hidden, D = cfg.embed, E = cfg.edge_dim;
  params.add_uniform("emb.words", vocab_size, D, rng);
  params.add_uniform("emb.edges", edge_vocab_size, E, rng);
  params.add_uniform("enc.W", H, D + 3 * H + 2 * E, rng);
  params.add_uniform("enc.b", H, 1, rng);
}

EncodedGraph encode_graph(Tape& tape, const Model& model, const GraphInput& input, int steps) {
  const auto& g = input.graph;
  const int H = model.config.hidden;
  const int T = steps < 0 ? model.config.enc_steps : steps;
  const std::size_t n = g.size();

  EncodedGraph out;
  std::vector<Var> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back(model.embed(tape, input.label_ids[i]));
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    out.edge_embeddings.push_back(model.edge_embed(tape, input.edge_label_ids[e]));

  const Var zero_h = tape.constant(Mat::Zero(H, 1));
  const Var zero_e = tape.constant(Mat::Zero(model.config.edge_dim, 1));
  std::vector<std::vector<std::size_t>> incoming(n), outgoing(n);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    incoming[g.edges[e].dst].push_back(e);
    outgoing[g.edges[e].src].push_back(e);
  }

  const Var W = tape.param(model.params, "enc.W");
  const Var b = tape.param(model.params, "enc.b");
  std::vector<Var> h(n, zero_h);
  for (int t = 0; t < T; ++t) {
    std::vector<Var> next;
    next.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<Var> in_h, in_e, out_h, out_e;
      for (std::size_t e : incoming[i]) {
        in_h.push_back(h[g.edges[e].src]);
        in_e.push_back(out.edge_embeddings[e]);
      }
      for (std::size_t e : outgoing[i]) {
        out_h.push_back(h[g.edges[e].dst]);
        out_e.push_back(out.edge_embeddings[e]);
      }
      auto total = [](const std::vector<Var>& xs, Var zero) { return xs.empty() ? zero : nn::sum(xs); };
      next.push_back(nn::tanh(nn::concat_affine(
          W, {labels[i], h[i], total(in_h, zero_h), total(in_e, zero_e), total(out_h, zero_h), total(out_e, zero_e)},
          b)));
    }
    h = std::move(next);
  }
  for (std::size_t i = 0; i < n; ++i) out.states.push_back(nn::concat<Real>({h[i], labels[i]}));
  return out;
}

}  // namespace amrgen
