#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "amrgen/corpus.hpp"
#include "amrgen/nn.hpp"
#include "amrgen/oracle.hpp"

namespace amrgen {

using Real = double;
using Tape = nn::Tape<Real>;
using Var = nn::Var<Real>;
using Params = nn::ParamStore<Real>;
using Mat = nn::Matrix<Real>;
using Vec = nn::Vector<Real>;
using LstmState = nn::LstmState<Real>;

enum class DecoderKind { Conditioned, Joint };

std::string to_string(DecoderKind kind);
DecoderKind parse_decoder_kind(const std::string& name);

struct ModelConfig {
  int hidden = 512;    // H: encoder and decoder states
  int embed = 300;     // D: word and concept label embeddings
  int edge_dim = 32;   // D': relation label embeddings
  int enc_steps = 5;   // T
  int cache = 3;       // k
  DecoderKind decoder = DecoderKind::Conditioned;
  std::uint64_t seed = 1;
  int max_span = 20;   // English tokens per concept at inference
};

// Graph with preprocessed labels mapped to vocabulary ids.
struct GraphInput {
  AmrGraph graph;
  std::vector<int> label_ids;
  std::vector<int> edge_label_ids;
};

// Everything a decoder needs for one teacher-forced example.
struct Instance {
  GraphInput input;
  OracleTrace trace;
  std::vector<std::string> words;
  std::vector<int> word_ids;
  std::vector<std::vector<int>> span_ids;  // per ConceptId
  std::vector<ConceptId> pointer;          // buffer order restricted to nonempty spans
  std::vector<int> increments;
  std::vector<TargetToken> interleaved;
};

class Model {
 public:
  // Parameters for the shared encoder and the configured decoder. Words found
  // in `pretrained` get frozen rows.
  static Model create(const ModelConfig& config, Vocabulary words, Vocabulary edge_labels,
                      const EmbeddingTable* pretrained = nullptr);

  int concept_dim() const noexcept { return config.hidden + config.embed; }
  Var embed(Tape& tape, int word_id) const;
  Var edge_embed(Tape& tape, int edge_label_id) const;
  bool frozen_word(int word_id) const;

  // Marks labels whose concepts mostly have empty spans in `instances`.
  void learn_empty_span_labels(const std::vector<Instance>& instances);
  bool empty_span_label(int word_id) const;

  GraphInput graph_input(const AmrGraph& raw) const;
  // Runs the oracle at the model's cache size; throws TreewidthExceeded.
  Instance instance(const AlignedExample& example) const;

  // Writes `path` (binary tensors) and `path`.manifest (config, vocabularies,
  // tensor listing).
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);

  ModelConfig config;
  Vocabulary words;
  Vocabulary edge_labels;
  Params params;
};

// Binary named-tensor file: "AMRGCKPT", u32 version, u32 count, then per
// tensor u32 name length, name, u8 frozen, u32 rows, u32 cols and rows*cols
// little-endian float64 in column-major order.
void write_tensors(const Params& params, const std::filesystem::path& path);
Params read_tensors(const std::filesystem::path& path);

}  // namespace amrgen
