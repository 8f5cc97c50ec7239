#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "amrgen/model.hpp"

namespace amrgen {

struct RunConfig {
  int k = 3;
  int hidden = 512;
  int embed_dim = 300;
  int edge_dim = 32;
  int enc_steps = 5;
  int beam = 1;
  double len_reward = 0.0;
  int epochs = 10;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  DecoderKind decoder = DecoderKind::Conditioned;
  std::filesystem::path corpus, embeddings, model, out;

  ModelConfig model_config() const;
};

// Flat "key = value" lines; '#' starts a comment. Keys match the CLI flag
// names without dashes (k, hidden, edge-dim, ...). Throws
// std::invalid_argument on unknown keys or bad values.
std::map<std::string, std::string> parse_key_values(std::string_view text);
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);
RunConfig load_run_config(const std::filesystem::path& path);

// Relative data paths (corpus, embeddings) resolve against $AMRGEN_DATA_ROOT
// when it is set.
std::filesystem::path resolve_data_path(const std::filesystem::path& p);

}  // namespace amrgen
