#include "amrgen/config.hpp"

#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "amrgen/corpus.hpp"

namespace amrgen {

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.hidden = hidden;
  m.embed = embed_dim;
  m.edge_dim = edge_dim;
  m.enc_steps = enc_steps;
  m.cache = k;
  m.decoder = decoder;
  m.seed = seed;
  return m;
}

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T v{};
  if (!(in >> v) || !(in >> std::ws).eof()) throw std::invalid_argument("bad value '" + value + "' for " + key);
  return v;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(line_no) + ": no '='");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "k") {
    c.k = parse_number<int>(key, value);
    if (c.k < 1) throw std::invalid_argument("k must be at least 1");
  } else if (key == "hidden") {
    c.hidden = parse_number<int>(key, value);
  } else if (key == "embed-dim") {
    c.embed_dim = parse_number<int>(key, value);
  } else if (key == "edge-dim") {
    c.edge_dim = parse_number<int>(key, value);
  } else if (key == "enc-steps") {
    c.enc_steps = parse_number<int>(key, value);
  } else if (key == "beam") {
    c.beam = parse_number<int>(key, value);
  } else if (key == "len-reward") {
    c.len_reward = parse_number<double>(key, value);
  } else if (key == "epochs") {
    c.epochs = parse_number<int>(key, value);
  } else if (key == "lr") {
    c.lr = parse_number<double>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "decoder") {
    c.decoder = parse_decoder_kind(value);
  } else if (key == "corpus") {
    c.corpus = value;
  } else if (key == "embeddings") {
    c.embeddings = value;
  } else if (key == "model") {
    c.model = value;
  } else if (key == "out") {
    c.out = value;
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig c;
  for (const auto& [key, value] : parse_key_values(read_text_file(path))) apply_setting(c, key, value);
  return c;
}

std::filesystem::path resolve_data_path(const std::filesystem::path& p) {
  if (p.empty() || p.is_absolute()) return p;
  const char* root = std::getenv("AMRGEN_DATA_ROOT");
  return root && *root ? std::filesystem::path(root) / p : p;
}

}  // namespace amrgen
