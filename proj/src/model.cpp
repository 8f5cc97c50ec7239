#include "amrgen/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "amrgen/conditioned.hpp"
#include "amrgen/encoder.hpp"
#include "amrgen/errors.hpp"
#include "amrgen/joint.hpp"

namespace amrgen {

std::string to_string(DecoderKind kind) { return kind == DecoderKind::Joint ? "joint" : "conditioned"; }

DecoderKind parse_decoder_kind(const std::string& name) {
  if (name == "conditioned") return DecoderKind::Conditioned;
  if (name == "joint") return DecoderKind::Joint;
  throw std::invalid_argument("unknown decoder '" + name + "' (expected conditioned or joint)");
}

Model Model::create(const ModelConfig& config, Vocabulary words, Vocabulary edge_labels,
                    const EmbeddingTable* pretrained) {
  if (config.hidden < 1 || config.embed < 1 || config.edge_dim < 1 || config.enc_steps < 0 || config.cache < 1)
    throw std::invalid_argument("model dimensions must be positive");
  if (pretrained && pretrained->dimension != config.embed)
    throw DimensionMismatch("embeddings have dimension " + std::to_string(pretrained->dimension) +
                            " but the model uses " + std::to_string(config.embed));
  Model m;
  m.config = config;
  m.words = std::move(words);
  m.edge_labels = std::move(edge_labels);
  std::mt19937_64 rng(config.seed);
  const int V = m.words.size();
  init_encoder_params(m.params, config, V, m.edge_labels.size(), rng);
  if (config.decoder == DecoderKind::Conditioned) {
    init_conditioned_params(m.params, config, V, rng);
  } else {
    init_joint_params(m.params, config, V, rng);
  }

  Mat rows = Mat::Constant(V, 1, -1.0);
  std::vector<const std::vector<double>*> frozen;
  if (pretrained) {
    for (int id = Vocabulary::kReserved; id < V; ++id) {
      const auto& tok = m.words.token(id);
      if (!pretrained->frozen(tok)) continue;
      rows(id, 0) = static_cast<double>(frozen.size());
      frozen.push_back(&pretrained->lookup(tok));
    }
  }
  Mat table(static_cast<Eigen::Index>(frozen.size()), config.embed);
  for (std::size_t r = 0; r < frozen.size(); ++r)
    for (int c = 0; c < config.embed; ++c) table(static_cast<Eigen::Index>(r), c) = (*frozen[r])[c];
  m.params.add("emb.frozen", std::move(table), true);
  m.params.add("meta.frozen_rows", std::move(rows), true);
  m.params.add("meta.empty_span", Mat::Zero(V, 1), true);
  return m;
}

bool Model::frozen_word(int word_id) const {
  const auto& rows = params.at("meta.frozen_rows").value;
  return word_id >= 0 && word_id < rows.rows() && rows(word_id, 0) >= 0;
}

Var Model::embed(Tape& tape, int word_id) const {
  if (word_id < 0 || word_id >= words.size()) throw IndexOutOfRange("word id " + std::to_string(word_id));
  if (frozen_word(word_id)) {
    const auto row = static_cast<Eigen::Index>(params.at("meta.frozen_rows").value(word_id, 0));
    return tape.param_row(params, "emb.frozen", row);
  }
  return tape.param_row(params, "emb.words", word_id);
}

Var Model::edge_embed(Tape& tape, int edge_label_id) const {
  return tape.param_row(params, "emb.edges", edge_label_id);
}

void Model::learn_empty_span_labels(const std::vector<Instance>& instances) {
  std::map<int, std::pair<int, int>> counts;  // label -> (empty, total)
  for (const auto& inst : instances) {
    for (std::size_t c = 0; c < inst.input.label_ids.size(); ++c) {
      auto& [empty, total] = counts[inst.input.label_ids[c]];
      ++total;
      if (inst.span_ids[c].empty()) ++empty;
    }
  }
  auto& flags = params.at("meta.empty_span").value;
  flags.setZero();
  for (const auto& [label, count] : counts)
    if (2 * count.first > count.second) flags(label, 0) = 1.0;
}

bool Model::empty_span_label(int word_id) const {
  const auto& flags = params.at("meta.empty_span").value;
  return word_id >= 0 && word_id < flags.rows() && flags(word_id, 0) > 0.5;
}

GraphInput Model::graph_input(const AmrGraph& raw) const {
  GraphInput in;
  in.graph = preprocess_labels(raw);
  for (const auto& label : in.graph.concepts) in.label_ids.push_back(words.id(label));
  for (const auto& e : in.graph.edges) in.edge_label_ids.push_back(edge_labels.id(e.label));
  return in;
}

Instance Model::instance(const AlignedExample& example) const {
  Instance inst;
  inst.input = graph_input(example.graph);
  inst.trace = extract_trace(example, config.cache);
  inst.words = example.tokens;
  for (const auto& w : inst.words) inst.word_ids.push_back(words.id(w));
  for (const auto& span : inst.trace.spans) {
    std::vector<int> ids;
    for (const auto& w : span) ids.push_back(words.id(w));
    inst.span_ids.push_back(std::move(ids));
  }
  inst.pointer = pointer_sequence(inst.trace);
  inst.increments = build_increment_sequence(inst.trace);
  inst.interleaved = build_interleaved_target(inst.trace);
  return inst;
}

namespace {

constexpr char kMagic[8] = {'A', 'M', 'R', 'G', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), sizeof(T));
  } else {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
}

template <typename T>
T get(std::istream& in, const std::string& what) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), sizeof(T))) throw BadCheckpoint("truncated while reading " + what);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

void write_vocab(std::ostream& out, const char* name, const Vocabulary& v) {
  out << name << ' ' << v.size() - Vocabulary::kReserved << '\n';
  for (int i = Vocabulary::kReserved; i < v.size(); ++i) out << v.token(i) << '\n';
}

Vocabulary read_vocab(std::istream& in, const char* name) {
  std::string line, key;
  int count = -1;
  if (!std::getline(in, line) || !(std::istringstream(line) >> key >> count) || key != name || count < 0)
    throw BadCheckpoint(std::string("manifest: expected '") + name + " <count>'");
  Vocabulary v;
  for (int i = 0; i < count; ++i) {
    if (!std::getline(in, line) || line.empty()) throw BadCheckpoint(std::string("manifest: short ") + name + " list");
    if (v.add(line) != Vocabulary::kReserved + i) throw BadCheckpoint("manifest: duplicate token '" + line + "'");
  }
  return v;
}

std::filesystem::path manifest_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".manifest");
}

}  // namespace

void write_tensors(const Params& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  std::uint32_t count = 0;
  for (const auto& entry : params) {
    (void)entry;
    ++count;
  }
  put<std::uint32_t>(out, count);
  for (const auto& [name, p] : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint8_t>(out, p.frozen ? 1 : 0);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.cols()));
    for (Eigen::Index i = 0; i < p.value.size(); ++i) put<double>(out, p.value.data()[i]);
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Params read_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BadCheckpoint("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw BadCheckpoint(path.string() + " is not a checkpoint");
  if (const auto version = get<std::uint32_t>(in, "version"); version != kVersion)
    throw BadCheckpoint("unsupported checkpoint version " + std::to_string(version));
  const auto count = get<std::uint32_t>(in, "tensor count");
  Params params;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto len = get<std::uint32_t>(in, "name length");
    if (len > 4096) throw BadCheckpoint("implausible name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw BadCheckpoint("truncated tensor name");
    const bool frozen = get<std::uint8_t>(in, name) != 0;
    const auto rows = get<std::uint32_t>(in, name);
    const auto cols = get<std::uint32_t>(in, name);
    Mat value(rows, cols);
    for (Eigen::Index i = 0; i < value.size(); ++i) value.data()[i] = get<double>(in, name);
    params.add(name, std::move(value), frozen);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw BadCheckpoint("trailing bytes after last tensor");
  return params;
}

void Model::save(const std::filesystem::path& path) const {
  write_tensors(params, path);
  std::ofstream out(manifest_path(path));
  if (!out) throw std::runtime_error("cannot write " + manifest_path(path).string());
  out << "decoder " << to_string(config.decoder) << '\n'
      << "hidden " << config.hidden << '\n'
      << "embed " << config.embed << '\n'
      << "edge_dim " << config.edge_dim << '\n'
      << "enc_steps " << config.enc_steps << '\n'
      << "cache " << config.cache << '\n'
      << "seed " << config.seed << '\n'
      << "max_span " << config.max_span << '\n';
  write_vocab(out, "words", words);
  write_vocab(out, "edge_labels", edge_labels);
  for (const auto& [name, p] : params)
    out << "tensor " << name << ' ' << p.value.rows() << ' ' << p.value.cols() << (p.frozen ? " frozen" : "") << '\n';
}

Model Model::load(const std::filesystem::path& path) {
  std::ifstream in(manifest_path(path));
  if (!in) throw BadCheckpoint("missing manifest " + manifest_path(path).string());
  Model m;
  std::map<std::string, std::string> fields;
  std::string line;
  for (int i = 0; i < 8 && std::getline(in, line); ++i) {
    std::istringstream ls(line);
    std::string key, value;
    if (!(ls >> key >> value)) throw BadCheckpoint("manifest: bad line '" + line + "'");
    fields[key] = value;
  }
  auto field = [&](const std::string& key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end()) throw BadCheckpoint("manifest: missing " + key);
    return it->second;
  };
  try {
    m.config.decoder = parse_decoder_kind(field("decoder"));
    m.config.hidden = std::stoi(field("hidden"));
    m.config.embed = std::stoi(field("embed"));
    m.config.edge_dim = std::stoi(field("edge_dim"));
    m.config.enc_steps = std::stoi(field("enc_steps"));
    m.config.cache = std::stoi(field("cache"));
    m.config.seed = std::stoull(field("seed"));
    m.config.max_span = std::stoi(field("max_span"));
  } catch (const std::invalid_argument& e) {
    throw BadCheckpoint(std::string("manifest: ") + e.what());
  }
  m.words = read_vocab(in, "words");
  m.edge_labels = read_vocab(in, "edge_labels");
  m.params = read_tensors(path);

  const auto expect = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    const auto& v = m.params.at(name).value;
    if (v.rows() != rows || v.cols() != cols)
      throw BadCheckpoint(name + " is " + std::to_string(v.rows()) + "x" + std::to_string(v.cols()));
  };
  try {
    expect("emb.words", m.words.size(), m.config.embed);
    expect("emb.edges", m.edge_labels.size(), m.config.edge_dim);
    expect("meta.empty_span", m.words.size(), 1);
    expect("meta.frozen_rows", m.words.size(), 1);
  } catch (const IndexOutOfRange& e) {
    throw BadCheckpoint(e.what());
  }
  return m;
}

}  // namespace amrgen
