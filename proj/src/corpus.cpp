#include "amrgen/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "amrgen/errors.hpp"

namespace amrgen {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

AlignedExample parse_block(const std::vector<std::string>& lines, int block_no) {
  AlignedExample ex;
  ex.tokens = split_ws(lines.front());
  if (ex.tokens.empty()) throw EmptySentence("block " + std::to_string(block_no));
  std::string penman;
  std::size_t i = 1;
  for (; i < lines.size() && lines[i].rfind("ALIGN", 0) != 0; ++i) penman += lines[i] + "\n";
  ex.graph = parse_penman(penman);
  ex.spans.assign(ex.graph.size(), std::nullopt);
  for (; i < lines.size(); ++i) {
    const auto fields = split_ws(lines[i]);
    if (fields.size() != 4 || fields[0] != "ALIGN")
      throw BadSpan("block " + std::to_string(block_no) + ": malformed alignment line '" + lines[i] + "'");
    int start = 0, end = 0, index = 0;
    try {
      start = std::stoi(fields[1]);
      end = std::stoi(fields[2]);
      index = std::stoi(fields[3]);
    } catch (const std::exception&) {
      throw BadSpan("block " + std::to_string(block_no) + ": non-integer field in '" + lines[i] + "'");
    }
    if (index < 0 || index >= static_cast<int>(ex.graph.size()))
      throw UnknownConcept("block " + std::to_string(block_no) + ": concept " + std::to_string(index));
    if (ex.spans[index])
      throw BadSpan("block " + std::to_string(block_no) + ": concept " + std::to_string(index) +
                    " aligned to more than one span");
    ex.spans[index] = Span{start, end};
  }
  validate(ex);
  return ex;
}

}  // namespace

void validate(const AlignedExample& ex) {
  if (ex.tokens.empty()) throw EmptySentence("sentence has no tokens");
  if (ex.spans.size() != ex.graph.size())
    throw UnknownConcept("span table size " + std::to_string(ex.spans.size()) + " != concept count " +
                         std::to_string(ex.graph.size()));
  const int m = static_cast<int>(ex.tokens.size());
  std::vector<int> owner(m, -1);
  for (std::size_t c = 0; c < ex.spans.size(); ++c) {
    if (!ex.spans[c]) continue;
    const Span s = *ex.spans[c];
    if (s.start < 0 || s.end > m || s.start >= s.end)
      throw BadSpan("span (" + std::to_string(s.start) + "," + std::to_string(s.end) + ") on " +
                    std::to_string(m) + "-token sentence");
    for (int t = s.start; t < s.end; ++t) {
      if (owner[t] >= 0)
        throw BadSpan("token " + std::to_string(t) + " aligned to concepts " + std::to_string(owner[t]) +
                      " and " + std::to_string(c));
      owner[t] = static_cast<int>(c);
    }
  }
}

std::vector<AlignedExample> parse_corpus(std::string_view text) {
  std::vector<AlignedExample> corpus;
  std::istringstream in{std::string(text)};
  std::vector<std::string> block;
  std::string line;
  auto flush = [&] {
    if (!block.empty()) corpus.push_back(parse_block(block, static_cast<int>(corpus.size()) + 1));
    block.clear();
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) {
      flush();
    } else if (line.rfind("#", 0) != 0) {
      block.push_back(line);
    }
  }
  flush();
  return corpus;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("FileNotFound", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<AlignedExample> load_corpus(const std::filesystem::path& path) {
  return parse_corpus(read_text_file(path));
}

std::string format_example(const AlignedExample& ex) {
  std::string out;
  for (std::size_t i = 0; i < ex.tokens.size(); ++i) out += (i ? " " : "") + ex.tokens[i];
  out += "\n" + serialize(ex.graph) + "\n";
  // serialize renumbers variables depth-first; alignments must follow that order.
  std::vector<ConceptId> dfs_rank(ex.graph.size(), -1);
  {
    const auto outgoing = ex.graph.outgoing_edges();
    int next = 0;
    auto visit = [&](auto&& self, ConceptId v) -> void {
      dfs_rank[v] = next++;
      for (std::size_t e : outgoing[v])
        if (dfs_rank[ex.graph.edges[e].dst] < 0) self(self, ex.graph.edges[e].dst);
    };
    if (!ex.graph.empty()) visit(visit, ex.graph.root);
  }
  std::vector<std::pair<int, std::string>> aligns;
  for (std::size_t c = 0; c < ex.spans.size(); ++c)
    if (ex.spans[c])
      aligns.emplace_back(dfs_rank[c], "ALIGN " + std::to_string(ex.spans[c]->start) + " " +
                                           std::to_string(ex.spans[c]->end) + " " + std::to_string(dfs_rank[c]));
  std::sort(aligns.begin(), aligns.end());
  for (const auto& [rank, line] : aligns) out += line + "\n";
  return out;
}

std::vector<std::vector<std::string>> attach_unaligned(const AlignedExample& ex,
                                                       const std::vector<ConceptId>& order) {
  std::vector<ConceptId> aligned;
  for (ConceptId c : order)
    if (c >= 0 && c < static_cast<ConceptId>(ex.spans.size()) && ex.spans[c]) aligned.push_back(c);
  if (aligned.empty()) throw NoAlignedConcept("no concept has an aligned span");

  const int m = static_cast<int>(ex.tokens.size());
  std::vector<ConceptId> owner(m, -1);
  for (ConceptId c : aligned)
    for (int t = ex.spans[c]->start; t < ex.spans[c]->end; ++t) owner[t] = c;
  for (int t = 0; t < m; ++t) {
    if (owner[t] >= 0) continue;
    ConceptId best = -1;
    for (ConceptId c : aligned)
      if (ex.spans[c]->start <= t && (best < 0 || ex.spans[c]->start > ex.spans[best]->start)) best = c;
    owner[t] = best >= 0 ? best : aligned.front();
  }
  std::vector<std::vector<std::string>> spans(ex.graph.size());
  for (int t = 0; t < m; ++t) spans[owner[t]].push_back(ex.tokens[t]);
  return spans;
}

Vocabulary::Vocabulary() {
  for (const char* tok : {"<pad>", "<unk>", "</ph>", "<push>", "<pop>", "<s>", "</s>"}) add(tok);
}

int Vocabulary::add(const std::string& token) {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  ids_.emplace(token, id);
  tokens_.push_back(token);
  return id;
}

int Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

Vocabulary build_vocabulary(const std::vector<AlignedExample>& corpus) {
  Vocabulary vocab;
  for (const auto& ex : corpus) {
    for (const auto& tok : ex.tokens) vocab.add(tok);
    for (const auto& label : ex.graph.concepts) vocab.add(preprocess_label(label));
  }
  return vocab;
}

Vocabulary build_edge_vocabulary(const std::vector<AlignedExample>& corpus) {
  Vocabulary vocab;
  for (const auto& ex : corpus)
    for (const auto& e : ex.graph.edges) vocab.add(e.label);
  return vocab;
}

const std::vector<double>& EmbeddingTable::lookup(const std::string& token) const {
  auto it = vectors.find(token);
  return it == vectors.end() ? unk : it->second;
}

EmbeddingTable parse_embeddings(std::string_view text, const Vocabulary& vocab) {
  EmbeddingTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    const int dim = static_cast<int>(fields.size()) - 1;
    if (table.dimension == 0) table.dimension = dim;
    if (dim != table.dimension || dim == 0)
      throw DimensionMismatch("line " + std::to_string(line_no) + " has " + std::to_string(dim) +
                              " components, expected " + std::to_string(table.dimension));
    if (!vocab.contains(fields[0])) continue;
    std::vector<double> v(dim);
    for (int i = 0; i < dim; ++i) {
      try {
        v[i] = std::stod(fields[i + 1]);
      } catch (const std::exception&) {
        throw DimensionMismatch("line " + std::to_string(line_no) + ": non-numeric component");
      }
    }
    table.vectors[fields[0]] = std::move(v);
  }
  table.unk.assign(table.dimension, 0.0);
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab) {
  return parse_embeddings(read_text_file(path), vocab);
}

}  // namespace amrgen
