#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "amrgen/amr.hpp"

namespace amrgen {

// Half-open token range [start, end).
struct Span {
  int start = 0;
  int end = 0;
  int length() const noexcept { return end - start; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct AlignedExample {
  std::vector<std::string> tokens;
  AmrGraph graph;
  // Indexed by ConceptId; absent for unaligned concepts.
  std::vector<std::optional<Span>> spans;
};

// Checks spans against the sentence and graph. Throws BadSpan, UnknownConcept
// or EmptySentence.
void validate(const AlignedExample& example);

// Blocks separated by blank lines: a token line, PENMAN lines, then
// "ALIGN <start> <end> <conceptIndex>" lines.
std::vector<AlignedExample> parse_corpus(std::string_view text);
std::vector<AlignedExample> load_corpus(const std::filesystem::path& path);
std::string format_example(const AlignedExample& example);

// Assigns every token to exactly one concept. Unaligned tokens join the span of
// the nearest preceding aligned concept; leading unaligned tokens join the
// first aligned concept in `order`. Result is indexed by ConceptId.
std::vector<std::vector<std::string>> attach_unaligned(const AlignedExample& example,
                                                       const std::vector<ConceptId>& order);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kEndPhrase = 2;
  static constexpr int kPush = 3;
  static constexpr int kPop = 4;
  static constexpr int kBos = 5;
  static constexpr int kEos = 6;
  static constexpr int kReserved = 7;

  Vocabulary();

  int add(const std::string& token);
  int id(const std::string& token) const;  // kUnk when missing
  bool contains(const std::string& token) const { return ids_.count(token) != 0; }
  const std::string& token(int id) const { return tokens_.at(id); }
  int size() const noexcept { return static_cast<int>(tokens_.size()); }
  bool is_reserved(int id) const noexcept { return id < kReserved; }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

 private:
  std::map<std::string, int> ids_;
  std::vector<std::string> tokens_;
};

// Sentence tokens plus preprocessed concept labels of every example.
Vocabulary build_vocabulary(const std::vector<AlignedExample>& corpus);
// Relation labels, with reserved ids 0 (pad) and 1 (unk).
Vocabulary build_edge_vocabulary(const std::vector<AlignedExample>& corpus);

struct EmbeddingTable {
  int dimension = 0;
  std::map<std::string, std::vector<double>> vectors;  // frozen during training
  std::vector<double> unk;

  const std::vector<double>& lookup(const std::string& token) const;
  bool frozen(const std::string& token) const { return vectors.count(token) != 0; }
};

// One token followed by D floats per line. Only tokens in `vocab` are kept.
// Throws DimensionMismatch.
EmbeddingTable parse_embeddings(std::string_view text, const Vocabulary& vocab);
EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace amrgen
