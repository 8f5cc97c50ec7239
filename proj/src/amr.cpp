#include "amrgen/amr.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>
#include <set>
#include <optional>
#include <regex>
#include <sstream>

#include "amrgen/errors.hpp"

namespace amrgen {

std::vector<std::vector<std::pair<ConceptId, std::size_t>>> AmrGraph::undirected_adjacency() const {
  std::vector<std::vector<std::pair<ConceptId, std::size_t>>> adj(size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    adj[edges[e].src].emplace_back(edges[e].dst, e);
    adj[edges[e].dst].emplace_back(edges[e].src, e);
  }
  return adj;
}

std::vector<std::vector<std::size_t>> AmrGraph::outgoing_edges() const {
  std::vector<std::vector<std::size_t>> out(size());
  for (std::size_t e = 0; e < edges.size(); ++e) out[edges[e].src].push_back(e);
  return out;
}

bool AmrGraph::connected() const {
  if (concepts.empty()) return true;
  const auto adj = undirected_adjacency();
  std::vector<bool> seen(size(), false);
  std::vector<ConceptId> todo{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!todo.empty()) {
    const ConceptId v = todo.back();
    todo.pop_back();
    for (const auto& [w, e] : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        todo.push_back(w);
      }
    }
  }
  return count == size();
}

std::vector<ConceptId> AmrGraph::breadth_first_order() const {
  std::vector<ConceptId> order;
  if (concepts.empty()) return order;
  const auto out = outgoing_edges();
  std::vector<bool> seen(size(), false);
  std::deque<ConceptId> queue{root};
  seen[root] = true;
  while (!queue.empty()) {
    const ConceptId v = queue.front();
    queue.pop_front();
    order.push_back(v);
    for (std::size_t e : out[v]) {
      const ConceptId w = edges[e].dst;
      if (!seen[w]) {
        seen[w] = true;
        queue.push_back(w);
      }
    }
  }
  for (ConceptId v = 0; v < static_cast<ConceptId>(size()); ++v)
    if (!seen[v]) order.push_back(v);
  return order;
}

namespace {

enum class TokKind { LParen, RParen, Slash, Role, Symbol, Quoted };

struct Tok {
  TokKind kind;
  std::string text;
  std::size_t pos;
};

std::vector<Tok> tokenize(std::string_view s) {
  std::vector<Tok> toks;
  std::size_t i = 0;
  auto is_delim = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')';
  };
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '#' && (i == 0 || s[i - 1] == '\n')) {
      while (i < s.size() && s[i] != '\n') ++i;
    } else if (c == '(') {
      toks.push_back({TokKind::LParen, "(", i++});
    } else if (c == ')') {
      toks.push_back({TokKind::RParen, ")", i++});
    } else if (c == '/') {
      toks.push_back({TokKind::Slash, "/", i++});
    } else if (c == '"') {
      const std::size_t start = i++;
      std::string text;
      while (i < s.size() && s[i] != '"') {
        if (s[i] == '\\' && i + 1 < s.size()) ++i;
        text += s[i++];
      }
      if (i >= s.size()) throw MalformedPenman("unterminated string at offset " + std::to_string(start));
      ++i;
      toks.push_back({TokKind::Quoted, text, start});
    } else if (c == ':') {
      const std::size_t start = i++;
      while (i < s.size() && !is_delim(s[i])) ++i;
      if (i == start + 1) throw MalformedPenman("empty role at offset " + std::to_string(start));
      toks.push_back({TokKind::Role, std::string(s.substr(start + 1, i - start - 1)), start});
    } else {
      const std::size_t start = i;
      while (i < s.size() && !is_delim(s[i]) && s[i] != '/') ++i;
      toks.push_back({TokKind::Symbol, std::string(s.substr(start, i - start)), start});
    }
  }
  return toks;
}

// A bare symbol shaped like an AMR variable ("b", "y2", "ab3").
bool looks_like_variable(const std::string& s) {
  static const std::regex pattern("^[a-z]{1,2}[0-9]*$");
  return std::regex_match(s, pattern);
}

struct PendingRef {
  ConceptId src;
  std::string role;
  std::string target;
  std::size_t edge_slot;
};

class PenmanParser {
 public:
  explicit PenmanParser(std::string_view text) : toks_(tokenize(text)) {
    for (std::size_t i = 0; i + 1 < toks_.size(); ++i)
      if (toks_[i].kind == TokKind::LParen && toks_[i + 1].kind == TokKind::Symbol) defined_.insert(toks_[i + 1].text);
  }

  AmrGraph parse() {
    if (toks_.empty()) throw MalformedPenman("empty input");
    parse_node();
    if (pos_ != toks_.size()) throw MalformedPenman("trailing tokens after graph at offset " + std::to_string(toks_[pos_].pos));
    resolve();
    graph_.root = 0;
    return std::move(graph_);
  }

 private:
  const Tok& peek() const {
    if (pos_ >= toks_.size()) throw MalformedPenman("unbalanced parentheses: unexpected end of input");
    return toks_[pos_];
  }
  const Tok& next() {
    const Tok& t = peek();
    ++pos_;
    return t;
  }
  void expect(TokKind kind, const char* what) {
    const Tok& t = next();
    if (t.kind != kind) throw MalformedPenman(std::string("expected ") + what + " at offset " + std::to_string(t.pos));
  }

  ConceptId add_concept(std::string label) {
    graph_.concepts.push_back(std::move(label));
    return static_cast<ConceptId>(graph_.concepts.size() - 1);
  }

  ConceptId parse_node() {
    expect(TokKind::LParen, "'('");
    const Tok& var = next();
    if (var.kind != TokKind::Symbol) throw MalformedPenman("expected variable at offset " + std::to_string(var.pos));
    if (variables_.count(var.text)) throw MalformedPenman("duplicate variable definition '" + var.text + "'");
    expect(TokKind::Slash, "'/'");
    const Tok& label = next();
    if (label.kind != TokKind::Symbol && label.kind != TokKind::Quoted)
      throw MalformedPenman("expected concept label at offset " + std::to_string(label.pos));
    const ConceptId id = add_concept(label.text);
    variables_[var.text] = id;
    while (peek().kind != TokKind::RParen) {
      const Tok& role = next();
      if (role.kind != TokKind::Role) throw MalformedPenman("expected role at offset " + std::to_string(role.pos));
      const std::string role_name = role.text;
      const Tok& value = peek();
      if (value.kind == TokKind::LParen) {
        const std::size_t slot = graph_.edges.size();
        graph_.edges.push_back({id, id, role_name});
        graph_.edges[slot].dst = parse_node();
      } else if (value.kind == TokKind::Quoted) {
        ++pos_;
        const ConceptId child = add_concept(value.text);
        graph_.edges.push_back({id, child, role_name});
      } else if (value.kind == TokKind::Symbol && !defined_.count(value.text)) {
        ++pos_;
        if (looks_like_variable(value.text)) throw MalformedPenman("undefined reference '" + value.text + "'");
        const ConceptId child = add_concept(value.text);
        graph_.edges.push_back({id, child, role_name});
      } else if (value.kind == TokKind::Symbol) {
        ++pos_;
        // Resolved once every variable is known, since references may point forward.
        pending_.push_back({id, role_name, value.text, graph_.edges.size()});
        graph_.edges.push_back({id, id, role_name});
      } else {
        throw MalformedPenman("expected value after role at offset " + std::to_string(value.pos));
      }
    }
    expect(TokKind::RParen, "')'");
    return id;
  }

  void resolve() {
    for (const auto& ref : pending_) {
      Edge& edge = graph_.edges[ref.edge_slot];
      if (auto it = variables_.find(ref.target); it != variables_.end()) {
        if (it->second == ref.src) throw MalformedPenman("self-loop on variable '" + ref.target + "'");
        edge.dst = it->second;
      } else {
        throw MalformedPenman("undefined reference '" + ref.target + "'");
      }
    }
  }

  std::vector<Tok> toks_;
  std::size_t pos_ = 0;
  AmrGraph graph_;
  std::map<std::string, ConceptId> variables_;
  std::vector<PendingRef> pending_;
  std::set<std::string> defined_;
};

bool needs_quotes(const std::string& label) {
  if (label.empty()) return true;
  for (char c : label)
    if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '"' || c == '/' || c == ':')
      return true;
  return false;
}

std::string quote_if_needed(const std::string& label) {
  if (!needs_quotes(label)) return label;
  std::string out = "\"";
  for (char c : label) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

AmrGraph parse_penman(std::string_view text) { return PenmanParser(text).parse(); }

std::vector<AmrGraph> parse_penman_blocks(std::string_view text) {
  std::vector<AmrGraph> graphs;
  std::istringstream in{std::string(text)};
  std::string line, block;
  auto flush = [&] {
    if (block.find('(') != std::string::npos) graphs.push_back(parse_penman(block));
    block.clear();
  };
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      flush();
    } else {
      block += line;
      block += '\n';
    }
  }
  flush();
  return graphs;
}

std::string preprocess_label(std::string_view label) {
  std::string out(label);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const std::size_t n = out.size();
  if (n > 3 && out[n - 3] == '-' && std::isdigit(static_cast<unsigned char>(out[n - 2])) &&
      std::isdigit(static_cast<unsigned char>(out[n - 1])))
    out.resize(n - 3);
  return out;
}

AmrGraph preprocess_labels(AmrGraph g) {
  for (auto& label : g.concepts) label = preprocess_label(label);
  return g;
}

std::string serialize(const AmrGraph& g) {
  if (g.empty()) return "";
  const auto out = g.outgoing_edges();
  std::vector<std::optional<std::string>> names(g.size());
  int next_var = 0;
  std::string text;
  auto visit = [&](auto&& self, ConceptId v) -> void {
    names[v] = "c" + std::to_string(next_var++);
    text += "(" + *names[v] + " / " + quote_if_needed(g.concepts[v]);
    for (std::size_t e : out[v]) {
      const ConceptId w = g.edges[e].dst;
      text += " :" + g.edges[e].label + " ";
      if (names[w]) {
        text += *names[w];
      } else {
        self(self, w);
      }
    }
    text += ")";
  };
  visit(visit, g.root);
  if (next_var != static_cast<int>(g.size()))
    throw std::invalid_argument("serialize: concept unreachable from the root along outgoing edges");
  return text;
}

}  // namespace amrgen
