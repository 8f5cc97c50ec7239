#include "amrgen/synthetic.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "amrgen/errors.hpp"
#include "amrgen/oracle.hpp"

namespace amrgen {

namespace {

struct Entry {
  const char* label;
  std::vector<std::string> phrase;
};

const std::vector<Entry>& nouns() {
  static const std::vector<Entry> v = {
      {"boy", {"the", "boy"}},     {"girl", {"the", "girl"}},   {"dog", {"a", "dog"}},
      {"cat", {"a", "cat"}},       {"teacher", {"the", "teacher"}}, {"city", {"the", "city"}},
      {"book", {"a", "book"}},     {"river", {"the", "river"}}, {"school", {"the", "school"}},
      {"car", {"a", "car"}},       {"tree", {"a", "tree"}},     {"house", {"the", "house"}},
      {"doctor", {"the", "doctor"}}, {"song", {"a", "song"}},   {"center", {"the", "center"}},
      {"letter", {"a", "letter"}}};
  return v;
}

const std::vector<Entry>& predicates() {
  static const std::vector<Entry> v = {
      {"see-01", {"sees"}},   {"want-01", {"wants"}}, {"open-01", {"opens"}}, {"read-01", {"reads"}},
      {"like-01", {"likes"}}, {"find-01", {"finds"}}, {"build-01", {"builds"}}, {"help-01", {"helps"}},
      {"sing-01", {"sings"}}, {"visit-01", {"visits"}}};
  return v;
}

const std::vector<Entry>& modifiers() {
  static const std::vector<Entry> v = {{"big", {"big"}},   {"small", {"small"}}, {"old", {"old"}},
                                       {"red", {"red"}},   {"quick", {"quickly"}}, {"happy", {"happy"}}};
  return v;
}

struct Lexicon {
  std::map<std::string, std::vector<std::string>> phrase;
  std::map<std::string, int> rank;
};

// One global order over labels decides where each phrase goes in the sentence.
Lexicon make_lexicon(std::mt19937_64& rng) {
  Lexicon lex;
  std::vector<std::string> labels;
  for (const auto* group : {&nouns(), &predicates(), &modifiers()})
    for (const auto& e : *group) {
      lex.phrase[e.label] = e.phrase;
      labels.push_back(e.label);
    }
  std::shuffle(labels.begin(), labels.end(), rng);
  for (std::size_t i = 0; i < labels.size(); ++i) lex.rank[labels[i]] = static_cast<int>(i);
  return lex;
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

AlignedExample make_example(const Lexicon& lex, const SyntheticOptions& opt, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const int target = std::uniform_int_distribution<int>(3, std::max(3, opt.max_concepts))(rng);
  AmrGraph g;
  std::vector<std::string> used;
  auto fresh = [&](const std::vector<Entry>& group) -> std::string {
    for (int tries = 0; tries < 50; ++tries) {
      std::string label = pick(group, rng).label;
      if (std::find(used.begin(), used.end(), label) == used.end()) {
        used.push_back(label);
        return label;
      }
    }
    return {};
  };
  auto add = [&](const std::string& label) {
    g.concepts.push_back(label);
    return static_cast<ConceptId>(g.concepts.size() - 1);
  };
  const bool with_date = coin(rng) < opt.unaligned;
  const int budget = target - (with_date ? 1 : 0);

  g.root = add(fresh(predicates()));
  std::vector<ConceptId> open_preds{g.root}, noun_ids;
  while (static_cast<int>(g.concepts.size()) < budget) {
    const ConceptId head = pick(open_preds, rng);
    const double r = coin(rng);
    std::string label;
    if (r < 0.55) {
      label = fresh(nouns());
    } else if (r < 0.75) {
      label = fresh(predicates());
    } else {
      label = fresh(modifiers());
    }
    if (label.empty()) break;
    const ConceptId c = add(label);
    if (r < 0.55) {
      const int args = static_cast<int>(std::count_if(g.edges.begin(), g.edges.end(), [&](const Edge& e) {
        return e.src == head && e.label.rfind("ARG", 0) == 0;
      }));
      g.edges.push_back({head, c, "ARG" + std::to_string(std::min(args, 2))});
      noun_ids.push_back(c);
    } else if (r < 0.75) {
      g.edges.push_back({head, c, "ARG1"});
      open_preds.push_back(c);
    } else {
      const ConceptId target_noun = noun_ids.empty() ? head : pick(noun_ids, rng);
      g.edges.push_back({target_noun, c, target_noun == head ? "manner" : "mod"});
    }
  }
  if (coin(rng) < opt.reentrancy) {
    std::vector<std::pair<ConceptId, ConceptId>> free;
    for (ConceptId p : open_preds)
      for (ConceptId n : noun_ids)
        if (std::none_of(g.edges.begin(), g.edges.end(), [&](const Edge& e) {
              return (e.src == p && e.dst == n) || (e.src == n && e.dst == p);
            }))
          free.push_back({p, n});
    if (!free.empty()) {
      const auto [p, n] = pick(free, rng);
      g.edges.push_back({p, n, "ARG0"});
    }
  }
  ConceptId date = -1;
  if (with_date) {
    date = add("date-entity");
    g.edges.push_back({g.root, date, "time"});
  }

  std::vector<ConceptId> aligned;
  for (ConceptId c = 0; c < static_cast<ConceptId>(g.size()); ++c)
    if (c != date) aligned.push_back(c);
  std::sort(aligned.begin(), aligned.end(),
            [&](ConceptId a, ConceptId b) { return lex.rank.at(g.concepts[a]) < lex.rank.at(g.concepts[b]); });

  AlignedExample ex;
  ex.graph = std::move(g);
  ex.spans.assign(ex.graph.size(), std::nullopt);
  for (ConceptId c : aligned) {
    const auto& phrase = lex.phrase.at(ex.graph.concepts[c]);
    const int start = static_cast<int>(ex.tokens.size());
    ex.tokens.insert(ex.tokens.end(), phrase.begin(), phrase.end());
    ex.spans[c] = Span{start, static_cast<int>(ex.tokens.size())};
  }
  ex.tokens.push_back(".");
  return ex;
}

}  // namespace

std::vector<AlignedExample> synthetic_corpus(const SyntheticOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  const Lexicon lex = make_lexicon(rng);
  std::vector<AlignedExample> out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < opt.examples) {
    if (++attempts > 100 * std::max(1, opt.examples)) throw SearchBudgetExceeded("synthetic corpus generation");
    AlignedExample ex = make_example(lex, opt, rng);
    try {
      extract_trace(ex, opt.cache);
    } catch (const SearchFailure&) {
      continue;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace amrgen
