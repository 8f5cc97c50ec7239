#include "amrgen/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "amrgen/amr.hpp"
#include "amrgen/errors.hpp"
#include "amrgen/transition.hpp"

namespace amrgen {

namespace {

std::map<Sentence, long> ngrams(const Sentence& s, int n) {
  std::map<Sentence, long> counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= s.size(); ++i)
    ++counts[Sentence(s.begin() + static_cast<std::ptrdiff_t>(i), s.begin() + static_cast<std::ptrdiff_t>(i) + n)];
  return counts;
}

}  // namespace

NgramMatch modified_precision(const Sentence& candidate, const Sentence& reference, int n) {
  if (n < 1) throw std::invalid_argument("n-gram order must be positive");
  NgramMatch m;
  const auto ref = ngrams(reference, n);
  for (const auto& [gram, count] : ngrams(candidate, n)) {
    m.total += count;
    if (auto it = ref.find(gram); it != ref.end()) m.clipped += std::min(count, it->second);
  }
  return m;
}

BleuStats bleu_stats(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references) {
  if (candidates.empty()) throw EmptyCorpus("no sentences to score");
  if (candidates.size() != references.size())
    throw DimensionMismatch(std::to_string(candidates.size()) + " candidates for " +
                            std::to_string(references.size()) + " references");
  BleuStats st;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    st.candidate_length += static_cast<long>(candidates[i].size());
    st.reference_length += static_cast<long>(references[i].size());
    for (int n = 1; n <= 4; ++n) {
      const auto m = modified_precision(candidates[i], references[i], n);
      st.matches[n - 1].clipped += m.clipped;
      st.matches[n - 1].total += m.total;
    }
  }
  if (st.candidate_length == 0) return st;
  st.brevity_penalty = st.candidate_length >= st.reference_length
                           ? 1.0
                           : std::exp(1.0 - static_cast<double>(st.reference_length) /
                                                static_cast<double>(st.candidate_length));
  double log_sum = 0.0;
  for (const auto& m : st.matches) {
    if (m.clipped == 0) return st;
    log_sum += std::log(static_cast<double>(m.clipped) / static_cast<double>(m.total));
  }
  st.score = st.brevity_penalty * std::exp(log_sum / 4.0);
  return st;
}

double bleu(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references) {
  return bleu_stats(candidates, references).score;
}

std::uint64_t catalan(int n) {
  if (n < 0) throw std::invalid_argument("catalan of a negative number");
  // C_{i+1} = C_i * 2(2i+1) / (i+2), exact at every step.
  unsigned __int128 c = 1;
  for (int i = 0; i < n; ++i) {
    c = c * static_cast<unsigned __int128>(2 * (2 * i + 1)) / static_cast<unsigned __int128>(i + 2);
    if (c > std::numeric_limits<std::uint64_t>::max()) throw Overflow("catalan(" + std::to_string(n) + ")");
  }
  return static_cast<std::uint64_t>(c);
}

namespace {

std::uint64_t count_from(const ParserConfiguration& c) {
  if (is_terminal(c)) return 1;
  std::uint64_t total = 0;
  if (is_legal(c, Action::push(1))) total += count_from(apply(c, Action::push(1)));
  if (is_legal(c, Action::pop())) total += count_from(apply(c, Action::pop()));
  return total;
}

}  // namespace

std::uint64_t count_action_skeletons(int n) {
  if (n < 0 || n > 8) throw std::invalid_argument("count_action_skeletons supports 0 <= n <= 8");
  AmrGraph g;
  for (int i = 0; i < n; ++i) g.concepts.push_back("v" + std::to_string(i));
  std::vector<ConceptId> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  // The cache index never changes which skeletons are legal, so one slot suffices.
  return count_from(init_config(g, order, 1));
}

std::vector<SizeBin> bin_by_size(const std::vector<SizedResult>& results, int width) {
  if (width < 1) throw std::invalid_argument("bin width must be positive");
  std::map<int, std::pair<std::vector<Sentence>, std::vector<Sentence>>> groups;
  for (const auto& r : results) {
    auto& [cands, refs] = groups[(r.concepts / width) * width];
    cands.push_back(r.candidate);
    refs.push_back(r.reference);
  }
  std::vector<SizeBin> bins;
  for (const auto& [lower, group] : groups)
    bins.push_back({lower, static_cast<int>(group.first.size()), bleu(group.first, group.second)});
  return bins;
}

void write_bins_csv(std::ostream& out, const std::vector<SizeBin>& bins) {
  out << "bin,count,bleu\n";
  for (const auto& b : bins) out << b.lower << ',' << b.count << ',' << b.bleu << '\n';
}

Sentence tokenize(const std::string& line) {
  std::istringstream in(line);
  Sentence out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace amrgen
