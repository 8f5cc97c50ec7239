#include "amrgen/decoding.hpp"

namespace amrgen {

std::string to_string(Sequence s) {
  switch (s) {
    case Sequence::Word: return "w";
    case Sequence::Action: return "a";
    case Sequence::BufferIndex: return "i_beta";
    case Sequence::CacheIndex: return "i_eta";
    case Sequence::Increment: return "r";
  }
  return "?";
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
  return out;
}

namespace detail {

int argmax(const Vec& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

std::vector<bool> word_mask(const Vocabulary& vocab, int extra) {
  std::vector<bool> mask(static_cast<std::size_t>(vocab.size()), false);
  for (int i = Vocabulary::kReserved; i < vocab.size(); ++i) mask[i] = true;
  mask[Vocabulary::kUnk] = true;
  if (extra >= 0) mask[extra] = true;
  return mask;
}

std::vector<bool> action_mask(const ParserConfiguration& c) { return {!c.buffer.empty(), !c.stack.empty()}; }

Var null_or(Tape&, const std::vector<Var>& states, CacheSlot slot, Var null) {
  return slot.is_sentinel() ? null : states[slot.concept_id()];
}

}  // namespace detail

}  // namespace amrgen
