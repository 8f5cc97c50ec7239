#include "amrgen/conditioned.hpp"

#include <algorithm>
#include <numeric>

#include "amrgen/errors.hpp"

namespace amrgen {

using detail::argmax;

void init_conditioned_params(Params& p, const ModelConfig& cfg, int vocab_size, std::mt19937_64& rng) {
  const int H = cfg.hidden, D = cfg.embed, d = cfg.hidden + cfg.embed;
  p.add_uniform("cond.null", d, 1, rng);
  p.add_uniform("cond.Wa", H, 2 * d + H, rng);
  p.add_uniform("cond.ba", H, 1, rng);
  p.add_uniform("cond.act.Wx", H, D + H, rng);
  p.add_uniform("cond.act.bx", H, 1, rng);
  p.add_uniform("cond.act.lstm.W", 4 * H, 2 * H, rng);
  p.add_uniform("cond.act.lstm.b", 4 * H, 1, rng);
  p.add_uniform("cond.act.Wf", 2, 2 * H, rng);
  p.add_uniform("cond.act.bf", 2, 1, rng);
  p.add_uniform("cond.Ub", d, H, rng);
  p.add_uniform("cond.Ue", d, H, rng);
  p.add_uniform("cond.Ur", d, H, rng);
  p.add_uniform("cond.eng.We", H, d, rng);
  p.add_uniform("cond.eng.be", H, 1, rng);
  p.add_uniform("cond.eng.Wx", H, D + H, rng);
  p.add_uniform("cond.eng.bx", H, 1, rng);
  p.add_uniform("cond.eng.lstm.W", 4 * H, 2 * H, rng);
  p.add_uniform("cond.eng.lstm.b", 4 * H, 1, rng);
  p.add_uniform("cond.eng.Wf", vocab_size, 2 * H, rng);
  p.add_uniform("cond.eng.bf", vocab_size, 1, rng);
}

ConditionedDecoder::ConditionedDecoder(Tape& tape, const Model& model, const GraphInput& input)
    : tape_(tape),
      model_(model),
      input_(input),
      encoded_(encode_graph(tape, model, input)),
      null_(tape.param(model.params, "cond.null")),
      words_(detail::word_mask(model.words, -1)),
      words_eos_(detail::word_mask(model.words, Vocabulary::kEos)) {}

Var ConditionedDecoder::action_context(const ParserConfiguration& c, Var s_prev) {
  const Var top = c.stack.empty() ? null_ : detail::null_or(tape_, encoded_.states, c.stack.back().slot, null_);
  const Var right = detail::null_or(tape_, encoded_.states, c.rightmost(), null_);
  return nn::concat_affine(tape_.param(model_.params, "cond.Wa"), {top, right, s_prev},
                           tape_.param(model_.params, "cond.ba"));
}

ConditionedDecoder::ActionStep ConditionedDecoder::predict_action(const LstmState& prev, int prev_token,
                                                                  const ParserConfiguration& c) {
  const auto& P = model_.params;
  ActionStep step;
  step.context = action_context(c, prev.hidden);
  const Var x = nn::concat_affine(tape_.param(P, "cond.act.Wx"), {model_.embed(tape_, prev_token), step.context},
                                  tape_.param(P, "cond.act.bx"));
  step.state = nn::lstm_step(prev, x, tape_.param(P, "cond.act.lstm.W"), tape_.param(P, "cond.act.lstm.b"));
  step.logits = nn::concat_affine(tape_.param(P, "cond.act.Wf"), {step.state.cell, step.context},
                                  tape_.param(P, "cond.act.bf"));
  step.legal = detail::action_mask(c);
  return step;
}

ConditionedDecoder::IndexLogits ConditionedDecoder::predict_indices(const ParserConfiguration& c, Var s) {
  if (c.buffer.empty()) throw EmptyBuffer("index prediction needs a nonempty buffer");
  std::vector<Var> buffer_rows, cache_rows;
  for (ConceptId v : c.buffer) buffer_rows.push_back(encoded_.states[v]);
  for (CacheSlot slot : c.cache) cache_rows.push_back(detail::null_or(tape_, encoded_.states, slot, null_));
  return {nn::bilinear_logits(nn::stack_rows(buffer_rows), tape_.param(model_.params, "cond.Ub"), s),
          nn::bilinear_logits(nn::stack_rows(cache_rows), tape_.param(model_.params, "cond.Ue"), s)};
}

Var ConditionedDecoder::increment_logits(const std::vector<ConceptId>& pointer, std::size_t p, Var s_prev) {
  const Var current = encoded_.states[pointer.at(p)];
  const Var next = p + 1 < pointer.size() ? encoded_.states[pointer[p + 1]] : null_;
  return nn::bilinear_logits(nn::stack_rows<Real>({current, next}), tape_.param(model_.params, "cond.Ur"), s_prev);
}

std::vector<bool> ConditionedDecoder::increment_mask(const std::vector<ConceptId>& pointer, std::size_t p) const {
  return {true, p + 1 < pointer.size()};
}

ConditionedDecoder::WordStep ConditionedDecoder::english_step(const LstmState& prev, int prev_word,
                                                              ConceptId attended) {
  const auto& P = model_.params;
  const Var context = nn::affine(tape_.param(P, "cond.eng.We"), encoded_.states[attended], tape_.param(P, "cond.eng.be"));
  const Var x = nn::concat_affine(tape_.param(P, "cond.eng.Wx"), {model_.embed(tape_, prev_word), context},
                                  tape_.param(P, "cond.eng.bx"));
  WordStep step;
  step.state = nn::lstm_step(prev, x, tape_.param(P, "cond.eng.lstm.W"), tape_.param(P, "cond.eng.lstm.b"));
  step.logits = nn::concat_affine(tape_.param(P, "cond.eng.Wf"), {step.state.cell, context},
                                  tape_.param(P, "cond.eng.bf"));
  return step;
}

std::vector<bool> ConditionedDecoder::word_mask(bool at_last) const { return at_last ? words_eos_ : words_; }

namespace {

int masked_argmax(const Var& logits, const std::vector<bool>& mask) {
  return argmax(nn::masked_log_softmax<Real>(logits.value(), mask));
}

std::vector<ConceptId> identity_order(std::size_t n) {
  std::vector<ConceptId> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

}  // namespace

Var loss_conditioned(Tape& tape, const Model& model, const Instance& inst, Accuracy* acc) {
  ConditionedDecoder dec(tape, model, inst.input);
  const auto& g = inst.input.graph;
  ParserConfiguration cfg = init_config(g, identity_order(g.size()), model.config.cache);
  std::vector<Var> losses;

  LstmState st = nn::zero_state(tape, model.config.hidden);
  int prev = Vocabulary::kBos;
  std::size_t pushes = 0;
  for (const Action& a : inst.trace.actions) {
    auto step = dec.predict_action(st, prev, cfg);
    const int gold = a.kind == ActionKind::Push ? ConditionedDecoder::kPushOut : ConditionedDecoder::kPopOut;
    losses.push_back(nn::xent(step.logits, gold, step.legal));
    if (acc && step.legal[0] && step.legal[1])
      acc->record(Sequence::Action, masked_argmax(step.logits, step.legal) == gold);
    st = step.state;
    if (a.kind == ActionKind::Push) {
      const ConceptId v = inst.trace.buffer_order.at(pushes++);
      const auto idx = dec.predict_indices(cfg, st.hidden);
      const auto pos = static_cast<int>(std::find(cfg.buffer.begin(), cfg.buffer.end(), v) - cfg.buffer.begin());
      losses.push_back(nn::xent(idx.buffer, pos));
      losses.push_back(nn::xent(idx.cache, a.index - 1));
      if (acc) {
        acc->record(Sequence::BufferIndex, argmax(idx.buffer.value()) == pos);
        acc->record(Sequence::CacheIndex, argmax(idx.cache.value()) == a.index - 1);
      }
      cfg = apply(select_front(cfg, static_cast<std::size_t>(pos)), Action::push(a.index));
      prev = Vocabulary::kPush;
    } else {
      cfg = apply(cfg, a);
      prev = Vocabulary::kPop;
    }
  }

  const auto& pointer = inst.pointer;
  const std::size_t m = inst.word_ids.size();
  st = nn::zero_state(tape, model.config.hidden);
  prev = Vocabulary::kBos;
  std::size_t p = 0;
  for (std::size_t j = 0; j <= m; ++j) {
    const int advance = j < m ? inst.increments[j] : 0;
    const auto mask = dec.increment_mask(pointer, p);
    if (mask[1]) {
      const Var r = dec.increment_logits(pointer, p, st.hidden);
      losses.push_back(nn::xent(r, advance, mask));
      if (acc && j < m) acc->record(Sequence::Increment, masked_argmax(r, mask) == advance);
    }
    p += static_cast<std::size_t>(advance);
    const auto step = dec.english_step(st, prev, pointer.at(p));
    const int target = j < m ? inst.word_ids[j] : Vocabulary::kEos;
    const auto wmask = dec.word_mask(p + 1 == pointer.size());
    losses.push_back(nn::xent(step.logits, target, wmask));
    if (acc) acc->record(Sequence::Word, masked_argmax(step.logits, wmask) == target);
    st = step.state;
    prev = target;
  }
  return nn::sum(losses);
}

std::vector<ConceptId> inference_pointer(const Model& model, const GraphInput& input,
                                         const std::vector<ConceptId>& order) {
  std::vector<ConceptId> pointer;
  for (ConceptId c : order)
    if (!model.empty_span_label(input.label_ids[c])) pointer.push_back(c);
  return pointer.empty() ? order : pointer;
}

namespace {

struct ActionHyp {
  ParserConfiguration cfg;
  LstmState state;
  int prev = Vocabulary::kBos;
  double logp = 0.0;
  std::vector<Action> actions;
  std::vector<ConceptId> order;
};

template <typename T, typename Score>
void keep_best(std::vector<T>& items, std::size_t beam, Score score) {
  std::stable_sort(items.begin(), items.end(), [&](const T& a, const T& b) { return score(a) > score(b); });
  if (items.size() > beam) items.resize(beam);
}

struct WordHyp {
  LstmState state;
  int prev = Vocabulary::kBos;
  std::size_t p = 0;
  double logp = 0.0;
  std::vector<int> words;
};

}  // namespace

GenerationResult generate_conditioned(const Model& model, const AmrGraph& graph, const DecodeOptions& options,
                                      std::vector<GenerationResult>* final_beam) {
  const std::size_t beam = static_cast<std::size_t>(std::max(1, options.beam));
  const GraphInput input = model.graph_input(graph);
  Tape tape;
  ConditionedDecoder dec(tape, model, input);
  const std::size_t n = input.graph.size();
  if (n == 0) throw NoCompleteHypothesis("empty graph");

  // Stage 1: actions with buffer and cache indices.
  std::vector<ActionHyp> hyps(1);
  hyps[0].cfg = init_config(input.graph, identity_order(n), model.config.cache);
  hyps[0].state = nn::zero_state(tape, model.config.hidden);
  std::vector<ActionHyp> complete;
  while (!hyps.empty()) {
    struct Option {
      std::size_t hyp;
      bool push;
      double logp;
      LstmState state;
    };
    std::vector<Option> options_a;
    for (std::size_t h = 0; h < hyps.size(); ++h) {
      auto step = dec.predict_action(hyps[h].state, hyps[h].prev, hyps[h].cfg);
      const Vec lp = nn::masked_log_softmax<Real>(step.logits.value(), step.legal);
      if (step.legal[0]) options_a.push_back({h, true, hyps[h].logp + lp(0), step.state});
      if (step.legal[1]) options_a.push_back({h, false, hyps[h].logp + lp(1), step.state});
    }
    keep_best(options_a, beam, [](const Option& o) { return o.logp; });

    // Buffer index stage, then cache index stage; Pops pass through.
    struct Partial {
      std::size_t hyp;
      bool push;
      double logp;
      LstmState state;
      int buffer_pos;
      int cache_index;
      Var cache_logits;
    };
    std::vector<Partial> stage_b;
    for (const auto& o : options_a) {
      if (!o.push) {
        stage_b.push_back({o.hyp, false, o.logp, o.state, -1, -1, {}});
        continue;
      }
      const auto idx = dec.predict_indices(hyps[o.hyp].cfg, o.state.hidden);
      const Vec lp = nn::masked_log_softmax<Real>(idx.buffer.value());
      for (int b = 0; b < lp.size(); ++b) stage_b.push_back({o.hyp, true, o.logp + lp(b), o.state, b, -1, idx.cache});
    }
    keep_best(stage_b, beam, [](const Partial& p) { return p.logp; });
    std::vector<Partial> stage_c;
    for (const auto& pb : stage_b) {
      if (!pb.push) {
        stage_c.push_back(pb);
        continue;
      }
      const Vec lp = nn::masked_log_softmax<Real>(pb.cache_logits.value());
      for (int i = 0; i < lp.size(); ++i) {
        Partial next = pb;
        next.logp += lp(i);
        next.cache_index = i + 1;
        stage_c.push_back(next);
      }
    }
    keep_best(stage_c, beam, [](const Partial& p) { return p.logp; });

    std::vector<ActionHyp> next;
    for (const auto& pc : stage_c) {
      ActionHyp h = hyps[pc.hyp];
      h.state = pc.state;
      h.logp = pc.logp;
      if (pc.push) {
        h.cfg = select_front(h.cfg, static_cast<std::size_t>(pc.buffer_pos));
        h.order.push_back(h.cfg.buffer.front());
        h.actions.push_back(Action::push(pc.cache_index));
        h.cfg = apply(h.cfg, h.actions.back());
        h.prev = Vocabulary::kPush;
      } else {
        h.actions.push_back(Action::pop());
        h.cfg = apply(h.cfg, h.actions.back());
        h.prev = Vocabulary::kPop;
      }
      (is_terminal(h.cfg) ? complete : next).push_back(std::move(h));
    }
    hyps = std::move(next);
  }
  if (complete.empty()) throw NoCompleteHypothesis("action beam exhausted");
  keep_best(complete, 1, [](const ActionHyp& h) { return h.logp; });
  const ActionHyp& best = complete.front();

  // Stage 2: increments and words along the best push order.
  const auto pointer = inference_pointer(model, input, best.order);
  const std::size_t max_len = static_cast<std::size_t>(model.config.max_span) * pointer.size();
  std::vector<WordHyp> beam_w(1);
  beam_w[0].state = nn::zero_state(tape, model.config.hidden);
  std::vector<WordHyp> finished;
  const double eps = options.length_reward;
  while (!beam_w.empty()) {
    std::vector<WordHyp> moved;
    for (const auto& h : beam_w) {
      const auto mask = dec.increment_mask(pointer, h.p);
      if (!mask[1]) {
        moved.push_back(h);
        continue;
      }
      const Vec lp = nn::masked_log_softmax<Real>(dec.increment_logits(pointer, h.p, h.state.hidden).value(), mask);
      for (int r = 0; r < 2; ++r) {
        WordHyp next = h;
        next.p += static_cast<std::size_t>(r);
        next.logp += lp(r);
        moved.push_back(std::move(next));
      }
    }
    keep_best(moved, beam, [&](const WordHyp& h) { return h.logp + eps * static_cast<double>(h.words.size()); });

    std::vector<WordHyp> expanded;
    for (const auto& h : moved) {
      const auto step = dec.english_step(h.state, h.prev, pointer[h.p]);
      const auto mask = dec.word_mask(h.p + 1 == pointer.size());
      const Vec lp = nn::masked_log_softmax<Real>(step.logits.value(), mask);
      std::vector<int> ids;
      for (int w = 0; w < lp.size(); ++w)
        if (mask[static_cast<std::size_t>(w)]) ids.push_back(w);
      const std::size_t top = std::min(beam, ids.size());
      std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(top), ids.end(),
                        [&](int a, int b) { return lp(a) > lp(b) || (lp(a) == lp(b) && a < b); });
      for (std::size_t i = 0; i < top; ++i) {
        WordHyp next = h;
        next.state = step.state;
        next.logp += lp(ids[i]);
        next.prev = ids[i];
        if (ids[i] != Vocabulary::kEos) next.words.push_back(ids[i]);
        expanded.push_back(std::move(next));
      }
    }
    keep_best(expanded, beam, [&](const WordHyp& h) { return h.logp + eps * static_cast<double>(h.words.size()); });
    beam_w.clear();
    for (auto& h : expanded) {
      if (h.prev == Vocabulary::kEos) {
        finished.push_back(std::move(h));
      } else if (h.words.size() < max_len) {
        beam_w.push_back(std::move(h));
      }
    }
  }
  if (finished.empty()) throw NoCompleteHypothesis("English beam exhausted without </s>");

  std::vector<GenerationResult> results;
  for (const auto& h : finished) {
    GenerationResult r;
    for (int w : h.words) r.words.push_back(model.words.token(w));
    r.actions = best.actions;
    r.buffer_order = best.order;
    r.action_logprob = best.logp;
    r.english_logprob = h.logp;
    r.score = best.logp + h.logp + options.length_reward * static_cast<double>(h.words.size());
    results.push_back(std::move(r));
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const GenerationResult& a, const GenerationResult& b) { return a.score > b.score; });
  if (results.size() > beam) results.resize(beam);
  if (final_beam) *final_beam = results;
  return results.front();
}

GenerationResult greedy_conditioned(const Model& model, const AmrGraph& graph) {
  const GraphInput input = model.graph_input(graph);
  Tape tape;
  ConditionedDecoder dec(tape, model, input);
  const std::size_t n = input.graph.size();
  if (n == 0) throw NoCompleteHypothesis("empty graph");
  GenerationResult out;
  ParserConfiguration cfg = init_config(input.graph, identity_order(n), model.config.cache);
  LstmState st = nn::zero_state(tape, model.config.hidden);
  int prev = Vocabulary::kBos;
  while (!is_terminal(cfg)) {
    auto step = dec.predict_action(st, prev, cfg);
    const Vec lp = nn::masked_log_softmax<Real>(step.logits.value(), step.legal);
    const int a = argmax(lp);
    out.action_logprob += lp(a);
    st = step.state;
    if (a == ConditionedDecoder::kPushOut) {
      const auto idx = dec.predict_indices(cfg, st.hidden);
      const Vec lb = nn::masked_log_softmax<Real>(idx.buffer.value());
      const Vec le = nn::masked_log_softmax<Real>(idx.cache.value());
      const int b = argmax(lb), e = argmax(le);
      out.action_logprob += lb(b) + le(e);
      cfg = select_front(cfg, static_cast<std::size_t>(b));
      out.buffer_order.push_back(cfg.buffer.front());
      out.actions.push_back(Action::push(e + 1));
      prev = Vocabulary::kPush;
    } else {
      out.actions.push_back(Action::pop());
      prev = Vocabulary::kPop;
    }
    cfg = apply(cfg, out.actions.back());
  }

  const auto pointer = inference_pointer(model, input, out.buffer_order);
  const std::size_t max_len = static_cast<std::size_t>(model.config.max_span) * pointer.size();
  st = nn::zero_state(tape, model.config.hidden);
  prev = Vocabulary::kBos;
  std::size_t p = 0;
  while (true) {
    const auto mask = dec.increment_mask(pointer, p);
    if (mask[1]) {
      const Vec lr = nn::masked_log_softmax<Real>(dec.increment_logits(pointer, p, st.hidden).value(), mask);
      const int r = argmax(lr);
      out.english_logprob += lr(r);
      p += static_cast<std::size_t>(r);
    }
    const auto step = dec.english_step(st, prev, pointer[p]);
    const Vec lw = nn::masked_log_softmax<Real>(step.logits.value(), dec.word_mask(p + 1 == pointer.size()));
    const int w = argmax(lw);
    out.english_logprob += lw(w);
    st = step.state;
    prev = w;
    if (w == Vocabulary::kEos) break;
    out.words.push_back(model.words.token(w));
    if (out.words.size() >= max_len) throw NoCompleteHypothesis("greedy decoding hit the length cap");
  }
  out.score = out.action_logprob + out.english_logprob;
  return out;
}

}  // namespace amrgen
