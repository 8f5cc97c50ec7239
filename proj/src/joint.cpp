#include "amrgen/joint.hpp"

#include <algorithm>
#include <numeric>
#include <optional>

#include "amrgen/conditioned.hpp"
#include "amrgen/errors.hpp"

namespace amrgen {

using detail::argmax;

void init_joint_params(Params& p, const ModelConfig& cfg, int vocab_size, std::mt19937_64& rng) {
  const int H = cfg.hidden, D = cfg.embed, E = cfg.edge_dim, d = cfg.hidden + cfg.embed;
  p.add_uniform("joint.null", d, 1, rng);
  p.add_uniform("joint.Wa", H, 2 * d + H, rng);
  p.add_uniform("joint.ba", H, 1, rng);
  p.add_uniform("joint.act.Wx", H, D + H, rng);
  p.add_uniform("joint.act.bx", H, 1, rng);
  p.add_uniform("joint.act.lstm.W", 4 * H, 2 * H, rng);
  p.add_uniform("joint.act.lstm.b", 4 * H, 1, rng);
  p.add_uniform("joint.act.Wf", 2, 2 * H, rng);
  p.add_uniform("joint.act.bf", 2, 1, rng);
  p.add_uniform("joint.Ub", d + 2 * E, 2 * H, rng);
  p.add_uniform("joint.Ue", d + 2 * E, 2 * H, rng);
  p.add_uniform("joint.eng.We", H, d, rng);
  p.add_uniform("joint.eng.be", H, 1, rng);
  p.add_uniform("joint.eng.Wx", H, D + H, rng);
  p.add_uniform("joint.eng.bx", H, 1, rng);
  p.add_uniform("joint.eng.lstm.W", 4 * H, 2 * H, rng);
  p.add_uniform("joint.eng.lstm.b", 4 * H, 1, rng);
  p.add_uniform("joint.eng.Wf", vocab_size, 3 * H, rng);
  p.add_uniform("joint.eng.bf", vocab_size, 1, rng);
}

JointDecoder::JointDecoder(Tape& tape, const Model& model, const GraphInput& input)
    : tape_(tape),
      model_(model),
      encoded_(encode_graph(tape, model, input)),
      null_(tape.param(model.params, "joint.null")),
      zero_h_(tape.constant(Mat::Zero(model.config.hidden, 1))),
      zero_e_(tape.constant(Mat::Zero(model.config.edge_dim, 1))),
      words_(detail::word_mask(model.words, Vocabulary::kEndPhrase)),
      incoming_(input.graph.size()),
      outgoing_(input.graph.size()) {
  for (std::size_t e = 0; e < input.graph.edges.size(); ++e) {
    incoming_[input.graph.edges[e].dst].push_back(e);
    outgoing_[input.graph.edges[e].src].push_back(e);
  }
}

Var JointDecoder::action_context(const ParserConfiguration& c, Var s_prev) {
  std::vector<Var> stack, cache;
  for (const auto& entry : c.stack)
    if (!entry.slot.is_sentinel()) stack.push_back(encoded_.states[entry.slot.concept_id()]);
  for (CacheSlot slot : c.cache)
    if (!slot.is_sentinel()) cache.push_back(encoded_.states[slot.concept_id()]);
  const Var s = stack.empty() ? null_ : nn::mean(stack);
  const Var e = cache.empty() ? null_ : nn::mean(cache);
  return nn::concat_affine(tape_.param(model_.params, "joint.Wa"), {s, e, s_prev},
                           tape_.param(model_.params, "joint.ba"));
}

JointDecoder::ActionStep JointDecoder::predict_action(const LstmState& prev, int prev_token,
                                                      const ParserConfiguration& c, Var s_prev) {
  const auto& P = model_.params;
  ActionStep step;
  step.context = action_context(c, s_prev);
  const Var x = nn::concat_affine(tape_.param(P, "joint.act.Wx"), {model_.embed(tape_, prev_token), step.context},
                                  tape_.param(P, "joint.act.bx"));
  step.state = nn::lstm_step(prev, x, tape_.param(P, "joint.act.lstm.W"), tape_.param(P, "joint.act.lstm.b"));
  step.logits = nn::concat_affine(tape_.param(P, "joint.act.Wf"), {step.state.cell, step.context},
                                  tape_.param(P, "joint.act.bf"));
  step.legal = detail::action_mask(c);
  return step;
}

Var JointDecoder::index_query(Var s, const Var* previous_push) {
  return nn::concat<Real>({s, previous_push ? *previous_push : zero_h_});
}

Var JointDecoder::edge_block(const std::vector<std::size_t>& edges) {
  if (edges.empty()) return zero_e_;
  std::vector<Var> xs;
  for (std::size_t e : edges) xs.push_back(encoded_.edge_embeddings[e]);
  return nn::scale(nn::sum(xs), Real(1) / Real(model_.config.cache));
}

Var JointDecoder::buffer_logits(const ParserConfiguration& c, Var query) {
  if (c.buffer.empty()) throw EmptyBuffer("index prediction needs a nonempty buffer");
  const auto& g = c.graph();
  std::vector<Var> rows;
  for (ConceptId v : c.buffer) {
    std::vector<std::size_t> in, out;
    for (std::size_t e : incoming_[v])
      if (std::find(c.cache.begin(), c.cache.end(), CacheSlot(g.edges[e].src)) != c.cache.end()) in.push_back(e);
    for (std::size_t e : outgoing_[v])
      if (std::find(c.cache.begin(), c.cache.end(), CacheSlot(g.edges[e].dst)) != c.cache.end()) out.push_back(e);
    rows.push_back(nn::concat<Real>({encoded_.states[v], edge_block(in), edge_block(out)}));
  }
  return nn::bilinear_logits(nn::stack_rows(rows), tape_.param(model_.params, "joint.Ub"), query);
}

Var JointDecoder::cache_logits(const ParserConfiguration& c, Var query) {
  const auto& g = c.graph();
  auto in_buffer = [&](ConceptId v) { return std::find(c.buffer.begin(), c.buffer.end(), v) != c.buffer.end(); };
  std::vector<Var> rows;
  for (CacheSlot slot : c.cache) {
    if (slot.is_sentinel()) {
      rows.push_back(nn::concat<Real>({null_, zero_e_, zero_e_}));
      continue;
    }
    const ConceptId u = slot.concept_id();
    std::vector<std::size_t> in, out;
    for (std::size_t e : incoming_[u])
      if (in_buffer(g.edges[e].src)) in.push_back(e);
    for (std::size_t e : outgoing_[u])
      if (in_buffer(g.edges[e].dst)) out.push_back(e);
    rows.push_back(nn::concat<Real>({encoded_.states[u], edge_block(in), edge_block(out)}));
  }
  return nn::bilinear_logits(nn::stack_rows(rows), tape_.param(model_.params, "joint.Ue"), query);
}

JointDecoder::WordStep JointDecoder::english_step(const LstmState& prev, int prev_word, ConceptId pushed,
                                                  Var push_state) {
  const auto& P = model_.params;
  const Var context = nn::affine(tape_.param(P, "joint.eng.We"), encoded_.states[pushed],
                                 tape_.param(P, "joint.eng.be"));
  const Var x = nn::concat_affine(tape_.param(P, "joint.eng.Wx"), {model_.embed(tape_, prev_word), context},
                                  tape_.param(P, "joint.eng.bx"));
  WordStep step;
  step.state = nn::lstm_step(prev, x, tape_.param(P, "joint.eng.lstm.W"), tape_.param(P, "joint.eng.lstm.b"));
  step.logits = nn::concat_affine(tape_.param(P, "joint.eng.Wf"), {step.state.cell, context, push_state},
                                  tape_.param(P, "joint.eng.bf"));
  return step;
}

namespace {

std::vector<ConceptId> identity_order(std::size_t n) {
  std::vector<ConceptId> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

int masked_argmax(const Var& logits, const std::vector<bool>& mask) {
  return argmax(nn::masked_log_softmax<Real>(logits.value(), mask));
}

}  // namespace

Var loss_joint(Tape& tape, const Model& model, const Instance& inst, Accuracy* acc) {
  JointDecoder dec(tape, model, inst.input);
  const auto& g = inst.input.graph;
  ParserConfiguration cfg = init_config(g, identity_order(g.size()), model.config.cache);
  std::vector<Var> losses;
  LstmState act = nn::zero_state(tape, model.config.hidden);
  LstmState eng = act;
  Var merged = dec.zero_hidden();
  std::optional<Var> last_push;
  int prev = Vocabulary::kBos;
  std::size_t pushes = 0;
  for (const Action& a : inst.trace.actions) {
    auto step = dec.predict_action(act, prev, cfg, merged);
    const int gold = a.kind == ActionKind::Push ? JointDecoder::kPushOut : JointDecoder::kPopOut;
    losses.push_back(nn::xent(step.logits, gold, step.legal));
    if (acc && step.legal[0] && step.legal[1])
      acc->record(Sequence::Action, masked_argmax(step.logits, step.legal) == gold);
    act = step.state;
    merged = act.hidden;
    if (a.kind != ActionKind::Push) {
      cfg = apply(cfg, a);
      prev = Vocabulary::kPop;
      continue;
    }
    const ConceptId v = inst.trace.buffer_order.at(pushes++);
    const Var query = dec.index_query(act.hidden, last_push ? &*last_push : nullptr);
    const Var bl = dec.buffer_logits(cfg, query);
    const auto pos = static_cast<int>(std::find(cfg.buffer.begin(), cfg.buffer.end(), v) - cfg.buffer.begin());
    const Var cl = dec.cache_logits(cfg, query);
    losses.push_back(nn::xent(bl, pos));
    losses.push_back(nn::xent(cl, a.index - 1));
    if (acc) {
      acc->record(Sequence::BufferIndex, argmax(bl.value()) == pos);
      acc->record(Sequence::CacheIndex, argmax(cl.value()) == a.index - 1);
    }
    last_push = act.hidden;
    cfg = apply(select_front(cfg, static_cast<std::size_t>(pos)), Action::push(a.index));
    prev = Vocabulary::kPush;

    const auto& span = inst.span_ids.at(v);
    if (span.empty()) continue;
    int prev_word = Vocabulary::kPush;
    for (std::size_t j = 0; j <= span.size(); ++j) {
      const int target = j < span.size() ? span[j] : Vocabulary::kEndPhrase;
      const auto ws = dec.english_step(eng, prev_word, v, act.hidden);
      const auto& mask = dec.word_mask();
      losses.push_back(nn::xent(ws.logits, target, mask));
      if (acc) acc->record(Sequence::Word, masked_argmax(ws.logits, mask) == target);
      eng = ws.state;
      prev_word = target;
    }
    merged = eng.hidden;
    prev = Vocabulary::kEndPhrase;
  }
  return nn::sum(losses);
}

namespace {

struct JointHyp {
  ParserConfiguration cfg;
  LstmState act, eng;
  Var merged;
  std::optional<Var> last_push;
  int prev = Vocabulary::kBos;
  double action_lp = 0.0, english_lp = 0.0;
  std::vector<int> words;
  std::vector<Action> actions;
  std::vector<ConceptId> order;

  double logp() const { return action_lp + english_lp; }
};

template <typename T, typename Score>
void keep_best(std::vector<T>& items, std::size_t beam, Score score) {
  std::stable_sort(items.begin(), items.end(), [&](const T& a, const T& b) { return score(a) > score(b); });
  if (items.size() > beam) items.resize(beam);
}

// Top `beam` phrases for the concept `v` just pushed by `h`.
std::vector<JointHyp> expand_phrase(JointDecoder& dec, const Model& model, const JointHyp& h, ConceptId v,
                                    std::size_t beam, double reward) {
  struct Phrase {
    LstmState state;
    int prev = Vocabulary::kPush;
    double lp = 0.0;
    std::vector<int> words;
  };
  const std::size_t cap = static_cast<std::size_t>(std::max(1, model.config.max_span));
  std::vector<Phrase> live{Phrase{h.eng, Vocabulary::kPush, 0.0, {}}};
  std::vector<Phrase> done;
  while (!live.empty() && done.size() < beam) {
    std::vector<Phrase> next;
    for (const auto& ph : live) {
      const auto ws = dec.english_step(ph.state, ph.prev, v, *h.last_push);
      std::vector<bool> mask = dec.word_mask();
      if (ph.words.size() >= cap) {
        mask.assign(mask.size(), false);
        mask[Vocabulary::kEndPhrase] = true;
      }
      const Vec lp = nn::masked_log_softmax<Real>(ws.logits.value(), mask);
      std::vector<int> ids;
      for (int w = 0; w < lp.size(); ++w)
        if (mask[static_cast<std::size_t>(w)]) ids.push_back(w);
      const std::size_t top = std::min(beam, ids.size());
      std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(top), ids.end(),
                        [&](int a, int b) { return lp(a) > lp(b) || (lp(a) == lp(b) && a < b); });
      for (std::size_t i = 0; i < top; ++i) {
        Phrase p = ph;
        p.state = ws.state;
        p.prev = ids[i];
        p.lp += lp(ids[i]);
        if (ids[i] != Vocabulary::kEndPhrase) p.words.push_back(ids[i]);
        next.push_back(std::move(p));
      }
    }
    keep_best(next, beam, [&](const Phrase& p) { return p.lp + reward * static_cast<double>(p.words.size()); });
    live.clear();
    for (auto& p : next) (p.prev == Vocabulary::kEndPhrase ? done : live).push_back(std::move(p));
  }
  keep_best(done, beam, [&](const Phrase& p) { return p.lp + reward * static_cast<double>(p.words.size()); });
  std::vector<JointHyp> out;
  for (const auto& p : done) {
    JointHyp child = h;
    child.eng = p.state;
    child.merged = p.state.hidden;
    child.english_lp += p.lp;
    child.words.insert(child.words.end(), p.words.begin(), p.words.end());
    child.prev = Vocabulary::kEndPhrase;
    out.push_back(std::move(child));
  }
  return out;
}

}  // namespace

GenerationResult generate_joint(const Model& model, const AmrGraph& graph, const DecodeOptions& options,
                                std::vector<GenerationResult>* final_beam) {
  const std::size_t beam = static_cast<std::size_t>(std::max(1, options.beam));
  const GraphInput input = model.graph_input(graph);
  const std::size_t n = input.graph.size();
  if (n == 0) throw NoCompleteHypothesis("empty graph");
  Tape tape;
  JointDecoder dec(tape, model, input);

  JointHyp start;
  start.cfg = init_config(input.graph, identity_order(n), model.config.cache);
  start.act = nn::zero_state(tape, model.config.hidden);
  start.eng = start.act;
  start.merged = dec.zero_hidden();
  std::vector<JointHyp> hyps{start}, complete;

  struct Option {
    std::size_t hyp;
    bool push;
    double lp;  // added to the parent's action logprob
    LstmState state;
    int buffer_pos = -1;
    int cache_index = -1;
    Var query;
  };

  const double eps = options.length_reward;
  while (!hyps.empty()) {
    std::vector<Option> stage_a;
    for (std::size_t h = 0; h < hyps.size(); ++h) {
      auto step = dec.predict_action(hyps[h].act, hyps[h].prev, hyps[h].cfg, hyps[h].merged);
      const Vec lp = nn::masked_log_softmax<Real>(step.logits.value(), step.legal);
      if (step.legal[0]) stage_a.push_back({h, true, lp(0), step.state, -1, -1, {}});
      if (step.legal[1]) stage_a.push_back({h, false, lp(1), step.state, -1, -1, {}});
    }
    const auto total = [&](const Option& o) {
      return hyps[o.hyp].logp() + eps * static_cast<double>(hyps[o.hyp].words.size()) + o.lp;
    };
    keep_best(stage_a, beam, total);

    std::vector<Option> stage_b;
    for (auto o : stage_a) {
      if (!o.push) {
        stage_b.push_back(o);
        continue;
      }
      const JointHyp& h = hyps[o.hyp];
      o.query = dec.index_query(o.state.hidden, h.last_push ? &*h.last_push : nullptr);
      const Vec lp = nn::masked_log_softmax<Real>(dec.buffer_logits(h.cfg, o.query).value());
      for (int b = 0; b < lp.size(); ++b) {
        Option next = o;
        next.buffer_pos = b;
        next.lp += lp(b);
        stage_b.push_back(next);
      }
    }
    keep_best(stage_b, beam, total);

    std::vector<Option> stage_c;
    for (const auto& o : stage_b) {
      if (!o.push) {
        stage_c.push_back(o);
        continue;
      }
      const Vec lp = nn::masked_log_softmax<Real>(dec.cache_logits(hyps[o.hyp].cfg, o.query).value());
      for (int i = 0; i < lp.size(); ++i) {
        Option next = o;
        next.cache_index = i + 1;
        next.lp += lp(i);
        stage_c.push_back(next);
      }
    }
    keep_best(stage_c, beam, total);

    std::vector<JointHyp> next;
    for (const auto& o : stage_c) {
      JointHyp h = hyps[o.hyp];
      h.act = o.state;
      h.merged = o.state.hidden;
      h.action_lp += o.lp;
      if (!o.push) {
        h.actions.push_back(Action::pop());
        h.cfg = apply(h.cfg, h.actions.back());
        h.prev = Vocabulary::kPop;
        next.push_back(std::move(h));
        continue;
      }
      h.cfg = select_front(h.cfg, static_cast<std::size_t>(o.buffer_pos));
      const ConceptId v = h.cfg.buffer.front();
      h.order.push_back(v);
      h.actions.push_back(Action::push(o.cache_index));
      h.cfg = apply(h.cfg, h.actions.back());
      h.last_push = o.state.hidden;
      h.prev = Vocabulary::kPush;
      if (model.empty_span_label(input.label_ids[v])) {
        next.push_back(std::move(h));
        continue;
      }
      for (auto& child : expand_phrase(dec, model, h, v, beam, eps)) next.push_back(std::move(child));
    }
    keep_best(next, beam, [&](const JointHyp& h) { return h.logp() + eps * static_cast<double>(h.words.size()); });
    hyps.clear();
    for (auto& h : next) (is_terminal(h.cfg) ? complete : hyps).push_back(std::move(h));
  }
  if (complete.empty()) throw NoCompleteHypothesis("joint beam exhausted");

  std::vector<GenerationResult> results;
  for (const auto& h : complete) {
    GenerationResult r;
    for (int w : h.words) r.words.push_back(model.words.token(w));
    r.actions = h.actions;
    r.buffer_order = h.order;
    r.action_logprob = h.action_lp;
    r.english_logprob = h.english_lp;
    r.score = h.logp() + options.length_reward * static_cast<double>(h.words.size());
    results.push_back(std::move(r));
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const GenerationResult& a, const GenerationResult& b) { return a.score > b.score; });
  if (results.size() > beam) results.resize(beam);
  if (final_beam) *final_beam = results;
  return results.front();
}

GenerationResult greedy_joint(const Model& model, const AmrGraph& graph) {
  return generate_joint(model, graph, DecodeOptions{1, 0.0});
}

Var loss(Tape& tape, const Model& model, const Instance& instance, Accuracy* accuracy) {
  return model.config.decoder == DecoderKind::Joint ? loss_joint(tape, model, instance, accuracy)
                                                    : loss_conditioned(tape, model, instance, accuracy);
}

GenerationResult generate(const Model& model, const AmrGraph& graph, const DecodeOptions& options,
                          std::vector<GenerationResult>* final_beam) {
  return model.config.decoder == DecoderKind::Joint ? generate_joint(model, graph, options, final_beam)
                                                    : generate_conditioned(model, graph, options, final_beam);
}

GenerationResult greedy(const Model& model, const AmrGraph& graph) {
  return model.config.decoder == DecoderKind::Joint ? greedy_joint(model, graph) : greedy_conditioned(model, graph);
}

}  // namespace amrgen
