// amrgen: oracle, train, generate, inspect and eval over aligned AMR corpora.

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "amrgen/config.hpp"
#include "amrgen/errors.hpp"
#include "amrgen/evaluation.hpp"
#include "amrgen/joint.hpp"
#include "amrgen/render.hpp"
#include "amrgen/training.hpp"

using namespace amrgen;

namespace {

const std::vector<std::string> kSettingKeys = {"k",      "hidden", "embed-dim", "edge-dim", "enc-steps",
                                               "beam",   "len-reward", "epochs", "lr",      "seed",
                                               "decoder", "corpus", "embeddings", "model",  "out"};

struct Settings {
  std::string config;
  std::map<std::string, std::string> flags;
};

void add_setting_flags(CLI::App* cmd, Settings& s) {
  cmd->add_option("--config", s.config, "key=value file; flags override it");
  for (const auto& key : kSettingKeys) cmd->add_option("--" + key, s.flags[key]);
}

RunConfig resolve(CLI::App* cmd, const Settings& s) {
  RunConfig c = s.config.empty() ? RunConfig{} : load_run_config(resolve_data_path(s.config));
  for (const auto& key : kSettingKeys)
    if (cmd->count("--" + key) > 0) apply_setting(c, key, s.flags.at(key));
  c.corpus = resolve_data_path(c.corpus);
  c.embeddings = resolve_data_path(c.embeddings);
  return c;
}

void require(const std::filesystem::path& p, const char* flag) {
  if (p.empty()) throw std::invalid_argument(std::string("--") + flag + " is required");
}

// Output file when given, standard output otherwise.
class Output {
 public:
  explicit Output(const std::filesystem::path& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot write " + path.string());
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string join_ints(const std::vector<int>& xs) {
  std::string out;
  for (int x : xs) out += (out.empty() ? "" : " ") + std::to_string(x);
  return out;
}

int run_oracle(const RunConfig& c) {
  require(c.corpus, "corpus");
  Output out(c.out);
  for (const auto& ex : load_corpus(c.corpus)) {
    const auto trace = extract_trace(ex, c.k);
    std::string actions;
    for (const auto& a : trace.actions) actions += (actions.empty() ? "" : " ") + to_string(a);
    auto& os = out.stream();
    os << "ACTIONS " << actions << '\n'
       << "PIBETA " << join_ints(std::vector<int>(trace.buffer_order.begin(), trace.buffer_order.end())) << '\n'
       << "PIETA " << join_ints(trace.evict_indices) << '\n'
       << "Y " << to_string(build_interleaved_target(trace)) << '\n'
       << "R " << join_ints(trace.increments) << "\n\n";
  }
  return 0;
}

int run_inspect(const RunConfig& c, int example, const std::string& order, bool labels) {
  require(c.corpus, "corpus");
  const auto corpus = load_corpus(c.corpus);
  if (example < 0 || example >= static_cast<int>(corpus.size()))
    throw std::invalid_argument("--example " + std::to_string(example) + " out of range");
  const auto& ex = corpus[static_cast<std::size_t>(example)];
  OracleTrace trace = extract_trace(ex, c.k);
  if (!order.empty()) {
    std::vector<ConceptId> ids;
    std::stringstream in(order);
    std::string item;
    while (std::getline(in, item, ',')) ids.push_back(std::stoi(item));
    trace.actions = extract_actions(ex.graph, ids, c.k);
    trace.buffer_order = ids;
    trace.evict_indices.clear();
    for (const auto& a : trace.actions)
      if (a.kind == ActionKind::Push) trace.evict_indices.push_back(a.index);
  }
  Output out(c.out);
  out.stream() << format_table(render_run(ex, trace, c.k, labels ? NameStyle::Label : NameStyle::Initial));
  return 0;
}

int run_train(const RunConfig& c) {
  require(c.corpus, "corpus");
  require(c.model, "model");
  const auto corpus = load_corpus(c.corpus);
  if (corpus.empty()) throw EmptyCorpus(c.corpus.string());
  const Vocabulary words = build_vocabulary(corpus);
  ModelConfig mc = c.model_config();
  std::optional<EmbeddingTable> table;
  if (!c.embeddings.empty()) {
    table = load_embeddings(c.embeddings, words);
    mc.embed = table->dimension;
  }
  Model model = Model::create(mc, words, build_edge_vocabulary(corpus), table ? &*table : nullptr);
  int skipped = 0;
  const auto data = make_instances(model, corpus, &skipped);
  if (skipped > 0) std::cerr << "skipped " << skipped << " examples with no covering run at k=" << c.k << '\n';
  if (data.empty()) throw EmptyCorpus("no trainable examples");
  model.learn_empty_span_labels(data);

  TrainOptions opt;
  opt.epochs = c.epochs;
  opt.seed = c.seed;
  opt.adam.lr = c.lr;
  Output out(c.out);
  auto& os = out.stream();
  os << "epoch\tloss";
  for (Sequence s : kAllSequences) os << '\t' << to_string(s);
  os << '\n';
  train(model, data, opt, [&](const Model&, const EpochStats& st) {
    os << st.epoch << '\t' << std::setprecision(6) << st.loss;
    for (Sequence s : kAllSequences) os << '\t' << std::setprecision(4) << st.accuracy.rate(s);
    os << std::endl;
    return true;
  });
  model.save(c.model);
  return 0;
}

std::vector<AmrGraph> read_graphs(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (line[first] == '(') return parse_penman_blocks(text);
    break;
  }
  std::vector<AmrGraph> graphs;
  for (auto& ex : parse_corpus(text)) graphs.push_back(std::move(ex.graph));
  return graphs;
}

int run_generate(const RunConfig& c) {
  require(c.model, "model");
  require(c.corpus, "corpus");
  if (c.beam < 1) throw std::invalid_argument("--beam must be at least 1");
  const Model model = Model::load(c.model);
  Output out(c.out);
  for (const auto& g : read_graphs(c.corpus))
    out.stream() << join_words(generate(model, g, DecodeOptions{c.beam, c.len_reward}).words) << '\n';
  return 0;
}

std::vector<Sentence> read_sentences(const std::filesystem::path& path) {
  std::vector<Sentence> out;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) out.push_back(tokenize(line));
  return out;
}

int run_eval(const RunConfig& c, const std::string& candidates, const std::string& references) {
  if (candidates.empty()) throw std::invalid_argument("--candidates is required");
  if (references.empty() && c.corpus.empty()) throw std::invalid_argument("give --references or --corpus");
  std::vector<AlignedExample> corpus;
  if (!c.corpus.empty()) corpus = load_corpus(c.corpus);
  const auto cands = read_sentences(resolve_data_path(candidates));
  std::vector<Sentence> refs;
  if (references.empty()) {
    for (const auto& ex : corpus) refs.push_back(ex.tokens);
  } else {
    refs = read_sentences(resolve_data_path(references));
  }
  const auto stats = bleu_stats(cands, refs);
  std::cout << "sentences " << cands.size() << '\n' << std::setprecision(6) << "bleu " << stats.score << '\n'
            << "brevity_penalty " << stats.brevity_penalty << '\n';
  for (int n = 0; n < 4; ++n)
    std::cout << "p" << n + 1 << ' ' << stats.matches[n].clipped << '/' << stats.matches[n].total << '\n';
  if (!corpus.empty()) {
    if (corpus.size() != cands.size())
      throw DimensionMismatch(std::to_string(corpus.size()) + " graphs for " + std::to_string(cands.size()) +
                              " candidates");
    std::vector<SizedResult> results;
    for (std::size_t i = 0; i < cands.size(); ++i)
      results.push_back({static_cast<int>(corpus[i].graph.size()), cands[i], refs[i]});
    const auto bins = bin_by_size(results);
    for (const auto& b : bins)
      std::cout << "bin " << b.lower << '-' << b.lower + 9 << " count " << b.count << " bleu " << b.bleu << '\n';
    if (!c.out.empty()) {
      Output csv(c.out);
      write_bins_csv(csv.stream(), bins);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text generation from AMR graphs with a cache transition system"};
  app.require_subcommand(1);

  Settings oracle_s, inspect_s, train_s, generate_s, eval_s;
  auto* oracle = app.add_subcommand("oracle", "Print oracle traces for an aligned corpus");
  add_setting_flags(oracle, oracle_s);

  auto* inspect = app.add_subcommand("inspect", "Render one oracle run as a table");
  add_setting_flags(inspect, inspect_s);
  int example = 0;
  std::string order;
  bool labels = false;
  inspect->add_option("--example", example, "0-based example index");
  inspect->add_option("--order", order, "comma-separated concept indices to push, overriding the oracle order");
  inspect->add_flag("--labels", labels, "full labels instead of initials");

  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_setting_flags(train_cmd, train_s);

  auto* generate_cmd = app.add_subcommand("generate", "Generate one sentence per input graph");
  add_setting_flags(generate_cmd, generate_s);

  auto* eval = app.add_subcommand("eval", "Score candidate sentences with BLEU");
  add_setting_flags(eval, eval_s);
  std::string candidates, references;
  eval->add_option("--candidates", candidates);
  eval->add_option("--references", references);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*oracle) return run_oracle(resolve(oracle, oracle_s));
    if (*inspect) return run_inspect(resolve(inspect, inspect_s), example, order, labels);
    if (*train_cmd) return run_train(resolve(train_cmd, train_s));
    if (*generate_cmd) return run_generate(resolve(generate_cmd, generate_s));
    if (*eval) return run_eval(resolve(eval, eval_s), candidates, references);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const SearchFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
