#include "amrgen/training.hpp"

#include <numeric>
#include <random>

#include "amrgen/errors.hpp"
#include "amrgen/joint.hpp"

namespace amrgen {

std::vector<EpochStats> train(Model& model, const std::vector<Instance>& data, const TrainOptions& options,
                              const EpochCallback& on_epoch) {
  if (data.empty()) throw EmptyCorpus("no training instances");
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<EpochStats> history;
  model.params.zero_grad();
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochStats stats;
    stats.epoch = epoch;
    for (std::size_t i : order) {
      Tape tape;
      const Var l = loss(tape, model, data[i], &stats.accuracy);
      stats.loss += l.scalar();
      tape.backward(l);
      tape.accumulate(model.params);
      nn::adam_step(model.params, options.adam);
    }
    history.push_back(stats);
    if (on_epoch && !on_epoch(model, stats)) break;
  }
  return history;
}

EpochStats evaluate_teacher_forced(const Model& model, const std::vector<Instance>& data) {
  EpochStats stats;
  for (const auto& inst : data) {
    Tape tape;
    stats.loss += loss(tape, model, inst, &stats.accuracy).scalar();
  }
  return stats;
}

std::vector<Instance> make_instances(const Model& model, const std::vector<AlignedExample>& corpus, int* skipped) {
  std::vector<Instance> out;
  if (skipped) *skipped = 0;
  for (const auto& ex : corpus) {
    try {
      out.push_back(model.instance(ex));
    } catch (const SearchFailure&) {
      if (!skipped) throw;
      ++*skipped;
    }
  }
  return out;
}

}  // namespace amrgen
