#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "amrgen/decoding.hpp"
#include "amrgen/model.hpp"

namespace amrgen {

struct TrainOptions {
  int epochs = 10;
  std::uint64_t seed = 1;  // example shuffling
  nn::AdamOptions adam;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double loss = 0.0;
  Accuracy accuracy;  // teacher-forced, measured during the epoch
};

// Called after each epoch; return false to stop early.
using EpochCallback = std::function<bool(const Model&, const EpochStats&)>;

// One Adam update per example, in a seeded shuffled order each epoch.
std::vector<EpochStats> train(Model& model, const std::vector<Instance>& data, const TrainOptions& options,
                              const EpochCallback& on_epoch = {});

// Loss and teacher-forced accuracies without updating parameters.
EpochStats evaluate_teacher_forced(const Model& model, const std::vector<Instance>& data);

// Builds instances at the model's cache size. Examples the oracle rejects are
// skipped and counted in *skipped when given, otherwise the error propagates.
std::vector<Instance> make_instances(const Model& model, const std::vector<AlignedExample>& corpus,
                                     int* skipped = nullptr);

}  // namespace amrgen
