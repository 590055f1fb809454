#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grl/dyngraph.h"
#include "grl/eval.h"
#include "grl/model.h"
#include "grl/sampling.h"
#include "grl/training.h"

namespace grl {

// Everything needed to train on a history and score its next snapshot.
struct ExperimentConfig {
  ModelConfig model;
  TrainConfig train;
  WalkConfig walk;
  SplitFractions split;
  PredictorConfig predictor;
  std::uint64_t seed = 0;  // root for the eval split; training seeds live in train/walk
};

// Eval split of `target` given `history`, seeded from `seed`.
EvalPairSet make_eval_set(const SnapshotSequence& history, const Snapshot& target,
                          const SplitFractions& split, std::uint64_t seed);

// Fits the predictor on Z at the final history step and reports test metrics.
MetricReport evaluate_model(const SnapshotSequence& history, ParameterSet& params,
                            const ModelConfig& model, const EvalPairSet& set,
                            const PredictorConfig& predictor, const std::string& dataset,
                            const std::string& method);

// One report per heuristic baseline, in kBaselineMethods order.
std::vector<MetricReport> evaluate_baselines(const SnapshotSequence& history,
                                             const EvalPairSet& set,
                                             const std::string& dataset);

struct ExperimentResult {
  TrainResult trained;
  EvalPairSet set;
  MetricReport model;
  std::vector<MetricReport> baselines;
};

// Train on `history`, then evaluate the model and both baselines on `target`.
ExperimentResult run_experiment(const SnapshotSequence& history, const Snapshot& target,
                                const ExperimentConfig& config, const std::string& dataset,
                                const std::string& method = "model");

}  // namespace grl
