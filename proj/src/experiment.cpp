#include "grl/experiment.h"

#include "grl/random.h"

namespace grl {

EvalPairSet make_eval_set(const SnapshotSequence& history, const Snapshot& target,
                          const SplitFractions& split, std::uint64_t seed) {
  EvalPairSet set = build_eval_set(history, target, split, derive_seed(seed, "eval-set"));
  set.seed = seed;  // reports carry the root seed
  return set;
}

MetricReport evaluate_model(const SnapshotSequence& history, ParameterSet& params,
                            const ModelConfig& model, const EvalPairSet& set,
                            const PredictorConfig& predictor, const std::string& dataset,
                            const std::string& method) {
  const Array z = embeddings_at_step(embed(history, params, model), history.num_steps() - 1);
  const Predictor pred = fit_predictor(set.train, z, predictor);
  std::vector<double> scores;
  scores.reserve(set.test.size());
  for (const auto& p : set.test) scores.push_back(pred.score(z.row(p.u), z.row(p.v)));
  return make_report(dataset, method, set, history.num_steps(), scores);
}

std::vector<MetricReport> evaluate_baselines(const SnapshotSequence& history,
                                             const EvalPairSet& set,
                                             const std::string& dataset) {
  std::vector<MetricReport> out;
  for (const char* method : kBaselineMethods) {
    const auto scores = baseline_scores(history, set.test, method);
    out.push_back(make_report(dataset, method, set, history.num_steps(), scores));
  }
  return out;
}

ExperimentResult run_experiment(const SnapshotSequence& history, const Snapshot& target,
                                const ExperimentConfig& config, const std::string& dataset,
                                const std::string& method) {
  ExperimentResult r;
  r.set = make_eval_set(history, target, config.split, config.seed);
  r.trained = train(history, config.model, config.train, config.walk);
  r.model = evaluate_model(history, r.trained.params, config.model, r.set, config.predictor,
                           dataset, method);
  r.baselines = evaluate_baselines(history, r.set, dataset);
  return r;
}

}  // namespace grl
