#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "grl/array.h"
#include "grl/dyngraph.h"
#include "json.hpp"

namespace grl {

struct SplitFractions {
  double train = 0.20;
  double val = 0.10;
  double test = 0.70;

  void validate() const;
};

struct LabeledPair {
  NodeId u = 0;
  NodeId v = 0;
  int label = 0;  // 1 = link in the target snapshot

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

struct EvalPairSet {
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> val;
  std::vector<LabeledPair> test;
  std::uint64_t seed = 0;
  std::size_t num_positive = 0;
  std::size_t num_negative = 0;

  // Stable 64-bit hash (hex) of all splits, used to tag metric reports.
  std::string fingerprint() const;
};

// Positives are the edges of `target` whose endpoints both have an edge in
// some snapshot of `history`; an equal number of negatives is drawn
// uniformly from the non-edges among those nodes. Each class is shuffled
// and split floor(train·n) / floor(val·n) / remainder.
EvalPairSet build_eval_set(const SnapshotSequence& history, const Snapshot& target,
                           SplitFractions split, std::uint64_t seed);

// Probability that a random positive outscores a random negative, ties
// counted as one half. Throws if either class is empty.
double auc(std::span<const double> scores, std::span<const int> labels);

struct Candidate {
  NodeId node = 0;  // the other endpoint; breaks score ties, ascending
  double score = 0.0;
  int label = 0;
};

// Mean over positive ranks k of precision@k for one ranked group.
double average_precision(std::vector<Candidate> group);

// Mean AP over groups containing at least one positive. Throws if none do.
double map_metric(const std::map<NodeId, std::vector<Candidate>>& groups);

// Groups each scored pair under both of its endpoints.
std::map<NodeId, std::vector<Candidate>> group_by_node(
    std::span<const LabeledPair> pairs, std::span<const double> scores);

// AUC and MAP of `scores` over `pairs`.
struct Ranking {
  double auc = 0.0;
  double map = 0.0;
};
Ranking rank_metrics(std::span<const LabeledPair> pairs, std::span<const double> scores);

struct PredictorConfig {
  std::size_t epochs = 200;
  double lr = 0.05;
};

struct Predictor {
  std::vector<double> w;  // [2F]
  double b = 0.0;

  double score(std::span<const double> z_u, std::span<const double> z_v) const;
};

// Logistic regression on [z_u ‖ z_v] with both pair orderings, mean binary
// cross-entropy, full-batch Adam. `z` is [N x F].
Predictor fit_predictor(std::span<const LabeledPair> train, const Array& z,
                        const PredictorConfig& config);

// Heuristic scores: "last-adjacency" (weight in the final snapshot) or
// "aggregated-common-neighbors" (common neighbours in the union of all
// snapshots).
std::vector<double> baseline_scores(const SnapshotSequence& history,
                                    std::span<const LabeledPair> pairs,
                                    const std::string& method);

inline constexpr const char* kBaselineMethods[] = {"last-adjacency",
                                                   "aggregated-common-neighbors"};

struct MetricReport {
  std::string dataset;
  std::string method;
  std::uint64_t seed = 0;
  std::size_t t_used = 0;
  double auc = 0.0;
  double map = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::string fingerprint;

  nlohmann::json to_json() const;
  std::string csv_row() const;
  static std::string csv_header();
};

MetricReport make_report(const std::string& dataset, const std::string& method,
                         const EvalPairSet& set, std::size_t t_used,
                         std::span<const double> test_scores);

}  // namespace grl
