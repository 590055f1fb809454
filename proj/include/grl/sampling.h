#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "grl/dyngraph.h"
#include "json.hpp"

namespace grl {

struct WalkConfig {
  std::size_t walk_length = 40;     // nodes per walk, start included
  std::size_t walks_per_node = 10;
  std::size_t window = 10;          // co-occurrence context size
  std::size_t negatives = 10;       // negatives drawn per positive pair
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

using Walk = std::vector<NodeId>;
using NodePair = std::pair<NodeId, NodeId>;

// Weighted random walks: `walks_per_node` walks from every node with
// positive degree, in ascending start-node order. Each start node draws from
// its own stream derived from (seed, node), so output does not depend on
// evaluation order.
std::vector<Walk> random_walks(const Snapshot& snapshot, const WalkConfig& config);

// Ordered pairs (walk[i], walk[j]) with 0 < |i - j| <= window, excluding
// pairs of identical nodes. Duplicates are kept.
std::vector<NodePair> cooccurrence_pairs(const std::vector<Walk>& walks,
                                         std::size_t window);

// P(v) ∝ degree(v)^0.75; isolated nodes get exactly 0.
std::vector<double> negative_distribution(const Snapshot& snapshot);

// I.i.d. inverse-CDF draws from `dist`.
std::vector<NodeId> sample_negatives(std::span<const double> dist,
                                     std::size_t count, std::uint64_t seed);

// Training signal of one snapshot. negatives[i * negatives_per_positive + j]
// is the j-th negative paired with positives[i].first.
struct PairBatch {
  std::size_t step = 1;
  std::vector<NodePair> positives;
  std::vector<NodeId> negatives;
  std::size_t negatives_per_positive = 0;

  friend bool operator==(const PairBatch&, const PairBatch&) = default;
};

PairBatch build_pair_batch(const Snapshot& snapshot, const WalkConfig& config);

// Text dump: `t v u` per positive and `t v u' NEG` per negative.
void write_pair_batch(std::ostream& out, const PairBatch& batch);

}  // namespace grl
