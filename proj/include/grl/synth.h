#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "grl/dyngraph.h"
#include "json.hpp"

namespace grl {

struct SynthConfig {
  std::size_t nodes = 40;  // N
  std::size_t steps = 6;   // T, history length; the target is step T+1
  std::uint64_t seed = 0;
  // periodic
  std::size_t period = 2;  // p
  std::size_t blocks = 4;  // b
  double rho = 0.5;        // intra-block edge probability
  // recency
  double birth_rate = 20.0;  // λ, mean new edges per step (N·rho at the defaults)
  double survival = 0.9;     // s

  // N >= 4, T >= 2, p >= 2, 1 <= b <= N, 0 < rho <= 1, 0 <= s <= 1, λ >= 0.
  void validate() const;
  nlohmann::json to_json() const;
};

struct SynthDataset {
  SnapshotSequence history;  // steps 1..T
  Snapshot target;           // step T+1
  // All T+1 steps as events with time = step index, for the text format.
  std::vector<EdgeEvent> events;
};

// Block of node v: contiguous blocks of near-equal size.
std::size_t block_of(NodeId v, const SynthConfig& config);
// Blocks j with j ≡ t (mod p), for 1-based step t.
std::vector<std::size_t> active_blocks(const SynthConfig& config, std::size_t step);

// Each active block's internal pairs appear independently with probability
// rho, with a fresh coin per step and pair.
SynthDataset gen_periodic(const SynthConfig& config);

// Each step every existing edge survives with probability s, then
// Poisson(λ) uniformly random new pairs are born.
SynthDataset gen_recency(const SynthConfig& config);

}  // namespace grl
