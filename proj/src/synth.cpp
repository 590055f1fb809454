#include "grl/synth.h"

#include <random>
#include <set>

#include "grl/errors.h"
#include "grl/random.h"

namespace grl {

void SynthConfig::validate() const {
  if (nodes < 4) throw InputError("synth: nodes must be >= 4");
  if (steps < 2) throw InputError("synth: steps must be >= 2");
  if (period < 2) throw InputError("synth: period must be >= 2");
  if (blocks < 1 || blocks > nodes) throw InputError("synth: blocks must be in [1, nodes]");
  if (!(rho > 0 && rho <= 1)) throw InputError("synth: rho must be in (0, 1]");
  if (!(survival >= 0 && survival <= 1)) throw InputError("synth: survival must be in [0, 1]");
  if (!(birth_rate >= 0)) throw InputError("synth: birth_rate must be >= 0");
}

nlohmann::json SynthConfig::to_json() const {
  return {{"nodes", nodes},   {"steps", steps},   {"seed", seed},
          {"period", period}, {"blocks", blocks}, {"rho", rho},
          {"birth_rate", birth_rate}, {"survival", survival}};
}

std::size_t block_of(NodeId v, const SynthConfig& config) {
  return static_cast<std::size_t>(v) * config.blocks / config.nodes;
}

std::vector<std::size_t> active_blocks(const SynthConfig& config, std::size_t step) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < config.blocks; ++j) {
    if (j % config.period == step % config.period) out.push_back(j);
  }
  return out;
}

namespace {

using EdgeSet = std::set<std::pair<NodeId, NodeId>>;

SynthDataset assemble(const SynthConfig& config, const std::vector<EdgeSet>& steps) {
  SynthDataset out;
  const std::size_t n = config.nodes;
  out.history.node_count = n;
  out.history.id_map = IdMap::identity(n);
  for (std::size_t t = 0; t < steps.size(); ++t) {
    std::vector<Snapshot::WeightedEdge> edges;
    for (const auto& [u, v] : steps[t]) {
      edges.push_back({u, v, 1.0});
      out.events.push_back({u, v, static_cast<double>(t + 1), 1.0});
    }
    Snapshot s = Snapshot::from_edges(t + 1, n, edges);
    if (t + 1 < steps.size()) {
      if (s.empty()) out.history.warnings.push_back("snapshot " + std::to_string(t + 1) + " is empty");
      out.history.snapshots.push_back(std::move(s));
    } else {
      out.target = std::move(s);
    }
  }
  return out;
}

}  // namespace

SynthDataset gen_periodic(const SynthConfig& config) {
  config.validate();
  std::vector<std::vector<NodeId>> members(config.blocks);
  for (NodeId v = 0; v < config.nodes; ++v) members[block_of(v, config)].push_back(v);

  std::vector<EdgeSet> steps;
  for (std::size_t t = 1; t <= config.steps + 1; ++t) {
    Rng rng = make_rng(config.seed, "periodic", t);
    EdgeSet edges;
    for (std::size_t j : active_blocks(config, t)) {
      const auto& m = members[j];
      for (std::size_t a = 0; a < m.size(); ++a) {
        for (std::size_t b = a + 1; b < m.size(); ++b) {
          if (uniform01(rng) < config.rho) edges.insert({m[a], m[b]});
        }
      }
    }
    steps.push_back(std::move(edges));
  }
  return assemble(config, steps);
}

SynthDataset gen_recency(const SynthConfig& config) {
  config.validate();
  std::vector<EdgeSet> steps;
  EdgeSet live;
  for (std::size_t t = 1; t <= config.steps + 1; ++t) {
    Rng rng = make_rng(config.seed, "recency", t);
    EdgeSet next;
    for (const auto& e : live) {
      if (uniform01(rng) < config.survival) next.insert(e);
    }
    std::poisson_distribution<std::size_t> births(config.birth_rate);
    const std::size_t k = config.birth_rate > 0 ? births(rng) : 0;
    for (std::size_t i = 0; i < k; ++i) {
      NodeId u = static_cast<NodeId>(uniform_index(rng, config.nodes));
      NodeId v = static_cast<NodeId>(uniform_index(rng, config.nodes - 1));
      if (v >= u) ++v;
      if (u > v) std::swap(u, v);
      next.insert({u, v});
    }
    live = std::move(next);
    steps.push_back(live);
  }
  return assemble(config, steps);
}

}  // namespace grl
