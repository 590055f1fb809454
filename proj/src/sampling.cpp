#include "grl/sampling.h"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "grl/errors.h"
#include "grl/random.h"

namespace grl {

void WalkConfig::validate() const {
  if (walk_length < 2) throw InputError("walk_length must be >= 2");
  if (walks_per_node < 1) throw InputError("walks_per_node must be >= 1");
  if (window < 1 || window >= walk_length) {
    throw InputError("window must satisfy 1 <= window < walk_length");
  }
  if (negatives < 1) throw InputError("negatives must be >= 1");
}

nlohmann::json WalkConfig::to_json() const {
  return {{"walk_length", walk_length},
          {"walks_per_node", walks_per_node},
          {"window", window},
          {"negatives", negatives},
          {"seed", seed}};
}

std::vector<Walk> random_walks(const Snapshot& snapshot, const WalkConfig& config) {
  const std::size_t n = snapshot.node_count();
  std::vector<std::vector<double>> cumulative(n);
  for (NodeId v = 0; v < n; ++v) {
    double acc = 0.0;
    for (const auto& nb : snapshot.neighbors(v)) {
      acc += nb.weight;
      cumulative[v].push_back(acc);
    }
  }
  std::vector<Walk> walks;
  for (NodeId start = 0; start < n; ++start) {
    if (cumulative[start].empty()) continue;
    Rng rng = make_rng(config.seed, "walk", start);
    for (std::size_t r = 0; r < config.walks_per_node; ++r) {
      Walk walk{start};
      walk.reserve(config.walk_length);
      NodeId cur = start;
      while (walk.size() < config.walk_length) {
        const auto& cum = cumulative[cur];
        if (cum.empty()) break;
        const double x = uniform01(rng) * cum.back();
        auto it = std::upper_bound(cum.begin(), cum.end(), x);
        if (it == cum.end()) --it;
        cur = snapshot.neighbors(cur)[static_cast<std::size_t>(it - cum.begin())].node;
        walk.push_back(cur);
      }
      walks.push_back(std::move(walk));
    }
  }
  return walks;
}

std::vector<NodePair> cooccurrence_pairs(const std::vector<Walk>& walks,
                                         std::size_t window) {
  std::vector<NodePair> pairs;
  for (const Walk& w : walks) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      const std::size_t lo = i >= window ? i - window : 0;
      const std::size_t hi = std::min(w.size() - 1, i + window);
      for (std::size_t j = lo; j <= hi; ++j) {
        if (j != i && w[j] != w[i]) pairs.emplace_back(w[i], w[j]);
      }
    }
  }
  return pairs;
}

std::vector<double> negative_distribution(const Snapshot& snapshot) {
  const std::vector<double> deg = node_degrees(snapshot);
  std::vector<double> p(deg.size(), 0.0);
  double total = 0.0;
  for (std::size_t v = 0; v < deg.size(); ++v) {
    if (deg[v] > 0) p[v] = std::pow(deg[v], 0.75);
    total += p[v];
  }
  if (total <= 0) {
    throw InputError("snapshot " + std::to_string(snapshot.index()) +
                     " has no edges; no negative distribution");
  }
  for (auto& x : p) x /= total;
  return p;
}

std::vector<NodeId> sample_negatives(std::span<const double> dist,
                                     std::size_t count, std::uint64_t seed) {
  std::vector<double> cum(dist.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    acc += dist[i];
    cum[i] = acc;
  }
  if (!(acc > 0)) throw std::invalid_argument("empty sampling distribution");
  std::size_t last = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] > 0) last = i;
  }
  // Guide table: guide[k] is the first i with cum[i] > threshold[k], so the
  // scan below returns exactly what a binary search for the first cum[i] > u
  // would.
  const std::size_t m = dist.size();
  std::vector<double> threshold(m);
  std::vector<std::size_t> guide(m);
  for (std::size_t k = 0, i = 0; k < m; ++k) {
    threshold[k] = acc * static_cast<double>(k) / static_cast<double>(m);
    while (i < m && cum[i] <= threshold[k]) ++i;
    guide[k] = i;
  }
  Rng rng(seed);
  std::vector<NodeId> out(count);
  for (auto& x : out) {
    const double u = uniform01(rng) * acc;
    auto k = std::min(m - 1, static_cast<std::size_t>(u / acc * static_cast<double>(m)));
    while (k > 0 && threshold[k] > u) --k;
    std::size_t i = guide[k];
    while (i < m && cum[i] <= u) ++i;
    // u can round up to acc; fall back to the last entry with mass.
    x = static_cast<NodeId>(i == m ? last : i);
  }
  return out;
}

PairBatch build_pair_batch(const Snapshot& snapshot, const WalkConfig& config) {
  config.validate();
  PairBatch batch;
  batch.step = snapshot.index();
  batch.negatives_per_positive = config.negatives;
  batch.positives = cooccurrence_pairs(random_walks(snapshot, config), config.window);
  const std::vector<double> dist = negative_distribution(snapshot);
  batch.negatives =
      sample_negatives(dist, batch.positives.size() * config.negatives,
                       derive_seed(config.seed, "negatives", snapshot.index()));
  return batch;
}

void write_pair_batch(std::ostream& out, const PairBatch& batch) {
  const std::size_t q = batch.negatives_per_positive;
  for (std::size_t i = 0; i < batch.positives.size(); ++i) {
    const auto [v, u] = batch.positives[i];
    out << batch.step << ' ' << v << ' ' << u << '\n';
    for (std::size_t j = 0; j < q; ++j) {
      out << batch.step << ' ' << v << ' ' << batch.negatives[i * q + j] << " NEG\n";
    }
  }
}

}  // namespace grl
