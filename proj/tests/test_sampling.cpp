#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "grl/errors.h"
#include "grl/sampling.h"
#include "grl/training.h"
#include "support.h"

using namespace grl;

namespace {

WalkConfig walk_config(std::size_t length, std::size_t per_node, std::uint64_t seed = 1) {
  WalkConfig c;
  c.walk_length = length;
  c.walks_per_node = per_node;
  c.window = 1;
  c.negatives = 1;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("walk config validation") {
  CHECK_NOTHROW(WalkConfig{}.validate());
  WalkConfig c;
  c.walk_length = 1;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = {};
  c.window = c.walk_length;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = {};
  c.negatives = 0;
  CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("isolated nodes start no walks") {
  const auto snap = Snapshot::from_edges(1, 4, {{0, 1, 1.0}});
  const auto walks = random_walks(snap, walk_config(5, 3));
  CHECK(walks.size() == 6);
  for (const auto& w : walks) CHECK((w[0] == 0 || w[0] == 1));
}

TEST_CASE("two-node walks alternate") {
  const auto snap = Snapshot::from_edges(1, 2, {{0, 1, 2.5}});
  for (const auto& w : random_walks(snap, walk_config(9, 4))) {
    REQUIRE(w.size() == 9);
    for (std::size_t i = 1; i < w.size(); ++i) CHECK(w[i] != w[i - 1]);
  }
}

TEST_CASE("star leaves are visited uniformly from the centre") {
  const auto star = Snapshot::from_edges(1, 4, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}});
  // 500 walks of 41 nodes from the centre give 10^4 centre -> leaf steps.
  const auto walks = random_walks(star, walk_config(41, 500, 7));
  std::vector<double> counts(4, 0.0);
  double steps = 0;
  for (const auto& w : walks) {
    if (w[0] != 0) continue;
    for (std::size_t i = 1; i < w.size(); i += 2) {
      counts[w[i]] += 1;
      steps += 1;
    }
  }
  CHECK(steps == 10000);
  for (NodeId leaf = 1; leaf <= 3; ++leaf) CHECK(std::abs(counts[leaf] / steps - 1.0 / 3) < 0.02);
}

TEST_CASE("walk transitions follow edge weights") {
  const auto snap = Snapshot::from_edges(1, 3, {{0, 1, 3.0}, {0, 2, 1.0}});
  const auto walks = random_walks(snap, walk_config(2, 8000, 3));
  double to1 = 0, total = 0;
  for (const auto& w : walks) {
    if (w[0] != 0) continue;
    total += 1;
    to1 += w[1] == 1;
  }
  CHECK(std::abs(to1 / total - 0.75) < 0.02);
}

TEST_CASE("walks are deterministic and every id is valid") {
  const auto seq = random_sequence(15, 1, 0.2, 4);
  WalkConfig c;
  c.seed = 11;
  const auto a = random_walks(seq.snapshots[0], c);
  CHECK(a == random_walks(seq.snapshots[0], c));
  for (const auto& w : a) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(w[i] < 15);
      if (i > 0) CHECK(seq.snapshots[0].has_edge(w[i - 1], w[i]));
    }
  }
}

TEST_CASE("cooccurrence pair examples") {
  CHECK(cooccurrence_pairs({{0, 1, 2}}, 1) ==
        std::vector<NodePair>{{0, 1}, {1, 0}, {1, 2}, {2, 1}});
  for (const auto& p : cooccurrence_pairs({{0, 1, 0}}, 2)) CHECK(p.first != p.second);
  CHECK(cooccurrence_pairs({{0, 1, 0}}, 2).size() == 4);
  CHECK(cooccurrence_pairs({{0, 1, 2, 3, 4}}, 10).size() == 20);
}

TEST_CASE("cooccurrence count matches a brute-force oracle") {
  for (std::uint64_t s = 0; s < 30; ++s) {
    Rng rng(s);
    Walk w(2 + uniform_index(rng, 12));
    for (auto& v : w) v = static_cast<NodeId>(uniform_index(rng, 4));
    const std::size_t c = 1 + uniform_index(rng, 5);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      for (std::size_t j = 0; j < w.size(); ++j) {
        const std::size_t d = i > j ? i - j : j - i;
        if (d > 0 && d <= c && w[i] != w[j]) ++expected;
      }
    }
    CHECK(cooccurrence_pairs({w}, c).size() == expected);
  }
}

TEST_CASE("negative distribution examples") {
  // Degrees [1, 16]: weights 1 and 16^0.75 = 8.
  std::vector<Snapshot::WeightedEdge> edges = {{0, 2, 1.0}};
  for (NodeId v = 2; v < 18; ++v) edges.push_back({1, v, 1.0});
  const auto p = negative_distribution(Snapshot::from_edges(1, 18, edges));
  CHECK(std::abs(p[0] / (p[0] + p[1]) - 1.0 / 9) < 1e-12);

  const auto ring = Snapshot::from_edges(1, 5, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {3, 0, 1}});
  const auto pr = negative_distribution(ring);
  for (NodeId v = 0; v < 4; ++v) CHECK(std::abs(pr[v] - 0.25) < 1e-15);
  CHECK(pr[4] == 0.0);

  // Degrees [0, 5] on the first two nodes.
  const auto pz = negative_distribution(Snapshot::from_edges(1, 3, {{1, 2, 5.0}}));
  CHECK(pz[0] == 0.0);
  CHECK(pz[1] == 0.5);

  CHECK_THROWS(negative_distribution(Snapshot(1, 3)));
}

TEST_CASE("negative sampler") {
  const std::vector<double> point = {1.0, 0.0};
  for (NodeId v : sample_negatives(point, 500, 3)) CHECK(v == 0);

  const std::vector<double> half = {0.5, 0.5};
  const auto draws = sample_negatives(half, 10000, 5);
  const double zeros = std::count(draws.begin(), draws.end(), 0u);
  CHECK(std::abs(zeros / 10000 - 0.5) < 0.02);
  CHECK(draws == sample_negatives(half, 10000, 5));
  CHECK(draws != sample_negatives(half, 10000, 6));
}

TEST_CASE("negative sampler frequencies match the distribution") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng rng(s);
    std::vector<double> dist(1 + uniform_index(rng, 30));
    for (auto& p : dist) p = uniform_index(rng, 3) == 0 ? 0.0 : uniform01(rng);
    dist[0] += 0.1;
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    for (auto& p : dist) p /= total;
    const auto draws = sample_negatives(dist, 2000, s);
    std::vector<double> freq(dist.size(), 0.0);
    for (NodeId v : draws) {
      REQUIRE(v < dist.size());
      CHECK(dist[v] > 0.0);
      freq[v] += 1.0 / 2000;
    }
    for (std::size_t i = 0; i < dist.size(); ++i) CHECK(std::abs(freq[i] - dist[i]) < 0.05);
  }
}

TEST_CASE("pair batches are reproducible and reference valid ids") {
  const auto seq = random_sequence(12, 2, 0.3, 6);
  WalkConfig c;
  c.walk_length = 8;
  c.walks_per_node = 2;
  c.window = 3;
  c.negatives = 4;
  c.seed = 9;
  const auto b = build_pair_batch(seq.snapshots[1], c);
  CHECK(b == build_pair_batch(seq.snapshots[1], c));
  CHECK(b.step == 2);
  CHECK(b.negatives.size() == b.positives.size() * 4);
  for (const auto& [v, u] : b.positives) {
    CHECK(v < 12);
    CHECK(u < 12);
  }
  const auto dist = negative_distribution(seq.snapshots[1]);
  for (NodeId n : b.negatives) CHECK(dist.at(n) > 0.0);

  std::ostringstream dump;
  write_pair_batch(dump, b);
  std::size_t neg_lines = 0, lines = 0;
  std::istringstream in(dump.str());
  for (std::string line; std::getline(in, line);) {
    ++lines;
    if (line.find("NEG") != std::string::npos) ++neg_lines;
  }
  CHECK(lines == b.positives.size() + b.negatives.size());
  CHECK(neg_lines == b.negatives.size());
}

}  // TEST_SUITE
