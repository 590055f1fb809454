#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "grl/errors.h"
#include "grl/eval.h"
#include "grl/training.h"
#include "support.h"

using namespace grl;
using grl::test::random_array;

namespace {

// Brute-force AUC over every positive/negative pair.
double auc_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  double hits = 0.0, total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      total += 1.0;
      hits += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return hits / total;
}

// Direct AP: labels already in ranked order.
double ap_oracle(const std::vector<int>& ranked) {
  double hits = 0.0, sum = 0.0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (ranked[k]) {
      hits += 1.0;
      sum += hits / static_cast<double>(k + 1);
    }
  }
  return sum / hits;
}

SnapshotSequence history_of(std::size_t n, const std::vector<std::vector<Snapshot::WeightedEdge>>& steps) {
  SnapshotSequence seq;
  seq.node_count = n;
  seq.id_map = IdMap::identity(n);
  for (std::size_t t = 0; t < steps.size(); ++t) {
    seq.snapshots.push_back(Snapshot::from_edges(t + 1, n, steps[t]));
  }
  return seq;
}

std::size_t count_label(const std::vector<LabeledPair>& v, int label) {
  return static_cast<std::size_t>(
      std::count_if(v.begin(), v.end(), [&](const LabeledPair& p) { return p.label == label; }));
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("split arithmetic floors train and val and gives the rest to test") {
  // Four target edges, all between nodes seen in the history.
  const auto history = history_of(8, {{{0, 1, 1}, {2, 3, 1}, {4, 5, 1}, {6, 7, 1}}});
  const auto target =
      Snapshot::from_edges(2, 8, {{0, 2, 1}, {1, 3, 1}, {4, 6, 1}, {5, 7, 1}});
  const auto set = build_eval_set(history, target, {0.25, 0.25, 0.5}, 3);
  CHECK(set.num_positive == 4);
  CHECK(set.num_negative == 4);
  CHECK(count_label(set.train, 1) == 1);
  CHECK(count_label(set.val, 1) == 1);
  CHECK(count_label(set.test, 1) == 2);
  CHECK(count_label(set.train, 0) == 1);
  CHECK(count_label(set.test, 0) == 2);
}

TEST_CASE("eval sets are disjoint, balanced and avoid target edges") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto seq = random_sequence(25, 4, 0.15, s);
    const auto history = seq.prefix(3);
    const auto& target = seq.snapshots[3];
    const auto set = build_eval_set(history, target, {}, s);
    CHECK(set.num_positive == set.num_negative);
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const auto* split : {&set.train, &set.val, &set.test}) {
      for (const auto& p : *split) {
        const auto key = std::minmax(p.u, p.v);
        CHECK(p.u != p.v);
        CHECK(seen.insert(key).second);
        CHECK(target.has_edge(p.u, p.v) == (p.label == 1));
      }
    }
    CHECK(seen.size() == 2 * set.num_positive);
    CHECK(set.fingerprint() == build_eval_set(history, target, {}, s).fingerprint());
    CHECK(set.fingerprint().size() == 16);
  }
}

TEST_CASE("positives exclude nodes never seen in the history") {
  const auto history = history_of(5, {{{0, 1, 1}, {1, 2, 1}}});
  const auto target = Snapshot::from_edges(2, 5, {{0, 2, 1}, {3, 4, 1}, {2, 4, 1}});
  const auto set = build_eval_set(history, target, {}, 1);
  CHECK(set.num_positive == 1);
  for (const auto& p : set.test) {
    CHECK(p.u < 3);
    CHECK(p.v < 3);
  }
}

TEST_CASE("dense targets are rejected") {
  std::vector<Snapshot::WeightedEdge> all;
  for (NodeId u = 0; u < 6; ++u) {
    for (NodeId v = u + 1; v < 6; ++v) all.push_back({u, v, 1});
  }
  const auto history = history_of(6, {all});
  CHECK_THROWS_AS(build_eval_set(history, Snapshot::from_edges(2, 6, all), {}, 0), InputError);
  CHECK_THROWS(SplitFractions{0.5, 0.5, 0.5}.validate());
}

TEST_CASE("auc examples") {
  CHECK(auc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}) == 1.0);
  CHECK(auc(std::vector<double>{0.3, 0.3, 0.3}, std::vector<int>{1, 0, 1}) == 0.5);
  const std::vector<double> s = {0.8, 0.6, 0.4};
  const std::vector<int> y = {1, 0, 1};
  CHECK(auc_oracle(s, y) == 0.5);
  CHECK(auc(s, y) == 0.5);
  CHECK_THROWS(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}));
}

TEST_CASE("auc matches the brute-force oracle and is rank invariant") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 49);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse scores force ties.
      s[i] = static_cast<double>(uniform_index(rng, 8)) / 8.0;
      y[i] = uniform01(rng) < 0.5;
    }
    y[0] = 1;
    y[1] = 0;
    const double a = auc(s, y);
    CHECK(std::abs(a - auc_oracle(s, y)) <= 1e-12);
    std::vector<double> e(n), f(n);
    for (std::size_t i = 0; i < n; ++i) {
      e[i] = std::exp(s[i]);
      f[i] = 3.0 * s[i] + 1.0;
    }
    CHECK(auc(e, y) == a);
    CHECK(auc(f, y) == a);
  }
}

TEST_CASE("average precision examples") {
  std::vector<Candidate> g = {{1, 0.9, 1}, {2, 0.5, 0}, {3, 0.1, 1}};
  CHECK(std::abs(average_precision(g) - 0.83333) < 1e-5);
  CHECK(std::abs(average_precision(g) - ap_oracle({1, 0, 1})) <= 1e-12);

  std::map<NodeId, std::vector<Candidate>> perfect = {
      {0, {{1, 0.9, 1}, {2, 0.1, 0}}}, {5, {{1, 0.7, 1}, {3, 0.6, 1}, {4, 0.2, 0}}}};
  CHECK(map_metric(perfect) == 1.0);

  std::map<NodeId, std::vector<Candidate>> mixed = {
      {0, {{1, 0.9, 1}}}, {1, {{2, 0.9, 0}, {3, 0.1, 1}}}, {2, {{4, 0.5, 0}}}};
  CHECK(map_metric(mixed) == 0.75);

  std::map<NodeId, std::vector<Candidate>> none = {{0, {{1, 0.9, 0}}}};
  CHECK_THROWS(map_metric(none));
}

TEST_CASE("ties in a ranking are broken by ascending node id") {
  std::vector<Candidate> g = {{7, 0.5, 1}, {3, 0.5, 0}};
  CHECK(average_precision(g) == 0.5);
  std::swap(g[0], g[1]);
  CHECK(average_precision(g) == 0.5);
}

TEST_CASE("map matches direct AP recomputation") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<NodeId, std::vector<Candidate>> groups;
    double sum = 0.0;
    int included = 0;
    const std::size_t num_groups = 1 + uniform_index(rng, 6);
    for (NodeId v = 0; v < num_groups; ++v) {
      std::vector<Candidate> g;
      const std::size_t size = 1 + uniform_index(rng, 8);
      for (NodeId u = 0; u < size; ++u) {
        g.push_back({u, static_cast<double>(uniform_index(rng, 5)), uniform01(rng) < 0.4});
      }
      std::vector<Candidate> ranked = g;
      std::stable_sort(ranked.begin(), ranked.end(), [](const Candidate& a, const Candidate& b) {
        return a.score != b.score ? a.score > b.score : a.node < b.node;
      });
      std::vector<int> labels;
      for (const auto& c : ranked) labels.push_back(c.label);
      if (std::count(labels.begin(), labels.end(), 1) > 0) {
        const double ap = ap_oracle(labels);
        CHECK(std::abs(average_precision(g) - ap) <= 1e-12);
        sum += ap;
        ++included;
      }
      groups[v] = g;
    }
    if (included == 0) {
      CHECK_THROWS(map_metric(groups));
    } else {
      CHECK(std::abs(map_metric(groups) - sum / included) <= 1e-12);
    }
  }
}

TEST_CASE("group_by_node files each pair under both endpoints") {
  const std::vector<LabeledPair> pairs = {{0, 1, 1}, {1, 2, 0}};
  const std::vector<double> scores = {0.7, 0.2};
  const auto g = group_by_node(pairs, scores);
  REQUIRE(g.size() == 3);
  CHECK(g.at(1).size() == 2);
  CHECK(g.at(0)[0].node == 1);
  CHECK(g.at(2)[0].node == 1);
}

TEST_CASE("predictor separates a separable toy set") {
  // Node i has embedding (+1, i/10) for i < 5 and (-1, i/10) otherwise;
  // links join nodes on the positive side.
  Array z({10, 2});
  for (std::size_t i = 0; i < 10; ++i) {
    z.at(i, 0) = i < 5 ? 1.0 : -1.0;
    z.at(i, 1) = static_cast<double>(i) / 10.0;
  }
  std::vector<LabeledPair> train;
  for (NodeId u = 0; u < 10; ++u) {
    for (NodeId v = u + 1; v < 10; ++v) train.push_back({u, v, (u < 5 && v < 5) ? 1 : 0});
  }
  const Predictor p = fit_predictor(train, z, {});
  std::size_t correct = 0;
  for (const auto& pr : train) {
    correct += (p.score(z.row(pr.u), z.row(pr.v)) > 0.5) == (pr.label == 1);
  }
  CHECK(correct == train.size());
}

TEST_CASE("predictor on zero embeddings learns only the base rate") {
  const Array z({6, 3});
  const std::vector<LabeledPair> train = {{0, 1, 1}, {2, 3, 0}, {4, 5, 0}, {1, 2, 1}};
  const Predictor p = fit_predictor(train, z, {2000, 0.05});
  CHECK(std::abs(p.b) < 1e-3);
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& pr : train) {
    scores.push_back(p.score(z.row(pr.u), z.row(pr.v)));
    labels.push_back(pr.label);
  }
  CHECK(auc(scores, labels) == 0.5);
}

TEST_CASE("duplicating the training set leaves the fitted predictor unchanged") {
  const Array z = random_array(3, {8, 4});
  std::vector<LabeledPair> train = {{0, 1, 1}, {2, 3, 0}, {4, 5, 1}, {6, 7, 0}, {1, 6, 0}};
  const Predictor a = fit_predictor(train, z, {});
  std::vector<LabeledPair> twice = train;
  twice.insert(twice.end(), train.begin(), train.end());
  const Predictor b = fit_predictor(twice, z, {});
  REQUIRE(a.w.size() == b.w.size());
  for (std::size_t i = 0; i < a.w.size(); ++i) CHECK(std::abs(a.w[i] - b.w[i]) <= 1e-9);
  CHECK(std::abs(a.b - b.b) <= 1e-9);
  CHECK_THROWS_AS(fit_predictor(std::vector<LabeledPair>{{0, 1, 1}}, z, {}), InputError);
}

TEST_CASE("predictor scores are symmetric in the pair order") {
  const Array z = random_array(5, {6, 3});
  const std::vector<LabeledPair> train = {{0, 1, 1}, {2, 3, 0}, {4, 5, 1}, {1, 4, 0}};
  const Predictor p = fit_predictor(train, z, {});
  for (NodeId u = 0; u < 6; ++u) {
    for (NodeId v = 0; v < 6; ++v) CHECK(p.score(z.row(u), z.row(v)) == p.score(z.row(v), z.row(u)));
  }
}

TEST_CASE("baseline examples") {
  const auto history = history_of(4, {{{0, 3, 5}}, {{0, 1, 2}, {1, 2, 1}}});
  const std::vector<LabeledPair> pairs = {{0, 1, 1}, {0, 2, 0}, {2, 3, 0}};
  CHECK(baseline_scores(history, pairs, "last-adjacency") == std::vector<double>{2, 0, 0});
  // (0,2) share neighbour 1; (2,3) share none in the aggregate.
  CHECK(baseline_scores(history, pairs, "aggregated-common-neighbors") ==
        std::vector<double>{0, 1, 0});
  CHECK_THROWS_AS(baseline_scores(history, pairs, "pagerank"), InputError);
}

TEST_CASE("metric reports serialize the pinned columns") {
  const auto seq = random_sequence(20, 3, 0.2, 1);
  const auto set = build_eval_set(seq.prefix(2), seq.snapshots[2], {}, 5);
  std::vector<double> scores(set.test.size(), 0.5);
  const auto r = make_report("toy", "model", set, 2, scores);
  CHECK(MetricReport::csv_header() == "dataset,method,seed,T_used,auc,map,n_pos,n_neg");
  CHECK(r.auc == 0.5);
  CHECK(r.fingerprint == set.fingerprint());
  CHECK(r.csv_row().rfind("toy,model,5,2,0.500000,", 0) == 0);
  CHECK(r.to_json().at("T_used") == 2);
}

TEST_CASE("reports do not depend on the stored pair orientation") {
  const auto seq = random_sequence(20, 3, 0.25, 2);
  auto set = build_eval_set(seq.prefix(2), seq.snapshots[2], {}, 7);
  const Array z = random_array(6, {20, 4});
  const Predictor p = fit_predictor(set.train, z, {});
  auto score_all = [&](const EvalPairSet& s) {
    std::vector<double> out;
    for (const auto& pr : s.test) out.push_back(p.score(z.row(pr.u), z.row(pr.v)));
    return out;
  };
  const auto before = make_report("d", "m", set, 2, score_all(set));
  auto flipped = set;
  for (auto& pr : flipped.test) std::swap(pr.u, pr.v);
  const auto after = make_report("d", "m", flipped, 2, score_all(flipped));
  CHECK(before.auc == after.auc);
  CHECK(before.map == after.map);
}

}  // TEST_SUITE
