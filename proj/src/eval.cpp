#include "grl/eval.h"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "grl/adam.h"
#include "grl/errors.h"
#include "grl/model.h"
#include "grl/ops.h"
#include "grl/random.h"

namespace grl {

void SplitFractions::validate() const {
  if (train <= 0 || val < 0 || test <= 0 ||
      std::abs(train + val + test - 1.0) > 1e-9) {
    throw InputError("split fractions must be positive and sum to 1");
  }
}

std::string EvalPairSet::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto* split : {&train, &val, &test}) {
    mix(split->size());
    for (const auto& p : *split) {
      mix(p.u);
      mix(p.v);
      mix(static_cast<std::uint64_t>(p.label));
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

EvalPairSet build_eval_set(const SnapshotSequence& history, const Snapshot& target,
                           SplitFractions split, std::uint64_t seed) {
  split.validate();
  const std::size_t n = history.node_count;
  if (target.node_count() != n) {
    throw InputError("target snapshot has " + std::to_string(target.node_count()) +
                     " nodes, history has " + std::to_string(n));
  }
  std::vector<char> seen(n, 0);
  for (const auto& s : history.snapshots) {
    for (NodeId v = 0; v < n; ++v) {
      if (!s.neighbors(v).empty()) seen[v] = 1;
    }
  }
  std::vector<NodeId> seen_nodes;
  for (NodeId v = 0; v < n; ++v) {
    if (seen[v]) seen_nodes.push_back(v);
  }

  std::vector<LabeledPair> pos;
  std::set<std::pair<NodeId, NodeId>> taken;
  for (const auto& e : target.edges()) {
    const NodeId a = std::min(e.u, e.v);
    const NodeId b = std::max(e.u, e.v);
    if (!seen[a] || !seen[b] || !taken.insert({a, b}).second) continue;
    pos.push_back({a, b, 1});
  }
  if (pos.empty()) throw InputError("target snapshot has no edges between seen nodes");

  const double m = static_cast<double>(seen_nodes.size());
  const double total_pairs = m * (m - 1) / 2;
  if (static_cast<double>(pos.size()) > 0.95 * total_pairs ||
      total_pairs - static_cast<double>(pos.size()) < static_cast<double>(pos.size())) {
    throw InputError("target snapshot is too dense to sample balanced negatives");
  }
  Rng rng = make_rng(seed, "eval-negatives");
  std::vector<LabeledPair> neg;
  while (neg.size() < pos.size()) {
    NodeId a = seen_nodes[uniform_index(rng, seen_nodes.size())];
    NodeId b = seen_nodes[uniform_index(rng, seen_nodes.size())];
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (target.has_edge(a, b) || target.has_edge(b, a)) continue;
    if (!taken.insert({a, b}).second) continue;
    neg.push_back({a, b, 0});
  }

  EvalPairSet out;
  out.seed = seed;
  out.num_positive = pos.size();
  out.num_negative = neg.size();
  Rng shuffle_rng = make_rng(seed, "eval-split");
  for (auto* cls : {&pos, &neg}) {
    std::shuffle(cls->begin(), cls->end(), shuffle_rng);
    const auto count = static_cast<double>(cls->size());
    const auto n_train = static_cast<std::size_t>(std::floor(split.train * count));
    const auto n_val = static_cast<std::size_t>(std::floor(split.val * count));
    auto it = cls->begin();
    out.train.insert(out.train.end(), it, it + static_cast<std::ptrdiff_t>(n_train));
    it += static_cast<std::ptrdiff_t>(n_train);
    out.val.insert(out.val.end(), it, it + static_cast<std::ptrdiff_t>(n_val));
    it += static_cast<std::ptrdiff_t>(n_val);
    out.test.insert(out.test.end(), it, cls->end());
  }
  return out;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("auc: scores and labels differ in length");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Walk tie groups in ascending score; every positive beats all negatives
  // seen in earlier groups and ties with negatives in its own group.
  double wins = 0.0;
  double neg_below = 0.0;
  double n_pos = 0.0;
  double n_neg = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double pos_here = 0.0;
    double neg_here = 0.0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? pos_here : neg_here) += 1.0;
      ++j;
    }
    wins += pos_here * neg_below + 0.5 * pos_here * neg_here;
    neg_below += neg_here;
    n_pos += pos_here;
    n_neg += neg_here;
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("auc needs at least one positive and one negative");
  }
  return wins / (n_pos * n_neg);
}

double average_precision(std::vector<Candidate> group) {
  std::sort(group.begin(), group.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.node < b.node;
  });
  double hits = 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < group.size(); ++k) {
    if (group[k].label) {
      hits += 1.0;
      sum += hits / static_cast<double>(k + 1);
    }
  }
  if (hits == 0) throw std::invalid_argument("average precision of a group without positives");
  return sum / hits;
}

double map_metric(const std::map<NodeId, std::vector<Candidate>>& groups) {
  double total = 0.0;
  std::size_t used = 0;
  for (const auto& [node, group] : groups) {
    const bool has_pos = std::any_of(group.begin(), group.end(),
                                     [](const Candidate& c) { return c.label != 0; });
    if (!has_pos) continue;
    total += average_precision(group);
    ++used;
  }
  if (used == 0) throw std::invalid_argument("map_metric: no group has a positive");
  return total / static_cast<double>(used);
}

std::map<NodeId, std::vector<Candidate>> group_by_node(
    std::span<const LabeledPair> pairs, std::span<const double> scores) {
  std::map<NodeId, std::vector<Candidate>> groups;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    groups[p.u].push_back({p.v, scores[i], p.label});
    groups[p.v].push_back({p.u, scores[i], p.label});
  }
  return groups;
}

Ranking rank_metrics(std::span<const LabeledPair> pairs, std::span<const double> scores) {
  std::vector<int> labels;
  labels.reserve(pairs.size());
  for (const auto& p : pairs) labels.push_back(p.label);
  return {auc(scores, labels), map_metric(group_by_node(pairs, scores))};
}

double Predictor::score(std::span<const double> z_u, std::span<const double> z_v) const {
  return symmetric_link_probability(z_u, z_v, w, b);
}

Predictor fit_predictor(std::span<const LabeledPair> train, const Array& z,
                        const PredictorConfig& config) {
  bool has_pos = false;
  bool has_neg = false;
  for (const auto& p : train) (p.label ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) {
    throw InputError("predictor training split must contain both classes");
  }
  const std::size_t f = z.dim(1);
  const std::size_t rows = 2 * train.size();
  Array x({rows, 2 * f});
  Array y({rows, 1});
  Array not_y({rows, 1});
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& p = train[i];
    for (std::size_t order = 0; order < 2; ++order) {
      const std::size_t r = 2 * i + order;
      const NodeId a = order ? p.v : p.u;
      const NodeId b = order ? p.u : p.v;
      std::copy_n(z.row(a).data(), f, x.row(r).data());
      std::copy_n(z.row(b).data(), f, x.row(r).data() + f);
      y[r] = p.label;
      not_y[r] = 1 - p.label;
    }
  }

  ParameterSet ps;
  ps.add("w", Array({2 * f, 1}));
  ps.add("b", Array({1}));
  AdamState adam;
  const double inv_rows = 1.0 / static_cast<double>(rows);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    ps.zero_grad();
    ad::Tape tape;
    ad::Var xv = tape.constant(x);
    ad::Var logits = ad::add(ad::matmul(xv, tape.parameter(ps.at("w"))),
                             tape.parameter(ps.at("b")));
    constexpr double kLo = 1e-12;
    constexpr double kHi = 1.0 - 1e-12;
    ad::Var log_p = ad::log(ad::clamp(ad::sigmoid(logits), kLo, kHi));
    ad::Var log_q = ad::log(ad::clamp(ad::sigmoid(ad::scale(logits, -1.0)), kLo, kHi));
    ad::Var loss = ad::scale(
        ad::add(ad::sum(ad::mul_const(log_p, y)), ad::sum(ad::mul_const(log_q, not_y))),
        -inv_rows);
    tape.backward(loss);
    adam_step(ps, adam, config.lr);
  }
  Predictor out;
  const Array& w = ps.at("w").value;
  out.w.assign(w.data(), w.data() + w.size());
  out.b = ps.at("b").value[0];
  return out;
}

std::vector<double> baseline_scores(const SnapshotSequence& history,
                                    std::span<const LabeledPair> pairs,
                                    const std::string& method) {
  if (history.snapshots.empty()) throw InputError("baseline needs at least one snapshot");
  std::vector<double> out;
  out.reserve(pairs.size());
  if (method == "last-adjacency") {
    const Snapshot& last = history.snapshots.back();
    for (const auto& p : pairs) out.push_back(last.weight(p.u, p.v));
    return out;
  }
  if (method == "aggregated-common-neighbors") {
    const std::size_t n = history.node_count;
    std::vector<Snapshot::WeightedEdge> all;
    for (const auto& s : history.snapshots) {
      for (NodeId u = 0; u < n; ++u) {
        for (const auto& nb : s.neighbors(u)) all.push_back({u, nb.node, nb.weight});
      }
    }
    const Snapshot agg = Snapshot::from_edges(0, n, all, /*directed=*/true);
    for (const auto& p : pairs) {
      const auto& a = agg.neighbors(p.u);
      const auto& b = agg.neighbors(p.v);
      std::size_t i = 0;
      std::size_t j = 0;
      double common = 0.0;
      while (i < a.size() && j < b.size()) {
        if (a[i].node < b[j].node) {
          ++i;
        } else if (b[j].node < a[i].node) {
          ++j;
        } else {
          common += 1.0;
          ++i;
          ++j;
        }
      }
      out.push_back(common);
    }
    return out;
  }
  throw InputError("unknown baseline method '" + method + "'");
}

nlohmann::json MetricReport::to_json() const {
  return {{"dataset", dataset}, {"method", method}, {"seed", seed},
          {"T_used", t_used},   {"auc", auc},       {"map", map},
          {"n_pos", n_pos},     {"n_neg", n_neg},   {"fingerprint", fingerprint}};
}

std::string MetricReport::csv_header() {
  return "dataset,method,seed,T_used,auc,map,n_pos,n_neg";
}

std::string MetricReport::csv_row() const {
  char buf[64];
  std::ostringstream os;
  os << dataset << ',' << method << ',' << seed << ',' << t_used << ',';
  std::snprintf(buf, sizeof(buf), "%.6f,%.6f", auc, map);
  os << buf << ',' << n_pos << ',' << n_neg;
  return os.str();
}

MetricReport make_report(const std::string& dataset, const std::string& method,
                         const EvalPairSet& set, std::size_t t_used,
                         std::span<const double> test_scores) {
  const Ranking r = rank_metrics(set.test, test_scores);
  MetricReport m;
  m.dataset = dataset;
  m.method = method;
  m.seed = set.seed;
  m.t_used = t_used;
  m.auc = r.auc;
  m.map = r.map;
  for (const auto& p : set.test) (p.label ? m.n_pos : m.n_neg) += 1;
  m.fingerprint = set.fingerprint();
  return m;
}

}  // namespace grl
