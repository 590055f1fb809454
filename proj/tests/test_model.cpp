#include <cmath>
#include <numeric>

#include "doctest.h"
#include "grl/model.h"
#include "grl/training.h"
#include "support.h"

using namespace grl;
using grl::test::max_abs_diff;
using grl::test::random_array;

namespace {

ModelConfig small_config(std::size_t dim = 8, std::size_t heads = 2) {
  ModelConfig c;
  c.embed_dim = dim;
  c.heads = heads;
  return c;
}

double elu(double x) { return x > 0 ? x : std::expm1(x); }

Array identity(std::size_t n) {
  Array a({n, n});
  for (std::size_t i = 0; i < n; ++i) a.at(i, i) = 1.0;
  return a;
}

// Relabels every snapshot of `seq` by node -> perm[node].
SnapshotSequence permuted(const SnapshotSequence& seq, const std::vector<NodeId>& perm) {
  SnapshotSequence out = seq;
  for (auto& snap : out.snapshots) {
    std::vector<Snapshot::WeightedEdge> edges;
    for (const auto& e : snap.edges()) edges.push_back({perm[e.u], perm[e.v], e.w});
    snap = Snapshot::from_edges(snap.index(), seq.node_count, edges);
  }
  return out;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("config validation") {
  ModelConfig c = small_config(8, 3);
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_NOTHROW(small_config(8, 4).validate());
  CHECK(parse_mask_mode("literal") == MaskMode::kLiteral);
  CHECK(parse_variant("no-temporal") == Variant::kNoTemporal);
  CHECK_THROWS_AS(parse_mask_mode("sideways"), std::invalid_argument);
  CHECK(ModelConfig::from_json(c.to_json()) == c);
}

TEST_CASE("parameter shapes") {
  ModelConfig c = small_config(8, 2);
  const auto ps = init_parameters(c, 5, 3, 1);
  CHECK(ps.at("features").value.shape() == Shape{5, 8});
  CHECK(ps.at("local.head0.W").value.shape() == Shape{4, 8});
  CHECK(ps.at("local.head1.a").value.shape() == Shape{8});
  CHECK(ps.at("global.head0.Wq").value.shape() == Shape{8, 4});
  CHECK(ps.at("temporal.head1.Wv").value.shape() == Shape{8, 4});
  CHECK(ps.at("temporal.position").value.shape() == Shape{3, 8});
  CHECK(ps.at("predictor.w").value.shape() == Shape{16});
  for (double v : ps.at("predictor.w").value.values()) CHECK(v == 0.0);
  CHECK(init_parameters(c, 5, 3, 1) == ps);
}

TEST_CASE("single isolated node attends only to itself") {
  ModelConfig c = small_config(4, 2);
  ParameterSet ps = init_parameters(c, 1, 1, 3);
  const Snapshot snap(1, 1);
  ad::Tape t;
  BoundParameters bp(t, ps);
  AttentionTrace trace;
  const Array out = local_attention_forward(snap, bp["features"], bp, c, &trace).value();
  const Array& x = ps.at("features").value;
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(trace.local[k].at(0, 0) == 1.0);
    const Array& w = ps.at("local.head" + std::to_string(k) + ".W").value;
    for (std::size_t i = 0; i < 2; ++i) {
      double wh = 0.0;
      for (std::size_t j = 0; j < 4; ++j) wh += w.at(i, j) * x.at(0, j);
      CHECK(std::abs(out.at(0, k * 2 + i) - elu(wh)) < 1e-14);
    }
  }
}

TEST_CASE("local attention rows sum to one over closed neighbourhoods") {
  const auto seq = random_sequence(9, 2, 0.3, 5);
  ModelConfig c = small_config(8, 2);
  ParameterSet ps = init_parameters(c, 9, 2, 6);
  AttentionTrace trace;
  embed(seq, ps, c, &trace);
  REQUIRE(trace.local.size() == 4);
  for (std::size_t i = 0; i < trace.local.size(); ++i) {
    const Snapshot& snap = seq.snapshots[i / 2];
    for (NodeId v = 0; v < 9; ++v) {
      double sum = 0.0;
      for (NodeId u = 0; u < 9; ++u) {
        const double a = trace.local[i].at(v, u);
        if (u != v && !snap.has_edge(v, u)) CHECK(a == 0.0);
        sum += a;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
  for (const auto& g : trace.global) {
    for (NodeId v = 0; v < 9; ++v) {
      const auto row = g.row(v);
      CHECK(std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("zero attention vector on a path averages the closed neighbourhood") {
  ModelConfig c = small_config(3, 1);
  ParameterSet ps = init_parameters(c, 3, 1, 2);
  ps.at("local.head0.W").value = identity(3);
  ps.at("local.head0.a").value.fill(0.0);
  const Array x = ps.at("features").value;
  const auto snap = Snapshot::from_edges(1, 3, {{0, 1, 2.0}, {1, 2, 1.0}});
  ad::Tape t;
  BoundParameters bp(t, ps);
  const Array out = local_attention_forward(snap, bp["features"], bp, c).value();
  for (std::size_t j = 0; j < 3; ++j) {
    const double mean = (x.at(0, j) + x.at(1, j) + x.at(2, j)) / 3.0;
    CHECK(std::abs(out.at(1, j) - elu(mean)) < 1e-14);
  }
}

TEST_CASE("global attention over one node returns its value projection") {
  ModelConfig c = small_config(4, 2);
  ParameterSet ps = init_parameters(c, 1, 1, 4);
  const Array h = random_array(8, {1, 4});
  ad::Tape t;
  BoundParameters bp(t, ps);
  AttentionTrace trace;
  const Array out = global_attention_forward(t.constant(h), bp, c, &trace).value();
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(trace.global[k].at(0, 0) == 1.0);
    const Array& wv = ps.at("global.head" + std::to_string(k) + ".Wv").value;
    for (std::size_t i = 0; i < 2; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < 4; ++j) v += h.at(0, j) * wv.at(j, i);
      CHECK(std::abs(out.at(0, k * 2 + i) - v) < 1e-14);
    }
  }
}

TEST_CASE("global attention maps identical rows to identical rows") {
  ModelConfig c = small_config(6, 3);
  ParameterSet ps = init_parameters(c, 5, 1, 4);
  const Array row = random_array(9, {1, 6});
  Array h({5, 6});
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t j = 0; j < 6; ++j) h.at(r, j) = row.at(0, j);
  }
  ad::Tape t;
  BoundParameters bp(t, ps);
  const Array out = global_attention_forward(t.constant(h), bp, c).value();
  for (std::size_t r = 1; r < 5; ++r) {
    for (std::size_t j = 0; j < 6; ++j) CHECK(out.at(r, j) == out.at(0, j));
  }
}

TEST_CASE("temporal attention with one step returns the value projection") {
  ModelConfig c = small_config(4, 2);
  c.use_position_embedding = false;
  ParameterSet ps = init_parameters(c, 3, 1, 5);
  const Array r = random_array(10, {3, 1, 4});
  ad::Tape t;
  BoundParameters bp(t, ps);
  const Array z = temporal_attention_forward(t.constant(r), bp, c).value();
  CHECK(z.shape() == Shape{3, 1, 4});
  for (std::size_t v = 0; v < 3; ++v) {
    for (std::size_t k = 0; k < 2; ++k) {
      const Array& wv = ps.at("temporal.head" + std::to_string(k) + ".Wv").value;
      for (std::size_t i = 0; i < 2; ++i) {
        double e = 0.0;
        for (std::size_t j = 0; j < 4; ++j) e += r[v * 4 + j] * wv.at(j, i);
        CHECK(std::abs(z[v * 4 + k * 2 + i] - e) < 1e-14);
      }
    }
  }
}

TEST_CASE("zero query and key projections average the visible steps") {
  ModelConfig c = small_config(3, 1);
  c.use_position_embedding = false;
  ParameterSet ps = init_parameters(c, 2, 2, 5);
  ps.at("temporal.head0.Wq").value.fill(0.0);
  ps.at("temporal.head0.Wk").value.fill(0.0);
  ps.at("temporal.head0.Wv").value = identity(3);
  const Array r = random_array(11, {2, 2, 3});
  ad::Tape t;
  BoundParameters bp(t, ps);
  const Array z = temporal_attention_forward(t.constant(r), bp, c).value();
  for (std::size_t v = 0; v < 2; ++v) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(std::abs(z[v * 6 + j] - r[v * 6 + j]) < 1e-15);
      const double mean = (r[v * 6 + j] + r[v * 6 + 3 + j]) / 2.0;
      CHECK(std::abs(z[v * 6 + 3 + j] - mean) < 1e-15);
    }
  }
}

TEST_CASE("temporal masks") {
  const Array causal = temporal_mask(3, MaskMode::kCausal);
  const Array literal = temporal_mask(3, MaskMode::kLiteral);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK((causal.at(i, j) == 0.0) == (j <= i));
      CHECK((literal.at(i, j) == 0.0) == (i <= j));
    }
  }
}

TEST_CASE("embeddings are causal in time") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto seq = random_sequence(8, 4, 0.3, 20 + s);
    ModelConfig c = small_config(8, 2);
    ParameterSet ps = init_parameters(c, 8, 4, s);
    const Array z = embed(seq, ps, c);
    for (std::size_t cut = 1; cut < 4; ++cut) {
      SnapshotSequence changed = seq;
      const auto other = random_sequence(8, 4, 0.6, 100 + s);
      for (std::size_t k = cut; k < 4; ++k) changed.snapshots[k] = other.snapshots[k];
      const Array z2 = embed(changed, ps, c);
      for (NodeId v = 0; v < 8; ++v) {
        for (std::size_t t = 0; t < cut; ++t) {
          const auto a = embedding_at(z, v, t);
          const auto b = embedding_at(z2, v, t);
          for (std::size_t j = 0; j < a.size(); ++j) CHECK(std::abs(a[j] - b[j]) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("temporal attention over unmasked prefixes sums to one") {
  const auto seq = random_sequence(6, 4, 0.4, 3);
  ModelConfig c = small_config(8, 2);
  ParameterSet ps = init_parameters(c, 6, 4, 3);
  AttentionTrace trace;
  embed(seq, ps, c, &trace);
  for (const auto& a : trace.temporal) {
    for (std::size_t v = 0; v < 6; ++v) {
      for (std::size_t i = 0; i < 4; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
          const double p = a[(v * 4 + i) * 4 + j];
          if (j > i) CHECK(p == 0.0);
          sum += p;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("smallest instance gives a finite embedding") {
  SnapshotSequence seq;
  seq.node_count = 1;
  seq.snapshots.push_back(Snapshot(1, 1));
  seq.id_map = IdMap::identity(1);
  ModelConfig c = small_config(8, 2);
  ParameterSet ps = init_parameters(c, 1, 1, 0);
  const Array z = embed(seq, ps, c);
  CHECK(z.shape() == Shape{1, 1, 8});
  for (double v : z.values()) CHECK(std::isfinite(v));
}

TEST_CASE("model is permutation equivariant") {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const std::size_t n = 9;
    const auto seq = random_sequence(n, 3, 0.35, 40 + s);
    ModelConfig c = small_config(8, 2);
    ParameterSet ps = init_parameters(c, n, 3, s);
    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(s);
    std::shuffle(perm.begin(), perm.end(), rng);
    ParameterSet pp = ps;
    for (NodeId v = 0; v < n; ++v) {
      const auto src = ps.at("features").value.row(v);
      std::copy(src.begin(), src.end(), pp.at("features").value.row(perm[v]).begin());
    }
    const Array z = embed(seq, ps, c);
    const Array zp = embed(permuted(seq, perm), pp, c);
    for (NodeId v = 0; v < n; ++v) {
      for (std::size_t t = 0; t < 3; ++t) {
        const auto a = embedding_at(z, v, t);
        const auto b = embedding_at(zp, perm[v], t);
        for (std::size_t j = 0; j < a.size(); ++j) CHECK(std::abs(a[j] - b[j]) <= 1e-9);
      }
    }
  }
}

TEST_CASE("full model gradient matches finite differences") {
  for (MaskMode mask : {MaskMode::kCausal, MaskMode::kLiteral}) {
    for (std::size_t heads : {1, 2}) {
      ModelGradCheckConfig g;
      g.nodes = 10;
      g.steps = 4;
      g.dim = 8;
      g.heads = heads;
      g.mask = mask;
      g.seed = heads;
      const auto r = model_gradcheck(g);
      INFO(to_string(mask), " heads=", heads, " worst=", r.worst_parameter);
      CHECK(r.max_rel_error < 1e-4);
    }
  }
  ModelGradCheckConfig six;
  six.nodes = 6;
  six.steps = 3;
  CHECK(model_gradcheck(six).max_rel_error < 1e-4);
}

TEST_CASE("ablation variants pass the gradient check") {
  for (Variant v : {Variant::kNoLocal, Variant::kNoGlobal, Variant::kNoTemporal}) {
    ModelGradCheckConfig g;
    g.nodes = 6;
    g.variant = v;
    INFO(to_string(v));
    CHECK(model_gradcheck(g).max_rel_error < 1e-4);
  }
}

TEST_CASE("link probability") {
  const std::vector<double> zu = {1, 0, 0};
  const std::vector<double> zv = {1, 0.5, -2};
  CHECK(link_probability(zu, zv, std::vector<double>(6, 0.0), 0.0) == 0.5);

  // Frozen from 1 / (1 + exp(-2)).
  const double sigma2 = 1.0 / (1.0 + std::exp(-2.0));
  CHECK(std::abs(sigma2 - 0.88080) < 1e-5);
  const std::vector<double> w = {1, 0, 0, 1, 0, 0};
  CHECK(std::abs(link_probability(zu, zv, w, 0.0) - 0.88080) < 1e-5);

  const Array wr = random_array(3, {6});
  const auto ws = wr.values();
  CHECK(symmetric_link_probability(zu, zv, ws, 0.3) ==
        symmetric_link_probability(zv, zu, ws, 0.3));
  CHECK_THROWS(link_probability(zu, zv, std::vector<double>(5, 0.0), 0.0));
}

TEST_CASE("output shape does not depend on the head count") {
  const auto seq = random_sequence(7, 3, 0.3, 8);
  for (std::size_t heads : {1, 2, 4, 8}) {
    ModelConfig c = small_config(8, heads);
    ParameterSet ps = init_parameters(c, 7, 3, heads);
    CHECK(embed(seq, ps, c).shape() == Shape{7, 3, 8});
  }
}

TEST_CASE("one-hot features and ablation variants keep the output shape") {
  const auto seq = random_sequence(6, 3, 0.4, 2);
  ModelConfig c = small_config(8, 2);
  c.one_hot = true;
  ParameterSet ps = init_parameters(c, 6, 3, 1);
  CHECK_FALSE(ps.contains("features"));
  CHECK(embed(seq, ps, c).shape() == Shape{6, 3, 8});
  for (Variant v : {Variant::kNoLocal, Variant::kNoGlobal, Variant::kNoTemporal}) {
    ModelConfig cv = small_config(8, 2);
    cv.variant = v;
    ParameterSet pv = init_parameters(cv, 6, 3, 1);
    CHECK(embed(seq, pv, cv).shape() == Shape{6, 3, 8});
  }
}

TEST_CASE("embeddings_at_step slices one time step") {
  const Array z = random_array(4, {3, 2, 5});
  const Array s = embeddings_at_step(z, 1);
  CHECK(s.shape() == Shape{3, 5});
  for (std::size_t v = 0; v < 3; ++v) {
    for (std::size_t j = 0; j < 5; ++j) CHECK(s.at(v, j) == embedding_at(z, v, 1)[j]);
  }
}

}  // TEST_SUITE
