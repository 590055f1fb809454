#include "grl/model.h"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "grl/ops.h"
#include "grl/random.h"

namespace grl {

std::string to_string(MaskMode m) {
  return m == MaskMode::kCausal ? "causal" : "literal";
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kOriginal: return "original";
    case Variant::kNoLocal: return "no-local";
    case Variant::kNoGlobal: return "no-global";
    case Variant::kNoTemporal: return "no-temporal";
  }
  return "original";
}

MaskMode parse_mask_mode(const std::string& s) {
  if (s == "causal") return MaskMode::kCausal;
  if (s == "literal") return MaskMode::kLiteral;
  throw std::invalid_argument("unknown mask mode '" + s + "' (causal|literal)");
}

Variant parse_variant(const std::string& s) {
  for (Variant v : {Variant::kOriginal, Variant::kNoLocal, Variant::kNoGlobal,
                    Variant::kNoTemporal}) {
    if (to_string(v) == s) return v;
  }
  throw std::invalid_argument("unknown variant '" + s +
                              "' (original|no-local|no-global|no-temporal)");
}

std::size_t ModelConfig::resolved_input_dim(std::size_t num_nodes) const {
  if (one_hot) return num_nodes;
  return input_dim ? input_dim : embed_dim;
}

void ModelConfig::validate() const {
  if (heads == 0) throw std::invalid_argument("heads must be positive");
  if (embed_dim == 0) throw std::invalid_argument("embed_dim must be positive");
  const std::size_t dl = resolved_local_dim();
  const std::size_t dg = resolved_global_dim();
  for (auto [name, d] : {std::pair{"local_dim", dl}, std::pair{"global_dim", dg},
                         std::pair{"embed_dim", embed_dim}}) {
    if (d % heads != 0) {
      throw std::invalid_argument(std::string(name) + "=" + std::to_string(d) +
                                  " is not divisible by heads=" +
                                  std::to_string(heads));
    }
  }
  if (variant == Variant::kNoGlobal && dg != dl) {
    throw std::invalid_argument("no-global variant needs global_dim == local_dim");
  }
  if (variant == Variant::kNoTemporal && embed_dim != dg) {
    throw std::invalid_argument("no-temporal variant needs embed_dim == global_dim");
  }
}

nlohmann::json ModelConfig::to_json() const {
  return {{"embed_dim", embed_dim},
          {"input_dim", input_dim},
          {"local_dim", local_dim},
          {"global_dim", global_dim},
          {"heads", heads},
          {"leaky_relu_slope", leaky_relu_slope},
          {"use_position_embedding", use_position_embedding},
          {"one_hot", one_hot},
          {"mask", to_string(mask)},
          {"variant", to_string(variant)}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.local_dim = j.at("local_dim").get<std::size_t>();
  c.global_dim = j.at("global_dim").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.leaky_relu_slope = j.at("leaky_relu_slope").get<double>();
  c.use_position_embedding = j.at("use_position_embedding").get<bool>();
  c.one_hot = j.at("one_hot").get<bool>();
  c.mask = parse_mask_mode(j.at("mask").get<std::string>());
  c.variant = parse_variant(j.at("variant").get<std::string>());
  return c;
}

namespace {

Array xavier(Rng& rng, Shape shape, std::size_t fan_in, std::size_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Array a(std::move(shape));
  for (auto& v : a.values()) v = u(rng);
  return a;
}

std::string head_name(const char* layer, std::size_t k, const char* what) {
  return std::string(layer) + ".head" + std::to_string(k) + "." + what;
}

}  // namespace

ParameterSet init_parameters(const ModelConfig& config, std::size_t num_nodes,
                             std::size_t num_steps, std::uint64_t seed) {
  config.validate();
  if (num_nodes == 0 || num_steps == 0) {
    throw std::invalid_argument("model needs at least one node and one snapshot");
  }
  const std::size_t h = config.heads;
  const std::size_t d_in = config.resolved_input_dim(num_nodes);
  const std::size_t d_local = config.resolved_local_dim();
  const std::size_t d_glob = config.resolved_global_dim();
  const std::size_t f = config.embed_dim;
  Rng rng = make_rng(seed, "init");

  ParameterSet ps;
  if (!config.one_hot) {
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(d_in)));
    Array x({num_nodes, d_in});
    for (auto& v : x.values()) v = normal(rng);
    ps.add("features", std::move(x));
  }
  if (config.variant == Variant::kNoLocal) {
    ps.add("nolocal.W", xavier(rng, {d_in, d_local}, d_in, d_local));
  } else {
    const std::size_t dh = d_local / h;
    for (std::size_t k = 0; k < h; ++k) {
      ps.add(head_name("local", k, "W"), xavier(rng, {dh, d_in}, d_in, dh));
      ps.add(head_name("local", k, "a"), xavier(rng, {2 * dh}, 2 * dh, 1));
    }
  }
  if (config.variant != Variant::kNoGlobal) {
    const std::size_t gh = d_glob / h;
    for (std::size_t k = 0; k < h; ++k) {
      for (const char* w : {"Wq", "Wk", "Wv"}) {
        ps.add(head_name("global", k, w), xavier(rng, {d_local, gh}, d_local, gh));
      }
    }
  }
  if (config.variant != Variant::kNoTemporal) {
    const std::size_t fh = f / h;
    for (std::size_t k = 0; k < h; ++k) {
      for (const char* w : {"Wq", "Wk", "Wv"}) {
        ps.add(head_name("temporal", k, w), xavier(rng, {d_glob, fh}, d_glob, fh));
      }
    }
    if (config.use_position_embedding) {
      ps.add("temporal.position", xavier(rng, {num_steps, d_glob}, num_steps, d_glob));
    }
  }
  ps.add("predictor.w", Array({2 * f}));
  ps.add("predictor.b", Array({1}));
  return ps;
}

ad::Var BoundParameters::operator[](const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  ad::Var v = tape_.parameter(params_.at(name));
  bound_.emplace(name, v);
  return v;
}

NeighborhoodMask neighborhood_mask(const Snapshot& snapshot) {
  const std::size_t n = snapshot.node_count();
  NeighborhoodMask nm{Array({n, n}), Array({n, n}, -std::numeric_limits<double>::infinity())};
  for (NodeId v = 0; v < n; ++v) {
    nm.weights.at(v, v) = 1.0;
    nm.mask.at(v, v) = 0.0;
    for (const auto& nb : snapshot.neighbors(v)) {
      nm.weights.at(v, nb.node) = nb.weight;
      nm.mask.at(v, nb.node) = 0.0;
    }
  }
  return nm;
}

Array temporal_mask(std::size_t num_steps, MaskMode mode) {
  Array m({num_steps, num_steps});
  for (std::size_t i = 0; i < num_steps; ++i) {
    for (std::size_t j = 0; j < num_steps; ++j) {
      const bool visible = mode == MaskMode::kCausal ? j <= i : i <= j;
      m.at(i, j) = visible ? 0.0 : -std::numeric_limits<double>::infinity();
    }
  }
  return m;
}

ad::Var local_attention_forward(const Snapshot& snapshot, ad::Var features,
                                BoundParameters& params, const ModelConfig& config,
                                AttentionTrace* trace) {
  const std::size_t n = snapshot.node_count();
  if (features.shape().size() != 2 || features.shape()[0] != n) {
    throw std::invalid_argument("feature matrix " + shape_string(features.shape()) +
                                " does not match snapshot with " +
                                std::to_string(n) + " nodes");
  }
  const NeighborhoodMask nm = neighborhood_mask(snapshot);
  const std::size_t dh = config.resolved_local_dim() / config.heads;
  std::vector<ad::Var> heads;
  for (std::size_t k = 0; k < config.heads; ++k) {
    ad::Var w = params[head_name("local", k, "W")];
    ad::Var a = params[head_name("local", k, "a")];
    ad::Var wh = ad::matmul(features, ad::transpose(w));  // [N x dh]
    // Column 0 is aᵀ_left·Wh_v, column 1 is aᵀ_right·Wh_u.
    ad::Var scores = ad::matmul(wh, ad::transpose(ad::reshape(a, {2, dh})));
    ad::Var logits = ad::outer_sum(ad::slice_last_dim(scores, 0, 1),
                                   ad::slice_last_dim(scores, 1, 2));
    logits = ad::leaky_relu(ad::mul_const(logits, nm.weights), config.leaky_relu_slope);
    ad::Var alpha = ad::masked_softmax(logits, &nm.mask);
    if (trace) trace->local.push_back(alpha.value());
    heads.push_back(ad::elu(ad::matmul(alpha, wh)));
  }
  return heads.size() == 1 ? heads[0] : ad::concat_last_dim(heads);
}

ad::Var global_attention_forward(ad::Var h_local, BoundParameters& params,
                                 const ModelConfig& config, AttentionTrace* trace) {
  const std::size_t gh = config.resolved_global_dim() / config.heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(gh));
  std::vector<ad::Var> heads;
  for (std::size_t k = 0; k < config.heads; ++k) {
    ad::Var q = ad::matmul(h_local, params[head_name("global", k, "Wq")]);
    ad::Var kk = ad::matmul(h_local, params[head_name("global", k, "Wk")]);
    ad::Var v = ad::matmul(h_local, params[head_name("global", k, "Wv")]);
    ad::Var att = ad::masked_softmax(ad::scale(ad::matmul(q, ad::transpose(kk)), inv_scale));
    if (trace) trace->global.push_back(att.value());
    heads.push_back(ad::matmul(att, v));
  }
  return heads.size() == 1 ? heads[0] : ad::concat_last_dim(heads);
}

ad::Var temporal_attention_forward(ad::Var r, BoundParameters& params,
                                   const ModelConfig& config, AttentionTrace* trace) {
  const Shape& s = r.shape();
  if (s.size() != 3) {
    throw std::invalid_argument("temporal input must be [N x T x F'], got " +
                                shape_string(s));
  }
  const std::size_t n = s[0];
  const std::size_t t = s[1];
  const std::size_t fh = config.embed_dim / config.heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(fh));
  if (config.use_position_embedding) {
    r = ad::add(r, params["temporal.position"]);
  }
  const Array mask = temporal_mask(t, config.mask);
  ad::Var flat = ad::reshape(r, {n * t, s[2]});
  auto project = [&](const std::string& name) {
    return ad::reshape(ad::matmul(flat, params[name]), {n, t, fh});
  };
  std::vector<ad::Var> heads;
  for (std::size_t k = 0; k < config.heads; ++k) {
    ad::Var q = project(head_name("temporal", k, "Wq"));
    ad::Var kk = project(head_name("temporal", k, "Wk"));
    ad::Var v = project(head_name("temporal", k, "Wv"));
    ad::Var logits = ad::scale(ad::matmul(q, ad::transpose(kk)), inv_scale);
    ad::Var att = ad::masked_softmax(logits, &mask);
    if (trace) trace->temporal.push_back(att.value());
    heads.push_back(ad::matmul(att, v));
  }
  return heads.size() == 1 ? heads[0] : ad::concat_last_dim(heads);
}

ad::Var model_forward(const SnapshotSequence& seq, BoundParameters& params,
                      const ModelConfig& config, AttentionTrace* trace) {
  config.validate();
  if (seq.snapshots.empty()) throw std::invalid_argument("empty snapshot sequence");
  const std::size_t n = seq.node_count;
  ad::Tape& tape = params.tape();

  ad::Var features;
  if (config.one_hot) {
    Array eye({n, n});
    for (std::size_t i = 0; i < n; ++i) eye.at(i, i) = 1.0;
    features = tape.constant(std::move(eye));
  } else {
    features = params["features"];
    if (features.shape()[0] != n) {
      throw std::invalid_argument("feature table has " +
                                  std::to_string(features.shape()[0]) +
                                  " rows but the graph has " + std::to_string(n) +
                                  " nodes");
    }
  }

  // no-local has no graph input, so every snapshot shares one H_local.
  ad::Var shared_local;
  if (config.variant == Variant::kNoLocal) {
    shared_local = ad::matmul(features, params["nolocal.W"]);
  }
  std::vector<ad::Var> per_step;
  per_step.reserve(seq.num_steps());
  for (const Snapshot& snap : seq.snapshots) {
    if (snap.node_count() != n) {
      throw std::invalid_argument("snapshot " + std::to_string(snap.index()) +
                                  " has inconsistent node count");
    }
    ad::Var h = config.variant == Variant::kNoLocal
                    ? shared_local
                    : local_attention_forward(snap, features, params, config, trace);
    if (config.variant != Variant::kNoGlobal) {
      h = global_attention_forward(h, params, config, trace);
    }
    per_step.push_back(h);
  }
  ad::Var r = ad::stack(per_step, 1);  // [N x T x F']
  if (config.variant == Variant::kNoTemporal) return r;
  return temporal_attention_forward(r, params, config, trace);
}

Array embed(const SnapshotSequence& seq, ParameterSet& params,
            const ModelConfig& config, AttentionTrace* trace) {
  ad::Tape tape;
  BoundParameters bound(tape, params);
  return model_forward(seq, bound, config, trace).value();
}

double link_probability(std::span<const double> z_u, std::span<const double> z_v,
                        std::span<const double> w, double b) {
  if (w.size() != z_u.size() + z_v.size()) {
    throw std::invalid_argument("predictor width does not match embeddings");
  }
  double x = b;
  for (std::size_t i = 0; i < z_u.size(); ++i) x += w[i] * z_u[i];
  for (std::size_t i = 0; i < z_v.size(); ++i) x += w[z_u.size() + i] * z_v[i];
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double symmetric_link_probability(std::span<const double> z_u,
                                  std::span<const double> z_v,
                                  std::span<const double> w, double b) {
  return 0.5 * (link_probability(z_u, z_v, w, b) + link_probability(z_v, z_u, w, b));
}

std::span<const double> embedding_at(const Array& z, std::size_t node,
                                     std::size_t step) {
  const std::size_t t = z.dim(1);
  const std::size_t f = z.dim(2);
  return {z.data() + (node * t + step) * f, f};
}

Array embeddings_at_step(const Array& z, std::size_t step) {
  const std::size_t n = z.dim(0);
  const std::size_t f = z.dim(2);
  Array out({n, f});
  for (std::size_t v = 0; v < n; ++v) {
    const auto row = embedding_at(z, v, step);
    std::copy(row.begin(), row.end(), out.row(v).begin());
  }
  return out;
}

}  // namespace grl
