#include "grl/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "grl/adam.h"
#include "grl/binary_io.h"
#include "grl/errors.h"
#include "grl/eval.h"
#include "grl/ops.h"
#include "grl/random.h"

namespace grl {

namespace {

constexpr double kLogLo = 1e-12;
constexpr double kLogHi = 1.0 - 1e-12;

double stable_sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double clamped_log(double p) { return std::log(std::clamp(p, kLogLo, kLogHi)); }

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw InputError("epochs must be >= 1");
  if (!(lr >= 0) || !std::isfinite(lr)) throw InputError("lr must be finite and >= 0");
  if (!(neg_weight > 0) || !std::isfinite(neg_weight)) {
    throw InputError("neg_weight must be > 0");
  }
  if (batch_size < 1) throw InputError("batch_size must be >= 1");
  if (patience < 1) throw InputError("patience must be >= 1");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},         {"lr", lr},
          {"neg_weight", neg_weight}, {"batch_size", batch_size},
          {"patience", patience},     {"seed", seed},
          {"frozen_samples", frozen_samples}};
}

nlohmann::json TrainReport::to_json(bool include_timing) const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : epochs) {
    nlohmann::json r = {{"epoch", e.epoch},
                        {"loss", e.loss},
                        {"val_auc", optional_json(e.val_auc)},
                        {"val_map", optional_json(e.val_map)}};
    if (include_timing) r["wall_seconds"] = e.wall_seconds;
    rows.push_back(std::move(r));
  }
  return {{"epochs", rows},
          {"epochs_run", epochs.size()},
          {"best_epoch", best_epoch},
          {"best_val_auc", optional_json(best_val_auc)},
          {"config", config}};
}

ad::Var bce_walk_loss(ad::Var z, std::span<const PairBatch> batches, double neg_weight,
                      std::span<const NodeId> rows) {
  if (batches.empty()) throw std::invalid_argument("bce_walk_loss: no pair batches");
  if (z.shape().size() != 3) throw std::invalid_argument("bce_walk_loss: Z must be N x T x F");
  ad::Tape& tape = *z.tape();
  const std::size_t n = z.shape()[0];
  const std::size_t steps = z.shape()[1];

  std::vector<std::size_t> row_ids;
  if (rows.empty()) {
    row_ids.resize(n);
    std::iota(row_ids.begin(), row_ids.end(), 0);
  } else {
    row_ids.assign(rows.begin(), rows.end());
  }
  std::vector<std::ptrdiff_t> slot(n, -1);
  for (std::size_t i = 0; i < row_ids.size(); ++i) {
    slot[row_ids[i]] = static_cast<std::ptrdiff_t>(i);
  }
  const std::size_t b = row_ids.size();

  ad::Var total;
  for (const PairBatch& batch : batches) {
    if (batch.step < 1 || batch.step > steps) {
      throw std::invalid_argument("bce_walk_loss: batch step out of range");
    }
    // pos/neg hold pair multiplicities per (anchor v, other u).
    Array pos({b, n});
    Array neg({b, n});
    bool any = false;
    const std::size_t q = batch.negatives_per_positive;
    for (std::size_t i = 0; i < batch.positives.size(); ++i) {
      const auto [v, u] = batch.positives[i];
      const auto s = slot[v];
      if (s < 0) continue;
      pos.at(static_cast<std::size_t>(s), u) += 1.0;
      for (std::size_t j = 0; j < q; ++j) {
        neg.at(static_cast<std::size_t>(s), batch.negatives[i * q + j]) += 1.0;
      }
      any = true;
    }
    if (!any) continue;
    ad::Var zt = ad::select(z, 1, batch.step - 1);
    ad::Var g = ad::matmul(ad::gather_rows(zt, row_ids), ad::transpose(zt));
    ad::Var pos_term =
        ad::sum(ad::mul_const(ad::log(ad::clamp(ad::sigmoid(g), kLogLo, kLogHi)), pos));
    ad::Var neg_term = ad::sum(ad::mul_const(
        ad::log(ad::clamp(ad::sigmoid(ad::scale(g, -1.0)), kLogLo, kLogHi)), neg));
    ad::Var term = ad::scale(ad::add(pos_term, ad::scale(neg_term, neg_weight)), -1.0);
    total = total.valid() ? ad::add(total, term) : term;
  }
  return total.valid() ? total : tape.constant(Array::scalar(0.0));
}

double bce_walk_loss_value(const Array& z, const PairBatch& batch, double neg_weight) {
  const std::size_t f = z.dim(2);
  auto dot = [&](NodeId a, NodeId c) {
    const auto za = embedding_at(z, a, batch.step - 1);
    const auto zc = embedding_at(z, c, batch.step - 1);
    double s = 0.0;
    for (std::size_t k = 0; k < f; ++k) s += za[k] * zc[k];
    return s;
  };
  double loss = 0.0;
  const std::size_t q = batch.negatives_per_positive;
  for (std::size_t i = 0; i < batch.positives.size(); ++i) {
    const auto [v, u] = batch.positives[i];
    loss -= clamped_log(stable_sigmoid(dot(u, v)));
    for (std::size_t j = 0; j < q; ++j) {
      loss -= neg_weight * clamped_log(1.0 - stable_sigmoid(dot(batch.negatives[i * q + j], v)));
    }
  }
  return loss;
}

std::vector<PairBatch> build_training_batches(const SnapshotSequence& seq,
                                              const WalkConfig& walk) {
  std::vector<PairBatch> out;
  for (std::size_t t = 0; t + 1 < seq.num_steps(); ++t) {
    if (seq.snapshots[t].empty()) continue;
    out.push_back(build_pair_batch(seq.snapshots[t], walk));
  }
  if (out.empty()) throw InputError("no training snapshot has edges");
  return out;
}

TrainResult train(const SnapshotSequence& seq, const ModelConfig& model,
                  const TrainConfig& config, const WalkConfig& walk,
                  const EpochCallback& on_epoch) {
  if (seq.num_steps() < 2) throw InputError("training needs at least 2 snapshots");
  ParameterSet params = init_parameters(model, seq.node_count, seq.num_steps(),
                                        derive_seed(config.seed, "model"));
  return train_from(seq, std::move(params), model, config, walk, on_epoch);
}

TrainResult train_from(const SnapshotSequence& seq, ParameterSet params,
                       const ModelConfig& model, const TrainConfig& config,
                       const WalkConfig& walk, const EpochCallback& on_epoch) {
  config.validate();
  walk.validate();
  model.validate();
  const std::size_t steps = seq.num_steps();
  if (steps < 2) throw InputError("training needs at least 2 snapshots");
  const std::size_t n = seq.node_count;

  // Validation mirrors evaluation one step earlier: the held-out last
  // snapshot is the target, a logistic predictor is fitted on Z at the step
  // before it and scored on the remaining pairs.
  std::optional<EvalPairSet> val_set;
  try {
    val_set = build_eval_set(seq.prefix(steps - 1), seq.snapshots.back(), {},
                             derive_seed(config.seed, "validation"));
    std::vector<LabeledPair> held = val_set->val;
    held.insert(held.end(), val_set->test.begin(), val_set->test.end());
    auto both = [](const std::vector<LabeledPair>& v) {
      bool pos = false;
      bool neg = false;
      for (const auto& p : v) (p.label ? pos : neg) = true;
      return pos && neg;
    };
    if (!both(val_set->train) || !both(held)) val_set.reset();
  } catch (const InputError&) {
    val_set.reset();
  }
  auto validate_params = [&](ParameterSet& ps) -> std::optional<Ranking> {
    if (!val_set) return std::nullopt;
    const Array z = embeddings_at_step(embed(seq, ps, model), steps - 2);
    const Predictor pred = fit_predictor(val_set->train, z, {});
    std::vector<LabeledPair> held;
    std::vector<double> scores;
    for (const auto* split : {&val_set->val, &val_set->test}) {
      for (const auto& p : *split) {
        held.push_back(p);
        scores.push_back(pred.score(z.row(p.u), z.row(p.v)));
      }
    }
    return rank_metrics(held, scores);
  };

  TrainResult result;
  result.report.config = {{"model", model.to_json()},
                          {"train", config.to_json()},
                          {"walk", walk.to_json()}};
  ParameterSet best = params;
  std::optional<double> best_auc;
  std::size_t since_best = 0;
  AdamState adam;

  std::vector<PairBatch> frozen;
  auto batches_for = [&](std::size_t epoch) {
    WalkConfig w = walk;
    w.seed = derive_seed(config.seed, "samples", config.frozen_samples ? 0 : epoch);
    return build_training_batches(seq, w);
  };
  if (config.frozen_samples) frozen = batches_for(0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<PairBatch> batches = config.frozen_samples ? frozen : batches_for(epoch);

    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(config.seed, "minibatch", epoch);
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    for (std::size_t lo = 0; lo < n; lo += config.batch_size) {
      const std::size_t hi = std::min(n, lo + config.batch_size);
      std::vector<NodeId> rows(order.begin() + static_cast<std::ptrdiff_t>(lo),
                               order.begin() + static_cast<std::ptrdiff_t>(hi));
      std::sort(rows.begin(), rows.end());
      params.zero_grad();
      ad::Tape tape;
      BoundParameters bound(tape, params);
      ad::Var z = model_forward(seq, bound, model);
      ad::Var loss = bce_walk_loss(z, batches, config.neg_weight, rows);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) throw DivergenceError(epoch, "non-finite training loss");
      tape.backward(loss);
      try {
        adam_step(params, adam, config.lr);
      } catch (const std::domain_error& e) {
        throw DivergenceError(epoch, e.what());
      }
      epoch_loss += value;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = epoch_loss;
    const auto metrics = validate_params(params);
    if (metrics) {
      rec.val_auc = metrics->auc;
      rec.val_map = metrics->map;
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (!metrics) {
      best = params;
      result.report.best_epoch = epoch;
      continue;
    }
    if (!best_auc || metrics->auc > *best_auc) {
      best_auc = metrics->auc;
      best = params;
      result.report.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  result.report.best_val_auc = best_auc;
  result.params = std::move(best);
  return result;
}

SnapshotSequence random_sequence(std::size_t nodes, std::size_t steps, double density,
                                 std::uint64_t seed) {
  SnapshotSequence seq;
  seq.node_count = nodes;
  seq.id_map = IdMap::identity(nodes);
  for (std::size_t t = 1; t <= steps; ++t) {
    Rng rng = make_rng(seed, "random-sequence", t);
    std::vector<Snapshot::WeightedEdge> edges;
    for (NodeId u = 0; u < nodes; ++u) {
      for (NodeId v = u + 1; v < nodes; ++v) {
        if (uniform01(rng) < density) edges.push_back({u, v, 0.5 + 1.5 * uniform01(rng)});
      }
    }
    if (edges.empty() && nodes >= 2) edges.push_back({0, 1, 1.0});
    seq.snapshots.push_back(Snapshot::from_edges(t, nodes, edges));
  }
  return seq;
}

GradCheckResult model_gradcheck(const ModelGradCheckConfig& config) {
  const SnapshotSequence seq =
      random_sequence(config.nodes, config.steps, 0.35, derive_seed(config.seed, "graph"));
  ModelConfig model;
  model.embed_dim = config.dim;
  model.heads = config.heads;
  model.mask = config.mask;
  model.variant = config.variant;
  ParameterSet params = init_parameters(model, config.nodes, config.steps,
                                        derive_seed(config.seed, "model"));
  WalkConfig walk;
  walk.walk_length = 5;
  walk.walks_per_node = 2;
  walk.window = 2;
  walk.negatives = 2;
  walk.seed = derive_seed(config.seed, "samples");
  std::vector<PairBatch> batches;
  for (const Snapshot& s : seq.snapshots) batches.push_back(build_pair_batch(s, walk));
  // w_n = 1 so the negative term is not scaled below the tolerance.
  const LossBuilder loss = [&](ad::Tape& tape) {
    BoundParameters bound(tape, params);
    return bce_walk_loss(model_forward(seq, bound, model), batches, 1.0);
  };
  std::vector<Parameter*> all;
  for (Parameter& p : params) all.push_back(&p);
  return finite_diff_check(loss, all, config.eps);
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::ostringstream buf(std::ios::binary);
  buf.write("GRLE", 4);
  binary::write_uint<std::uint16_t>(buf, kCheckpointVersion);
  const nlohmann::json header = {{"model", checkpoint.model.to_json()},
                                 {"num_nodes", checkpoint.num_nodes},
                                 {"num_steps", checkpoint.num_steps},
                                 {"extra", checkpoint.extra}};
  const std::string text = header.dump();
  binary::write_uint<std::uint32_t>(buf, static_cast<std::uint32_t>(text.size()));
  buf.write(text.data(), static_cast<std::streamsize>(text.size()));
  binary::write_uint<std::uint32_t>(buf, static_cast<std::uint32_t>(checkpoint.params.size()));
  for (const Parameter& p : checkpoint.params) {
    binary::write_uint<std::uint32_t>(buf, static_cast<std::uint32_t>(p.name.size()));
    buf.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    binary::write_uint<std::uint32_t>(buf, static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape()) {
      binary::write_uint<std::uint32_t>(buf, static_cast<std::uint32_t>(d));
    }
    for (double x : p.value.values()) binary::write_f64(buf, x);
  }
  binary::write_uint<std::uint64_t>(buf, binary::fnv1a64(buf.str()));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint '" + path + "'");
  const std::string bytes = buf.str();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing checkpoint '" + path + "'");
}

namespace {

std::string read_string(std::istream& in, std::uint32_t len, const std::string& what) {
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (static_cast<std::uint32_t>(in.gcount()) != len) {
    throw InputError("truncated file while reading " + what);
  }
  return s;
}

}  // namespace

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw InputError("cannot open checkpoint '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  std::istringstream in(bytes, std::ios::binary);

  binary::expect_magic(in, "GRLE", "checkpoint");
  const auto version = binary::read_uint<std::uint16_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw InputError("unsupported checkpoint version " + std::to_string(version));
  }
  if (bytes.size() < 6 + 8) throw InputError("truncated file while reading checksum");
  {
    std::istringstream tail(bytes.substr(bytes.size() - 8), std::ios::binary);
    const auto stored = binary::read_uint<std::uint64_t>(tail, "checksum");
    bytes.resize(bytes.size() - 8);
    if (stored != binary::fnv1a64(bytes)) {
      throw InputError("checkpoint checksum mismatch (corrupt or truncated file)");
    }
  }
  in.str(bytes);
  in.seekg(6);
  const std::uint64_t file_size = bytes.size();
  const auto header_len = binary::read_uint<std::uint32_t>(in, "header length");
  if (header_len > file_size) throw InputError("truncated file while reading header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(read_string(in, header_len, "header"));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("corrupt checkpoint header: ") + e.what());
  }

  Checkpoint ck;
  try {
    ck.model = ModelConfig::from_json(header.at("model"));
    ck.num_nodes = header.at("num_nodes").get<std::size_t>();
    ck.num_steps = header.at("num_steps").get<std::size_t>();
    ck.extra = header.value("extra", nlohmann::json::object());
  } catch (const std::exception& e) {
    throw InputError(std::string("corrupt checkpoint header: ") + e.what());
  }

  const auto count = binary::read_uint<std::uint32_t>(in, "tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = binary::read_uint<std::uint32_t>(in, "tensor name length");
    if (name_len > file_size) throw InputError("truncated file while reading tensor name");
    std::string name = read_string(in, name_len, "tensor name");
    const auto rank = binary::read_uint<std::uint32_t>(in, "tensor rank");
    if (rank == 0 || rank > 8) {
      throw InputError("tensor '" + name + "' has invalid rank " + std::to_string(rank));
    }
    Shape shape;
    std::uint64_t total = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const auto dim = binary::read_uint<std::uint32_t>(in, "tensor shape");
      if (dim == 0) throw InputError("tensor '" + name + "' has a zero dimension");
      shape.push_back(dim);
      total *= dim;
      if (total * 8 > file_size) {
        throw InputError("tensor '" + name + "' shape exceeds file size");
      }
    }
    std::vector<double> data(total);
    for (auto& x : data) x = binary::read_f64(in, "tensor '" + name + "' payload");
    try {
      ck.params.add(name, Array(std::move(shape), std::move(data)));
    } catch (const std::invalid_argument& e) {
      throw InputError(std::string("corrupt checkpoint: ") + e.what());
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw InputError("trailing bytes after checkpoint tensors");
  }
  // Tensor names and shapes must be exactly what the stored config implies.
  ParameterSet expected;
  try {
    ck.model.validate();
    expected = init_parameters(ck.model, ck.num_nodes, ck.num_steps, 0);
  } catch (const std::exception& e) {
    throw InputError(std::string("corrupt checkpoint config: ") + e.what());
  }
  if (expected.size() != ck.params.size()) {
    throw InputError("checkpoint holds " + std::to_string(ck.params.size()) +
                     " tensors, config implies " + std::to_string(expected.size()));
  }
  for (const Parameter& p : expected) {
    if (!ck.params.contains(p.name)) {
      throw InputError("checkpoint is missing tensor '" + p.name + "'");
    }
    const Shape& got = ck.params.at(p.name).value.shape();
    if (got != p.value.shape()) {
      throw InputError("tensor '" + p.name + "' has shape " + shape_string(got) +
                       ", expected " + shape_string(p.value.shape()));
    }
  }
  return ck;
}

}  // namespace grl
