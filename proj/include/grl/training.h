#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "grl/dyngraph.h"
#include "grl/gradcheck.h"
#include "grl/model.h"
#include "grl/parameters.h"
#include "grl/sampling.h"
#include "grl/tape.h"
#include "json.hpp"

namespace grl {

struct TrainConfig {
  std::size_t epochs = 200;
  double lr = 1e-3;
  double neg_weight = 0.01;  // w_n
  std::size_t batch_size = 256;
  std::size_t patience = 20;
  std::uint64_t seed = 0;
  bool frozen_samples = false;  // reuse epoch-0 pair batches every epoch

  void validate() const;
  nlohmann::json to_json() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  std::optional<double> val_auc;
  std::optional<double> val_map;
  double wall_seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  std::optional<double> best_val_auc;
  nlohmann::json config;  // echoed hyperparameters

  // Wall times are omitted unless requested so reports of identical runs
  // compare byte-equal.
  nlohmann::json to_json(bool include_timing = false) const;
};

struct TrainResult {
  ParameterSet params;
  TrainReport report;
};

// Walk loss summed over every batch; batch.step selects the time slice
// Z[:, step - 1]. When `rows` is given only terms whose anchor v is in
// `rows` contribute. Throws on an empty batch set.
ad::Var bce_walk_loss(ad::Var z, std::span<const PairBatch> batches, double neg_weight,
                      std::span<const NodeId> rows = {});

// Loss contribution of a single snapshot, for additivity checks.
double bce_walk_loss_value(const Array& z, const PairBatch& batch, double neg_weight);

// Pair batches for snapshots 1..T-1 of `seq` (the last snapshot is held out
// for validation), skipping snapshots without edges.
std::vector<PairBatch> build_training_batches(const SnapshotSequence& seq,
                                              const WalkConfig& walk);

// Random instance for checking gradients of the walk loss through the whole
// model: every parameter entry is compared with central differences.
struct ModelGradCheckConfig {
  std::size_t nodes = 10;
  std::size_t steps = 3;
  std::size_t dim = 8;
  std::size_t heads = 2;
  MaskMode mask = MaskMode::kCausal;
  Variant variant = Variant::kOriginal;
  std::uint64_t seed = 0;
  double eps = 1e-5;
};
GradCheckResult model_gradcheck(const ModelGradCheckConfig& config);

// gets at least one edge when N >= 2.
// gets at least one edge.
SnapshotSequence random_sequence(std::size_t nodes, std::size_t steps, double density,
                                 std::uint64_t seed);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Adam over node minibatches with early stopping on validation AUC; returns
// the best-validation parameters. Deterministic given the seeds.
TrainResult train(const SnapshotSequence& seq, const ModelConfig& model,
                  const TrainConfig& config, const WalkConfig& walk,
                  const EpochCallback& on_epoch = {});

// Same loop starting from given parameters.
TrainResult train_from(const SnapshotSequence& seq, ParameterSet params,
                       const ModelConfig& model, const TrainConfig& config,
                       const WalkConfig& walk, const EpochCallback& on_epoch = {});

// "GRLE" checkpoint: u16 version, u32-length JSON chunk with the model
// config and sizes, u32 tensor count, then per tensor a u32-length UTF-8
// name, u32 rank, u32 dims and f64 payload, then a u64 FNV-1a checksum of
// every preceding byte. Little endian.
struct Checkpoint {
  ModelConfig model;
  std::size_t num_nodes = 0;
  std::size_t num_steps = 0;
  nlohmann::json extra;  // free-form metadata, e.g. train/walk configs
  ParameterSet params;
};

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
// Throws InputError on any malformed, truncated or version-mismatched file;
// nothing is returned on failure.
Checkpoint load_checkpoint(const std::string& path);

inline constexpr std::uint16_t kCheckpointVersion = 1;

}  // namespace grl
