#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "grl/array.h"
#include "grl/dyngraph.h"
#include "grl/parameters.h"
#include "grl/tape.h"
#include "json.hpp"

namespace grl {

// Which temporal mask to apply. kCausal lets query step i attend to keys
// j <= i. kLiteral sets M_ij = 0 iff i <= j, which lets a step attend to
// later steps instead.
enum class MaskMode { kCausal, kLiteral };

// Ablation variants. kNoLocal replaces neighbour attention with a plain
// linear map of the features, kNoGlobal skips global attention, kNoTemporal
// uses the per-snapshot global output directly as the embedding.
enum class Variant { kOriginal, kNoLocal, kNoGlobal, kNoTemporal };

std::string to_string(MaskMode m);
std::string to_string(Variant v);
MaskMode parse_mask_mode(const std::string& s);
Variant parse_variant(const std::string& s);

struct ModelConfig {
  std::size_t embed_dim = 128;  // F, final embedding size
  std::size_t input_dim = 0;    // D, feature table width; 0 = embed_dim
  std::size_t local_dim = 0;    // D', local layer output; 0 = embed_dim
  std::size_t global_dim = 0;   // F', global layer output; 0 = embed_dim
  std::size_t heads = 8;
  double leaky_relu_slope = 0.2;
  bool use_position_embedding = true;
  bool one_hot = false;  // identity features (D = N) instead of a table
  MaskMode mask = MaskMode::kCausal;
  Variant variant = Variant::kOriginal;

  std::size_t resolved_input_dim(std::size_t num_nodes) const;
  std::size_t resolved_local_dim() const { return local_dim ? local_dim : embed_dim; }
  std::size_t resolved_global_dim() const {
    return global_dim ? global_dim : embed_dim;
  }

  // Throws std::invalid_argument unless every layer width is divisible by
  // the head count and the variant's pass-throughs are shape-compatible.
  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Xavier-uniform projections and position embeddings, feature rows drawn
// from N(0, std 1/sqrt(D)), zero predictor.
ParameterSet init_parameters(const ModelConfig& config, std::size_t num_nodes,
                             std::size_t num_steps, std::uint64_t seed);

// Binds ParameterSet entries onto a tape on first use.
class BoundParameters {
 public:
  BoundParameters(ad::Tape& tape, ParameterSet& params)
      : tape_(tape), params_(params) {}

  ad::Var operator[](const std::string& name);
  ad::Tape& tape() { return tape_; }
  const ParameterSet& params() const { return params_; }

 private:
  ad::Tape& tape_;
  ParameterSet& params_;
  std::map<std::string, ad::Var> bound_;
};

// Attention distributions recorded during a forward pass, one array per
// (snapshot, head) for the structural layers and one per head for the
// temporal layer.
struct AttentionTrace {
  std::vector<Array> local;     // [N x N], row v over N_v ∪ {v}
  std::vector<Array> global;    // [N x N]
  std::vector<Array> temporal;  // [N x T x T]
};

// Dense neighbourhood tensors of one snapshot: weights with unit self-loops
// and the additive mask that excludes non-neighbours.
struct NeighborhoodMask {
  Array weights;  // [N x N]
  Array mask;     // [N x N], 0 or -inf
};
NeighborhoodMask neighborhood_mask(const Snapshot& snapshot);

// Additive [T x T] mask for the temporal layer.
Array temporal_mask(std::size_t num_steps, MaskMode mode);

ad::Var local_attention_forward(const Snapshot& snapshot, ad::Var features,
                                BoundParameters& params, const ModelConfig& config,
                                AttentionTrace* trace = nullptr);
ad::Var global_attention_forward(ad::Var h_local, BoundParameters& params,
                                 const ModelConfig& config,
                                 AttentionTrace* trace = nullptr);
// `r` is [N x T x F']; returns Z [N x T x F].
ad::Var temporal_attention_forward(ad::Var r, BoundParameters& params,
                                   const ModelConfig& config,
                                   AttentionTrace* trace = nullptr);

// Full pipeline over all snapshots of `seq`; returns Z [N x T x F].
ad::Var model_forward(const SnapshotSequence& seq, BoundParameters& params,
                      const ModelConfig& config, AttentionTrace* trace = nullptr);

// Forward pass without keeping the tape; returns the value of Z.
Array embed(const SnapshotSequence& seq, ParameterSet& params,
            const ModelConfig& config, AttentionTrace* trace = nullptr);

// Logistic link score σ(wᵀ[z_u ‖ z_v] + b).
double link_probability(std::span<const double> z_u, std::span<const double> z_v,
                        std::span<const double> w, double b);
// (y(u,v) + y(v,u)) / 2, used for undirected graphs.
double symmetric_link_probability(std::span<const double> z_u,
                                  std::span<const double> z_v,
                                  std::span<const double> w, double b);

// Row z_v^t of an [N x T x F] embedding cube.
std::span<const double> embedding_at(const Array& z, std::size_t node,
                                     std::size_t step);
// Slice Z[:, step] as an [N x F] matrix.
Array embeddings_at_step(const Array& z, std::size_t step);

}  // namespace grl
