#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cosem/corpus.hpp"
#include "cosem/embedding.hpp"
#include "cosem/numerics.hpp"

namespace cosem {

enum class Variant {
  cosem,  // both branches, Hadamard fusion
  dnn_a,  // app-history branch only
  dnn_s,  // semantic branch only
};

Variant parse_variant(std::string_view name);
std::string_view variant_name(Variant v);   // "cosem", "dnn-a", "dnn-s"
std::string_view variant_label(Variant v);  // "CoSEM", "DNN-A", "DNN-S"

struct ModelConfig {
  std::size_t embed_dim = 64;
  std::size_t hidden_layers = 2;
  std::size_t hidden_width = 64;
  Variant variant = Variant::cosem;
  std::size_t app_count = 1;
  std::size_t chunk_count = 1;
  std::uint64_t seed = 1;

  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct DenseLayer {
  Param weight;  // out x in
  Param bias;    // out x 1

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Activations of one forward pass, kept for the backward pass.
struct ForwardTrace {
  Vector semantic_pooled;
  Vector history_pooled;
  std::vector<Vector> semantic_layers;  // tanh outputs, one per layer
  std::vector<Vector> history_layers;
  Vector fused;
  Vector logits;
  Vector probs;
};

/// Dual-branch scorer: two tanh stacks over mean-pooled semantic and history
/// embeddings, fused elementwise, then one sigmoid unit per app.
class Model {
 public:
  Model() = default;
  explicit Model(const ModelConfig& config);

  const ModelConfig& config() const noexcept { return config_; }

  /// Re-draws every parameter from `config().seed`.
  void initialize();

  EmbeddingTable& semantic_table() noexcept { return semantic_table_; }
  EmbeddingTable& app_table() noexcept { return app_table_; }
  const EmbeddingTable& semantic_table() const noexcept { return semantic_table_; }
  const EmbeddingTable& app_table() const noexcept { return app_table_; }
  std::vector<DenseLayer>& semantic_layers() noexcept { return semantic_layers_; }
  std::vector<DenseLayer>& history_layers() noexcept { return history_layers_; }
  DenseLayer& output_layer() noexcept { return output_; }
  const DenseLayer& output_layer() const noexcept { return output_; }

  /// Every parameter in a fixed order: MS, MA, semantic layers, history
  /// layers, output.
  std::vector<Param*> params();
  std::vector<const Param*> params() const;

  /// Branch output for the semantic chunks (the pooled vector pushed through
  /// the semantic stack).
  Vector encode_semantic(std::span<const TokenId> semantic_ids) const;
  Vector encode_history(std::span<const TokenId> history_ids) const;

  /// Combines branch outputs according to the variant. The unused branch may
  /// be empty for the ablations.
  Vector fuse(std::span<const double> semantic_out, std::span<const double> history_out) const;

  /// Per-app probabilities for a fused vector.
  Vector score(std::span<const double> fused) const;

  Vector forward(std::span<const TokenId> semantic_ids, std::span<const TokenId> history_ids) const;
  ForwardTrace forward_trace(std::span<const TokenId> semantic_ids,
                             std::span<const TokenId> history_ids) const;

  /// Forward + backward for one instance. Adds scale * d(loss)/d(param) to
  /// every gradient buffer and returns the unscaled loss.
  double accumulate_gradients(std::span<const TokenId> semantic_ids,
                              std::span<const TokenId> history_ids,
                              std::span<const TokenId> target_ids, double scale = 1.0);

  void zero_grad();

  friend bool operator==(const Model&, const Model&) = default;

 private:
  bool uses_semantic() const noexcept { return config_.variant != Variant::dnn_a; }
  bool uses_history() const noexcept { return config_.variant != Variant::dnn_s; }

  ModelConfig config_;
  EmbeddingTable semantic_table_;
  EmbeddingTable app_table_;
  std::vector<DenseLayer> semantic_layers_;
  std::vector<DenseLayer> history_layers_;
  DenseLayer output_;
};

/// Lower bound applied to every log argument in the loss.
inline constexpr double kLogFloor = 1e-12;

/// Mean binary cross-entropy over all outputs against the multi-hot target.
double bce_loss(std::span<const double> probs, std::span<const TokenId> target_ids);

/// Same loss computed from logits; sigmoid(-z) stands in for 1 - p.
double bce_loss_from_logits(std::span<const double> logits, std::span<const TokenId> target_ids);

/// Ids of the k largest probabilities, descending, ties by ascending id.
std::vector<TokenId> predict_topk(std::span<const double> probs, std::size_t k);

}  // namespace cosem
