#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cosem/corpus.hpp"
#include "cosem/model.hpp"

namespace cosem {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 1;
  std::size_t k = 5;
  double clip_norm = 5.0;  // global gradient norm; <= 0 disables clipping

  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_mrr = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  Model model;
  TrainConfig train_config;
  Vocabulary app_vocab;
  Vocabulary semantic_vocab;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8).
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Param*> params, double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8);

  /// Applies one update from the current gradient buffers.
  void step();

  std::size_t steps() const noexcept { return t_; }

 private:
  std::vector<Param*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

/// Scales every gradient so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_gradients(std::span<Param* const> params, double max_norm);

/// Tracks the best metric seen and when to stop.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Records the metric for the next epoch. Returns true when it improved on
  /// every earlier epoch.
  bool record(double metric);

  bool should_stop() const noexcept { return since_best_ >= patience_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_metric() const noexcept { return best_; }
  std::size_t epochs() const noexcept { return epochs_; }

 private:
  std::size_t patience_;
  std::size_t epochs_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_ = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam training with early stopping on validation MRR@k.
/// Returns the parameters from the best validation epoch. When the
/// validation split is empty the training split is monitored instead.
Checkpoint train(const SplitCorpus& split, ModelConfig model_config, const TrainConfig& train_config,
                 const EpochCallback& on_epoch = {});

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::string_view bytes);

}  // namespace cosem
