#include "cosem/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cosem/error.hpp"
#include "cosem/evaluation.hpp"

namespace cosem {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || batch_size < 1 || max_epochs < 1 || patience < 1 || k < 1) {
    throw Error(ErrorCode::invalid_argument,
                "train config: learning_rate > 0 and batch_size, max_epochs, patience, k >= 1");
  }
}

AdamOptimizer::AdamOptimizer(std::vector<Param*> params, double learning_rate, double beta1,
                             double beta2, double epsilon)
    : params_(std::move(params)), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
  for (const Param* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void AdamOptimizer::step() {
  ++t_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t p = 0; p < params_.size(); ++p) {
    auto value = params_[p]->value.data();
    const auto grad = params_[p]->grad.data();
    auto m = m_[p].data();
    auto v = v_[p].data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

double clip_gradients(std::span<Param* const> params, double max_norm) {
  double sq = 0.0;
  for (const Param* p : params) {
    for (double g : p->grad.data()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (Param* p : params) {
      for (double& g : p->grad.data()) g *= scale;
    }
  }
  return norm;
}

bool EarlyStopping::record(double metric) {
  ++epochs_;
  if (epochs_ == 1 || metric > best_) {
    best_ = metric;
    best_epoch_ = epochs_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

Checkpoint train(const SplitCorpus& split, ModelConfig model_config, const TrainConfig& train_config,
                 const EpochCallback& on_epoch) {
  train_config.validate();
  if (split.train.empty()) {
    throw Error(ErrorCode::empty_train_set, "training split has no instances");
  }
  model_config.app_count = split.app_vocab.size();
  model_config.chunk_count = split.semantic_vocab.size();

  Checkpoint best;
  best.model = Model(model_config);
  best.train_config = train_config;
  best.app_vocab = split.app_vocab;
  best.semantic_vocab = split.semantic_vocab;

  Model model = best.model;
  const auto params = model.params();
  AdamOptimizer optimizer(params, train_config.learning_rate);
  EarlyStopping stopper(train_config.patience);
  Rng rng(train_config.seed);

  const auto& monitored = split.validation.empty() ? split.train : split.validation;
  const std::size_t n = split.train.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;

    for (std::size_t start = 0; start < n; start += train_config.batch_size) {
      const std::size_t end = std::min(n, start + train_config.batch_size);
      // Batch membership follows the shuffle; accumulation order within the
      // batch does not.
      std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
      std::sort(batch.begin(), batch.end());

      model.zero_grad();
      const double scale = 1.0 / static_cast<double>(batch.size());
      for (std::size_t idx : batch) {
        const auto& inst = split.train[idx];
        loss_sum += model.accumulate_gradients(inst.semantic_ids, inst.history_ids,
                                               inst.target_ids, scale);
      }
      if (!std::isfinite(loss_sum)) {
        throw Error(ErrorCode::divergence, "training loss became non-finite in epoch " +
                                               std::to_string(epoch) + " (batch starting at " +
                                               std::to_string(start) + ")");
      }
      const double norm = clip_gradients(params, train_config.clip_norm);
      if (!std::isfinite(norm)) {
        throw Error(ErrorCode::divergence,
                    "gradient norm became non-finite in epoch " + std::to_string(epoch));
      }
      optimizer.step();
    }

    for (const Param* p : params) {
      if (!p->value.all_finite()) {
        throw Error(ErrorCode::divergence,
                    "parameters became non-finite in epoch " + std::to_string(epoch));
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(n);
    record.val_mrr = evaluate(model_ranker(model), monitored, train_config.k).mrr_at_k;
    best.history.push_back(record);
    if (on_epoch) on_epoch(record);

    if (stopper.record(record.val_mrr)) {
      best.model = model;
      best.best_epoch = epoch;
    }
    if (stopper.should_stop()) break;
  }

  best.model.zero_grad();
  return best;
}

}  // namespace cosem
