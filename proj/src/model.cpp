#include "cosem/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cosem/error.hpp"

namespace cosem {

Variant parse_variant(std::string_view name) {
  if (name == "cosem") return Variant::cosem;
  if (name == "dnn-a" || name == "dnn_a") return Variant::dnn_a;
  if (name == "dnn-s" || name == "dnn_s") return Variant::dnn_s;
  throw Error(ErrorCode::invalid_argument, "unknown model variant '" + std::string(name) + "'");
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::cosem: return "cosem";
    case Variant::dnn_a: return "dnn-a";
    case Variant::dnn_s: return "dnn-s";
  }
  return "cosem";
}

std::string_view variant_label(Variant v) {
  switch (v) {
    case Variant::cosem: return "CoSEM";
    case Variant::dnn_a: return "DNN-A";
    case Variant::dnn_s: return "DNN-S";
  }
  return "CoSEM";
}

void ModelConfig::validate() const {
  if (embed_dim < 1 || hidden_layers < 1 || hidden_width < 1 || app_count < 1 ||
      chunk_count < 1) {
    throw Error(ErrorCode::invalid_argument,
                "model config: dimensions, layer count and vocabulary sizes must be >= 1");
  }
}

namespace {

std::vector<DenseLayer> make_stack(const ModelConfig& c) {
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l < c.hidden_layers; ++l) {
    const std::size_t in = l == 0 ? c.embed_dim : c.hidden_width;
    layers.push_back({Param(c.hidden_width, in), Param(c.hidden_width, 1)});
  }
  return layers;
}

void init_dense(DenseLayer& layer, Rng& rng) {
  fill_uniform(layer.weight.value, glorot_limit(layer.weight.value.cols(), layer.weight.value.rows()),
               rng);
  layer.bias.value.fill(0.0);
}

// Runs the tanh stack, returning each layer's output.
std::vector<Vector> run_stack(const std::vector<DenseLayer>& layers, const Vector& input) {
  std::vector<Vector> outs;
  outs.reserve(layers.size());
  const Vector* x = &input;
  for (const auto& layer : layers) {
    Vector pre = matvec(layer.weight.value, *x);
    const auto bias = layer.bias.value.data();
    for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += bias[i];
    outs.push_back(tanh_forward(pre));
    x = &outs.back();
  }
  return outs;
}

// Backpropagates `upstream` (gradient w.r.t. the last layer output) through
// the stack; returns the gradient w.r.t. the stack input.
Vector backprop_stack(std::vector<DenseLayer>& layers, const Vector& input,
                      const std::vector<Vector>& outs, Vector upstream) {
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Vector& h = outs[l];
    const Vector& x = l == 0 ? input : outs[l - 1];
    Vector dpre(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) dpre[i] = upstream[i] * (1.0 - h[i] * h[i]);
    outer_accumulate(layers[l].weight.grad, dpre, x);
    auto bias_grad = layers[l].bias.grad.data();
    for (std::size_t i = 0; i < dpre.size(); ++i) bias_grad[i] += dpre[i];
    Vector dx(x.size(), 0.0);
    matvec_transposed_accumulate(layers[l].weight.value, dpre, dx);
    upstream = std::move(dx);
  }
  return upstream;
}

}  // namespace

Model::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  semantic_table_ = EmbeddingTable(config_.chunk_count, config_.embed_dim);
  app_table_ = EmbeddingTable(config_.app_count, config_.embed_dim);
  semantic_layers_ = make_stack(config_);
  history_layers_ = make_stack(config_);
  output_ = {Param(config_.app_count, config_.hidden_width), Param(config_.app_count, 1)};
  initialize();
}

void Model::initialize() {
  Rng rng(config_.seed);
  semantic_table_.initialize(rng);
  app_table_.initialize(rng);
  for (auto& layer : semantic_layers_) init_dense(layer, rng);
  for (auto& layer : history_layers_) init_dense(layer, rng);
  init_dense(output_, rng);
  zero_grad();
}

std::vector<Param*> Model::params() {
  std::vector<Param*> out{&semantic_table_.param(), &app_table_.param()};
  for (auto& layer : semantic_layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  for (auto& layer : history_layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  out.push_back(&output_.weight);
  out.push_back(&output_.bias);
  return out;
}

std::vector<const Param*> Model::params() const {
  auto mutable_params = const_cast<Model*>(this)->params();
  return {mutable_params.begin(), mutable_params.end()};
}

void Model::zero_grad() {
  for (Param* p : params()) p->zero_grad();
}

Vector Model::encode_semantic(std::span<const TokenId> semantic_ids) const {
  return run_stack(semantic_layers_, semantic_table_.mean_pool(semantic_ids)).back();
}

Vector Model::encode_history(std::span<const TokenId> history_ids) const {
  return run_stack(history_layers_, app_table_.mean_pool(history_ids)).back();
}

Vector Model::fuse(std::span<const double> semantic_out, std::span<const double> history_out) const {
  switch (config_.variant) {
    case Variant::cosem: return hadamard(semantic_out, history_out);
    case Variant::dnn_a: return {history_out.begin(), history_out.end()};
    case Variant::dnn_s: return {semantic_out.begin(), semantic_out.end()};
  }
  return {};
}

Vector Model::score(std::span<const double> fused) const {
  Vector logits = matvec(output_.weight.value, fused);
  const auto bias = output_.bias.value.data();
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += bias[i];
  return sigmoid_forward(logits);
}

ForwardTrace Model::forward_trace(std::span<const TokenId> semantic_ids,
                                  std::span<const TokenId> history_ids) const {
  ForwardTrace t;
  if (uses_semantic()) {
    t.semantic_pooled = semantic_table_.mean_pool(semantic_ids);
    t.semantic_layers = run_stack(semantic_layers_, t.semantic_pooled);
  }
  if (uses_history()) {
    t.history_pooled = app_table_.mean_pool(history_ids);
    t.history_layers = run_stack(history_layers_, t.history_pooled);
  }
  static const Vector kNone;
  t.fused = fuse(uses_semantic() ? t.semantic_layers.back() : kNone,
                 uses_history() ? t.history_layers.back() : kNone);
  t.logits = matvec(output_.weight.value, t.fused);
  const auto bias = output_.bias.value.data();
  for (std::size_t i = 0; i < t.logits.size(); ++i) t.logits[i] += bias[i];
  t.probs = sigmoid_forward(t.logits);
  return t;
}

Vector Model::forward(std::span<const TokenId> semantic_ids,
                      std::span<const TokenId> history_ids) const {
  return forward_trace(semantic_ids, history_ids).probs;
}

double Model::accumulate_gradients(std::span<const TokenId> semantic_ids,
                                   std::span<const TokenId> history_ids,
                                   std::span<const TokenId> target_ids, double scale) {
  const ForwardTrace t = forward_trace(semantic_ids, history_ids);
  const std::size_t apps = t.logits.size();
  for (TokenId id : target_ids) {
    if (id >= apps) throw Error(ErrorCode::index_out_of_range, "target app id out of range");
  }

  std::vector<char> positive(apps, 0);
  for (TokenId id : target_ids) positive[id] = 1;

  // d(loss)/d(logit); terms whose log argument sits on the floor are constant.
  const double inv_apps = 1.0 / static_cast<double>(apps);
  Vector dlogits(apps);
  for (std::size_t j = 0; j < apps; ++j) {
    const double z = t.logits[j];
    if (positive[j]) {
      const double p = sigmoid(z);
      dlogits[j] = p > kLogFloor ? -sigmoid(-z) * inv_apps * scale : 0.0;
    } else {
      const double q = sigmoid(-z);
      dlogits[j] = q > kLogFloor ? sigmoid(z) * inv_apps * scale : 0.0;
    }
  }

  outer_accumulate(output_.weight.grad, dlogits, t.fused);
  auto out_bias_grad = output_.bias.grad.data();
  for (std::size_t j = 0; j < apps; ++j) out_bias_grad[j] += dlogits[j];
  Vector dfused(t.fused.size(), 0.0);
  matvec_transposed_accumulate(output_.weight.value, dlogits, dfused);

  if (uses_semantic()) {
    Vector upstream = config_.variant == Variant::cosem
                          ? hadamard(dfused, t.history_layers.back())
                          : dfused;
    const Vector dpooled =
        backprop_stack(semantic_layers_, t.semantic_pooled, t.semantic_layers, std::move(upstream));
    semantic_table_.mean_pool_backward(semantic_ids, dpooled);
  }
  if (uses_history()) {
    Vector upstream = config_.variant == Variant::cosem
                          ? hadamard(dfused, t.semantic_layers.back())
                          : dfused;
    const Vector dpooled =
        backprop_stack(history_layers_, t.history_pooled, t.history_layers, std::move(upstream));
    app_table_.mean_pool_backward(history_ids, dpooled);
  }

  return bce_loss_from_logits(t.logits, target_ids);
}

namespace {

template <typename PositiveTerm, typename NegativeTerm>
double mean_bce(std::size_t n, std::span<const TokenId> target_ids, PositiveTerm pos,
                NegativeTerm neg) {
  if (n == 0) throw Error(ErrorCode::invalid_argument, "loss over zero outputs");
  std::vector<char> positive(n, 0);
  for (TokenId id : target_ids) {
    if (id >= n) throw Error(ErrorCode::index_out_of_range, "target app id out of range");
    positive[id] = 1;
  }
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    total -= positive[j] ? std::log(std::max(pos(j), kLogFloor))
                         : std::log(std::max(neg(j), kLogFloor));
  }
  return total / static_cast<double>(n);
}

}  // namespace

double bce_loss(std::span<const double> probs, std::span<const TokenId> target_ids) {
  return mean_bce(
      probs.size(), target_ids, [&](std::size_t j) { return probs[j]; },
      [&](std::size_t j) { return 1.0 - probs[j]; });
}

double bce_loss_from_logits(std::span<const double> logits, std::span<const TokenId> target_ids) {
  return mean_bce(
      logits.size(), target_ids, [&](std::size_t j) { return sigmoid(logits[j]); },
      [&](std::size_t j) { return sigmoid(-logits[j]); });
}

std::vector<TokenId> predict_topk(std::span<const double> probs, std::size_t k) {
  if (k < 1 || k > probs.size()) {
    throw Error(ErrorCode::invalid_argument, "predict_topk: k must lie in [1, app_count]");
  }
  std::vector<TokenId> ids(probs.size());
  std::iota(ids.begin(), ids.end(), TokenId{0});
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                    [&](TokenId a, TokenId b) {
                      if (probs[a] != probs[b]) return probs[a] > probs[b];
                      return a < b;
                    });
  ids.resize(k);
  return ids;
}

}  // namespace cosem
