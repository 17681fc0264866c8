#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cosem/error.hpp"
#include "cosem/model.hpp"
#include "test_support.hpp"

using namespace cosem;

namespace {

ModelConfig toy_config(Variant v, std::size_t apps = 5, std::size_t chunks = 5) {
  ModelConfig c;
  c.embed_dim = 4;
  c.hidden_width = 4;
  c.hidden_layers = 2;
  c.app_count = apps;
  c.chunk_count = chunks;
  c.variant = v;
  c.seed = 17;
  return c;
}

// Hand-written parameters for a 2-app, 2-chunk, D = H = 2, L = 1 network.
Model tiny_model(Variant v) {
  ModelConfig c;
  c.embed_dim = 2;
  c.hidden_width = 2;
  c.hidden_layers = 1;
  c.app_count = 2;
  c.chunk_count = 2;
  c.variant = v;
  Model m(c);
  m.semantic_table().param().value = Matrix::from_rows({{0.1, -0.2}, {0.3, 0.4}});
  m.app_table().param().value = Matrix::from_rows({{0.5, -0.1}, {-0.3, 0.2}});
  m.semantic_layers()[0].weight.value = Matrix::from_rows({{0.2, -0.5}, {0.7, 0.1}});
  m.semantic_layers()[0].bias.value = Matrix::from_rows({{0.05}, {-0.05}});
  m.history_layers()[0].weight.value = Matrix::from_rows({{-0.4, 0.3}, {0.6, 0.2}});
  m.history_layers()[0].bias.value = Matrix::from_rows({{0.1}, {0.0}});
  m.output_layer().weight.value = Matrix::from_rows({{1.0, -2.0}, {0.5, 0.3}});
  m.output_layer().bias.value = Matrix::from_rows({{0.1}, {-0.2}});
  return m;
}

double mean_loss(const Model& m, const std::vector<WindowInstance>& data) {
  double total = 0;
  for (const auto& inst : data) {
    const auto t = m.forward_trace(inst.semantic_ids, inst.history_ids);
    total += bce_loss_from_logits(t.logits, inst.target_ids);
  }
  return total / static_cast<double>(data.size());
}

void mean_gradients(Model& m, const std::vector<WindowInstance>& data) {
  m.zero_grad();
  for (const auto& inst : data) {
    m.accumulate_gradients(inst.semantic_ids, inst.history_ids, inst.target_ids,
                           1.0 / static_cast<double>(data.size()));
  }
}

bool all_zero(const Param& p) {
  for (double g : p.grad.data()) {
    if (g != 0.0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("zero network predicts one half everywhere") {
  Model m(toy_config(Variant::cosem));
  for (Param* p : m.params()) p->value.fill(0.0);
  for (double p : m.forward(std::vector<TokenId>{1, 2}, std::vector<TokenId>{3})) CHECK(p == 0.5);
}

TEST_CASE("forward matches a hand-computed pass") {
  // Expected values computed separately with numpy from the same literals.
  const std::vector<TokenId> sem = {0, 1}, hist = {1};
  struct Case {
    Variant v;
    double p0, p1;
  };
  for (const Case c : {Case{Variant::cosem, 0.5346037227925573, 0.4504868723911605},
                       Case{Variant::dnn_a, 0.6572560442936182, 0.4737054818810635},
                       Case{Variant::dnn_s, 0.48516502816870943, 0.46254274388073646}}) {
    const Vector probs = tiny_model(c.v).forward(sem, hist);
    CAPTURE(variant_name(c.v));
    CHECK(probs[0] == doctest::Approx(c.p0).epsilon(1e-14));
    CHECK(probs[1] == doctest::Approx(c.p1).epsilon(1e-14));
  }
}

TEST_CASE("Hadamard fusion with an all-ones history output reduces to the semantic path") {
  const Model cosem_model(toy_config(Variant::cosem));
  const Model semantic_only(toy_config(Variant::dnn_s));
  const std::vector<TokenId> sem = {1, 3, 3};
  const Vector s = cosem_model.encode_semantic(sem);
  const Vector ones(s.size(), 1.0);
  CHECK(cosem_model.score(cosem_model.fuse(s, ones)) == cosem_model.score(s));
  // Same seed, same draw order: the ablation shares the semantic and output weights.
  CHECK(semantic_only.forward(sem, std::vector<TokenId>{2}) == cosem_model.score(s));
}

TEST_CASE("fusion is symmetric in its inputs") {
  const Model m(toy_config(Variant::cosem));
  const Vector s = m.encode_semantic(std::vector<TokenId>{1, 2});
  const Vector a = m.encode_history(std::vector<TokenId>{0, 4});
  CHECK(s != a);
  CHECK(m.fuse(s, a) == m.fuse(a, s));
}

TEST_CASE("bce loss") {
  const std::vector<TokenId> target = {0, 2};
  CHECK(bce_loss(Vector{1.0, 0.0, 1.0}, target) == doctest::Approx(0.0).epsilon(1e-11));
  CHECK(bce_loss(Vector{0.5, 0.5, 0.5}, target) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(bce_loss(Vector{0.9, 0.2}, std::vector<TokenId>{0}) ==
        doctest::Approx(0.164252033486018).epsilon(1e-14));
  // Clamped: a confident miss costs -ln(1e-12), not infinity.
  CHECK(bce_loss(Vector{0.0}, std::vector<TokenId>{0}) == doctest::Approx(-std::log(1e-12)));
  CHECK(bce_loss_from_logits(Vector{0.0, 0.0, 0.0}, target) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(bce_loss(Vector{0.5}, std::vector<TokenId>{1}), Error);
}

TEST_CASE("backward matches finite differences for every variant") {
  const auto data = testing::gradient_toy_instances();
  for (Variant v : {Variant::cosem, Variant::dnn_a, Variant::dnn_s}) {
    CAPTURE(variant_name(v));
    Model m(toy_config(v));
    // Larger weights than the default init keep every gradient well away from
    // the finite-difference noise floor.
    Rng rng(123);
    for (Param* p : m.params()) fill_uniform(p->value, 0.8, rng);
    const auto params = m.params();
    const auto report = finite_diff_check([&] { return mean_loss(m, data); },
                                          [&] { mean_gradients(m, data); }, params);
    CHECK(report.passed());
    CHECK(report.max_relative_error < 1e-4);
  }
}

TEST_CASE("ablations leave the disabled branch untouched") {
  const auto data = testing::gradient_toy_instances();

  Model a(toy_config(Variant::dnn_a));
  mean_gradients(a, data);
  CHECK(all_zero(a.semantic_table().param()));
  for (auto& layer : a.semantic_layers()) {
    CHECK(all_zero(layer.weight));
    CHECK(all_zero(layer.bias));
  }
  CHECK_FALSE(all_zero(a.app_table().param()));

  Model s(toy_config(Variant::dnn_s));
  mean_gradients(s, data);
  CHECK(all_zero(s.app_table().param()));
  for (auto& layer : s.history_layers()) {
    CHECK(all_zero(layer.weight));
    CHECK(all_zero(layer.bias));
  }
  CHECK_FALSE(all_zero(s.semantic_table().param()));

  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TokenId> sem(rng.below(5)), h1(rng.below(5)), h2(1 + rng.below(5));
    for (auto& id : sem) id = static_cast<TokenId>(rng.below(5));
    for (auto& id : h1) id = static_cast<TokenId>(rng.below(5));
    for (auto& id : h2) id = static_cast<TokenId>(rng.below(5));
    CHECK(s.forward(sem, h1) == s.forward(sem, h2));
    CHECK(a.forward(h1, sem) == a.forward(h2, sem));
  }
}

TEST_CASE("duplicated history id doubles that row's gradient") {
  Model m(toy_config(Variant::cosem));
  // Rows 1 and 4 identical, so [1, 1, 2] and [1, 4, 2] pool to the same vector.
  auto table = m.app_table().param().value;
  std::copy(table.row(1).begin(), table.row(1).end(), table.row(4).begin());
  m.app_table().param().value = table;

  const std::vector<TokenId> sem = {2}, target = {3};
  m.zero_grad();
  m.accumulate_gradients(sem, std::vector<TokenId>{1, 4, 2}, target);
  const Matrix single = m.app_table().param().grad;
  m.zero_grad();
  m.accumulate_gradients(sem, std::vector<TokenId>{1, 1, 2}, target);
  const Matrix dup = m.app_table().param().grad;
  for (std::size_t d = 0; d < 4; ++d) {
    CHECK(dup(1, d) == doctest::Approx(2 * single(1, d)).epsilon(1e-14));
    CHECK(dup(2, d) == single(2, d));
    CHECK(dup(4, d) == 0.0);
  }
}

TEST_CASE("outputs stay strictly inside (0, 1)") {
  Model m(toy_config(Variant::cosem, 7, 6));
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<TokenId> sem(rng.below(6)), hist(rng.below(6));
    for (auto& id : sem) id = static_cast<TokenId>(rng.below(6));
    for (auto& id : hist) id = static_cast<TokenId>(rng.below(7));
    for (double p : m.forward(sem, hist)) {
      CHECK(p > 0.0);
      CHECK(p < 1.0);
    }
  }
  CHECK_THROWS_AS(m.forward(std::vector<TokenId>{6}, std::vector<TokenId>{}), Error);
  CHECK_THROWS_AS(m.forward(std::vector<TokenId>{}, std::vector<TokenId>{7}), Error);
}

TEST_CASE("initialization is seeded") {
  CHECK(Model(toy_config(Variant::cosem)) == Model(toy_config(Variant::cosem)));
  auto other = toy_config(Variant::cosem);
  other.seed = 18;
  CHECK_FALSE(Model(other) == Model(toy_config(Variant::cosem)));

  ModelConfig bad = toy_config(Variant::cosem);
  bad.hidden_layers = 0;
  CHECK_THROWS_AS(Model{bad}, Error);
}

TEST_CASE("predict_topk") {
  CHECK(predict_topk(Vector{0.1, 0.9, 0.5}, 2) == std::vector<TokenId>{1, 2});
  CHECK(predict_topk(Vector{0.3, 0.3, 0.3, 0.3}, 3) == std::vector<TokenId>{0, 1, 2});
  auto all = predict_topk(Vector{0.2, 0.7, 0.7, 0.1, 0.4}, 5);
  CHECK(all == std::vector<TokenId>{1, 2, 4, 0, 3});
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<TokenId>{0, 1, 2, 3, 4});
  CHECK_THROWS_AS(predict_topk(Vector{0.5}, 0), Error);
  CHECK_THROWS_AS(predict_topk(Vector{0.5}, 2), Error);
}
