#include <doctest.h>

#include <algorithm>
#include <map>

#include "cosem/error.hpp"
#include "cosem/evaluation.hpp"
#include "cosem/rng.hpp"
#include "test_support.hpp"

using namespace cosem;
using testing::make_instance;

namespace {

using Ids = std::vector<TokenId>;

// Ranker that replays a fixed prediction list per instance.
Ranker replay(std::map<Timestamp, Ids> lists) {
  return [lists = std::move(lists)](const WindowInstance& inst, std::size_t k) {
    Ids out = lists.at(inst.window_start);
    if (out.size() > k) out.resize(k);
    return out;
  };
}

}  // namespace

TEST_CASE("reciprocal rank and hit") {
  CHECK(reciprocal_rank(Ids{3, 7, 1}, Ids{7}, 5) == 0.5);
  CHECK(reciprocal_rank(Ids{3, 7, 1}, Ids{1, 3}, 5) == 1.0);
  CHECK(reciprocal_rank(Ids{3, 7, 1}, Ids{9}, 5) == 0.0);
  CHECK(reciprocal_rank(Ids{3, 7, 1}, Ids{1}, 2) == 0.0);
  CHECK(reciprocal_rank(Ids{3, 7, 1}, Ids{1}, 3) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(hit(Ids{3, 7, 1}, Ids{1}, 3));
  CHECK_FALSE(hit(Ids{3, 7, 1}, Ids{1}, 2));
  CHECK_FALSE(hit(Ids{}, Ids{1}, 5));
}

TEST_CASE("MRU baseline") {
  // History A B A C, newest last.
  const auto inst = make_instance("u", 0, {}, {0, 1, 0, 2}, {1});
  CHECK(mru_baseline(inst, 3) == Ids{2, 0, 1});
  CHECK(mru_baseline(inst, 2) == Ids{2, 0});
  CHECK(mru_baseline(inst, 10) == Ids{2, 0, 1});
  CHECK(mru_baseline(make_instance("u", 0, {}, {}, {1}), 3).empty());
  const auto report = evaluate(mru_ranker(), std::vector<WindowInstance>{inst}, 3);
  CHECK(report.mrr_at_k == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(report.hr_at_k == 1.0);
}

TEST_CASE("evaluate averages over scorable instances") {
  const std::vector<WindowInstance> data = {
      make_instance("u", 0, {}, {}, {4}),     // hit at 1
      make_instance("u", 3600, {}, {}, {2}),  // hit at 2
      make_instance("u", 7200, {}, {}, {}),   // skipped
      make_instance("u", 10800, {}, {}, {9}), // miss
  };
  const auto ranker = replay({{0, {4, 1}}, {3600, {1, 2}}, {7200, {0}}, {10800, {1, 2}}});
  const auto report = evaluate(ranker, data, 5);
  CHECK(report.instance_count == 3);
  CHECK(report.skipped_oov == 1);
  CHECK(report.mrr_at_k == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(report.hr_at_k == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  REQUIRE(report.per_instance.size() == 3);
  CHECK(report.per_instance[2].instance_id == 3);
  CHECK(report.per_instance[1].reciprocal_rank == 0.5);
}

TEST_CASE("evaluate rejects degenerate input") {
  const std::vector<WindowInstance> empty_targets = {make_instance("u", 0, {}, {1}, {})};
  try {
    evaluate(mru_ranker(), empty_targets, 5);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::all_instances_skipped);
  }
  CHECK_THROWS_AS(evaluate(mru_ranker(), std::vector<WindowInstance>{}, 5), Error);
  CHECK_THROWS_AS(evaluate(mru_ranker(), std::vector<WindowInstance>{make_instance("u", 0, {}, {}, {1})}, 0),
                  Error);
}

TEST_CASE("oracle ranker scores one; random ranker is deterministic") {
  std::vector<WindowInstance> data;
  std::map<Timestamp, Ids> oracle;
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const auto t = static_cast<TokenId>(rng.below(10));
    data.push_back(make_instance("u", i * 3600, {}, {}, {t}));
    oracle[i * 3600] = {t};
  }
  const auto report = evaluate(replay(oracle), data, 5);
  CHECK(report.mrr_at_k == 1.0);
  CHECK(report.hr_at_k == 1.0);

  const auto r1 = evaluate(random_ranker(10, 3), data, 5);
  const auto r2 = evaluate(random_ranker(10, 3), data, 5);
  CHECK(r1.mrr_at_k == r2.mrr_at_k);
  std::vector<WindowInstance> reversed(data.rbegin(), data.rend());
  const auto r3 = evaluate(random_ranker(10, 3), reversed, 5);
  CHECK(r3.mrr_at_k == doctest::Approx(r1.mrr_at_k).epsilon(1e-12));
  for (const auto& r : r1.per_instance) {
    CHECK(r.predicted.size() == 5);
    Ids sorted = r.predicted;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    CHECK(sorted.back() < 10);
  }
}

TEST_CASE("random properties of MRR and HR") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t apps = 3 + rng.below(10);
    const std::size_t n = 1 + rng.below(30);
    std::vector<WindowInstance> data;
    std::map<Timestamp, Ids> lists;
    for (std::size_t i = 0; i < n; ++i) {
      Ids target;
      for (TokenId a = 0; a < apps; ++a) {
        if (rng.bernoulli(0.2)) target.push_back(a);
      }
      if (target.empty()) target.push_back(static_cast<TokenId>(rng.below(apps)));
      Ids ranking(apps);
      for (TokenId a = 0; a < apps; ++a) ranking[a] = a;
      rng.shuffle(std::span<TokenId>(ranking));
      const auto start = static_cast<Timestamp>(i) * 3600;
      data.push_back(make_instance("u" + std::to_string(i % 3), start, {}, {}, target));
      lists[start] = ranking;
    }
    double prev_mrr = -1, prev_hr = -1;
    for (std::size_t k = 1; k <= apps; ++k) {
      const auto report = evaluate(replay(lists), data, k);
      // Brute force: position of the first relevant id in the full ranking.
      double rr = 0, hits = 0;
      for (const auto& inst : data) {
        const Ids& ranking = lists.at(inst.window_start);
        for (std::size_t pos = 0; pos < k; ++pos) {
          if (std::count(inst.target_ids.begin(), inst.target_ids.end(), ranking[pos])) {
            rr += 1.0 / static_cast<double>(pos + 1);
            hits += 1;
            break;
          }
        }
      }
      CHECK(std::abs(report.mrr_at_k - rr / static_cast<double>(n)) < 1e-12);
      CHECK(std::abs(report.hr_at_k - hits / static_cast<double>(n)) < 1e-12);
      CHECK(report.mrr_at_k >= 0.0);
      CHECK(report.mrr_at_k <= report.hr_at_k);
      CHECK(report.hr_at_k <= 1.0);
      CHECK(report.mrr_at_k >= prev_mrr);
      CHECK(report.hr_at_k >= prev_hr);
      prev_mrr = report.mrr_at_k;
      prev_hr = report.hr_at_k;
    }
    // Reordering instances leaves the metrics unchanged.
    std::vector<WindowInstance> shuffled = data;
    rng.shuffle(std::span<WindowInstance>(shuffled));
    const auto a = evaluate(replay(lists), data, 3);
    const auto b = evaluate(replay(lists), shuffled, 3);
    CHECK(std::abs(a.mrr_at_k - b.mrr_at_k) < 1e-12);
    CHECK(a.hr_at_k == b.hr_at_k);
  }
}

TEST_CASE("model ranker follows the model's probabilities") {
  ModelConfig c;
  c.embed_dim = 4;
  c.hidden_width = 4;
  c.app_count = 6;
  c.chunk_count = 3;
  const Model m(c);
  const auto inst = make_instance("u", 0, {1, 2}, {0, 5}, {3});
  const auto ranked = model_ranker(m)(inst, 10);
  CHECK(ranked.size() == 6);
  CHECK(ranked == predict_topk(m.forward(inst.semantic_ids, inst.history_ids), 6));
  CHECK(model_ranker(m)(inst, 2).size() == 2);
}

TEST_CASE("remap_instances") {
  Vocabulary from_apps, to_apps;
  for (const char* a : {"mail", "maps", "chat"}) from_apps.add(a);
  for (const char* a : {"chat", "mail"}) to_apps.add(a);
  Vocabulary from_sem = Vocabulary::with_oov_sentinel(), to_sem = Vocabulary::with_oov_sentinel();
  from_sem.add("c1");
  from_sem.add("c2");
  to_sem.add("c2");

  const std::vector<WindowInstance> data = {
      make_instance("u", 0, {1, 2, 0}, {0, 1, 2}, {0, 1}),
      make_instance("u", 3600, {2}, {1}, {1}),
  };
  const auto r = remap_instances(data, from_apps, from_sem, to_apps, to_sem);
  REQUIRE(r.instances.size() == 2);
  CHECK(r.instances[0].semantic_ids == Ids{0, 1, 0});
  CHECK(r.instances[0].history_ids == Ids{1, 0});
  CHECK(r.instances[0].target_ids == Ids{1});
  CHECK(r.instances[1].target_ids.empty());
  CHECK(r.unknown_chunks == 2);
  CHECK(r.unknown_history_apps == 2);
  CHECK(r.unknown_target_apps == 2);

  const auto report = evaluate(mru_ranker(), r.instances, 5);
  CHECK(report.instance_count == 1);
  CHECK(report.skipped_oov == 1);
}

TEST_CASE("report rendering") {
  const std::vector<WindowInstance> data = {make_instance("u", 0, {}, {0, 1, 0, 2}, {1})};
  const auto report = evaluate(mru_ranker(), data, 3);
  const auto j = report_to_json(report, "MRU");
  CHECK(j["name"] == "MRU");
  CHECK(j["k"] == 3);
  CHECK(j["instance_count"] == 1);
  CHECK(j["per_instance"][0]["predicted"] == nlohmann::json::array({2, 0, 1}));
  CHECK(j["per_instance"][0]["hit"] == 1);

  const std::vector<ReportRow> rows = {{"CoSEM", &report}, {"MRU", &report}};
  const std::string table = format_table(rows);
  CHECK(table.find("M@3") != std::string::npos);
  CHECK(table.find("H@3") != std::string::npos);
  CHECK(table.find("CoSEM") != std::string::npos);
  CHECK(table.find("0.3333") != std::string::npos);
  CHECK(table.find("1.0000") != std::string::npos);
}
