#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cosem/corpus.hpp"
#include "cosem/model.hpp"

namespace cosem {

struct InstanceResult {
  std::size_t instance_id = 0;  // position in the evaluated sequence
  double reciprocal_rank = 0.0;
  bool hit = false;
  std::vector<TokenId> predicted;
};

struct EvalReport {
  double mrr_at_k = 0.0;
  double hr_at_k = 0.0;
  std::size_t k = 5;
  std::size_t instance_count = 0;  // scored instances
  std::size_t skipped_oov = 0;
  std::vector<InstanceResult> per_instance;
};

/// 1/f for the first position f <= k whose id is in `target_ids`, else 0.
double reciprocal_rank(std::span<const TokenId> predicted, std::span<const TokenId> target_ids,
                       std::size_t k);

bool hit(std::span<const TokenId> predicted, std::span<const TokenId> target_ids, std::size_t k);

/// Produces at most k ranked app ids for an instance.
using Ranker = std::function<std::vector<TokenId>(const WindowInstance&, std::size_t k)>;

/// Scores every instance with a non-empty target; the rest count as
/// skipped_oov. Throws AllInstancesSkipped when nothing is scorable.
EvalReport evaluate(const Ranker& ranker, std::span<const WindowInstance> instances, std::size_t k);

/// The k most recent distinct apps in the history, newest first.
std::vector<TokenId> mru_baseline(const WindowInstance& instance, std::size_t k);

Ranker mru_ranker();
Ranker model_ranker(const Model& model);

/// Uniformly random ranking over `app_count` apps, re-seeded per instance
/// from (seed, window_start, user_id) so it is order-independent.
Ranker random_ranker(std::size_t app_count, std::uint64_t seed);

struct RemappedInstances {
  std::vector<WindowInstance> instances;
  std::size_t unknown_history_apps = 0;
  std::size_t unknown_target_apps = 0;
  std::size_t unknown_chunks = 0;
};

/// Re-encodes instances built against one pair of vocabularies into the ids
/// of another (a checkpoint's). Unknown chunks become the OOV id 0, unknown
/// history apps are dropped, unknown target apps are removed from the target
/// set; an instance left with no target is later skipped by `evaluate`.
RemappedInstances remap_instances(std::span<const WindowInstance> instances,
                                  const Vocabulary& from_apps, const Vocabulary& from_semantic,
                                  const Vocabulary& to_apps, const Vocabulary& to_semantic);

nlohmann::ordered_json report_to_json(const EvalReport& report, const std::string& name);

struct ReportRow {
  std::string name;
  const EvalReport* report = nullptr;
};

/// Plain-text comparison table: one row per model, M@k and H@k columns.
std::string format_table(std::span<const ReportRow> rows);

}  // namespace cosem
