#include "cosem/evaluation.hpp"

#include <algorithm>
#include <cstdio>

#include "cosem/error.hpp"
#include "cosem/rng.hpp"

namespace cosem {

namespace {

bool contains(std::span<const TokenId> sorted_or_not, TokenId id) {
  return std::find(sorted_or_not.begin(), sorted_or_not.end(), id) != sorted_or_not.end();
}

}  // namespace

double reciprocal_rank(std::span<const TokenId> predicted, std::span<const TokenId> target_ids,
                       std::size_t k) {
  const std::size_t n = std::min(k, predicted.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (contains(target_ids, predicted[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

bool hit(std::span<const TokenId> predicted, std::span<const TokenId> target_ids, std::size_t k) {
  const std::size_t n = std::min(k, predicted.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (contains(target_ids, predicted[i])) return true;
  }
  return false;
}

EvalReport evaluate(const Ranker& ranker, std::span<const WindowInstance> instances, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::invalid_argument, "evaluate: k must be at least 1");
  EvalReport report;
  report.k = k;
  double rr_sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const WindowInstance& inst = instances[i];
    if (inst.target_ids.empty()) {
      ++report.skipped_oov;
      continue;
    }
    InstanceResult r;
    r.instance_id = i;
    r.predicted = ranker(inst, k);
    if (r.predicted.size() > k) r.predicted.resize(k);
    r.reciprocal_rank = reciprocal_rank(r.predicted, inst.target_ids, k);
    r.hit = hit(r.predicted, inst.target_ids, k);
    rr_sum += r.reciprocal_rank;
    hits += r.hit ? 1 : 0;
    report.per_instance.push_back(std::move(r));
  }
  report.instance_count = report.per_instance.size();
  if (report.instance_count == 0) {
    throw Error(ErrorCode::all_instances_skipped,
                "no scorable instances (" + std::to_string(report.skipped_oov) + " skipped)");
  }
  const auto n = static_cast<double>(report.instance_count);
  report.mrr_at_k = rr_sum / n;
  report.hr_at_k = static_cast<double>(hits) / n;
  return report;
}

std::vector<TokenId> mru_baseline(const WindowInstance& instance, std::size_t k) {
  std::vector<TokenId> out;
  for (auto it = instance.history_ids.rbegin(); it != instance.history_ids.rend() && out.size() < k;
       ++it) {
    if (std::find(out.begin(), out.end(), *it) == out.end()) out.push_back(*it);
  }
  return out;
}

Ranker mru_ranker() {
  return [](const WindowInstance& inst, std::size_t k) { return mru_baseline(inst, k); };
}

Ranker model_ranker(const Model& model) {
  return [&model](const WindowInstance& inst, std::size_t k) {
    const Vector probs = model.forward(inst.semantic_ids, inst.history_ids);
    return predict_topk(probs, std::min(k, probs.size()));
  };
}

Ranker random_ranker(std::size_t app_count, std::uint64_t seed) {
  return [app_count, seed](const WindowInstance& inst, std::size_t k) {
    std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
    h ^= static_cast<std::uint64_t>(inst.window_start) * 0xff51afd7ed558ccdULL;
    for (unsigned char c : inst.user_id) h = (h ^ c) * 0x100000001b3ULL;
    Rng rng(h);
    std::vector<TokenId> ids(app_count);
    for (std::size_t i = 0; i < app_count; ++i) ids[i] = static_cast<TokenId>(i);
    rng.shuffle(std::span<TokenId>(ids));
    ids.resize(std::min(k, app_count));
    return ids;
  };
}

RemappedInstances remap_instances(std::span<const WindowInstance> instances,
                                  const Vocabulary& from_apps, const Vocabulary& from_semantic,
                                  const Vocabulary& to_apps, const Vocabulary& to_semantic) {
  RemappedInstances out;
  out.instances.reserve(instances.size());
  for (const auto& inst : instances) {
    WindowInstance r;
    r.user_id = inst.user_id;
    r.window_start = inst.window_start;
    r.window_end = inst.window_end;
    for (TokenId id : inst.semantic_ids) {
      const auto mapped = id == 0 && from_semantic.has_oov_sentinel()
                              ? std::optional<TokenId>{}
                              : to_semantic.find(from_semantic.token(id));
      if (!mapped) ++out.unknown_chunks;
      r.semantic_ids.push_back(mapped.value_or(0));
    }
    for (TokenId id : inst.history_ids) {
      if (const auto mapped = to_apps.find(from_apps.token(id))) {
        r.history_ids.push_back(*mapped);
      } else {
        ++out.unknown_history_apps;
      }
    }
    for (TokenId id : inst.target_ids) {
      if (const auto mapped = to_apps.find(from_apps.token(id))) {
        r.target_ids.push_back(*mapped);
      } else {
        ++out.unknown_target_apps;
      }
    }
    std::sort(r.target_ids.begin(), r.target_ids.end());
    out.instances.push_back(std::move(r));
  }
  return out;
}

nlohmann::ordered_json report_to_json(const EvalReport& report, const std::string& name) {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["k"] = report.k;
  j["mrr_at_k"] = report.mrr_at_k;
  j["hr_at_k"] = report.hr_at_k;
  j["instance_count"] = report.instance_count;
  j["skipped_oov"] = report.skipped_oov;
  auto per = nlohmann::ordered_json::array();
  for (const auto& r : report.per_instance) {
    nlohmann::ordered_json e;
    e["id"] = r.instance_id;
    e["rr"] = r.reciprocal_rank;
    e["hit"] = r.hit ? 1 : 0;
    e["predicted"] = r.predicted;
    per.push_back(std::move(e));
  }
  j["per_instance"] = std::move(per);
  return j;
}

std::string format_table(std::span<const ReportRow> rows) {
  std::size_t name_width = 5;  // "Model"
  for (const auto& row : rows) name_width = std::max(name_width, row.name.size());
  const std::size_t k = rows.empty() ? 5 : rows.front().report->k;

  std::string out;
  char buf[1024];
  const std::string m_col = "M@" + std::to_string(k);
  const std::string h_col = "H@" + std::to_string(k);
  std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s\n", static_cast<int>(name_width), "Model",
                m_col.c_str(), h_col.c_str());
  out += buf;
  out += std::string(name_width + 20, '-') + "\n";
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %8.4f  %8.4f\n", static_cast<int>(name_width),
                  row.name.c_str(), row.report->mrr_at_k, row.report->hr_at_k);
    out += buf;
  }
  return out;
}

}  // namespace cosem
