#include "cosem/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <map>

#include "cosem/error.hpp"

namespace cosem {

Vocabulary Vocabulary::with_oov_sentinel() {
  Vocabulary v;
  v.add(std::string(kOovToken));
  v.has_oov_ = true;
  return v;
}

TokenId Vocabulary::add(const std::string& token) {
  auto [it, inserted] = token_to_id_.try_emplace(token, static_cast<TokenId>(id_to_token_.size()));
  if (inserted) id_to_token_.push_back(token);
  return it->second;
}

std::optional<TokenId> Vocabulary::find(const std::string& token) const {
  const auto it = token_to_id_.find(token);
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= id_to_token_.size()) {
    throw Error(ErrorCode::index_out_of_range,
                "token id " + std::to_string(id) + " outside vocabulary of size " +
                    std::to_string(id_to_token_.size()));
  }
  return id_to_token_[id];
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, bool has_oov_sentinel) {
  Vocabulary v;
  if (has_oov_sentinel && (tokens.empty() || tokens.front() != kOovToken)) {
    throw Error(ErrorCode::corrupt_file, "vocabulary is missing its OOV sentinel");
  }
  for (const auto& t : tokens) {
    if (v.add(t) != v.size() - 1) {
      throw Error(ErrorCode::corrupt_file, "duplicate vocabulary token '" + t + "'");
    }
  }
  v.has_oov_ = has_oov_sentinel;
  return v;
}

namespace {

std::string ascii_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// One pass of the rare-app filter followed by the sparse-user filter.
std::vector<Event> filter_counts_once(const std::vector<Event>& events, std::int64_t min_app_count,
                                      std::int64_t min_user_records) {
  std::unordered_map<std::string, std::int64_t> app_counts;
  for (const auto& e : events) ++app_counts[e.app];

  std::vector<Event> kept;
  kept.reserve(events.size());
  for (const auto& e : events) {
    if (app_counts[e.app] >= min_app_count) kept.push_back(e);
  }

  std::unordered_map<std::string, std::int64_t> user_counts;
  for (const auto& e : kept) ++user_counts[e.user_id];
  std::erase_if(kept, [&](const Event& e) { return user_counts[e.user_id] < min_user_records; });
  return kept;
}

}  // namespace

std::vector<Event> apply_filters(const std::vector<Event>& events, const FilterOptions& options) {
  if (options.min_app_count < 0 || options.min_user_records < 0) {
    throw Error(ErrorCode::invalid_argument, "filter thresholds must be non-negative");
  }

  std::vector<Event> current = events;
  for (;;) {
    auto next = filter_counts_once(current, options.min_app_count, options.min_user_records);
    const bool stable = next.size() == current.size();
    current = std::move(next);
    if (stable) break;
  }

  if (!options.stopwords.empty()) {
    std::unordered_set<std::string> lowered;
    for (const auto& w : options.stopwords) lowered.insert(ascii_lower(w));
    for (auto& e : current) {
      std::erase_if(e.semantic_chunks,
                    [&](const std::string& t) { return lowered.contains(ascii_lower(t)); });
    }
  }

  if (current.empty()) {
    throw Error(ErrorCode::empty_corpus, "all events were removed by the corpus filters");
  }
  return current;
}

Vocabularies build_vocabularies(const std::vector<Event>& events) {
  if (events.empty()) {
    throw Error(ErrorCode::empty_corpus, "cannot build vocabularies from zero events");
  }
  Vocabularies v{Vocabulary{}, Vocabulary::with_oov_sentinel()};
  for (const auto& e : events) {
    v.apps.add(e.app);
    for (const auto& chunk : e.semantic_chunks) v.semantic.add(chunk);
  }
  return v;
}

std::vector<WindowInstance> windowize(const std::vector<Event>& events, const Vocabularies& vocabs,
                                      const WindowOptions& options) {
  if (options.window_seconds <= 0) {
    throw Error(ErrorCode::invalid_argument, "window_seconds must be positive");
  }
  if (options.history_len < 1) {
    throw Error(ErrorCode::invalid_argument, "history length must be at least 1");
  }

  std::vector<WindowInstance> out;
  std::size_t i = 0;
  while (i < events.size()) {
    const std::string& user = events[i].user_id;
    const Timestamp origin = events[i].timestamp;
    std::deque<TokenId> history;

    while (i < events.size() && events[i].user_id == user) {
      const std::int64_t window = (events[i].timestamp - origin) / options.window_seconds;
      WindowInstance inst;
      inst.user_id = user;
      inst.window_start = origin + window * options.window_seconds;
      inst.window_end = inst.window_start + options.window_seconds;
      inst.history_ids.assign(history.begin(), history.end());

      std::vector<TokenId> window_apps;
      while (i < events.size() && events[i].user_id == user &&
             events[i].timestamp < inst.window_end) {
        const Event& e = events[i];
        const auto app = vocabs.apps.find(e.app);
        if (!app) {
          throw Error(ErrorCode::index_out_of_range, "app '" + e.app + "' missing from vocabulary");
        }
        window_apps.push_back(*app);
        for (const auto& chunk : e.semantic_chunks) {
          inst.semantic_ids.push_back(vocabs.semantic.find(chunk).value_or(0));
        }
        ++i;
      }

      inst.target_ids = window_apps;
      std::sort(inst.target_ids.begin(), inst.target_ids.end());
      inst.target_ids.erase(std::unique(inst.target_ids.begin(), inst.target_ids.end()),
                            inst.target_ids.end());

      for (TokenId app : window_apps) {
        history.push_back(app);
        if (history.size() > options.history_len) history.pop_front();
      }
      out.push_back(std::move(inst));
    }
  }
  return out;
}

SplitCounts split_counts(std::size_t instance_count, const SplitRatios& ratios) {
  const auto c = static_cast<double>(instance_count);
  SplitCounts counts;
  // The small nudge keeps exact products such as 0.7 * 10 from flooring to 6.
  counts.train = static_cast<std::size_t>(std::floor(ratios.train * c + 1e-9));
  counts.validation = static_cast<std::size_t>(std::floor(ratios.validation * c + 1e-9));
  counts.train = std::min(counts.train, instance_count);
  counts.validation = std::min(counts.validation, instance_count - counts.train);
  counts.test = instance_count - counts.train - counts.validation;
  return counts;
}

SplitCorpus chronological_split(const std::vector<WindowInstance>& instances, Vocabularies vocabs,
                                const SplitRatios& ratios) {
  const double sum = ratios.train + ratios.validation + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9 || ratios.train < 0 || ratios.validation < 0 || ratios.test < 0) {
    throw Error(ErrorCode::invalid_argument, "split ratios must be non-negative and sum to 1");
  }

  std::vector<std::string> user_order;
  std::unordered_map<std::string, std::vector<const WindowInstance*>> by_user;
  for (const auto& inst : instances) {
    auto [it, inserted] = by_user.try_emplace(inst.user_id);
    if (inserted) user_order.push_back(inst.user_id);
    it->second.push_back(&inst);
  }

  SplitCorpus split;
  split.app_vocab = std::move(vocabs.apps);
  split.semantic_vocab = std::move(vocabs.semantic);
  for (const auto& user : user_order) {
    auto& group = by_user[user];
    std::stable_sort(group.begin(), group.end(), [](const auto* a, const auto* b) {
      return a->window_start < b->window_start;
    });
    const SplitCounts counts = split_counts(group.size(), ratios);
    std::size_t k = 0;
    for (; k < counts.train; ++k) split.train.push_back(*group[k]);
    for (; k < counts.train + counts.validation; ++k) split.validation.push_back(*group[k]);
    for (; k < group.size(); ++k) split.test.push_back(*group[k]);
  }
  return split;
}

}  // namespace cosem
