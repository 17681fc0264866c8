#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cosem {

using Timestamp = std::int64_t;
using TokenId = std::uint32_t;

/// One app launch with the semantic chunks observed alongside it.
struct Event {
  std::string user_id;
  Timestamp timestamp = 0;
  std::string app;
  std::vector<std::string> semantic_chunks;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Dense token <-> id map. Ids are assigned in insertion order.
class Vocabulary {
 public:
  static constexpr std::string_view kOovToken = "<oov>";

  Vocabulary() = default;

  /// A vocabulary whose id 0 is the out-of-vocabulary sentinel.
  static Vocabulary with_oov_sentinel();

  /// Returns the id of `token`, inserting it if new.
  TokenId add(const std::string& token);
  std::optional<TokenId> find(const std::string& token) const;
  const std::string& token(TokenId id) const;

  std::size_t size() const noexcept { return id_to_token_.size(); }
  bool has_oov_sentinel() const noexcept { return has_oov_; }
  const std::vector<std::string>& tokens() const noexcept { return id_to_token_; }

  /// Rebuilds a vocabulary from its id-ordered token list.
  static Vocabulary from_tokens(std::vector<std::string> tokens, bool has_oov_sentinel);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.has_oov_ == b.has_oov_ && a.id_to_token_ == b.id_to_token_;
  }

 private:
  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::string> id_to_token_;
  bool has_oov_ = false;
};

/// One prediction example: the semantic chunks seen in window
/// [window_start, window_end), the user's last apps before it, and the apps
/// actually used inside it.
struct WindowInstance {
  std::string user_id;
  Timestamp window_start = 0;
  Timestamp window_end = 0;
  std::vector<TokenId> semantic_ids;
  std::vector<TokenId> history_ids;  // oldest -> newest
  std::vector<TokenId> target_ids;   // distinct, ascending

  friend bool operator==(const WindowInstance&, const WindowInstance&) = default;
};

struct SplitCorpus {
  std::vector<WindowInstance> train;
  std::vector<WindowInstance> validation;
  std::vector<WindowInstance> test;
  Vocabulary app_vocab;
  Vocabulary semantic_vocab;

  friend bool operator==(const SplitCorpus&, const SplitCorpus&) = default;
};

enum class EventFormat { jsonl, csv };

EventFormat parse_event_format(std::string_view name);

struct IngestResult {
  std::vector<Event> events;  // sorted by (user_id, timestamp), stable
  std::size_t malformed_lines = 0;
  std::int64_t first_malformed_line = 0;  // 1-based; 0 when none
};

/// Reads an event log. Tolerates up to 1% malformed (non-blank) lines.
IngestResult ingest(const std::filesystem::path& path, EventFormat format);

/// Same as `ingest` over in-memory text; `source` only labels messages.
IngestResult ingest_text(std::string_view text, EventFormat format,
                         std::string_view source = "<memory>");

struct FilterOptions {
  std::int64_t min_app_count = 10;
  std::int64_t min_user_records = 5;
  std::unordered_set<std::string> stopwords;
};

/// Drops rare apps, then sparse users, repeating both until neither removes
/// anything, then strips stopwords (ASCII case-insensitive) from every
/// event's semantic chunks. Throws EmptyCorpus if nothing survives.
std::vector<Event> apply_filters(const std::vector<Event>& events, const FilterOptions& options);

/// The English function-word list used when no stopword file is given.
std::unordered_set<std::string> default_stopwords();

/// One token per line; blank lines and surrounding whitespace ignored.
std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path);

struct Vocabularies {
  Vocabulary apps;
  Vocabulary semantic;  // id 0 is the OOV sentinel
};

Vocabularies build_vocabularies(const std::vector<Event>& events);

struct WindowOptions {
  std::int64_t window_seconds = 3600;
  std::size_t history_len = 8;
};

/// Tiles each user's timeline into fixed windows aligned to their first
/// event and emits one instance per non-empty window. `events` must be
/// sorted by (user_id, timestamp); every app must be in `vocabs.apps`.
std::vector<WindowInstance> windowize(const std::vector<Event>& events, const Vocabularies& vocabs,
                                      const WindowOptions& options);

struct SplitRatios {
  double train = 0.7;
  double validation = 0.1;
  double test = 0.2;
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

/// floor(train * c) / floor(validation * c) / remainder.
SplitCounts split_counts(std::size_t instance_count, const SplitRatios& ratios);

/// Per-user chronological split. Users keep their first-appearance order.
SplitCorpus chronological_split(const std::vector<WindowInstance>& instances, Vocabularies vocabs,
                                const SplitRatios& ratios = {});

enum class Coupling { semantic_only, history_only, joint };

Coupling parse_coupling(std::string_view name);
std::string_view coupling_name(Coupling coupling);

struct SynthOptions {
  std::uint64_t seed = 1;
  std::size_t users = 50;
  std::size_t apps = 30;
  std::size_t chunks = 20;
  std::size_t events_per_user = 2000;
  Coupling coupling = Coupling::joint;
  // Probability that an event's app is drawn uniformly instead of by rule.
  double noise = 0.05;
};

/// Deterministic synthetic event stream; see synth.cpp for the generative
/// rules of each coupling mode.
std::vector<Event> synthesize(const SynthOptions& options);

/// JSONL rendering of events in the ingest format, one object per line.
std::string events_to_jsonl(const std::vector<Event>& events);

}  // namespace cosem
