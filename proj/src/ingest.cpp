#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cosem/corpus.hpp"
#include "cosem/error.hpp"

namespace cosem {

namespace {

using json = nlohmann::json;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool valid_event(const Event& e) { return !e.user_id.empty() && !e.app.empty() && e.timestamp >= 0; }

std::optional<Event> parse_jsonl_line(std::string_view line) {
  const json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (!j.is_object()) return std::nullopt;
  const auto user = j.find("user");
  const auto ts = j.find("ts");
  const auto app = j.find("app");
  if (user == j.end() || !user->is_string()) return std::nullopt;
  if (ts == j.end() || !ts->is_number_integer()) return std::nullopt;
  if (app == j.end() || !app->is_string()) return std::nullopt;

  Event e;
  e.user_id = user->get<std::string>();
  e.timestamp = ts->get<std::int64_t>();
  e.app = app->get<std::string>();
  if (const auto sem = j.find("sem"); sem != j.end()) {
    if (!sem->is_array()) return std::nullopt;
    for (const auto& tok : *sem) {
      if (!tok.is_string()) return std::nullopt;
      e.semantic_chunks.push_back(tok.get<std::string>());
    }
  }
  if (!valid_event(e)) return std::nullopt;
  return e;
}

// RFC 4180 field splitting for a single physical line.
std::optional<std::vector<std::string>> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      if (!field.empty() || was_quoted) return std::nullopt;
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '\r' && i + 1 == line.size()) {
      break;
    } else {
      if (was_quoted) return std::nullopt;
      field.push_back(c);
    }
  }
  if (quoted) return std::nullopt;
  fields.push_back(std::move(field));
  return fields;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::int64_t value = 0;
  std::size_t pos = 0;
  try {
    value = std::stoll(std::string(s), &pos);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  return value;
}

std::optional<Event> parse_csv_line(std::string_view line) {
  const auto fields = split_csv_line(line);
  if (!fields || fields->size() != 4) return std::nullopt;
  const auto ts = parse_int((*fields)[1]);
  if (!ts) return std::nullopt;
  Event e;
  e.user_id = std::string(trim((*fields)[0]));
  e.timestamp = *ts;
  e.app = std::string(trim((*fields)[2]));
  e.semantic_chunks = split_whitespace((*fields)[3]);
  if (!valid_event(e)) return std::nullopt;
  return e;
}

}  // namespace

EventFormat parse_event_format(std::string_view name) {
  if (name == "jsonl") return EventFormat::jsonl;
  if (name == "csv") return EventFormat::csv;
  throw Error(ErrorCode::invalid_argument, "unknown event format '" + std::string(name) + "'");
}

IngestResult ingest_text(std::string_view text, EventFormat format, std::string_view source) {
  IngestResult result;
  std::size_t data_lines = 0;
  std::int64_t line_no = 0;
  bool header_pending = format == EventFormat::csv;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (trim(line).empty()) continue;

    if (header_pending) {
      header_pending = false;
      const auto header = split_csv_line(line);
      bool ok = header && header->size() == 4;
      static constexpr std::string_view kColumns[] = {"user", "ts", "app", "sem"};
      for (std::size_t k = 0; ok && k < 4; ++k) ok = trim((*header)[k]) == kColumns[k];
      if (!ok) {
        throw ParseError(line_no, std::string(source) + ":" + std::to_string(line_no) +
                                      ": expected CSV header 'user,ts,app,sem'");
      }
      continue;
    }

    ++data_lines;
    auto event = format == EventFormat::jsonl ? parse_jsonl_line(line) : parse_csv_line(line);
    if (event) {
      result.events.push_back(std::move(*event));
    } else {
      if (result.malformed_lines == 0) result.first_malformed_line = line_no;
      ++result.malformed_lines;
    }
  }

  if (result.malformed_lines * 100 > data_lines) {
    throw ParseError(result.first_malformed_line,
                     std::string(source) + ":" + std::to_string(result.first_malformed_line) +
                         ": " + std::to_string(result.malformed_lines) + " of " +
                         std::to_string(data_lines) + " lines malformed (limit 1%)");
  }
  if (result.events.empty()) {
    throw Error(ErrorCode::empty_corpus, std::string(source) + ": no valid events");
  }

  std::stable_sort(result.events.begin(), result.events.end(), [](const Event& a, const Event& b) {
    if (a.user_id != b.user_id) return a.user_id < b.user_id;
    return a.timestamp < b.timestamp;
  });
  return result;
}

IngestResult ingest(const std::filesystem::path& path, EventFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "file not found or unreadable: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ingest_text(buffer.str(), format, path.string());
}

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot read stopword file: " + path.string());
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto word = trim(line);
    if (!word.empty()) words.emplace(word);
  }
  return words;
}

std::unordered_set<std::string> default_stopwords() {
  // Mirrors data/stopwords_en.txt.
  static const char* const kWords[] = {
      "a",       "about",   "above",   "after",  "again",  "against", "all",     "am",
      "an",      "and",     "any",     "are",    "as",     "at",      "be",      "because",
      "been",    "before",  "being",   "below",  "between", "both",   "but",     "by",
      "can",     "could",   "did",     "do",     "does",   "doing",   "down",    "during",
      "each",    "few",     "for",     "from",   "further", "had",    "has",     "have",
      "having",  "he",      "her",     "here",   "hers",   "herself", "him",     "himself",
      "his",     "how",     "i",       "if",     "in",     "into",    "is",      "it",
      "its",     "itself",  "just",    "me",     "more",   "most",    "my",      "myself",
      "no",      "nor",     "not",     "now",    "of",     "off",     "on",      "once",
      "only",    "or",      "other",   "our",    "ours",   "ourselves", "out",   "over",
      "own",     "same",    "she",     "should", "so",     "some",    "such",    "than",
      "that",    "the",     "their",   "theirs", "them",   "themselves", "then", "there",
      "these",   "they",    "this",    "those",  "through", "to",     "too",     "under",
      "until",   "up",      "very",    "was",    "we",     "were",    "what",    "when",
      "where",   "which",   "while",   "who",    "whom",   "why",     "will",    "with",
      "would",   "you",     "your",    "yours",  "yourself", "yourselves",
  };
  return {std::begin(kWords), std::end(kWords)};
}

std::string events_to_jsonl(const std::vector<Event>& events) {
  std::string out;
  for (const auto& e : events) {
    nlohmann::ordered_json j;
    j["user"] = e.user_id;
    j["ts"] = e.timestamp;
    j["app"] = e.app;
    j["sem"] = e.semantic_chunks;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace cosem
