#include <algorithm>
#include <cstdio>

#include "cosem/corpus.hpp"
#include "cosem/error.hpp"
#include "cosem/rng.hpp"

// Synthetic app-usage logs.
//
// Each user produces a run of sessions. A session occupies one hour-long
// slot and carries a single semantic chunk "cNN" with 1-4 events; about one
// slot in five is left idle so that some windows are empty. Apps are chosen
// per event:
//
//   semantic_only  app = chunk_map[chunk]
//   history_only   app = successor[prev_app]          (chunk is pure noise)
//   joint          app = group_map[group(prev_app)][chunk]
//
// where group(a) = a mod G with G = min(3, apps), and group_map sends each
// chunk to an app of the given group. Under `joint` the chunk alone leaves
// the group ambiguous and the history alone leaves the chunk unknown. With
// probability `noise` the rule is bypassed for a uniformly random app.

namespace cosem {

namespace {

constexpr Timestamp kEpochBase = 1'600'000'000;
constexpr Timestamp kSlotSeconds = 3600;

std::string padded(char prefix, std::size_t value, std::size_t count) {
  int width = 1;
  for (std::size_t n = count > 0 ? count - 1 : 0; n >= 10; n /= 10) ++width;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, value);
  return buf;
}

}  // namespace

Coupling parse_coupling(std::string_view name) {
  if (name == "semantic_only" || name == "semantic-only") return Coupling::semantic_only;
  if (name == "history_only" || name == "history-only") return Coupling::history_only;
  if (name == "joint") return Coupling::joint;
  throw Error(ErrorCode::invalid_argument, "unknown coupling '" + std::string(name) + "'");
}

std::string_view coupling_name(Coupling coupling) {
  switch (coupling) {
    case Coupling::semantic_only: return "semantic_only";
    case Coupling::history_only: return "history_only";
    case Coupling::joint: return "joint";
  }
  return "joint";
}

std::vector<Event> synthesize(const SynthOptions& o) {
  if (o.users < 1 || o.apps < 1 || o.chunks < 1 || o.events_per_user < 1) {
    throw Error(ErrorCode::invalid_argument, "synthesize: all counts must be at least 1");
  }
  if (!(o.noise >= 0.0 && o.noise <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "synthesize: noise must lie in [0, 1]");
  }

  Rng rng(o.seed);

  std::vector<std::size_t> chunk_map(o.chunks);
  for (auto& a : chunk_map) a = rng.below(o.apps);

  std::vector<std::size_t> successor(o.apps);
  for (std::size_t a = 0; a < o.apps; ++a) successor[a] = a;
  rng.shuffle(std::span<std::size_t>(successor));

  const std::size_t groups = std::min<std::size_t>(3, o.apps);
  std::vector<std::vector<std::size_t>> group_map(groups, std::vector<std::size_t>(o.chunks));
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t members = (o.apps - g + groups - 1) / groups;
    for (auto& a : group_map[g]) a = g + groups * rng.below(members);
  }

  std::vector<std::string> app_names(o.apps), chunk_names(o.chunks);
  for (std::size_t a = 0; a < o.apps; ++a) app_names[a] = padded('a', a, o.apps);
  for (std::size_t c = 0; c < o.chunks; ++c) chunk_names[c] = padded('c', c, o.chunks);

  std::vector<Event> events;
  events.reserve(o.users * o.events_per_user);
  for (std::size_t u = 0; u < o.users; ++u) {
    const std::string user = padded('u', u, o.users);
    const Timestamp origin = kEpochBase + static_cast<Timestamp>(rng.below(86400));
    std::size_t prev = rng.below(o.apps);
    std::size_t emitted = 0;
    Timestamp slot = 0;

    while (emitted < o.events_per_user) {
      const std::size_t chunk = rng.below(o.chunks);
      const std::size_t length =
          std::min<std::size_t>(1 + rng.below(4), o.events_per_user - emitted);

      std::vector<Timestamp> offsets(length);
      for (auto& off : offsets) off = static_cast<Timestamp>(rng.below(kSlotSeconds));
      if (emitted == 0) offsets[0] = 0;
      std::sort(offsets.begin(), offsets.end());

      for (std::size_t k = 0; k < length; ++k) {
        std::size_t app = 0;
        if (rng.bernoulli(o.noise)) {
          app = rng.below(o.apps);
        } else {
          switch (o.coupling) {
            case Coupling::semantic_only: app = chunk_map[chunk]; break;
            case Coupling::history_only: app = successor[prev]; break;
            case Coupling::joint: app = group_map[prev % groups][chunk]; break;
          }
        }
        events.push_back(Event{user, origin + slot * kSlotSeconds + offsets[k], app_names[app],
                               {chunk_names[chunk]}});
        prev = app;
      }
      emitted += length;
      slot += rng.bernoulli(0.2) ? 2 : 1;
    }
  }
  return events;
}

}  // namespace cosem
