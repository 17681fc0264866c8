#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cosem/corpus.hpp"

namespace cosem {

/// A prepared corpus on disk: split instances with their vocabularies, plus
/// the JSON text of the settings that produced them.
struct CorpusBundle {
  static constexpr std::uint32_t kFormatVersion = 1;

  SplitCorpus split;
  std::string config_json;

  friend bool operator==(const CorpusBundle&, const CorpusBundle&) = default;
};

std::string serialize_bundle(const CorpusBundle& bundle);
CorpusBundle deserialize_bundle(std::string_view bytes);

void save_bundle(const CorpusBundle& bundle, const std::filesystem::path& path);
CorpusBundle load_bundle(const std::filesystem::path& path);

}  // namespace cosem
