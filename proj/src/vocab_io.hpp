#pragma once

#include <string>
#include <string_view>

#include "cosem/binary_io.hpp"
#include "cosem/corpus.hpp"

namespace cosem {

// u8 has_oov_sentinel | u64 count | count x string
inline std::string encode_vocabulary(const Vocabulary& v) {
  binio::Writer w;
  w.u8(v.has_oov_sentinel() ? 1 : 0);
  w.u64(v.size());
  for (const auto& t : v.tokens()) w.str(t);
  return w.take();
}

inline Vocabulary decode_vocabulary(std::string_view bytes) {
  binio::Reader r(bytes);
  const bool has_oov = r.u8() != 0;
  const std::uint64_t n = r.u64();
  std::vector<std::string> tokens;
  for (std::uint64_t i = 0; i < n; ++i) tokens.push_back(r.str());
  r.expect_end();
  return Vocabulary::from_tokens(std::move(tokens), has_oov);
}

}  // namespace cosem
