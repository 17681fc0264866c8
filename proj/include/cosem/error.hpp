#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cosem {

// Numeric values double as CLI exit codes; keep in sync with cosem_status in
// cosem.h.
enum class ErrorCode : int {
  invalid_argument = 1,
  parse_error = 2,
  empty_corpus = 3,
  io_error = 4,
  divergence = 5,
  all_instances_skipped = 6,
  version_mismatch = 7,
  corrupt_file = 8,
  index_out_of_range = 9,
  shape_mismatch = 10,
  empty_train_set = 11,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by ingest when too many lines fail to parse. `line()` is the 1-based
// number of the first malformed line.
class ParseError : public Error {
 public:
  ParseError(std::int64_t line, const std::string& message)
      : Error(ErrorCode::parse_error, message), line_(line) {}

  std::int64_t line() const noexcept { return line_; }

 private:
  std::int64_t line_;
};

}  // namespace cosem
