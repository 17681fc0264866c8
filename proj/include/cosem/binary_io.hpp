#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cosem/numerics.hpp"

namespace cosem::binio {

/// Appends little-endian primitives to a byte string.
class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void str(std::string_view s);
  void u32_list(std::span<const std::uint32_t> values);
  void matrix(const Matrix& m);
  void bytes(std::string_view raw) { out_.append(raw); }

  const std::string& data() const noexcept { return out_; }
  std::string take() noexcept { return std::move(out_); }

 private:
  std::string out_;
};

/// Reads what Writer wrote; throws CorruptFile on any overrun.
class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  std::string str();
  std::vector<std::uint32_t> u32_list();
  Matrix matrix();
  std::string_view raw(std::size_t n);

  bool at_end() const noexcept { return pos_ == data_.size(); }
  void expect_end() const;

 private:
  void need(std::size_t n) const;

  std::string_view data_;
  std::size_t pos_ = 0;
};

using Tag = std::array<char, 4>;

struct Section {
  Tag tag;
  std::string payload;
};

/// Container layout (all integers little-endian):
///
///   magic[8] | u32 version | u32 section_count
///   section_count x ( tag[4] | u64 length | payload[length] )
///   u32 crc32 of every preceding byte
///
/// Magic and version are checked before the checksum so a file from a newer
/// writer reports VersionMismatch rather than CorruptFile.
std::string write_container(std::string_view magic, std::uint32_t version,
                            std::span<const Section> sections);

std::vector<Section> read_container(std::string_view bytes, std::string_view magic,
                                    std::uint32_t max_version, std::uint32_t* version_out = nullptr);

/// Returns the payload of the section with `tag`; CorruptFile if missing.
std::string_view find_section(std::span<const Section> sections, Tag tag);

std::uint32_t crc32(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

constexpr Tag make_tag(const char (&s)[5]) { return {s[0], s[1], s[2], s[3]}; }

}  // namespace cosem::binio
