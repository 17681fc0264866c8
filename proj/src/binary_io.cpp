#include "cosem/binary_io.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "cosem/error.hpp"

namespace cosem::binio {

void Writer::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void Writer::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void Writer::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void Writer::str(std::string_view s) {
  u64(s.size());
  out_.append(s);
}

void Writer::u32_list(std::span<const std::uint32_t> values) {
  u64(values.size());
  for (auto v : values) u32(v);
}

void Writer::matrix(const Matrix& m) {
  u64(m.rows());
  u64(m.cols());
  for (double v : m.data()) f64(v);
}

void Reader::need(std::size_t n) const {
  if (n > data_.size() - pos_) {
    throw Error(ErrorCode::corrupt_file, "unexpected end of data");
  }
}

std::uint8_t Reader::u8() {
  need(1);
  return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint32_t Reader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
  }
  return v;
}

std::uint64_t Reader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
  }
  return v;
}

double Reader::f64() { return std::bit_cast<double>(u64()); }

std::string_view Reader::raw(std::size_t n) {
  need(n);
  const auto out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::string Reader::str() {
  const std::uint64_t n = u64();
  need(n);
  return std::string(raw(n));
}

std::vector<std::uint32_t> Reader::u32_list() {
  const std::uint64_t n = u64();
  if (n > (data_.size() - pos_) / 4) throw Error(ErrorCode::corrupt_file, "list length overrun");
  std::vector<std::uint32_t> out(n);
  for (auto& v : out) v = u32();
  return out;
}

Matrix Reader::matrix() {
  const std::uint64_t rows = u64();
  const std::uint64_t cols = u64();
  if (cols != 0 && rows > (data_.size() - pos_) / 8 / cols) {
    throw Error(ErrorCode::corrupt_file, "matrix size overrun");
  }
  Matrix m(rows, cols);
  for (double& v : m.data()) v = f64();
  return m;
}

void Reader::expect_end() const {
  if (!at_end()) throw Error(ErrorCode::corrupt_file, "trailing bytes in section");
}

std::uint32_t crc32(std::string_view bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large inputs in pieces.
  while (!bytes.empty()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size(), 1u << 30));
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), n);
    bytes.remove_prefix(n);
  }
  return static_cast<std::uint32_t>(crc);
}

std::string write_container(std::string_view magic, std::uint32_t version,
                            std::span<const Section> sections) {
  Writer w;
  w.bytes(magic);
  w.u32(version);
  w.u32(static_cast<std::uint32_t>(sections.size()));
  for (const auto& s : sections) {
    w.bytes(std::string_view(s.tag.data(), 4));
    w.str(s.payload);
  }
  w.u32(crc32(w.data()));
  return w.take();
}

std::vector<Section> read_container(std::string_view bytes, std::string_view magic,
                                    std::uint32_t max_version, std::uint32_t* version_out) {
  Reader header(bytes);
  if (bytes.size() < magic.size() || header.raw(magic.size()) != magic) {
    throw Error(ErrorCode::corrupt_file, "bad magic: not a " + std::string(magic) + " file");
  }
  const std::uint32_t version = header.u32();
  if (version == 0 || version > max_version) {
    throw Error(ErrorCode::version_mismatch, "format version " + std::to_string(version) +
                                                 " not supported (max " +
                                                 std::to_string(max_version) + ")");
  }
  if (version_out) *version_out = version;

  if (bytes.size() < magic.size() + 12) {
    throw Error(ErrorCode::corrupt_file, "file truncated");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  Reader trailer(bytes.substr(bytes.size() - 4));
  if (trailer.u32() != crc32(body)) {
    throw Error(ErrorCode::corrupt_file, "checksum mismatch (file truncated or modified)");
  }

  Reader r(body);
  r.raw(magic.size());
  r.u32();
  const std::uint32_t count = r.u32();
  std::vector<Section> sections;
  for (std::uint32_t i = 0; i < count; ++i) {
    Section s;
    const auto tag = r.raw(4);
    std::copy(tag.begin(), tag.end(), s.tag.begin());
    s.payload = r.str();
    sections.push_back(std::move(s));
  }
  r.expect_end();
  return sections;
}

std::string_view find_section(std::span<const Section> sections, Tag tag) {
  for (const auto& s : sections) {
    if (s.tag == tag) return s.payload;
  }
  throw Error(ErrorCode::corrupt_file,
              "missing section '" + std::string(tag.data(), tag.size()) + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path.string());
}

}  // namespace cosem::binio
