#pragma once

// Little-endian binary encoding shared by the session, weight and checkpoint files.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace slowtrack::io {

class Writer {
 public:
  void magic(std::string_view tag);
  void u32(std::uint32_t value);
  void u64(std::uint64_t value);
  void f64(double value);
  void bytes(std::string_view raw);

  const std::vector<unsigned char>& buffer() const noexcept { return buffer_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<unsigned char> buffer_;
};

/// Sequential reader over an in-memory file. Every failure raises FormatError with the
/// offset of the field being decoded.
class Reader {
 public:
  explicit Reader(std::vector<unsigned char> data) : data_(std::move(data)) {}
  static Reader open(const std::filesystem::path& path);

  void expect_magic(std::string_view tag);
  std::uint32_t u32(std::string_view field);
  std::uint64_t u64(std::string_view field);
  double f64(std::string_view field);
  std::string bytes(std::size_t count, std::string_view field);

  std::size_t offset() const noexcept { return offset_; }
  std::size_t remaining() const noexcept { return data_.size() - offset_; }
  void expect_end() const;

 private:
  void need(std::size_t count, std::string_view field) const;

  std::vector<unsigned char> data_;
  std::size_t offset_ = 0;
};

}  // namespace slowtrack::io
