#include "binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "slowtrack/errors.hpp"

namespace slowtrack::io {

namespace {

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<unsigned char>((value >> (8 * i)) & 0xFFu));
  }
}

template <typename T>
T get_le(const unsigned char* in) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(in[i]) << (8 * i);
  return value;
}

}  // namespace

void Writer::magic(std::string_view tag) { bytes(tag); }

void Writer::u32(std::uint32_t value) { put_le(buffer_, value); }

void Writer::u64(std::uint64_t value) { put_le(buffer_, value); }

void Writer::f64(double value) { put_le(buffer_, std::bit_cast<std::uint64_t>(value)); }

void Writer::bytes(std::string_view raw) { buffer_.insert(buffer_.end(), raw.begin(), raw.end()); }

void Writer::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(buffer_.data()),
            static_cast<std::streamsize>(buffer_.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

Reader Reader::open(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return Reader(std::move(data));
}

void Reader::need(std::size_t count, std::string_view field) const {
  if (remaining() < count) {
    throw FormatError("truncated payload reading " + std::string(field), offset_);
  }
}

void Reader::expect_magic(std::string_view tag) {
  need(tag.size(), "magic");
  if (std::memcmp(data_.data() + offset_, tag.data(), tag.size()) != 0) {
    throw FormatError("bad magic, expected \"" + std::string(tag) + "\"", offset_);
  }
  offset_ += tag.size();
}

std::uint32_t Reader::u32(std::string_view field) {
  need(4, field);
  const auto v = get_le<std::uint32_t>(data_.data() + offset_);
  offset_ += 4;
  return v;
}

std::uint64_t Reader::u64(std::string_view field) {
  need(8, field);
  const auto v = get_le<std::uint64_t>(data_.data() + offset_);
  offset_ += 8;
  return v;
}

double Reader::f64(std::string_view field) { return std::bit_cast<double>(u64(field)); }

std::string Reader::bytes(std::size_t count, std::string_view field) {
  need(count, field);
  std::string out(reinterpret_cast<const char*>(data_.data() + offset_), count);
  offset_ += count;
  return out;
}

void Reader::expect_end() const {
  if (remaining() != 0) throw FormatError("trailing bytes after payload", offset_);
}

}  // namespace slowtrack::io
