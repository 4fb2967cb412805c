#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace memrouter {

using Sha256 = std::array<std::uint8_t, 32>;
using Digest16 = std::array<std::uint8_t, 16>;

Sha256 sha256(std::span<const std::uint8_t> bytes);
Sha256 sha256(std::string_view text);

/// First 16 bytes of SHA-256; used to key cached rows by content.
Digest16 digest16(std::string_view text);

std::string to_hex(std::span<const std::uint8_t> bytes);

/// Little-endian byte buffer used by the binary file formats.
class ByteWriter {
 public:
  void put_bytes(std::span<const std::uint8_t> bytes);
  void put_magic(std::string_view magic);
  void put_u32(std::uint32_t v);
  void put_f32(float v);

  const std::vector<std::uint8_t>& bytes() const noexcept { return buf_; }
  /// Appends the SHA-256 of everything written so far.
  void seal();

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  /// Verifies the trailing SHA-256 over the payload; throws ChecksumError.
  ByteReader(std::vector<std::uint8_t> bytes, std::string_view what);

  void expect_magic(std::string_view magic);
  std::uint32_t get_u32();
  float get_f32();
  void get_bytes(std::span<std::uint8_t> out);
  bool at_end() const noexcept { return pos_ == end_; }

 private:
  void need(std::size_t n);

  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
  std::string what_;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
/// Writes via a temporary file and rename so readers never see a partial file.
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace memrouter
