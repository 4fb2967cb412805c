#include "memrouter/digest.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "memrouter/error.hpp"

namespace memrouter {

Sha256 sha256(std::span<const std::uint8_t> bytes) {
  Sha256 out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw Error("sha256: EVP_Digest failed");
  }
  return out;
}

Sha256 sha256(std::string_view text) {
  return sha256(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Digest16 digest16(std::string_view text) {
  auto full = sha256(text);
  Digest16 d{};
  std::memcpy(d.data(), full.data(), d.size());
  return d;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xF]);
  }
  return s;
}

void ByteWriter::put_bytes(std::span<const std::uint8_t> bytes) {
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

void ByteWriter::put_magic(std::string_view magic) {
  put_bytes(std::span(reinterpret_cast<const std::uint8_t*>(magic.data()), magic.size()));
}

void ByteWriter::put_u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::put_f32(float v) { put_u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::seal() {
  auto sum = sha256(std::span<const std::uint8_t>(buf_));
  put_bytes(sum);
}

ByteReader::ByteReader(std::vector<std::uint8_t> bytes, std::string_view what)
    : buf_(std::move(bytes)), what_(what) {
  if (buf_.size() < 32) throw ChecksumError(what_ + ": file too short for checksum");
  end_ = buf_.size() - 32;
  auto sum = sha256(std::span<const std::uint8_t>(buf_.data(), end_));
  if (std::memcmp(sum.data(), buf_.data() + end_, 32) != 0) {
    throw ChecksumError(what_ + ": checksum mismatch (truncated or corrupted)");
  }
}

void ByteReader::need(std::size_t n) {
  if (end_ - pos_ < n) throw ParseError(what_, "unexpected end of payload");
}

void ByteReader::expect_magic(std::string_view magic) {
  need(magic.size());
  if (std::memcmp(buf_.data() + pos_, magic.data(), magic.size()) != 0) {
    throw ParseError(what_, "bad header, expected " + std::string(magic));
  }
  pos_ += magic.size();
}

std::uint32_t ByteReader::get_u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{buf_[pos_ + i]} << (8 * i);
  pos_ += 4;
  return v;
}

float ByteReader::get_f32() { return std::bit_cast<float>(get_u32()); }

void ByteReader::get_bytes(std::span<std::uint8_t> out) {
  need(out.size());
  std::memcpy(out.data(), buf_.data() + pos_, out.size());
  pos_ += out.size();
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace memrouter
