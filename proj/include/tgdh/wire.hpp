#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tgdh {

using Bytes = std::vector<std::uint8_t>;

// Big-endian primitives shared by the tree and message encodings.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void raw(std::span<const std::uint8_t> bytes);
  // 2-byte length prefix; throws invalid_argument when the payload exceeds 65535 bytes.
  void lp16(std::span<const std::uint8_t> bytes);
  void lp16(std::string_view text);

  const Bytes& bytes() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
};

// All reads throw Error(malformed_encoding) on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::span<const std::uint8_t> raw(std::size_t n);
  std::span<const std::uint8_t> lp16();
  std::string lp16_string();

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }
  void expect_done() const;

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace tgdh
