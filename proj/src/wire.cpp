#include "tgdh/wire.hpp"

#include "tgdh/error.hpp"

namespace tgdh {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::duplicate_member: return "DuplicateMember";
    case ErrorCode::unknown_member: return "UnknownMember";
    case ErrorCode::last_member: return "LastMember";
    case ErrorCode::empty_survivor_set: return "EmptySurvivorSet";
    case ErrorCode::overlapping_membership: return "OverlappingMembership";
    case ErrorCode::missing_sibling_blinded_key: return "MissingSiblingBlindedKey";
    case ErrorCode::malformed_encoding: return "MalformedEncoding";
    case ErrorCode::tree_too_deep: return "TreeTooDeep";
    case ErrorCode::bad_signature: return "BadSignature";
    case ErrorCode::stale_epoch: return "StaleEpoch";
    case ErrorCode::not_a_member: return "NotAMember";
    case ErrorCode::protocol_overload: return "ProtocolOverload";
    case ErrorCode::invalid_state: return "InvalidState";
    case ErrorCode::non_quiescence: return "NonQuiescence";
    case ErrorCode::invalid_cell_cover: return "InvalidCellCover";
    case ErrorCode::scenario_parse_error: return "ScenarioParseError";
  }
  return "Unknown";
}

void ByteWriter::u16(std::uint16_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
}

void ByteWriter::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void ByteWriter::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void ByteWriter::raw(std::span<const std::uint8_t> bytes) {
  out_.insert(out_.end(), bytes.begin(), bytes.end());
}

void ByteWriter::lp16(std::span<const std::uint8_t> bytes) {
  if (bytes.size() > 0xFFFF) {
    throw Error(ErrorCode::invalid_argument, "field longer than 65535 bytes");
  }
  u16(static_cast<std::uint16_t>(bytes.size()));
  raw(bytes);
}

void ByteWriter::lp16(std::string_view text) {
  lp16(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t n) {
  if (remaining() < n) {
    throw Error(ErrorCode::malformed_encoding,
                "truncated input at offset " + std::to_string(pos_));
  }
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t ByteReader::u8() { return raw(1)[0]; }

std::uint16_t ByteReader::u16() {
  auto b = raw(2);
  return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

std::uint32_t ByteReader::u32() {
  auto b = raw(4);
  std::uint32_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

std::uint64_t ByteReader::u64() {
  auto b = raw(8);
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

std::span<const std::uint8_t> ByteReader::lp16() { return raw(u16()); }

std::string ByteReader::lp16_string() {
  auto b = lp16();
  return std::string(b.begin(), b.end());
}

void ByteReader::expect_done() const {
  if (!done()) {
    throw Error(ErrorCode::malformed_encoding,
                std::to_string(remaining()) + " trailing bytes");
  }
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

}  // namespace tgdh
