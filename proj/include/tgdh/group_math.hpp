#pragma once

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>

#include "tgdh/wire.hpp"

namespace tgdh {

enum class Profile { test, production };

/// Explicit exponentiation accumulator. Owned by the caller, never global, so
/// concurrent workers each count their own work.
struct ExpCounter {
  std::uint64_t count = 0;
};

/// Prime-order-agnostic multiplicative group Z_p^* with a fixed generator and
/// the tag mixed into group-key derivation.
class GroupParams {
 public:
  /// Validates primality (64 Miller-Rabin rounds) and 2 <= g <= p-2.
  GroupParams(mpz_class modulus, mpz_class generator, std::string kdf_tag);

  /// p = 23, g = 5. Small enough for exhaustive oracles.
  static const GroupParams& test();
  /// 2048-bit MODP group 14 (RFC 3526), g = 2.
  static const GroupParams& production();
  static const GroupParams& for_profile(Profile profile);

  const mpz_class& modulus() const { return p_; }
  const mpz_class& generator() const { return g_; }
  const std::string& kdf_tag() const { return kdf_tag_; }
  bool is_safe_prime() const;

 private:
  mpz_class p_;
  mpz_class g_;
  std::string kdf_tag_;
};

/// A private share or node key, in [1, p-2].
class Exponent {
 public:
  explicit Exponent(mpz_class value) : value_(std::move(value)) {}
  const mpz_class& value() const { return value_; }
  friend bool operator==(const Exponent&, const Exponent&) = default;

 private:
  mpz_class value_;
};

/// A canonical element of Z_p^*, in [1, p-1].
class GroupElement {
 public:
  explicit GroupElement(mpz_class value) : value_(std::move(value)) {}
  const mpz_class& value() const { return value_; }
  friend bool operator==(const GroupElement&, const GroupElement&) = default;

 private:
  mpz_class value_;
};

struct GroupKey {
  std::array<std::uint8_t, 32> bytes{};
  std::uint64_t epoch = 0;
  friend bool operator==(const GroupKey&, const GroupKey&) = default;
};

/// Seeded source backing share generation; deterministic for a fixed seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

bool is_valid_exponent(const GroupParams& params, const mpz_class& v);
bool is_valid_element(const GroupParams& params, const mpz_class& v);

Exponent random_exponent(const GroupParams& params, Rng& rng);

/// g^k mod p. Counts one exponentiation.
GroupElement blind(const GroupParams& params, const Exponent& k, ExpCounter& counter);

/// bk^k mod p. Counts one exponentiation.
GroupElement dh(const GroupParams& params, const Exponent& k, const GroupElement& bk,
                ExpCounter& counter);

/// An internal node key becomes the next level's exponent; 0 and p-1 clamp to 1.
Exponent element_to_exponent(const GroupParams& params, const GroupElement& e);

/// SHA-256(kdf_tag || minimal big-endian root || epoch as u64 big-endian).
GroupKey derive_group_key(const GroupParams& params, const GroupElement& root,
                          std::uint64_t epoch);

// Minimal big-endian encoding, never empty, no leading zero byte.
Bytes encode_integer(const mpz_class& v);
/// Throws malformed_encoding on empty input or a leading zero byte.
mpz_class decode_integer(std::span<const std::uint8_t> bytes);

Bytes sha256(std::span<const std::uint8_t> data);

}  // namespace tgdh
