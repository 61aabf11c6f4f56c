#include "tgdh/group_math.hpp"

#include <openssl/sha.h>

#include "tgdh/error.hpp"

namespace tgdh {
namespace {

constexpr const char* kModp2048 =
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD1"
    "29024E088A67CC74020BBEA63B139B22514A08798E3404DD"
    "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245"
    "E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3D"
    "C2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F"
    "83655D23DCA3AD961C62F356208552BB9ED529077096966D"
    "670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9"
    "DE2BCBF6955817183995497CEA956AE515D2261898FA0510"
    "15728E5A8AACAA68FFFFFFFFFFFFFFFF";

constexpr const char* kKdfTag = "tgdh-group-key-v1";

mpz_class powm(const mpz_class& base, const mpz_class& exp, const mpz_class& mod) {
  mpz_class out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return out;
}

}  // namespace

GroupParams::GroupParams(mpz_class modulus, mpz_class generator, std::string kdf_tag)
    : p_(std::move(modulus)), g_(std::move(generator)), kdf_tag_(std::move(kdf_tag)) {
  if (p_ < 5 || mpz_probab_prime_p(p_.get_mpz_t(), 64) == 0) {
    throw Error(ErrorCode::invalid_argument, "group modulus is not prime");
  }
  if (g_ < 2 || g_ > p_ - 2) {
    throw Error(ErrorCode::invalid_argument, "generator outside [2, p-2]");
  }
}

const GroupParams& GroupParams::test() {
  static const GroupParams params(23, 5, kKdfTag);
  return params;
}

const GroupParams& GroupParams::production() {
  static const GroupParams params(mpz_class(kModp2048, 16), 2, kKdfTag);
  return params;
}

const GroupParams& GroupParams::for_profile(Profile profile) {
  return profile == Profile::test ? test() : production();
}

bool GroupParams::is_safe_prime() const {
  mpz_class q = (p_ - 1) / 2;
  return mpz_probab_prime_p(q.get_mpz_t(), 64) != 0;
}

bool is_valid_exponent(const GroupParams& params, const mpz_class& v) {
  return v >= 1 && v <= params.modulus() - 2;
}

bool is_valid_element(const GroupParams& params, const mpz_class& v) {
  return v >= 1 && v <= params.modulus() - 1;
}

Exponent random_exponent(const GroupParams& params, Rng& rng) {
  // Rejection sampling over [0, p-3], shifted to [1, p-2].
  const mpz_class span = params.modulus() - 2;
  const mpz_class top = span - 1;
  const std::size_t bits = top == 0 ? 1 : mpz_sizeinbase(top.get_mpz_t(), 2);
  const std::size_t words = (bits + 63) / 64;
  std::vector<std::uint64_t> buffer(words);
  for (;;) {
    for (auto& w : buffer) w = rng.next();
    const std::size_t spare = words * 64 - bits;
    if (spare > 0) buffer.back() >>= spare;
    mpz_class candidate;
    // Least significant word first.
    mpz_import(candidate.get_mpz_t(), words, -1, sizeof(std::uint64_t), 0, 0,
               buffer.data());
    if (candidate < span) return Exponent(candidate + 1);
  }
}

GroupElement blind(const GroupParams& params, const Exponent& k, ExpCounter& counter) {
  ++counter.count;
  return GroupElement(powm(params.generator(), k.value(), params.modulus()));
}

GroupElement dh(const GroupParams& params, const Exponent& k, const GroupElement& bk,
                ExpCounter& counter) {
  ++counter.count;
  return GroupElement(powm(bk.value(), k.value(), params.modulus()));
}

Exponent element_to_exponent(const GroupParams& params, const GroupElement& e) {
  mpz_class v = e.value() % params.modulus();
  if (v == 0 || v == params.modulus() - 1) return Exponent(1);
  return Exponent(v);
}

GroupKey derive_group_key(const GroupParams& params, const GroupElement& root,
                          std::uint64_t epoch) {
  ByteWriter w;
  w.raw(std::span(reinterpret_cast<const std::uint8_t*>(params.kdf_tag().data()),
                  params.kdf_tag().size()));
  w.raw(encode_integer(root.value()));
  w.u64(epoch);
  GroupKey key;
  key.epoch = epoch;
  SHA256(w.bytes().data(), w.bytes().size(), key.bytes.data());
  return key;
}

Bytes encode_integer(const mpz_class& v) {
  if (v <= 0) {
    throw Error(ErrorCode::invalid_argument, "only positive integers have an encoding");
  }
  Bytes out((mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8);
  std::size_t written = 0;
  mpz_export(out.data(), &written, 1, 1, 1, 0, v.get_mpz_t());
  out.resize(written);
  return out;
}

mpz_class decode_integer(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) {
    throw Error(ErrorCode::malformed_encoding, "empty integer encoding");
  }
  if (bytes.front() == 0) {
    throw Error(ErrorCode::malformed_encoding, "integer encoding has a leading zero");
  }
  mpz_class v;
  mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  return v;
}

Bytes sha256(std::span<const std::uint8_t> data) {
  Bytes out(SHA256_DIGEST_LENGTH);
  SHA256(data.data(), data.size(), out.data());
  return out;
}

}  // namespace tgdh
