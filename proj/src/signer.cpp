#include "tgdh/signer.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include "tgdh/error.hpp"

namespace tgdh {
namespace {

Bytes hmac(std::span<const std::uint8_t> key, std::span<const std::uint8_t> data) {
  Bytes out(EVP_MAX_MD_SIZE);
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(),
           out.data(), &len) == nullptr) {
    throw Error(ErrorCode::invalid_state, "HMAC failed");
  }
  out.resize(len);
  return out;
}

}  // namespace

HmacSigner::HmacSigner(std::uint64_t master_seed) {
  ByteWriter w;
  w.lp16(std::string_view("tgdh-hmac-master"));
  w.u64(master_seed);
  master_ = std::move(w).take();
}

const Bytes& HmacSigner::key_for(const std::string& member) {
  std::lock_guard lock(mu_);
  auto it = keys_.find(member);
  if (it == keys_.end()) {
    auto label = std::span(reinterpret_cast<const std::uint8_t*>(member.data()), member.size());
    it = keys_.emplace(member, hmac(master_, label)).first;
  }
  return it->second;
}

Bytes HmacSigner::sign(const std::string& signer, std::span<const std::uint8_t> bytes) {
  return hmac(key_for(signer), bytes);
}

bool HmacSigner::verify(const std::string& sender, std::span<const std::uint8_t> bytes,
                        std::span<const std::uint8_t> signature) {
  const Bytes expected = hmac(key_for(sender), bytes);
  return signature.size() == expected.size() &&
         CRYPTO_memcmp(signature.data(), expected.data(), expected.size()) == 0;
}

}  // namespace tgdh
