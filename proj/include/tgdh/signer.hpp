#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <string>

#include "tgdh/wire.hpp"

namespace tgdh {

/// Signing and verification handles. Callers count invocations; implementations
/// only compute.
class Signer {
 public:
  virtual ~Signer() = default;
  virtual Bytes sign(const std::string& signer, std::span<const std::uint8_t> bytes) = 0;
  virtual bool verify(const std::string& sender, std::span<const std::uint8_t> bytes,
                      std::span<const std::uint8_t> signature) = 0;
};

/// HMAC-SHA-256 with per-member pre-shared keys derived from a master seed.
class HmacSigner final : public Signer {
 public:
  explicit HmacSigner(std::uint64_t master_seed);

  Bytes sign(const std::string& signer, std::span<const std::uint8_t> bytes) override;
  bool verify(const std::string& sender, std::span<const std::uint8_t> bytes,
              std::span<const std::uint8_t> signature) override;

 private:
  const Bytes& key_for(const std::string& member);

  Bytes master_;
  std::mutex mu_;
  std::map<std::string, Bytes> keys_;
};

}  // namespace tgdh
