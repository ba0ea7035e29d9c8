#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

#include <sodium.h>

#include "hwgn2/block.hpp"

struct evp_md_ctx_st;

namespace hwgn2 {

using Digest = std::array<std::uint8_t, 32>;

/// Incremental SHA-256 (OpenSSL libcrypto).
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(Sha256&& other) noexcept : ctx_(std::exchange(other.ctx_, nullptr)) {}
  Sha256& operator=(Sha256&&) = delete;
  Sha256(const Sha256&) = delete;
  Sha256& update(std::span<const std::uint8_t> data);
  Sha256& update(std::string_view text);
  Sha256& update(Block b);
  Sha256& update_u64(std::uint64_t v);
  Digest finish();

 private:
  evp_md_ctx_st* ctx_ = nullptr;
};

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view text);

/// Calls sodium_init() once; every entry point that touches libsodium goes
/// through this.
void ensure_sodium();

}  // namespace hwgn2
