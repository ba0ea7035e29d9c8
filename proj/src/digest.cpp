#include "hwgn2/digest.hpp"

#include <openssl/evp.h>

#include "hwgn2/error.hpp"

namespace hwgn2 {

void ensure_sodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw Error("libsodium initialisation failed");
}

Sha256::Sha256() : ctx_(EVP_MD_CTX_new()) {
  if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
}

Sha256::~Sha256() { EVP_MD_CTX_free(ctx_); }

Sha256& Sha256::update(std::span<const std::uint8_t> data) {
  EVP_DigestUpdate(ctx_, data.data(), data.size());
  return *this;
}

Sha256& Sha256::update(std::string_view text) {
  EVP_DigestUpdate(ctx_, text.data(), text.size());
  return *this;
}

Sha256& Sha256::update(Block b) {
  std::uint8_t bytes[16];
  b.store(bytes);
  EVP_DigestUpdate(ctx_, bytes, 16);
  return *this;
}

Sha256& Sha256::update_u64(std::uint64_t v) {
  std::uint8_t bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<std::uint8_t>(v >> (8 * i));
  EVP_DigestUpdate(ctx_, bytes, 8);
  return *this;
}

Digest Sha256::finish() {
  Digest d;
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx_, d.data(), &len);
  return d;
}

Digest sha256(std::span<const std::uint8_t> data) { return Sha256().update(data).finish(); }

Digest sha256(std::string_view text) { return Sha256().update(text).finish(); }

}  // namespace hwgn2
