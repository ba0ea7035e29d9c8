#include "hwgn2/prg.hpp"

#include <sodium.h>

#include "hwgn2/digest.hpp"
#include "hwgn2/error.hpp"

namespace hwgn2 {

namespace {
Block increment(Block b) {
  ++b.lo;
  if (b.lo == 0) ++b.hi;
  return b;
}
}  // namespace

Prg::Prg(const Seed& seed) : aes_(Block::load(seed.data())), counter_(Block::load(seed.data() + 16)) {}

Block Prg::next_block() {
  Block out = aes_.encrypt(counter_);
  counter_ = increment(counter_);
  return out;
}

void Prg::fill(std::span<Block> out) {
  for (auto& b : out) {
    b = counter_;
    counter_ = increment(counter_);
  }
  aes_.encrypt_blocks(out);
}

std::uint64_t Prg::next_u64() {
  if (buffered_words_ == 0) {
    buffer_ = next_block();
    buffered_words_ = 2;
  }
  --buffered_words_;
  return buffered_words_ == 1 ? buffer_.lo : buffer_.hi;
}

std::uint64_t Prg::uniform(std::uint64_t bound) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  for (;;) {
    const std::uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

double Prg::next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::string to_hex(const std::uint8_t* data, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    s.push_back(kDigits[data[i] >> 4]);
    s.push_back(kDigits[data[i] & 15]);
  }
  return s;
}

std::string to_hex(Block b) {
  std::uint8_t bytes[16];
  b.store(bytes);
  return to_hex(bytes, 16);
}

Seed seed_from_hex(std::string_view hex) {
  if (hex.size() != 64) throw Error("seed must be 64 hex digits, got " + std::to_string(hex.size()));
  auto nibble = [&](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    throw Error(std::string("invalid hex digit '") + c + "' in seed");
  };
  Seed s;
  for (std::size_t i = 0; i < 32; ++i) s[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return s;
}

Seed seed_from_u64(std::uint64_t v) {
  Seed s{};
  for (int i = 0; i < 8; ++i) s[i] = static_cast<std::uint8_t>(v >> (8 * i));
  return s;
}

Seed derive_seed(const Seed& parent, std::string_view label, std::uint64_t index) {
  return Sha256().update(parent).update(label).update_u64(index).finish();
}

Seed random_seed() {
  ensure_sodium();
  Seed s;
  randombytes_buf(s.data(), s.size());
  return s;
}

}  // namespace hwgn2
