#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace hwgn2 {

/// 128-bit value: wire labels, ciphertext rows, PRP blocks.
/// Byte order is little-endian: `lo` occupies bytes 0..7.
struct Block {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;

  constexpr bool lsb() const { return (lo & 1u) != 0; }

  friend constexpr Block operator^(Block a, Block b) { return {a.lo ^ b.lo, a.hi ^ b.hi}; }
  constexpr Block& operator^=(Block b) {
    lo ^= b.lo;
    hi ^= b.hi;
    return *this;
  }
  friend constexpr bool operator==(Block a, Block b) = default;

  static Block load(const std::uint8_t* bytes) {
    Block b;
    std::memcpy(&b.lo, bytes, 8);
    std::memcpy(&b.hi, bytes + 8, 8);
    return b;
  }
  void store(std::uint8_t* bytes) const {
    std::memcpy(bytes, &lo, 8);
    std::memcpy(bytes + 8, &hi, 8);
  }
};

static_assert(sizeof(Block) == 16);
static_assert(std::endian::native == std::endian::little, "wire formats assume a little-endian host");

inline int hamming_weight(Block b) { return std::popcount(b.lo) + std::popcount(b.hi); }

/// Multiplication by x in GF(2^128) modulo x^128 + x^7 + x^2 + x + 1, treating
/// hi:lo as the coefficient vector (bit 0 of lo is the constant term).
constexpr Block gf_double(Block b) {
  const std::uint64_t carry = b.hi >> 63;
  Block r;
  r.hi = (b.hi << 1) | (b.lo >> 63);
  r.lo = (b.lo << 1) ^ (carry * 0x87u);
  return r;
}

/// Mask with all bits set when `bit` is 1.
constexpr Block select_mask(bool bit) {
  const std::uint64_t m = bit ? ~std::uint64_t{0} : 0;
  return {m, m};
}

constexpr Block operator&(Block a, Block b) { return {a.lo & b.lo, a.hi & b.hi}; }

/// 256-bit randomness supplied by callers (garbling seeds, campaign seeds).
using Seed = std::array<std::uint8_t, 32>;

std::string to_hex(const std::uint8_t* data, std::size_t n);
template <std::size_t N>
std::string to_hex(const std::array<std::uint8_t, N>& a) {
  return to_hex(a.data(), N);
}
std::string to_hex(Block b);

/// Parses exactly 64 hex digits; throws hwgn2::Error otherwise.
Seed seed_from_hex(std::string_view hex);

/// Seed with the 64-bit value in bytes 0..7 (tests and CLI shorthands).
Seed seed_from_u64(std::uint64_t v);

/// Independent child seed: SHA-256(parent || label || index).
Seed derive_seed(const Seed& parent, std::string_view label, std::uint64_t index);

/// Seed from the OS entropy source.
Seed random_seed();

}  // namespace hwgn2
