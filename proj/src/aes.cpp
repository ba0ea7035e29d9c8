#include "hwgn2/aes.hpp"

#include <cstdint>

#if defined(__AES__) && defined(__SSE2__)
#include <wmmintrin.h>
#include <emmintrin.h>
#define HWGN2_AESNI 1
#endif

namespace hwgn2 {
namespace {

constexpr std::uint8_t kSbox[256] = {
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab, 0x76,
    0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0,
    0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75,
    0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84,
    0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
    0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2,
    0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb,
    0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79,
    0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a,
    0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
    0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb, 0x16};

constexpr std::uint8_t xtime(std::uint8_t x) {
  return static_cast<std::uint8_t>((x << 1) ^ ((x & 0x80) ? 0x1b : 0x00));
}

using State = std::array<std::uint8_t, 16>;

State to_state(Block b) {
  State s;
  b.store(s.data());
  return s;
}

Block from_state(const State& s) { return Block::load(s.data()); }

void add_round_key(State& s, Block k) {
  State ks = to_state(k);
  for (int i = 0; i < 16; ++i) s[i] ^= ks[i];
}

void sub_bytes(State& s) {
  for (auto& b : s) b = kSbox[b];
}

// Column-major state: byte index = 4 * column + row.
void shift_rows(State& s) {
  State t = s;
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 4; ++r) s[4 * c + r] = t[4 * ((c + r) % 4) + r];
}

void mix_columns(State& s) {
  for (int c = 0; c < 4; ++c) {
    std::uint8_t* col = &s[4 * c];
    const std::uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
    const std::uint8_t all = a0 ^ a1 ^ a2 ^ a3;
    col[0] = a0 ^ all ^ xtime(a0 ^ a1);
    col[1] = a1 ^ all ^ xtime(a1 ^ a2);
    col[2] = a2 ^ all ^ xtime(a2 ^ a3);
    col[3] = a3 ^ all ^ xtime(a3 ^ a0);
  }
}

std::array<Block, 11> expand_key(Block key) {
  std::array<std::uint8_t, 176> w{};
  key.store(w.data());
  std::uint8_t rcon = 1;
  for (int i = 16; i < 176; i += 4) {
    std::uint8_t t[4] = {w[i - 4], w[i - 3], w[i - 2], w[i - 1]};
    if (i % 16 == 0) {
      const std::uint8_t first = t[0];
      t[0] = static_cast<std::uint8_t>(kSbox[t[1]] ^ rcon);
      t[1] = kSbox[t[2]];
      t[2] = kSbox[t[3]];
      t[3] = kSbox[first];
      rcon = xtime(rcon);
    }
    for (int j = 0; j < 4; ++j) w[i + j] = w[i - 16 + j] ^ t[j];
  }
  std::array<Block, 11> keys;
  for (int r = 0; r < 11; ++r) keys[r] = Block::load(&w[16 * r]);
  return keys;
}

}  // namespace

Aes128::Aes128(Block key) : round_keys_(expand_key(key)) {}

bool Aes128::hardware_accelerated() {
#ifdef HWGN2_AESNI
  return true;
#else
  return false;
#endif
}

Block Aes128::encrypt_portable(Block in) const {
  State s = to_state(in);
  add_round_key(s, round_keys_[0]);
  for (int r = 1; r < 10; ++r) {
    sub_bytes(s);
    shift_rows(s);
    mix_columns(s);
    add_round_key(s, round_keys_[r]);
  }
  sub_bytes(s);
  shift_rows(s);
  add_round_key(s, round_keys_[10]);
  return from_state(s);
}

#ifdef HWGN2_AESNI

namespace {
inline __m128i ld(const Block& b) { return _mm_loadu_si128(reinterpret_cast<const __m128i*>(&b)); }
inline void st(Block& b, __m128i v) { _mm_storeu_si128(reinterpret_cast<__m128i*>(&b), v); }
}  // namespace

Block Aes128::encrypt(Block in) const {
  __m128i s = _mm_xor_si128(ld(in), ld(round_keys_[0]));
  for (int r = 1; r < 10; ++r) s = _mm_aesenc_si128(s, ld(round_keys_[r]));
  s = _mm_aesenclast_si128(s, ld(round_keys_[10]));
  Block out;
  st(out, s);
  return out;
}

void Aes128::encrypt_blocks(std::span<Block> blocks) const {
  __m128i k[11];
  for (int r = 0; r < 11; ++r) k[r] = ld(round_keys_[r]);
  std::size_t i = 0;
  for (; i + 4 <= blocks.size(); i += 4) {
    __m128i s0 = _mm_xor_si128(ld(blocks[i]), k[0]);
    __m128i s1 = _mm_xor_si128(ld(blocks[i + 1]), k[0]);
    __m128i s2 = _mm_xor_si128(ld(blocks[i + 2]), k[0]);
    __m128i s3 = _mm_xor_si128(ld(blocks[i + 3]), k[0]);
    for (int r = 1; r < 10; ++r) {
      s0 = _mm_aesenc_si128(s0, k[r]);
      s1 = _mm_aesenc_si128(s1, k[r]);
      s2 = _mm_aesenc_si128(s2, k[r]);
      s3 = _mm_aesenc_si128(s3, k[r]);
    }
    st(blocks[i], _mm_aesenclast_si128(s0, k[10]));
    st(blocks[i + 1], _mm_aesenclast_si128(s1, k[10]));
    st(blocks[i + 2], _mm_aesenclast_si128(s2, k[10]));
    st(blocks[i + 3], _mm_aesenclast_si128(s3, k[10]));
  }
  for (; i < blocks.size(); ++i) {
    __m128i s = _mm_xor_si128(ld(blocks[i]), k[0]);
    for (int r = 1; r < 10; ++r) s = _mm_aesenc_si128(s, k[r]);
    st(blocks[i], _mm_aesenclast_si128(s, k[10]));
  }
}

#else

Block Aes128::encrypt(Block in) const { return encrypt_portable(in); }

void Aes128::encrypt_blocks(std::span<Block> blocks) const {
  for (auto& b : blocks) b = encrypt_portable(b);
}

#endif

Block FixedKeyAes::default_key() {
  constexpr std::uint8_t k[16] = {0x2b, 0x7e, 0x15, 0x16, 0x28, 0xae, 0xd2, 0xa6,
                                  0xab, 0xf7, 0x15, 0x88, 0x09, 0xcf, 0x4f, 0x3c};
  return Block::load(k);
}

FixedKeyAes::FixedKeyAes() : aes_(default_key()) {}

const BlockPermutation& default_permutation() {
  static const FixedKeyAes instance;
  return instance;
}

}  // namespace hwgn2
