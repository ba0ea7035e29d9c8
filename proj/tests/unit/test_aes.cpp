#include <gtest/gtest.h>

#include "hwgn2/aes.hpp"
#include "hwgn2/error.hpp"
#include "hwgn2/prg.hpp"

using namespace hwgn2;

namespace {
Block from_hex(const char* hex) {
  std::uint8_t b[16];
  for (int i = 0; i < 16; ++i) b[i] = static_cast<std::uint8_t>(std::stoul(std::string(hex + 2 * i, 2), nullptr, 16));
  return Block::load(b);
}
}  // namespace

TEST(Aes, Fips197AppendixC1) {
  Aes128 aes(from_hex("000102030405060708090a0b0c0d0e0f"));
  const Block pt = from_hex("00112233445566778899aabbccddeeff");
  const Block want = from_hex("69c4e0d86a7b0430d8cdb78070b4c55a");
  EXPECT_EQ(aes.encrypt(pt), want);
  EXPECT_EQ(aes.encrypt_portable(pt), want);
}

TEST(Aes, Sp80038aEcbVector) {
  Aes128 aes(FixedKeyAes::default_key());
  EXPECT_EQ(aes.encrypt(from_hex("6bc1bee22e409f96e93d7e117393172a")), from_hex("3ad77bb40d7a3660a89ecaf32466ef97"));
}

TEST(Aes, HardwareAndPortableAgree) {
  Prg prg(seed_from_u64(7));
  Aes128 aes(prg.next_block());
  std::vector<Block> in(37);
  prg.fill(in);
  std::vector<Block> out = in;
  aes.encrypt_blocks(out);
  for (std::size_t i = 0; i < in.size(); ++i) EXPECT_EQ(out[i], aes.encrypt_portable(in[i]));
}

TEST(Prg, DeterministicAndSeedSensitive) {
  Prg a(seed_from_u64(1)), b(seed_from_u64(1)), c(seed_from_u64(2));
  for (int i = 0; i < 10; ++i) {
    const Block x = a.next_block();
    EXPECT_EQ(x, b.next_block());
    EXPECT_NE(x, c.next_block());
  }
}

TEST(Prg, UniformStaysInRange) {
  Prg p(seed_from_u64(3));
  for (int i = 0; i < 1000; ++i) EXPECT_LT(p.uniform(7), 7u);
  for (int i = 0; i < 1000; ++i) {
    const double d = p.next_double();
    EXPECT_GE(d, 0.0);
    EXPECT_LT(d, 1.0);
  }
}

TEST(Block, GfDoubleReduces) {
  EXPECT_EQ(gf_double(Block{1, 0}), (Block{2, 0}));
  EXPECT_EQ(gf_double(Block{0, 0x8000000000000000ull}), (Block{0x87, 0}));
  EXPECT_EQ(gf_double(Block{0x8000000000000000ull, 0}), (Block{0, 1}));
}

TEST(Seed, HexRoundTrip) {
  const Seed s = derive_seed(seed_from_u64(9), "x", 4);
  EXPECT_EQ(seed_from_hex(to_hex(s)), s);
  EXPECT_THROW(seed_from_hex("abc"), Error);
}
