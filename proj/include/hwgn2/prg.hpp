#pragma once

#include <cstdint>
#include <span>

#include "hwgn2/aes.hpp"
#include "hwgn2/block.hpp"

namespace hwgn2 {

/// Counter-mode expansion of a 256-bit seed: AES-128 keyed with seed bytes
/// 0..15, counter starting at seed bytes 16..31. Bit-reproducible.
class Prg {
 public:
  explicit Prg(const Seed& seed);

  Block next_block();
  void fill(std::span<Block> out);
  std::uint64_t next_u64();
  std::uint32_t next_u32() { return static_cast<std::uint32_t>(next_u64()); }
  bool next_bit() { return (next_u64() & 1u) != 0; }
  /// Uniform in [0, bound) by rejection; bound > 0.
  std::uint64_t uniform(std::uint64_t bound);
  /// Uniform double in [0, 1).
  double next_double();

 private:
  Aes128 aes_;
  Block counter_;
  Block buffer_{};
  int buffered_words_ = 0;
};

}  // namespace hwgn2
