#pragma once

#include <array>
#include <span>

#include "hwgn2/block.hpp"

namespace hwgn2 {

/// AES-128 encryption only. Uses AES-NI when compiled for a CPU that has it,
/// otherwise a byte-oriented software implementation.
class Aes128 {
 public:
  explicit Aes128(Block key);

  Block encrypt(Block in) const;
  void encrypt_blocks(std::span<Block> blocks) const;

  /// Software path, regardless of the build target. Used to cross-check AES-NI.
  Block encrypt_portable(Block in) const;

  static bool hardware_accelerated();
  const std::array<Block, 11>& round_keys() const { return round_keys_; }

 private:
  std::array<Block, 11> round_keys_;
};

/// Fixed public permutation P used by the gate hash. Pluggable so that a
/// different cipher can stand in for AES.
class BlockPermutation {
 public:
  virtual ~BlockPermutation() = default;
  virtual void permute(std::span<Block> blocks) const = 0;
  /// Non-null when the permutation is plain AES-128, enabling inlined paths.
  virtual const Aes128* as_aes() const { return nullptr; }
};

class FixedKeyAes final : public BlockPermutation {
 public:
  FixedKeyAes();
  explicit FixedKeyAes(Block key) : aes_(key) {}
  void permute(std::span<Block> blocks) const override { aes_.encrypt_blocks(blocks); }
  const Aes128* as_aes() const override { return &aes_; }

  /// The public key: bytes 2b7e151628aed2a6abf7158809cf4f3c.
  static Block default_key();

 private:
  Aes128 aes_;
};

const BlockPermutation& default_permutation();

}  // namespace hwgn2
