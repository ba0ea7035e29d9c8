#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hwgn2/circuit.hpp"
#include "hwgn2/prg.hpp"

namespace hwgn2::hiding {

/// GF(2^32) with modulus x^32 + x^22 + x^2 + x + 1.
inline constexpr std::uint32_t kModulusLow = (1u << 22) | (1u << 2) | (1u << 1) | 1u;

std::uint32_t gf_mul(std::uint32_t a, std::uint32_t b);

/// One-time polynomial MAC: tag = b + sum_i y_i * k^(n - i), i.e. Horner
/// over the words followed by one more multiply.
std::uint32_t mac(std::uint32_t k, std::uint32_t b, std::span<const std::uint32_t> y);

/// Garbler-side secrets: MAC key (k, b) and a mask over (y || tag).
struct HidingKey {
  std::uint32_t k = 0;
  std::uint32_t b = 0;
  std::vector<std::uint32_t> mask;  // n + 1 words

  static HidingKey random(Prg& prg, std::size_t n_words);
};

/// hidden = (y || mac(y)) XOR mask.
std::vector<std::uint32_t> hide_output(std::span<const std::uint32_t> y, const HidingKey& key);
/// Removes the mask and checks the tag. Throws Error on MAC failure.
std::vector<std::uint32_t> unhide_output(std::span<const std::uint32_t> hidden, const HidingKey& key);

/// The hiding function as a netlist. Garbler inputs: k (32), b (32), mask
/// (32 (n + 1)); evaluator inputs: y (32 n). Outputs: hidden, 32 (n + 1) bits.
circuit::Netlist build_hiding_netlist(std::uint32_t n_words);
circuit::Bits hiding_garbler_bits(const HidingKey& key);

}  // namespace hwgn2::hiding
