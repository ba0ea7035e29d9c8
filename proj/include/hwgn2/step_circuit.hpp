#pragma once

#include <cstdint>
#include <span>

#include "hwgn2/circuit.hpp"
#include "hwgn2/emulator.hpp"

namespace hwgn2::mips {

/// Bit positions of the CPU state inside the step netlist's state block.
/// Each field is little-endian (bit 0 first). r0 is not stored.
struct StateLayout {
  std::uint32_t dmem_words = 256;

  static constexpr std::uint32_t kPc = 0;
  static constexpr std::uint32_t kHalted = kPcBits;
  static constexpr std::uint32_t kRegs = kHalted + 1;
  static constexpr std::uint32_t kLo = kRegs + 31 * 32;
  static constexpr std::uint32_t kDmem = kLo + 32;

  static constexpr std::uint32_t reg(unsigned r) { return kRegs + 32 * (r - 1); }
  constexpr std::uint32_t mem(std::uint32_t addr) const { return kDmem + 32 * addr; }
  constexpr std::uint32_t width() const { return kDmem + 32 * dmem_words; }
};

inline constexpr std::uint32_t kInstructionBits = 32;

circuit::Bits encode_state(const CpuState& s);
CpuState decode_state(std::span<const std::uint8_t> bits, std::uint32_t dmem_words);
circuit::Bits instruction_bits(std::uint32_t word);

/// One CPU step as a combinational netlist. Inputs: 32 instruction bits
/// (garbler block), then the state (evaluator block). Outputs: the next
/// state in the same layout. Unsupported encodings behave as NOP; data
/// addresses use their low log2(W) bits.
circuit::Netlist build_step_netlist(const CpuStepConfig& cfg);

}  // namespace hwgn2::mips
