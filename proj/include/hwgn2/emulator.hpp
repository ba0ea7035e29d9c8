#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "hwgn2/isa.hpp"

namespace hwgn2::mips {

struct CpuStepConfig {
  std::uint32_t dmem_words = 256;  // power of two, 16..4096
  bool include_mult = true;
  bool trace_hooks = false;

  /// Throws hwgn2::Error on an invalid configuration.
  void validate() const;
  unsigned address_bits() const;
  friend bool operator==(const CpuStepConfig&, const CpuStepConfig&) = default;
};

inline constexpr unsigned kPcBits = 16;

struct CpuState {
  std::uint16_t pc = 0;
  bool halted = false;
  std::array<std::uint32_t, 32> regs{};
  std::uint32_t lo = 0;
  std::vector<std::uint32_t> dmem;

  CpuState() = default;
  explicit CpuState(std::uint32_t dmem_words) : dmem(dmem_words, 0) {}
  friend bool operator==(const CpuState&, const CpuState&) = default;
};

struct Region {
  std::uint32_t base = 0;
  std::uint32_t count = 0;
  friend bool operator==(const Region&, const Region&) = default;
};

struct MipsProgram {
  std::vector<MipsInstructionWord> instructions;
  std::map<std::uint32_t, std::uint32_t> dmem_init_garbler;  // address -> word
  Region evaluator_input_region;
  Region output_region;
  std::uint32_t dmem_words = 256;

  /// Regions disjoint, addresses < dmem_words, W valid. Throws otherwise.
  void validate() const;
  CpuStepConfig step_config() const { return {dmem_words, true, false}; }
  friend bool operator==(const MipsProgram&, const MipsProgram&) = default;
};

enum class WriteKind : std::uint8_t { Reg, Lo, Mem };

struct WriteEvent {
  std::uint64_t step = 0;
  WriteKind kind = WriteKind::Reg;
  std::uint32_t index = 0;  // register number or memory address
  std::uint32_t value = 0;
  unsigned width = 32;
  friend bool operator==(const WriteEvent&, const WriteEvent&) = default;
};

using WriteHook = std::function<void(const WriteEvent&)>;

/// One instruction. A halted state is returned unchanged. Throws
/// hwgn2::Error on an unsupported encoding or a data address >= W.
CpuState step_plain(const CpuState& state, MipsInstructionWord instr, const CpuStepConfig& cfg = {},
                    const WriteHook& hook = {}, std::uint64_t step_index = 0);

void step_in_place(CpuState& state, MipsInstructionWord instr, const CpuStepConfig& cfg = {},
                   const WriteHook& hook = {}, std::uint64_t step_index = 0);

/// Initial state: garbler data and evaluator input placed in dmem.
CpuState initial_state(const MipsProgram& program, std::span<const std::uint32_t> evaluator_input);

struct RunResult {
  std::vector<std::uint32_t> output_words;
  std::uint64_t step_count = 0;
  std::vector<WriteEvent> events;  // filled when cfg.trace_hooks
  std::vector<std::uint32_t> fetch_trace;  // pc of every executed step
  CpuState final_state;
};

/// Runs until HALT or until pc leaves the program (implicit halt). Throws
/// hwgn2::Error when step_limit steps pass without halting.
RunResult run_plain(const MipsProgram& program, std::span<const std::uint32_t> evaluator_input,
                    std::uint64_t step_limit = 10'000'000, bool trace_hooks = false);

/// Word-wise little-endian views of words as signed Q8.8 etc. are left to
/// callers; this helper just reads a region of dmem.
std::vector<std::uint32_t> read_region(const CpuState& s, Region r);

}  // namespace hwgn2::mips
