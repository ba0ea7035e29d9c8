#pragma once

#include <cstdint>
#include <vector>

namespace hwgn2::oracle {

/// Second MIPS-subset interpreter, written from the encoding table without
/// sharing code with the library.
struct RefCpu {
  std::uint32_t pc = 0;
  bool halted = false;
  std::uint32_t r[32] = {};
  std::uint32_t lo = 0;
  std::vector<std::uint32_t> mem;

  /// Returns false for encodings outside the subset or bad addresses.
  bool step(std::uint32_t insn);
};

}  // namespace hwgn2::oracle
