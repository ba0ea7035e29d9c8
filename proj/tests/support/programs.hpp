#pragma once

#include <cstdint>

#include "hwgn2/emulator.hpp"
#include "hwgn2/prg.hpp"

namespace hwgn2::oracle {

/// Straight-line program over W = 16: evaluator input at words 0..1,
/// garbler data at 2..5, output at 8..11. Loads inputs and data, mixes them
/// with random ALU/MULT instructions, then stores four registers to the
/// output region.
mips::MipsProgram random_program(Prg& prg, std::uint32_t n_mix);

}  // namespace hwgn2::oracle
