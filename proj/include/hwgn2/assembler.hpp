#pragma once

#include <string>
#include <string_view>

#include "hwgn2/emulator.hpp"

namespace hwgn2::mips {

/// Assembles the text grammar documented in docs/formats.md. Throws
/// ParseError (line, column) on unknown mnemonics, out-of-range operands,
/// duplicate or undefined labels.
MipsProgram assemble(std::string_view text);

/// Canonical text: directives first, then one instruction per line, numeric
/// branch offsets, no labels. assemble(disassemble(p)) == p.
std::string disassemble(const MipsProgram& program);

/// Canonical text of a single instruction word.
std::string disassemble_word(std::uint32_t word);

}  // namespace hwgn2::mips
