#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace hwgn2::mips {

enum class Op : std::uint8_t {
  Add, Addu, Sub, And, Or, Xor, Nor, Slt, Sltu, Sll, Srl, Sra, Jr, Mult, Mflo, Halt,
  Addi, Addiu, Andi, Ori, Xori, Slti, Lui, Lw, Sw, Beq, Bne, J, Jal,
  Invalid,
};

inline constexpr int kOpCount = static_cast<int>(Op::Invalid);

namespace funct {
inline constexpr std::uint8_t Sll = 0x00, Srl = 0x02, Sra = 0x03, Jr = 0x08, Mflo = 0x12, Mult = 0x18, Add = 0x20,
                              Addu = 0x21, Sub = 0x22, And = 0x24, Or = 0x25, Xor = 0x26, Nor = 0x27, Slt = 0x2a,
                              Sltu = 0x2b, Halt = 0x3f;
}

namespace opcode {
inline constexpr std::uint8_t Special = 0x00, J = 0x02, Jal = 0x03, Beq = 0x04, Bne = 0x05, Addi = 0x08, Addiu = 0x09,
                              Slti = 0x0a, Andi = 0x0c, Ori = 0x0d, Xori = 0x0e, Lui = 0x0f, Lw = 0x23, Sw = 0x2b;
}

inline constexpr std::uint32_t kHaltWord = 0x0000003fu;

struct Fields {
  std::uint8_t opcode = 0;
  std::uint8_t rs = 0;
  std::uint8_t rt = 0;
  std::uint8_t rd = 0;
  std::uint8_t shamt = 0;
  std::uint8_t funct = 0;
  std::uint16_t imm = 0;
  std::uint32_t target = 0;
};

Fields fields(std::uint32_t word);

/// Classification by opcode and funct only; other fields are don't-care.
/// MULT/MFLO classify as Invalid when `with_mult` is false.
Op classify(std::uint32_t word, bool with_mult = true);

std::string_view mnemonic(Op op);
std::optional<Op> op_from_mnemonic(std::string_view upper);

enum class Format : std::uint8_t {
  R3,      // rd, rs, rt
  Shift,   // rd, rt, shamt
  Rs,      // rs           (JR)
  RsRt,    // rs, rt       (MULT)
  Rd,      // rd           (MFLO)
  None,    // HALT
  ImmS,    // rt, rs, simm
  ImmU,    // rt, rs, uimm
  Lui,     // rt, uimm
  Mem,     // rt, simm(rs)
  Branch,  // rs, rt, offset
  Jump,    // target
};

Format format(Op op);

std::uint32_t encode_r(std::uint8_t fn, unsigned rs, unsigned rt, unsigned rd, unsigned shamt);
std::uint32_t encode_i(std::uint8_t op, unsigned rs, unsigned rt, std::uint16_t imm);
std::uint32_t encode_j(std::uint8_t op, std::uint32_t target);

/// Opcode (I/J types) or funct (R type) of a valid op.
std::uint8_t code_of(Op op);
bool is_rtype(Op op);

struct MipsInstructionWord {
  std::uint32_t word = 0;
  Fields decoded() const { return fields(word); }
  Op op(bool with_mult = true) const { return classify(word, with_mult); }
  friend bool operator==(MipsInstructionWord, MipsInstructionWord) = default;
};

inline std::int32_t sext16(std::uint16_t v) { return static_cast<std::int16_t>(v); }

}  // namespace hwgn2::mips
