#include "hwgn2/isa.hpp"

#include <array>

namespace hwgn2::mips {
namespace {

struct Info {
  Op op;
  std::string_view name;
  Format fmt;
  bool rtype;
  std::uint8_t code;
};

constexpr std::array<Info, kOpCount> kTable = {{
    {Op::Add, "ADD", Format::R3, true, funct::Add},
    {Op::Addu, "ADDU", Format::R3, true, funct::Addu},
    {Op::Sub, "SUB", Format::R3, true, funct::Sub},
    {Op::And, "AND", Format::R3, true, funct::And},
    {Op::Or, "OR", Format::R3, true, funct::Or},
    {Op::Xor, "XOR", Format::R3, true, funct::Xor},
    {Op::Nor, "NOR", Format::R3, true, funct::Nor},
    {Op::Slt, "SLT", Format::R3, true, funct::Slt},
    {Op::Sltu, "SLTU", Format::R3, true, funct::Sltu},
    {Op::Sll, "SLL", Format::Shift, true, funct::Sll},
    {Op::Srl, "SRL", Format::Shift, true, funct::Srl},
    {Op::Sra, "SRA", Format::Shift, true, funct::Sra},
    {Op::Jr, "JR", Format::Rs, true, funct::Jr},
    {Op::Mult, "MULT", Format::RsRt, true, funct::Mult},
    {Op::Mflo, "MFLO", Format::Rd, true, funct::Mflo},
    {Op::Halt, "HALT", Format::None, true, funct::Halt},
    {Op::Addi, "ADDI", Format::ImmS, false, opcode::Addi},
    {Op::Addiu, "ADDIU", Format::ImmS, false, opcode::Addiu},
    {Op::Andi, "ANDI", Format::ImmU, false, opcode::Andi},
    {Op::Ori, "ORI", Format::ImmU, false, opcode::Ori},
    {Op::Xori, "XORI", Format::ImmU, false, opcode::Xori},
    {Op::Slti, "SLTI", Format::ImmS, false, opcode::Slti},
    {Op::Lui, "LUI", Format::Lui, false, opcode::Lui},
    {Op::Lw, "LW", Format::Mem, false, opcode::Lw},
    {Op::Sw, "SW", Format::Mem, false, opcode::Sw},
    {Op::Beq, "BEQ", Format::Branch, false, opcode::Beq},
    {Op::Bne, "BNE", Format::Branch, false, opcode::Bne},
    {Op::J, "J", Format::Jump, false, opcode::J},
    {Op::Jal, "JAL", Format::Jump, false, opcode::Jal},
}};

const Info& info(Op op) { return kTable[static_cast<int>(op)]; }

}  // namespace

Fields fields(std::uint32_t w) {
  Fields f;
  f.opcode = static_cast<std::uint8_t>(w >> 26);
  f.rs = (w >> 21) & 31;
  f.rt = (w >> 16) & 31;
  f.rd = (w >> 11) & 31;
  f.shamt = (w >> 6) & 31;
  f.funct = w & 63;
  f.imm = static_cast<std::uint16_t>(w);
  f.target = w & 0x03ffffffu;
  return f;
}

Op classify(std::uint32_t w, bool with_mult) {
  const Fields f = fields(w);
  for (const Info& i : kTable) {
    const bool match = i.rtype ? (f.opcode == 0 && f.funct == i.code) : f.opcode == i.code;
    if (!match) continue;
    if (!with_mult && (i.op == Op::Mult || i.op == Op::Mflo)) return Op::Invalid;
    return i.op;
  }
  return Op::Invalid;
}

std::string_view mnemonic(Op op) { return op == Op::Invalid ? "INVALID" : info(op).name; }

std::optional<Op> op_from_mnemonic(std::string_view upper) {
  for (const Info& i : kTable)
    if (i.name == upper) return i.op;
  return std::nullopt;
}

Format format(Op op) { return info(op).fmt; }
std::uint8_t code_of(Op op) { return info(op).code; }
bool is_rtype(Op op) { return info(op).rtype; }

std::uint32_t encode_r(std::uint8_t fn, unsigned rs, unsigned rt, unsigned rd, unsigned shamt) {
  return ((rs & 31u) << 21) | ((rt & 31u) << 16) | ((rd & 31u) << 11) | ((shamt & 31u) << 6) | (fn & 63u);
}

std::uint32_t encode_i(std::uint8_t op, unsigned rs, unsigned rt, std::uint16_t imm) {
  return (std::uint32_t{op} << 26) | ((rs & 31u) << 21) | ((rt & 31u) << 16) | imm;
}

std::uint32_t encode_j(std::uint8_t op, std::uint32_t target) {
  return (std::uint32_t{op} << 26) | (target & 0x03ffffffu);
}

}  // namespace hwgn2::mips
