#include "mips_gen.hpp"

#include "hwgn2/isa.hpp"

namespace hwgn2::oracle {

using namespace mips;

CpuState random_state(Prg& prg, std::uint32_t w) {
  CpuState s(w);
  s.pc = static_cast<std::uint16_t>(prg.next_u32());
  s.halted = prg.uniform(16) == 0;
  for (unsigned r = 1; r < 32; ++r) {
    switch (prg.uniform(4)) {
      case 0: s.regs[r] = static_cast<std::uint32_t>(prg.uniform(w)); break;
      case 1: s.regs[r] = static_cast<std::uint32_t>(-static_cast<std::int32_t>(prg.uniform(300))); break;
      default: s.regs[r] = prg.next_u32();
    }
  }
  s.lo = prg.next_u32();
  for (auto& m : s.dmem) m = prg.next_u32();
  return s;
}

std::uint32_t random_instruction(Prg& prg, CpuState& s) {
  static constexpr Op ops[] = {Op::Add, Op::Addu, Op::Sub, Op::And, Op::Or, Op::Xor, Op::Nor, Op::Slt,
                               Op::Sltu, Op::Sll, Op::Srl, Op::Sra, Op::Jr, Op::Mult, Op::Mflo, Op::Halt,
                               Op::Addi, Op::Addiu, Op::Andi, Op::Ori, Op::Xori, Op::Slti, Op::Lui, Op::Lw,
                               Op::Sw, Op::Beq, Op::Bne, Op::J, Op::Jal};
  const Op op = ops[prg.uniform(std::size(ops))];
  std::uint32_t w = prg.next_u32();
  if (is_rtype(op)) {
    w = (w & 0x03ffffc0u) | code_of(op);
  } else {
    w = (w & 0x03ffffffu) | (std::uint32_t{code_of(op)} << 26);
  }
  // Bias register fields toward repeats and r0 so equality branches fire.
  if (prg.uniform(4) == 0) w = (w & ~(31u << 16)) | (((w >> 21) & 31u) << 16);
  if (prg.uniform(8) == 0) w &= ~(31u << 21);
  if (op == Op::Lw || op == Op::Sw) {
    const unsigned rs = (w >> 21) & 31;
    const std::int32_t off = static_cast<std::int32_t>(prg.uniform(17)) - 8;
    const std::uint32_t addr = static_cast<std::uint32_t>(prg.uniform(s.dmem.size()));
    if (rs == 0) {
      w = (w & 0xffff0000u) | (addr & 0xffffu);
    } else {
      s.regs[rs] = addr - static_cast<std::uint32_t>(off);
      w = (w & 0xffff0000u) | (static_cast<std::uint32_t>(off) & 0xffffu);
    }
  }
  return w;
}

std::vector<std::pair<CpuState, std::uint32_t>> directed_vectors(Prg& prg, std::uint32_t dmem_words) {
  std::vector<std::pair<CpuState, std::uint32_t>> out;
  for (int op = 0; op < kOpCount; ++op) {
    CpuState s = random_state(prg, dmem_words);
    s.halted = false;
    std::uint32_t w;
    do {
      w = random_instruction(prg, s);
    } while (classify(w) != static_cast<Op>(op));
    out.emplace_back(std::move(s), w);
  }
  return out;
}

}  // namespace hwgn2::oracle
