#include "hwgn2/emulator.hpp"

#include <bit>
#include <cstdio>
#include <string>

#include "hwgn2/error.hpp"

namespace hwgn2::mips {

void CpuStepConfig::validate() const {
  if (!std::has_single_bit(dmem_words) || dmem_words < 16 || dmem_words > 4096)
    throw Error("dmem_words must be a power of two in [16, 4096], got " + std::to_string(dmem_words));
}

unsigned CpuStepConfig::address_bits() const { return static_cast<unsigned>(std::countr_zero(dmem_words)); }

void MipsProgram::validate() const {
  CpuStepConfig{dmem_words, true, false}.validate();
  if (instructions.size() > (1u << kPcBits)) throw Error("program longer than the 16-bit pc can address");
  auto check_region = [&](Region r, const char* what) {
    if (std::uint64_t{r.base} + r.count > dmem_words)
      throw Error(std::string(what) + " region [" + std::to_string(r.base) + ", +" + std::to_string(r.count) +
                  ") exceeds dmem of " + std::to_string(dmem_words) + " words");
  };
  check_region(evaluator_input_region, "input");
  check_region(output_region, "output");
  const Region in = evaluator_input_region;
  for (const auto& [addr, word] : dmem_init_garbler) {
    (void)word;
    if (addr >= dmem_words) throw Error("garbler data at address " + std::to_string(addr) + " is outside dmem");
    if (addr >= in.base && addr < in.base + in.count)
      throw Error("garbler data at address " + std::to_string(addr) + " overlaps the evaluator input region");
  }
}

void step_in_place(CpuState& s, MipsInstructionWord instr, const CpuStepConfig& cfg, const WriteHook& hook,
                   std::uint64_t step_index) {
  if (s.halted) return;
  if (s.dmem.size() != cfg.dmem_words) throw Error("state dmem size does not match the configuration");
  const Fields f = instr.decoded();
  const Op op = classify(instr.word, cfg.include_mult);
  if (op == Op::Invalid) throw Error("unsupported instruction word 0x" + [&] {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", instr.word);
    return std::string(buf);
  }());

  CpuState& n = s;
  const std::uint16_t pc0 = s.pc;
  const std::uint32_t rs = s.regs[f.rs];
  const std::uint32_t rt = s.regs[f.rt];
  const std::uint32_t simm = static_cast<std::uint32_t>(sext16(f.imm));
  const std::uint32_t uimm = f.imm;
  const std::uint16_t pc1 = static_cast<std::uint16_t>(s.pc + 1);
  n.pc = pc1;

  auto write_reg = [&](unsigned r, std::uint32_t v) {
    if (r == 0) return;
    n.regs[r] = v;
    if (hook) hook({step_index, WriteKind::Reg, r, v, 32});
  };
  auto mem_addr = [&]() {
    const std::uint32_t a = rs + simm;
    if (a >= cfg.dmem_words)
      throw Error("data address " + std::to_string(a) + " outside dmem of " + std::to_string(cfg.dmem_words) + " words");
    return a;
  };

  switch (op) {
    case Op::Add:
    case Op::Addu: write_reg(f.rd, rs + rt); break;
    case Op::Sub: write_reg(f.rd, rs - rt); break;
    case Op::And: write_reg(f.rd, rs & rt); break;
    case Op::Or: write_reg(f.rd, rs | rt); break;
    case Op::Xor: write_reg(f.rd, rs ^ rt); break;
    case Op::Nor: write_reg(f.rd, ~(rs | rt)); break;
    case Op::Slt: write_reg(f.rd, static_cast<std::int32_t>(rs) < static_cast<std::int32_t>(rt) ? 1 : 0); break;
    case Op::Sltu: write_reg(f.rd, rs < rt ? 1 : 0); break;
    case Op::Sll: write_reg(f.rd, rt << f.shamt); break;
    case Op::Srl: write_reg(f.rd, rt >> f.shamt); break;
    case Op::Sra: write_reg(f.rd, static_cast<std::uint32_t>(static_cast<std::int32_t>(rt) >> f.shamt)); break;
    case Op::Jr: n.pc = static_cast<std::uint16_t>(rs); break;
    case Op::Mult:
      n.lo = rs * rt;
      if (hook) hook({step_index, WriteKind::Lo, 0, n.lo, 32});
      break;
    case Op::Mflo: write_reg(f.rd, s.lo); break;
    case Op::Halt:
      n.pc = pc0;
      n.halted = true;
      break;
    case Op::Addi:
    case Op::Addiu: write_reg(f.rt, rs + simm); break;
    case Op::Andi: write_reg(f.rt, rs & uimm); break;
    case Op::Ori: write_reg(f.rt, rs | uimm); break;
    case Op::Xori: write_reg(f.rt, rs ^ uimm); break;
    case Op::Slti: write_reg(f.rt, static_cast<std::int32_t>(rs) < static_cast<std::int32_t>(simm) ? 1 : 0); break;
    case Op::Lui: write_reg(f.rt, uimm << 16); break;
    case Op::Lw: write_reg(f.rt, s.dmem[mem_addr()]); break;
    case Op::Sw: {
      const std::uint32_t a = mem_addr();
      n.dmem[a] = rt;
      if (hook) hook({step_index, WriteKind::Mem, a, rt, 32});
      break;
    }
    case Op::Beq:
      if (rs == rt) n.pc = static_cast<std::uint16_t>(pc1 + simm);
      break;
    case Op::Bne:
      if (rs != rt) n.pc = static_cast<std::uint16_t>(pc1 + simm);
      break;
    case Op::J: n.pc = static_cast<std::uint16_t>(f.target); break;
    case Op::Jal:
      write_reg(31, pc1);
      n.pc = static_cast<std::uint16_t>(f.target);
      break;
    case Op::Invalid: break;
  }
}

CpuState step_plain(const CpuState& s, MipsInstructionWord instr, const CpuStepConfig& cfg, const WriteHook& hook,
                    std::uint64_t step_index) {
  CpuState n = s;
  step_in_place(n, instr, cfg, hook, step_index);
  return n;
}

CpuState initial_state(const MipsProgram& p, std::span<const std::uint32_t> input) {
  p.validate();
  if (input.size() != p.evaluator_input_region.count)
    throw Error("evaluator input has " + std::to_string(input.size()) + " words, program expects " +
                std::to_string(p.evaluator_input_region.count));
  CpuState s(p.dmem_words);
  for (const auto& [a, w] : p.dmem_init_garbler) s.dmem[a] = w;
  for (std::size_t i = 0; i < input.size(); ++i) s.dmem[p.evaluator_input_region.base + i] = input[i];
  return s;
}

RunResult run_plain(const MipsProgram& p, std::span<const std::uint32_t> input, std::uint64_t step_limit,
                    bool trace_hooks) {
  RunResult r;
  CpuState s = initial_state(p, input);
  CpuStepConfig cfg = p.step_config();
  cfg.trace_hooks = trace_hooks;
  WriteHook hook;
  if (trace_hooks) hook = [&](const WriteEvent& e) { r.events.push_back(e); };
  while (!s.halted && s.pc < p.instructions.size()) {
    if (r.step_count >= step_limit)
      throw Error("step limit of " + std::to_string(step_limit) + " reached without halting");
    r.fetch_trace.push_back(s.pc);
    step_in_place(s, p.instructions[s.pc], cfg, hook, r.step_count);
    ++r.step_count;
  }
  r.output_words = read_region(s, p.output_region);
  r.final_state = std::move(s);
  return r;
}

std::vector<std::uint32_t> read_region(const CpuState& s, Region r) {
  if (std::uint64_t{r.base} + r.count > s.dmem.size()) throw Error("region outside dmem");
  return {s.dmem.begin() + r.base, s.dmem.begin() + r.base + r.count};
}

}  // namespace hwgn2::mips
