#include "hwgn2/step_circuit.hpp"

#include <array>
#include <vector>

#include "hwgn2/circuit_builder.hpp"
#include "hwgn2/error.hpp"

namespace hwgn2::mips {

using circuit::Bits;
using circuit::CircuitBuilder;
using circuit::Signal;

Bits encode_state(const CpuState& s) {
  Bits b;
  b.reserve(StateLayout{static_cast<std::uint32_t>(s.dmem.size())}.width());
  circuit::append_word_bits(b, s.pc, kPcBits);
  b.push_back(s.halted ? 1 : 0);
  for (unsigned r = 1; r < 32; ++r) circuit::append_word_bits(b, s.regs[r]);
  circuit::append_word_bits(b, s.lo);
  for (auto w : s.dmem) circuit::append_word_bits(b, w);
  return b;
}

CpuState decode_state(std::span<const std::uint8_t> bits, std::uint32_t dmem_words) {
  const StateLayout L{dmem_words};
  if (bits.size() != L.width()) throw Error("state has " + std::to_string(bits.size()) + " bits, expected " + std::to_string(L.width()));
  CpuState s(dmem_words);
  s.pc = static_cast<std::uint16_t>(circuit::word_from_bits(bits.subspan(L.kPc, kPcBits), kPcBits));
  s.halted = bits[L.kHalted] != 0;
  for (unsigned r = 1; r < 32; ++r) s.regs[r] = circuit::word_from_bits(bits.subspan(L.reg(r), 32));
  s.lo = circuit::word_from_bits(bits.subspan(L.kLo, 32));
  for (std::uint32_t a = 0; a < dmem_words; ++a) s.dmem[a] = circuit::word_from_bits(bits.subspan(L.mem(a), 32));
  return s;
}

Bits instruction_bits(std::uint32_t word) {
  Bits b;
  circuit::append_word_bits(b, word);
  return b;
}

namespace {

using Word = std::vector<Signal>;

class StepBuilder {
 public:
  explicit StepBuilder(const CpuStepConfig& cfg) : cfg_(cfg), L_{cfg.dmem_words}, b_(kInstructionBits, L_.width()) {}

  circuit::Netlist build();

 private:
  Signal ibit(unsigned i) const { return b_.garbler_input(i); }
  Signal sbit(std::uint32_t i) const { return b_.evaluator_input(i); }
  Word state_word(std::uint32_t offset, unsigned width = 32) const {
    Word w(width);
    for (unsigned i = 0; i < width; ++i) w[i] = sbit(offset + i);
    return w;
  }
  Word ifield(unsigned lo, unsigned width) const {
    Word w(width);
    for (unsigned i = 0; i < width; ++i) w[i] = ibit(lo + i);
    return w;
  }
  static Word constant_word(std::uint32_t v, unsigned width = 32) {
    Word w(width);
    for (unsigned i = 0; i < width; ++i) w[i] = CircuitBuilder::constant((v >> i) & 1);
    return w;
  }

  // One-hot decode of `bits` (little-endian) into 2^n lines.
  std::vector<Signal> decode(const Word& bits) {
    std::vector<Signal> lines{CircuitBuilder::one()};
    for (const Signal& bit : bits) {
      const Signal nb = b_.lnot(bit);
      std::vector<Signal> next(2 * lines.size());
      for (std::size_t i = 0; i < lines.size(); ++i) {
        next[i] = b_.land(lines[i], nb);
        next[i + lines.size()] = b_.land(lines[i], bit);
      }
      lines = std::move(next);
    }
    return lines;
  }

  Word mux(Signal sel, const Word& if0, const Word& if1) {
    Word out(if0.size());
    for (std::size_t i = 0; i < if0.size(); ++i) out[i] = b_.mux(sel, if0[i], if1[i]);
    return out;
  }
  Word gate_word(Signal en, const Word& w) {
    Word out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = b_.land(en, w[i]);
    return out;
  }
  Word xor_word(const Word& a, const Word& c) {
    Word out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = b_.lxor(a[i], c[i]);
    return out;
  }
  // Mux tree selecting items[index]; items.size() == 2^index.size().
  Word select(const std::vector<Word>& items, const Word& index) {
    std::vector<Word> level = items;
    for (const Signal& bit : index) {
      std::vector<Word> next(level.size() / 2);
      for (std::size_t i = 0; i < next.size(); ++i) next[i] = mux(bit, level[2 * i], level[2 * i + 1]);
      level = std::move(next);
    }
    return level[0];
  }
  // a + b + cin, ripple carry with one AND per bit. Returns sum and carry out.
  std::pair<Word, Signal> add(const Word& a, const Word& c, Signal cin) {
    Word sum(a.size());
    Signal carry = cin;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const Signal ax = b_.lxor(a[i], carry);
      const Signal bx = b_.lxor(c[i], carry);
      sum[i] = b_.lxor(ax, c[i]);
      carry = b_.lxor(carry, b_.land(ax, bx));
    }
    return {sum, carry};
  }
  Word shift_left(const Word& v, const Word& amount) {
    Word cur = v;
    for (unsigned s = 0; s < amount.size(); ++s) {
      const unsigned k = 1u << s;
      Word shifted(cur.size(), CircuitBuilder::zero());
      for (std::size_t i = k; i < cur.size(); ++i) shifted[i] = cur[i - k];
      cur = mux(amount[s], cur, shifted);
    }
    return cur;
  }
  Word shift_right(const Word& v, const Word& amount, Signal fill) {
    Word cur = v;
    for (unsigned s = 0; s < amount.size(); ++s) {
      const unsigned k = 1u << s;
      Word shifted(cur.size(), fill);
      for (std::size_t i = 0; i + k < cur.size(); ++i) shifted[i] = cur[i + k];
      cur = mux(amount[s], cur, shifted);
    }
    return cur;
  }
  Word multiply_low(const Word& a, const Word& c) {
    Word acc = gate_word(c[0], a);
    for (std::size_t i = 1; i < c.size(); ++i) {
      // acc[i..] += (a & c_i) truncated to the remaining width.
      const std::size_t width = a.size() - i;
      Word hi(acc.begin() + static_cast<std::ptrdiff_t>(i), acc.end());
      Word row(width);
      for (std::size_t j = 0; j < width; ++j) row[j] = b_.land(a[j], c[i]);
      auto [sum, carry] = add(hi, row, CircuitBuilder::zero());
      (void)carry;
      for (std::size_t j = 0; j < width; ++j) acc[i + j] = sum[j];
    }
    return acc;
  }
  Signal any(const Word& w) {
    Signal s = CircuitBuilder::zero();
    for (const Signal& x : w) s = b_.lor(s, x);
    return s;
  }

  CpuStepConfig cfg_;
  StateLayout L_;
  CircuitBuilder b_;
};

circuit::Netlist StepBuilder::build() {
  // Instruction fields.
  const Word opcode = ifield(26, 6);
  const Word rs_idx = ifield(21, 5);
  const Word rt_idx = ifield(16, 5);
  const Word rd_idx = ifield(11, 5);
  const Word shamt = ifield(6, 5);
  const Word funct = ifield(0, 6);
  const Word imm = ifield(0, 16);
  const Word target = ifield(0, 16);

  // Opcode/funct decode through shared 3-bit predecoders.
  auto decode6 = [&](const Word& v) {
    const auto lo = decode(Word(v.begin(), v.begin() + 3));
    const auto hi = decode(Word(v.begin() + 3, v.end()));
    return std::pair{lo, hi};
  };
  const auto [op_lo, op_hi] = decode6(opcode);
  const auto [fn_lo, fn_hi] = decode6(funct);
  auto is_op = [&](std::uint8_t code) { return b_.land(op_lo[code & 7], op_hi[code >> 3]); };
  const Signal special = is_op(opcode::Special);
  auto is_fn = [&](std::uint8_t code) { return b_.land(special, b_.land(fn_lo[code & 7], fn_hi[code >> 3])); };

  const Signal f_add = b_.lor(is_fn(funct::Add), is_fn(funct::Addu));
  const Signal f_sub = is_fn(funct::Sub);
  const Signal f_and = is_fn(funct::And);
  const Signal f_or = is_fn(funct::Or);
  const Signal f_xor = is_fn(funct::Xor);
  const Signal f_nor = is_fn(funct::Nor);
  const Signal f_slt = is_fn(funct::Slt);
  const Signal f_sltu = is_fn(funct::Sltu);
  const Signal f_sll = is_fn(funct::Sll);
  const Signal f_srl = is_fn(funct::Srl);
  const Signal f_sra = is_fn(funct::Sra);
  const Signal f_jr = is_fn(funct::Jr);
  const Signal f_mult = cfg_.include_mult ? is_fn(funct::Mult) : CircuitBuilder::zero();
  const Signal f_mflo = cfg_.include_mult ? is_fn(funct::Mflo) : CircuitBuilder::zero();
  const Signal f_halt = is_fn(funct::Halt);
  const Signal o_addi = b_.lor(is_op(opcode::Addi), is_op(opcode::Addiu));
  const Signal o_andi = is_op(opcode::Andi);
  const Signal o_ori = is_op(opcode::Ori);
  const Signal o_xori = is_op(opcode::Xori);
  const Signal o_slti = is_op(opcode::Slti);
  const Signal o_lui = is_op(opcode::Lui);
  const Signal o_lw = is_op(opcode::Lw);
  const Signal o_sw = is_op(opcode::Sw);
  const Signal o_beq = is_op(opcode::Beq);
  const Signal o_bne = is_op(opcode::Bne);
  const Signal o_j = is_op(opcode::J);
  const Signal o_jal = is_op(opcode::Jal);

  // State.
  const Word pc = state_word(L_.kPc, kPcBits);
  const Signal halted = sbit(L_.kHalted);
  std::vector<Word> regs(32);
  regs[0] = constant_word(0);
  for (unsigned r = 1; r < 32; ++r) regs[r] = state_word(L_.reg(r));
  const Word lo = state_word(L_.kLo);
  std::vector<Word> mem(cfg_.dmem_words);
  for (std::uint32_t a = 0; a < cfg_.dmem_words; ++a) mem[a] = state_word(L_.mem(a));

  // Register reads.
  const Word rs_val = select(regs, rs_idx);
  const Word rt_val = select(regs, rt_idx);

  // Second ALU operand: rt, sign-extended or zero-extended immediate.
  const Signal use_simm = b_.lor(b_.lor(o_addi, o_slti), b_.lor(o_lw, o_sw));
  const Signal use_uimm = b_.lor(o_andi, b_.lor(o_ori, o_xori));
  Word imm_ext(32);
  for (unsigned i = 0; i < 32; ++i) {
    if (i < 16) imm_ext[i] = imm[i];
    else imm_ext[i] = b_.land(use_simm, imm[15]);
  }
  const Word operand_b = mux(b_.lor(use_simm, use_uimm), rt_val, imm_ext);

  // Adder shared by add/sub/compare/address/branch-equality.
  const Signal subtract = b_.lor(b_.lor(f_sub, f_slt), b_.lor(f_sltu, b_.lor(o_slti, b_.lor(o_beq, o_bne))));
  Word b_in(32);
  for (unsigned i = 0; i < 32; ++i) b_in[i] = b_.lxor(operand_b[i], subtract);
  const auto [sum, carry_out] = add(rs_val, b_in, subtract);
  const Signal sign_differs = b_.lxor(rs_val[31], operand_b[31]);
  const Signal less_signed = b_.mux(sign_differs, sum[31], rs_val[31]);
  const Signal less_unsigned = b_.lnot(carry_out);
  const Signal equal = b_.lnot(any(sum));

  // Logic unit.
  const Word and_v = [&] {
    Word w(32);
    for (unsigned i = 0; i < 32; ++i) w[i] = b_.land(rs_val[i], operand_b[i]);
    return w;
  }();
  const Word xor_v = xor_word(rs_val, operand_b);
  const Word or_v = xor_word(xor_v, and_v);
  Word nor_v(32);
  for (unsigned i = 0; i < 32; ++i) nor_v[i] = b_.lnot(or_v[i]);

  // Shifter and multiplier.
  const Word sll_v = shift_left(rt_val, shamt);
  const Word srl_v = shift_right(rt_val, shamt, CircuitBuilder::zero());
  const Word sra_v = shift_right(rt_val, shamt, rt_val[31]);
  const Word mul_v = cfg_.include_mult ? multiply_low(rs_val, rt_val) : constant_word(0);

  // PC arithmetic.
  Word one16 = constant_word(1, kPcBits);
  const Word pc1 = add(pc, one16, CircuitBuilder::zero()).first;
  const Word branch_target = add(pc1, Word(imm.begin(), imm.begin() + kPcBits), CircuitBuilder::zero()).first;

  // Data memory read.
  const unsigned abits = cfg_.address_bits();
  const Word addr(sum.begin(), sum.begin() + abits);
  const Word load_v = select(mem, addr);

  // Result selection (one-hot; XOR combines).
  Word pc1_ext = constant_word(0);
  for (unsigned i = 0; i < kPcBits; ++i) pc1_ext[i] = pc1[i];
  Word lui_v = constant_word(0);
  for (unsigned i = 0; i < 16; ++i) lui_v[16 + i] = imm[i];
  const Signal take_sum = b_.lor(b_.lor(f_add, f_sub), o_addi);
  const Signal take_and = b_.lor(f_and, o_andi);
  const Signal take_or = b_.lor(f_or, o_ori);
  const Signal take_xor = b_.lor(f_xor, o_xori);
  const Signal take_slt = b_.lor(f_slt, o_slti);
  std::vector<std::pair<Signal, Word>> results = {
      {take_sum, sum}, {take_and, and_v}, {take_or, or_v},   {take_xor, xor_v}, {f_nor, nor_v},
      {f_sll, sll_v},  {f_srl, srl_v},    {f_sra, sra_v},    {o_lui, lui_v},    {f_mflo, lo},
      {o_lw, load_v},  {o_jal, pc1_ext},
  };
  Word result = constant_word(0);
  for (const auto& [sel, value] : results) result = xor_word(result, gate_word(sel, value));
  result[0] = b_.lxor(result[0], b_.lxor(b_.land(take_slt, less_signed), b_.land(f_sltu, less_unsigned)));

  // Register write-back.
  const Signal live = b_.lnot(halted);
  const Signal writes_rd = b_.lor(b_.lor(b_.lor(f_add, f_sub), b_.lor(f_and, f_or)),
                                  b_.lor(b_.lor(b_.lor(f_xor, f_nor), b_.lor(f_slt, f_sltu)),
                                         b_.lor(b_.lor(f_sll, f_srl), b_.lor(f_sra, f_mflo))));
  const Signal writes_rt =
      b_.lor(b_.lor(b_.lor(o_addi, o_andi), b_.lor(o_ori, o_xori)), b_.lor(b_.lor(o_slti, o_lui), o_lw));
  Word dest = mux(writes_rt, rd_idx, rt_idx);
  for (auto& d : dest) d = b_.lor(d, o_jal);
  const Signal reg_we = b_.land(live, b_.lor(b_.lor(writes_rd, writes_rt), o_jal));
  const auto dest_lines = decode(dest);
  std::vector<Word> next_regs(32);
  for (unsigned r = 1; r < 32; ++r) next_regs[r] = mux(b_.land(reg_we, dest_lines[r]), regs[r], result);

  // LO.
  const Word next_lo = mux(b_.land(live, f_mult), lo, mul_v);

  // Data memory write.
  const Signal mem_we = b_.land(live, o_sw);
  const auto addr_lines = decode(addr);
  std::vector<Word> next_mem(cfg_.dmem_words);
  for (std::uint32_t a = 0; a < cfg_.dmem_words; ++a) next_mem[a] = mux(b_.land(mem_we, addr_lines[a]), mem[a], rt_val);

  // Next pc: priority halted > halt > jr > j/jal > taken branch > pc + 1.
  const Signal taken = b_.lor(b_.land(o_beq, equal), b_.land(o_bne, b_.lnot(equal)));
  Word next_pc = mux(taken, pc1, branch_target);
  next_pc = mux(b_.lor(o_j, o_jal), next_pc, target);
  next_pc = mux(f_jr, next_pc, Word(rs_val.begin(), rs_val.begin() + kPcBits));
  next_pc = mux(b_.lor(halted, f_halt), next_pc, pc);
  const Signal next_halted = b_.lor(halted, f_halt);

  std::vector<Signal> outputs;
  outputs.reserve(L_.width());
  outputs.insert(outputs.end(), next_pc.begin(), next_pc.end());
  outputs.push_back(next_halted);
  for (unsigned r = 1; r < 32; ++r) outputs.insert(outputs.end(), next_regs[r].begin(), next_regs[r].end());
  outputs.insert(outputs.end(), next_lo.begin(), next_lo.end());
  for (const auto& w : next_mem) outputs.insert(outputs.end(), w.begin(), w.end());
  return b_.finish(outputs);
}

}  // namespace

circuit::Netlist build_step_netlist(const CpuStepConfig& cfg) {
  cfg.validate();
  return StepBuilder(cfg).build();
}

}  // namespace hwgn2::mips
