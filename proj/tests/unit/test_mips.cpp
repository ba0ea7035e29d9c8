#include <gtest/gtest.h>

#include "hwgn2/assembler.hpp"
#include "hwgn2/circuit_builder.hpp"
#include "hwgn2/digest.hpp"
#include "hwgn2/emulator.hpp"
#include "hwgn2/error.hpp"
#include "hwgn2/netlist_io.hpp"
#include "hwgn2/step_circuit.hpp"
#include "mips_gen.hpp"
#include "ref_mips.hpp"

using namespace hwgn2;
using namespace hwgn2::mips;

namespace {
std::uint32_t asm1(const std::string& line) { return assemble(line).instructions.at(0).word; }

CpuState from_ref(const oracle::RefCpu& c) {
  CpuState s(static_cast<std::uint32_t>(c.mem.size()));
  s.pc = static_cast<std::uint16_t>(c.pc);
  s.halted = c.halted;
  for (int i = 0; i < 32; ++i) s.regs[i] = c.r[i];
  s.lo = c.lo;
  s.dmem = c.mem;
  return s;
}
oracle::RefCpu to_ref(const CpuState& s) {
  oracle::RefCpu c;
  c.pc = s.pc;
  c.halted = s.halted;
  for (int i = 0; i < 32; ++i) c.r[i] = s.regs[i];
  c.lo = s.lo;
  c.mem = s.dmem;
  return c;
}
}  // namespace

TEST(Isa, EncodingTableSpotChecks) {
  EXPECT_EQ(asm1("ADD r3, r1, r2"), 0x00221820u);
  EXPECT_EQ(asm1("addi $1, $0, 5"), 0x20010005u);
  EXPECT_EQ(asm1("LW r2, 4(r1)"), 0x8c220004u);
  EXPECT_EQ(asm1("SW r2, -4(r1)"), 0xac22fffcu);
  EXPECT_EQ(asm1("SLL r1, r2, 4"), 0x00020900u);
  EXPECT_EQ(asm1("MULT r1, r2"), 0x00220018u);
  EXPECT_EQ(asm1("MFLO r3"), 0x00001812u);
  EXPECT_EQ(asm1("JR r31"), 0x03e00008u);
  EXPECT_EQ(asm1("J 12"), 0x0800000cu);
  EXPECT_EQ(asm1("HALT"), kHaltWord);
  EXPECT_EQ(asm1("NOP"), 0u);
  EXPECT_EQ(classify(0xfc000000u), Op::Invalid);
  EXPECT_EQ(classify(0x00000018u, false), Op::Invalid);
}

TEST(Emulator, DirectedExamples) {
  CpuState s(16);
  s = step_plain(s, {asm1("ADDI r1, r0, 5")}, {16});
  EXPECT_EQ(s.regs[1], 5u);
  EXPECT_EQ(s.pc, 1);
  s.pc = 10;
  s = step_plain(s, {asm1("BEQ r0, r0, +3")}, {16});
  EXPECT_EQ(s.pc, 14);
  s = step_plain(s, {asm1("ADDI r0, r0, 7")}, {16});
  EXPECT_EQ(s.regs[0], 0u);
  s = step_plain(s, {kHaltWord}, {16});
  EXPECT_TRUE(s.halted);
  EXPECT_EQ(s, step_plain(s, {asm1("ADDI r1, r0, 9")}, {16}));
}

TEST(Emulator, ErrorsOnBadEncodingAndAddress) {
  CpuState s(16);
  EXPECT_THROW(step_plain(s, {0xfc000000u}, {16}), Error);
  EXPECT_THROW(step_plain(s, {asm1("LW r1, 16(r0)")}, {16}), Error);
  EXPECT_THROW(step_plain(s, {asm1("SW r1, -1(r0)")}, {16}), Error);
}

TEST(Emulator, AgreesWithReferenceInterpreterOnRandomPrograms) {
  Prg prg(seed_from_u64(40));
  for (int trial = 0; trial < 300; ++trial) {
    CpuState s = oracle::random_state(prg, 64);
    s.halted = false;
    oracle::RefCpu ref = to_ref(s);
    for (int i = 0; i < 20; ++i) {
      const std::uint32_t w = oracle::random_instruction(prg, s);
      ref = to_ref(s);
      ASSERT_TRUE(ref.step(w));
      s = step_plain(s, {w}, {64});
      ASSERT_EQ(s, from_ref(ref)) << disassemble_word(w);
    }
  }
}

TEST(Emulator, RunPlainHooksAndEmptyProgram) {
  MipsProgram empty;
  const auto r0 = run_plain(empty, {});
  EXPECT_EQ(r0.step_count, 0u);
  EXPECT_TRUE(r0.output_words.empty());

  const MipsProgram p = assemble(".memory 16\n.output 2 1\nORI r1, r0, 0xff\nSW r1, 2(r0)\n");
  const auto r = run_plain(p, {}, 100, true);
  EXPECT_EQ(r.step_count, 2u);
  EXPECT_EQ(r.output_words, std::vector<std::uint32_t>{0xff});
  ASSERT_EQ(r.events.size(), 2u);
  EXPECT_EQ(r.events[0].kind, WriteKind::Reg);
  EXPECT_EQ(std::popcount(r.events[0].value), 8);
  EXPECT_EQ(r.events[1].kind, WriteKind::Mem);

  const MipsProgram loop = assemble(".memory 16\ntop: J top\n");
  EXPECT_THROW(run_plain(loop, {}, 50), Error);
}

TEST(Assembler, LabelsDirectivesAndRoundTrip) {
  const std::string src =
      ".memory 1024\n"
      ".input 0x40 784\n"
      ".output 900 10\n"
      ".dmem 1000\n"
      ".words 1 -1 0x7fff\n"
      "start: ADDI r1, r0, 3   # count\n"
      "loop:  ADDI r1, r1, -1\n"
      "       BNE r1, r0, loop\n"
      "       JAL done\n"
      "       LUI r2, 0xbeef\n"
      "done:  HALT\n";
  const MipsProgram p = assemble(src);
  EXPECT_EQ(p.evaluator_input_region, (Region{64, 784}));
  EXPECT_EQ(p.dmem_words, 1024u);
  EXPECT_EQ(p.dmem_init_garbler.at(1001), 0xffffffffu);
  EXPECT_EQ(p.instructions[2].word, asm1("BNE r1, r0, -2"));
  EXPECT_EQ(p.instructions[3].word, asm1("JAL 5"));
  const std::string canon = disassemble(p);
  EXPECT_EQ(assemble(canon), p);
  EXPECT_EQ(disassemble(assemble(canon)), canon);
}

TEST(Assembler, RandomWordsRoundTrip) {
  Prg prg(seed_from_u64(41));
  MipsProgram p;
  for (int i = 0; i < 2000; ++i) p.instructions.push_back({prg.next_u32()});
  CpuState s(256);
  for (int i = 0; i < 2000; ++i) p.instructions.push_back({oracle::random_instruction(prg, s)});
  EXPECT_EQ(assemble(disassemble(p)), p);
}

TEST(Assembler, Errors) {
  auto line_of = [](const std::string& t) {
    try {
      assemble(t);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  EXPECT_EQ(line_of("ADD r1, r2, r3\nFROB r1\n"), 2u);
  EXPECT_EQ(line_of("ADDI r1, r0, 40000\n"), 1u);
  EXPECT_EQ(line_of("a: NOP\na: NOP\n"), 2u);
  EXPECT_EQ(line_of("J nowhere\n"), 1u);
  EXPECT_EQ(line_of("ADD r1, r2\n"), 1u);
  EXPECT_EQ(line_of("SLL r1, r2, 32\n"), 1u);
  EXPECT_THROW(assemble(".memory 16\n.input 0 4\n.dmem 2\n.words 5\n"), Error);
}

TEST(StepCircuit, ShapeAndValidity) {
  const auto n = build_step_netlist({16});
  EXPECT_TRUE(circuit::validate(n).ok());
  EXPECT_EQ(n.n_garbler_inputs, 32u);
  EXPECT_EQ(n.n_evaluator_inputs, StateLayout{16}.width());
  EXPECT_EQ(n.n_outputs(), n.n_evaluator_inputs);
  EXPECT_THROW(build_step_netlist({24}), Error);
}

TEST(StepCircuit, StateEncodingRoundTrip) {
  Prg prg(seed_from_u64(42));
  const CpuState s = oracle::random_state(prg, 32);
  EXPECT_EQ(decode_state(encode_state(s), 32), s);
}

TEST(StepCircuit, MatchesEmulatorOnRandomAndDirectedVectors) {
  const CpuStepConfig cfg{32};
  const auto n = build_step_netlist(cfg);
  Prg prg(seed_from_u64(43));
  auto check = [&](const CpuState& s, std::uint32_t w) {
    const auto out = circuit::eval_plain(n, instruction_bits(w), encode_state(s));
    ASSERT_EQ(decode_state(out, cfg.dmem_words), step_plain(s, {w}, cfg)) << disassemble_word(w);
  };
  for (const auto& [s, w] : oracle::directed_vectors(prg, cfg.dmem_words)) check(s, w);
  for (int i = 0; i < 1500; ++i) {
    CpuState s = oracle::random_state(prg, cfg.dmem_words);
    const std::uint32_t w = oracle::random_instruction(prg, s);
    check(s, w);
  }
}

TEST(StepCircuit, InvalidEncodingIsNop) {
  const CpuStepConfig cfg{16};
  const auto n = build_step_netlist(cfg);
  Prg prg(seed_from_u64(44));
  for (std::uint32_t w : {0xfc000000u, 0x00000001u, 0x7c00ffffu}) {
    ASSERT_EQ(classify(w), Op::Invalid);
    CpuState s = oracle::random_state(prg, 16);
    s.halted = false;
    CpuState want = s;
    want.pc = static_cast<std::uint16_t>(s.pc + 1);
    EXPECT_EQ(decode_state(circuit::eval_plain(n, instruction_bits(w), encode_state(s)), 16), want);
  }
}

TEST(StepCircuit, XorStepNeedsFewerTablesThanAndStep) {
  // Fix the instruction bits, propagate constants, count what is left.
  const auto n = build_step_netlist({16});
  auto specialized_nonfree = [&](std::uint32_t word) {
    circuit::CircuitBuilder b(0, n.n_evaluator_inputs);
    std::vector<circuit::Signal> wire(n.n_wires());
    for (unsigned i = 0; i < 32; ++i) wire[i] = circuit::CircuitBuilder::constant((word >> i) & 1);
    for (std::uint32_t i = 0; i < n.n_evaluator_inputs; ++i) wire[32 + i] = b.input(i);
    for (const auto& g : n.gates) {
      const auto x = wire[g.in0];
      const auto y = g.in1 == circuit::kNoWire ? x : wire[g.in1];
      switch (g.kind) {
        case circuit::GateKind::And: wire[g.out] = b.land(x, y); break;
        case circuit::GateKind::Or: wire[g.out] = b.lor(x, y); break;
        case circuit::GateKind::Xor: wire[g.out] = b.lxor(x, y); break;
        case circuit::GateKind::Xnor: wire[g.out] = b.lxnor(x, y); break;
        case circuit::GateKind::Nand: wire[g.out] = b.lnot(b.land(x, y)); break;
        case circuit::GateKind::Nor: wire[g.out] = b.lnot(b.lor(x, y)); break;
        case circuit::GateKind::Not: wire[g.out] = b.lnot(x); break;
        case circuit::GateKind::Buf: wire[g.out] = x; break;
      }
    }
    std::vector<circuit::Signal> outs;
    for (auto w : n.output_wires) outs.push_back(wire[w]);
    return circuit::count_gates(b.finish(outs)).nonfree;
  };
  const auto x = specialized_nonfree(asm1("XOR r3, r1, r2"));
  const auto a = specialized_nonfree(asm1("AND r3, r1, r2"));
  EXPECT_GT(a, x);
  EXPECT_GE(a - x, 32u);
}

TEST(StepCircuit, GoldenDigests) {
  // Frozen; any change to the generator shows up here.
  const auto text = circuit::to_text(build_step_netlist({16}));
  EXPECT_EQ(to_hex(sha256(text)), "3d1d3b6f5417860fb1cd551201845350675a890cd8d641be3d96647a9dbb1ae5");
  const auto p = assemble("ADDI r1, r0, 5\nSW r1, 3(r0)\nHALT\n");
  EXPECT_EQ(to_hex(sha256(disassemble(p))), "6fd4abc287ba81a4034609ec047d592bb28532b472e259aa73081c1de1a54ccb");
}

TEST(StepCircuit, TableBudgetGrowsLinearlyInMemory) {
  const auto c64 = circuit::count_gates(build_step_netlist({64})).nonfree;
  const auto c128 = circuit::count_gates(build_step_netlist({128})).nonfree;
  EXPECT_LT(c64, 5300 + 70 * 64u);
  EXPECT_LT(c128, 5300 + 70 * 128u);
  EXPECT_NEAR(static_cast<double>(c128 - c64) / 64, 67, 3);
}
