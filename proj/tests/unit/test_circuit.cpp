#include <gtest/gtest.h>

#include "hwgn2/circuit.hpp"
#include "hwgn2/circuit_builder.hpp"
#include "hwgn2/error.hpp"
#include "hwgn2/netlist_io.hpp"
#include "random_netlist.hpp"

using namespace hwgn2;
using namespace hwgn2::circuit;

namespace {
Netlist one_gate(GateKind k) {
  Netlist n;
  n.n_garbler_inputs = 1;
  n.n_evaluator_inputs = 1;
  n.gates.push_back({2, k, 0, is_unary(k) ? kNoWire : 1, 2});
  n.output_wires = {2};
  return n;
}
}  // namespace

TEST(Circuit, SingleGateTruthTables) {
  EXPECT_TRUE(validate(one_gate(GateKind::Xor)).ok());
  const Bits one{1};
  EXPECT_EQ(eval_plain(one_gate(GateKind::Xor), one, one), Bits{0});
  EXPECT_EQ(eval_plain(one_gate(GateKind::And), one, one), Bits{1});
  EXPECT_EQ(eval_plain(one_gate(GateKind::Nor), Bits{0}, Bits{0}), Bits{1});
}

TEST(Circuit, LengthMismatchThrows) {
  EXPECT_THROW(eval_plain(one_gate(GateKind::Xor), Bits{1, 0}, Bits{1}), Error);
}

TEST(Circuit, DetectsTopologicalViolation) {
  Netlist n;
  n.n_garbler_inputs = 2;
  for (std::uint32_t k = 0; k < 8; ++k) n.gates.push_back({2 + k, GateKind::Xor, 0, 1, 2 + k});
  n.gates[5].in1 = 9;  // gate 5 reads gate 7's output
  for (std::uint32_t k = 0; k < 8; ++k) n.output_wires.push_back(2 + k);
  const auto r = validate(n);
  EXPECT_TRUE(r.has(ViolationKind::TopologicalOrder));
  EXPECT_THROW(require_valid(n), ValidationError);
}

TEST(Circuit, DetectsArityRangeDriversDangling) {
  Netlist n = one_gate(GateKind::Not);
  n.gates[0].in1 = 1;
  EXPECT_TRUE(validate(n).has(ViolationKind::ArityMismatch));

  n = one_gate(GateKind::And);
  n.gates[0].in1 = 50;
  EXPECT_TRUE(validate(n).has(ViolationKind::OutOfRangeId));

  n = one_gate(GateKind::And);
  n.gates.push_back({3, GateKind::Or, 0, 1, 2});
  n.output_wires.push_back(3);
  EXPECT_TRUE(validate(n).has(ViolationKind::MultipleDrivers));

  n = one_gate(GateKind::And);
  n.gates.push_back({3, GateKind::Or, 0, 1, 3});
  EXPECT_TRUE(validate(n).has(ViolationKind::DanglingWire));

  n = one_gate(GateKind::And);
  n.gates.push_back({2, GateKind::Or, 0, 1, 2});
  n.gates.push_back({4, GateKind::Xor, 3, 0, 4});
  n.output_wires = {2, 4};
  EXPECT_TRUE(validate(n).has(ViolationKind::UnassignedWire));
}

TEST(Circuit, EvalMatchesIndependentOracleExhaustively) {
  Prg prg(seed_from_u64(11));
  for (int trial = 0; trial < 50; ++trial) {
    const Netlist n = oracle::random_netlist(prg, 3, 3, 10);
    ASSERT_TRUE(validate(n).ok()) << validate(n).summary();
    for (std::uint64_t x = 0; x < 64; ++x) {
      const Bits in = oracle::input_vector(x, 6);
      const Bits g(in.begin(), in.begin() + 3), e(in.begin() + 3, in.end());
      ASSERT_EQ(eval_plain(n, g, e), oracle::reference_eval(n, in));
    }
  }
}

TEST(Circuit, SlicedMatchesScalar) {
  Prg prg(seed_from_u64(12));
  const Netlist n = oracle::random_netlist(prg, 4, 4, 40);
  std::vector<std::uint64_t> in(8);
  for (auto& w : in) w = prg.next_u64();
  const auto out = eval_plain_sliced(n, in);
  for (int lane = 0; lane < 64; ++lane) {
    Bits g(4), e(4);
    for (int i = 0; i < 4; ++i) {
      g[i] = (in[i] >> lane) & 1;
      e[i] = (in[4 + i] >> lane) & 1;
    }
    const Bits y = eval_plain(n, g, e);
    for (std::size_t j = 0; j < y.size(); ++j) ASSERT_EQ(y[j], (out[j] >> lane) & 1);
  }
}

TEST(Circuit, PartitionSizes) {
  Netlist n;
  n.n_garbler_inputs = 1;
  n.gates.push_back({1, GateKind::Not, 0, kNoWire, 1});
  for (std::uint32_t k = 1; k < 10; ++k) n.gates.push_back({1 + k, GateKind::Not, k, kNoWire, 1 + k});
  n.output_wires = {10};
  EXPECT_EQ(partition(n, 10).size(), 1u);
  const auto p = partition(n, 3);
  ASSERT_EQ(p.size(), 4u);
  EXPECT_EQ(p[0].gates.size(), 3u);
  EXPECT_EQ(p[3].gates.size(), 1u);
  EXPECT_EQ(p[1].boundary_in, std::vector<WireId>{3});
  EXPECT_EQ(p[1].boundary_out, std::vector<WireId>{6});
  EXPECT_THROW(partition(n, 0), Error);

  Netlist big;
  big.n_garbler_inputs = 1;
  for (std::uint32_t k = 0; k < 9380; ++k) big.gates.push_back({1 + k, GateKind::Not, k, kNoWire, 1 + k});
  big.output_wires = {9380};
  EXPECT_EQ(partition(big, 4).size(), 2345u);
}

TEST(Circuit, PartitionReassemblesAndEvaluatesPiecewise) {
  Prg prg(seed_from_u64(13));
  for (int trial = 0; trial < 20; ++trial) {
    const Netlist n = oracle::random_netlist(prg, 4, 4, 30);
    for (std::uint32_t b = 1; b <= n.gates.size(); ++b) {
      const auto parts = partition(n, b);
      std::vector<Gate> joined;
      for (const auto& p : parts) joined.insert(joined.end(), p.gates.begin(), p.gates.end());
      ASSERT_EQ(joined, n.gates);
    }
    // Piecewise evaluation: each piece only sees its boundary_in values.
    const auto parts = partition(n, 7);
    for (std::uint64_t x = 0; x < 256; x += 17) {
      const Bits in = oracle::input_vector(x, 8);
      std::vector<int> carried(n.n_wires(), -1);
      for (std::uint32_t i = 0; i < 8; ++i) carried[i] = in[i];
      for (const auto& p : parts) {
        std::vector<int> local(n.n_wires(), -1);
        for (auto w : p.boundary_in) {
          ASSERT_GE(carried[w], 0);
          local[w] = carried[w];
        }
        for (const auto& g : p.gates) {
          const int a = local[g.in0];
          const int c = g.in1 == kNoWire ? 0 : local[g.in1];
          ASSERT_GE(a, 0);
          ASSERT_GE(c, 0);
          local[g.out] = apply(g.kind, a, c);
        }
        for (auto w : p.boundary_out) carried[w] = local[w];
      }
      const Bits want = eval_plain(n, Bits(in.begin(), in.begin() + 4), Bits(in.begin() + 4, in.end()));
      for (std::size_t j = 0; j < want.size(); ++j) ASSERT_EQ(carried[n.output_wires[j]], want[j]);
    }
  }
}

TEST(Circuit, CountGates) {
  EXPECT_EQ(count_gates(one_gate(GateKind::Xor)), (GateCounts{1, 1, 0}));
  EXPECT_EQ(count_gates(one_gate(GateKind::And)), (GateCounts{1, 0, 1}));
  Prg prg(seed_from_u64(14));
  const Netlist n = oracle::random_netlist(prg, 5, 5, 64);
  const auto c = count_gates(n);
  EXPECT_EQ(c.total, n.gates.size());
  EXPECT_EQ(c.free + c.nonfree, c.total);
}

TEST(Builder, FoldsHashesAndEliminatesDeadGates) {
  CircuitBuilder b(2, 1);
  const Signal x = b.input(0), y = b.input(1), z = b.input(2);
  EXPECT_EQ(b.land(x, CircuitBuilder::zero()), CircuitBuilder::zero());
  EXPECT_EQ(b.land(x, CircuitBuilder::one()), x);
  EXPECT_EQ(b.lxor(x, x), CircuitBuilder::zero());
  EXPECT_EQ(b.lnot(b.lnot(x)), x);
  const Signal a1 = b.land(x, y);
  EXPECT_EQ(b.land(y, x), a1);
  b.lor(y, z);  // dead
  const Signal m = b.mux(z, x, y);
  const Netlist n = b.finish(std::vector<Signal>{a1, m, CircuitBuilder::one()});
  EXPECT_TRUE(validate(n).ok()) << validate(n).summary();
  for (std::uint64_t v = 0; v < 8; ++v) {
    const Bits in = oracle::input_vector(v, 3);
    const Bits out = eval_plain(n, Bits{in[0], in[1]}, Bits{in[2]});
    EXPECT_EQ(out[0], in[0] & in[1]);
    EXPECT_EQ(out[1], in[2] ? in[1] : in[0]);
    EXPECT_EQ(out[2], 1);
  }
  for (const auto& g : n.gates) EXPECT_NE(g.kind, GateKind::Or);
}

TEST(NetlistIo, RoundTripIsByteExact) {
  Prg prg(seed_from_u64(15));
  for (int i = 0; i < 20; ++i) {
    const Netlist n = oracle::random_netlist(prg, 3, 5, 40);
    const std::string text = to_text(n);
    const Netlist back = from_text(text);
    EXPECT_EQ(back, n);
    EXPECT_EQ(to_text(back), text);
  }
}

TEST(NetlistIo, AcceptsCommentsAndBlankLines) {
  const Netlist n = from_text("# header comment\nNETLIST g=1 e=1 o=1\n\nG 2 AND 0 1 -> 2  # and\nOUT 2\n");
  EXPECT_EQ(n.gates.size(), 1u);
  EXPECT_EQ(n.gates[0].kind, GateKind::And);
}

TEST(NetlistIo, RejectsUnknownKindWithPosition) {
  try {
    from_text("NETLIST g=1 e=1 o=1\nG 2 MAJ 0 1 -> 2\nOUT 2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 5u);
    EXPECT_NE(std::string(e.what()).find("MAJ"), std::string::npos);
  }
}

TEST(NetlistIo, RejectsStructuralErrors) {
  EXPECT_THROW(from_text("NETLIST g=1 e=1 o=2\nG 2 AND 0 1 -> 2\nOUT 2\n"), ParseError);
  EXPECT_THROW(from_text("G 2 AND 0 1 -> 2\n"), ParseError);
  EXPECT_THROW(from_text("NETLIST g=1 e=1 o=1\nG 2 NOT 0 1 -> 2\nOUT 2\n"), ParseError);
  EXPECT_THROW(from_text("NETLIST g=1 e=1 o=1\nG 2 AND 0 5 -> 2\nOUT 2\n"), ValidationError);
}
