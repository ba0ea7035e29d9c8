#include "random_netlist.hpp"

#include <stdexcept>

namespace hwgn2::oracle {

using circuit::Gate;
using circuit::GateKind;

circuit::Netlist random_netlist(Prg& prg, std::uint32_t n_garbler, std::uint32_t n_evaluator, std::uint32_t n_gates,
                                bool xor_only) {
  static constexpr GateKind kinds[] = {GateKind::And, GateKind::Or,  GateKind::Xor, GateKind::Xnor,
                                       GateKind::Nand, GateKind::Nor, GateKind::Not, GateKind::Buf};
  circuit::Netlist n;
  n.n_garbler_inputs = n_garbler;
  n.n_evaluator_inputs = n_evaluator;
  const std::uint32_t n_in = n_garbler + n_evaluator;
  std::vector<bool> used(n_in + n_gates, false);
  for (std::uint32_t k = 0; k < n_gates; ++k) {
    Gate g;
    g.id = n_in + k;
    g.out = g.id;
    g.kind = xor_only ? GateKind::Xor : kinds[prg.uniform(8)];
    const std::uint32_t avail = n_in + k;
    g.in0 = static_cast<std::uint32_t>(prg.uniform(avail));
    used[g.in0] = true;
    if (!circuit::is_unary(g.kind)) {
      g.in1 = static_cast<std::uint32_t>(prg.uniform(avail));
      used[g.in1] = true;
    }
    n.gates.push_back(g);
  }
  for (std::uint32_t w = n_in; w < n_in + n_gates; ++w)
    if (!used[w]) n.output_wires.push_back(w);
  const std::uint32_t extra = 1 + static_cast<std::uint32_t>(prg.uniform(3));
  for (std::uint32_t i = 0; i < extra; ++i) n.output_wires.push_back(static_cast<std::uint32_t>(prg.uniform(n_in + n_gates)));
  return n;
}

std::vector<std::uint8_t> reference_eval(const circuit::Netlist& n, const std::vector<std::uint8_t>& inputs) {
  // Truth tables indexed by (a << 1) | b.
  auto table = [](GateKind k) -> unsigned {
    switch (k) {
      case GateKind::And: return 0b1000;
      case GateKind::Or: return 0b1110;
      case GateKind::Xor: return 0b0110;
      case GateKind::Xnor: return 0b1001;
      case GateKind::Nand: return 0b0111;
      case GateKind::Nor: return 0b0001;
      case GateKind::Not: return 0b0011;  // depends on a only
      case GateKind::Buf: return 0b1100;
    }
    throw std::logic_error("kind");
  };
  if (inputs.size() != n.n_inputs()) throw std::invalid_argument("input width");
  std::vector<int> value(n.n_wires(), -1);
  for (std::size_t i = 0; i < inputs.size(); ++i) value[i] = inputs[i] & 1;
  for (const Gate& g : n.gates) {
    const int a = value.at(g.in0);
    const int b = g.in1 == circuit::kNoWire ? 0 : value.at(g.in1);
    if (a < 0 || b < 0) throw std::logic_error("read before write");
    value.at(g.out) = (table(g.kind) >> ((a << 1) | b)) & 1;
  }
  std::vector<std::uint8_t> out;
  for (auto w : n.output_wires) out.push_back(static_cast<std::uint8_t>(value.at(w)));
  return out;
}

std::vector<std::uint8_t> input_vector(std::uint64_t index, std::uint32_t width) {
  std::vector<std::uint8_t> v(width);
  for (std::uint32_t j = 0; j < width; ++j) v[j] = static_cast<std::uint8_t>((index >> j) & 1);
  return v;
}

}  // namespace hwgn2::oracle
