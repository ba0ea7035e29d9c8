#include "hwgn2/circuit.hpp"

#include <algorithm>

#include "hwgn2/error.hpp"

namespace hwgn2::circuit {

namespace {
constexpr std::string_view kKindNames[] = {"AND", "OR", "XOR", "XNOR", "NAND", "NOR", "NOT", "BUF"};
constexpr std::uint32_t kNoGate = 0xffffffffu;
}  // namespace

std::string_view to_string(GateKind k) { return kKindNames[static_cast<int>(k)]; }

std::optional<GateKind> gate_kind_from_string(std::string_view s) {
  for (int i = 0; i < 8; ++i)
    if (kKindNames[i] == s) return static_cast<GateKind>(i);
  return std::nullopt;
}

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::TopologicalOrder: return "topological order";
    case ViolationKind::UnassignedWire: return "unassigned wire";
    case ViolationKind::ArityMismatch: return "arity mismatch";
    case ViolationKind::OutOfRangeId: return "out-of-range id";
    case ViolationKind::MultipleDrivers: return "multiple drivers";
    case ViolationKind::DanglingWire: return "dangling wire";
  }
  return "?";
}

bool ValidationReport::has(ViolationKind k) const {
  return std::any_of(violations.begin(), violations.end(), [k](const Violation& v) { return v.kind == k; });
}

std::string ValidationReport::summary() const {
  if (ok()) return "ok";
  std::string s;
  const std::size_t shown = std::min<std::size_t>(violations.size(), 8);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) s += "; ";
    s += std::string(to_string(violations[i].kind)) + ": " + violations[i].message;
  }
  if (violations.size() > shown) s += "; ... (" + std::to_string(violations.size()) + " total)";
  return s;
}

ValidationReport validate(const Netlist& n) {
  ValidationReport report;
  auto add = [&](ViolationKind kind, std::uint32_t gate, std::string msg) {
    report.violations.push_back({kind, gate, std::move(msg)});
  };
  const std::uint32_t n_in = n.n_inputs();
  const std::uint32_t n_wires = n.n_wires();

  std::vector<std::uint32_t> driver(n_wires, kNoGate);
  for (std::uint32_t k = 0; k < n.gates.size(); ++k) {
    const Gate& g = n.gates[k];
    if (g.out >= n_wires) {
      add(ViolationKind::OutOfRangeId, k, "gate " + std::to_string(k) + " drives wire " + std::to_string(g.out));
      continue;
    }
    if (g.id != g.out)
      add(ViolationKind::OutOfRangeId, k,
          "gate id " + std::to_string(g.id) + " differs from its output wire " + std::to_string(g.out));
    else if (g.out != n_in + k)
      add(ViolationKind::OutOfRangeId, k,
          "gate at position " + std::to_string(k) + " drives wire " + std::to_string(g.out) + ", expected " +
              std::to_string(n_in + k));
    if (g.out < n_in) {
      add(ViolationKind::MultipleDrivers, k, "gate " + std::to_string(g.id) + " drives input wire " + std::to_string(g.out));
      continue;
    }
    if (driver[g.out] != kNoGate) {
      add(ViolationKind::MultipleDrivers, k, "wire " + std::to_string(g.out) + " driven twice");
      continue;
    }
    driver[g.out] = k;
  }

  std::vector<std::uint8_t> consumed(n_wires, 0);
  auto check_input = [&](std::uint32_t k, WireId w) {
    const Gate& g = n.gates[k];
    if (w >= n_wires) {
      add(ViolationKind::OutOfRangeId, k, "gate " + std::to_string(g.id) + " reads wire " + std::to_string(w));
      return;
    }
    consumed[w] = 1;
    if (w < n_in) return;
    if (driver[w] == kNoGate) {
      add(ViolationKind::UnassignedWire, k, "gate " + std::to_string(g.id) + " reads undriven wire " + std::to_string(w));
    } else if (driver[w] == k) {
      add(ViolationKind::TopologicalOrder, k, "gate " + std::to_string(g.id) + " reads its own output (cycle)");
    } else if (driver[w] > k) {
      add(ViolationKind::TopologicalOrder, k,
          "gate " + std::to_string(g.id) + " reads wire " + std::to_string(w) + " produced by later gate " +
              std::to_string(n.gates[driver[w]].id));
    }
  };

  for (std::uint32_t k = 0; k < n.gates.size(); ++k) {
    const Gate& g = n.gates[k];
    const bool unary = is_unary(g.kind);
    if (g.in0 == kNoWire || (unary && g.in1 != kNoWire) || (!unary && g.in1 == kNoWire)) {
      add(ViolationKind::ArityMismatch, k,
          "gate " + std::to_string(g.id) + " (" + std::string(to_string(g.kind)) + ") has wrong operand count");
    }
    if (g.in0 != kNoWire) check_input(k, g.in0);
    if (g.in1 != kNoWire) check_input(k, g.in1);
  }

  for (std::size_t i = 0; i < n.output_wires.size(); ++i) {
    const WireId w = n.output_wires[i];
    if (w >= n_wires) {
      add(ViolationKind::OutOfRangeId, kNoGate, "output " + std::to_string(i) + " names wire " + std::to_string(w));
      continue;
    }
    consumed[w] = 1;
    if (w >= n_in && driver[w] == kNoGate)
      add(ViolationKind::UnassignedWire, kNoGate, "output " + std::to_string(i) + " wire " + std::to_string(w) + " is not driven");
  }

  for (std::uint32_t k = 0; k < n.gates.size(); ++k) {
    const Gate& g = n.gates[k];
    if (g.out < n_wires && !consumed[g.out])
      add(ViolationKind::DanglingWire, k, "output of gate " + std::to_string(g.id) + " is never used");
  }
  return report;
}

void require_valid(const Netlist& netlist) {
  ValidationReport r = validate(netlist);
  if (!r.ok()) throw ValidationError("invalid netlist: " + r.summary());
}

Bits eval_plain(const Netlist& n, std::span<const std::uint8_t> xg, std::span<const std::uint8_t> xe) {
  if (xg.size() != n.n_garbler_inputs || xe.size() != n.n_evaluator_inputs)
    throw Error("input length mismatch: expected " + std::to_string(n.n_garbler_inputs) + "+" +
                std::to_string(n.n_evaluator_inputs) + " bits, got " + std::to_string(xg.size()) + "+" +
                std::to_string(xe.size()));
  Bits w(n.n_wires(), 0);
  std::copy(xg.begin(), xg.end(), w.begin());
  std::copy(xe.begin(), xe.end(), w.begin() + n.n_garbler_inputs);
  for (const Gate& g : n.gates) {
    const bool a = w[g.in0] != 0;
    const bool b = g.in1 == kNoWire ? false : w[g.in1] != 0;
    w[g.out] = apply(g.kind, a, b) ? 1 : 0;
  }
  Bits out;
  out.reserve(n.output_wires.size());
  for (WireId o : n.output_wires) out.push_back(w[o]);
  return out;
}

std::vector<std::uint64_t> eval_plain_sliced(const Netlist& n, std::span<const std::uint64_t> inputs) {
  if (inputs.size() != n.n_inputs())
    throw Error("input length mismatch: expected " + std::to_string(n.n_inputs()) + ", got " + std::to_string(inputs.size()));
  std::vector<std::uint64_t> w(n.n_wires(), 0);
  std::copy(inputs.begin(), inputs.end(), w.begin());
  for (const Gate& g : n.gates) {
    const std::uint64_t a = w[g.in0];
    const std::uint64_t b = g.in1 == kNoWire ? 0 : w[g.in1];
    std::uint64_t r = 0;
    switch (g.kind) {
      case GateKind::And: r = a & b; break;
      case GateKind::Or: r = a | b; break;
      case GateKind::Xor: r = a ^ b; break;
      case GateKind::Xnor: r = ~(a ^ b); break;
      case GateKind::Nand: r = ~(a & b); break;
      case GateKind::Nor: r = ~(a | b); break;
      case GateKind::Not: r = ~a; break;
      case GateKind::Buf: r = a; break;
    }
    w[g.out] = r;
  }
  std::vector<std::uint64_t> out;
  out.reserve(n.output_wires.size());
  for (WireId o : n.output_wires) out.push_back(w[o]);
  return out;
}

std::vector<SubNetlist> partition(const Netlist& n, std::uint32_t gates_per_batch) {
  if (gates_per_batch == 0) throw Error("partition: gates_per_batch must be at least 1");
  require_valid(n);
  const std::uint32_t n_wires = n.n_wires();
  std::vector<std::uint32_t> driver(n_wires, kNoGate);
  std::vector<std::uint32_t> last_use(n_wires, kNoGate);
  std::vector<std::uint8_t> is_output(n_wires, 0);
  for (std::uint32_t k = 0; k < n.gates.size(); ++k) {
    const Gate& g = n.gates[k];
    driver[g.out] = k;
    last_use[g.in0] = k;
    if (g.in1 != kNoWire) last_use[g.in1] = k;
  }
  for (WireId o : n.output_wires) is_output[o] = 1;

  std::vector<SubNetlist> parts;
  const std::size_t total = n.gates.size();
  parts.reserve((total + gates_per_batch - 1) / gates_per_batch);
  for (std::size_t begin = 0; begin < total; begin += gates_per_batch) {
    const std::size_t end = std::min(total, begin + gates_per_batch);
    SubNetlist sub;
    sub.index = static_cast<std::uint32_t>(parts.size());
    sub.first_gate = static_cast<std::uint32_t>(begin);
    sub.gates = std::span<const Gate>(n.gates).subspan(begin, end - begin);
    auto external = [&](WireId w) { return driver[w] == kNoGate || driver[w] < begin; };
    for (const Gate& g : sub.gates) {
      if (external(g.in0)) sub.boundary_in.push_back(g.in0);
      if (g.in1 != kNoWire && external(g.in1)) sub.boundary_in.push_back(g.in1);
      const bool read_later = last_use[g.out] != kNoGate && last_use[g.out] >= end;
      if (read_later || is_output[g.out]) sub.boundary_out.push_back(g.out);
    }
    std::sort(sub.boundary_in.begin(), sub.boundary_in.end());
    sub.boundary_in.erase(std::unique(sub.boundary_in.begin(), sub.boundary_in.end()), sub.boundary_in.end());
    std::sort(sub.boundary_out.begin(), sub.boundary_out.end());
    parts.push_back(std::move(sub));
  }
  return parts;
}

GateCounts count_gates(const Netlist& n) {
  GateCounts c;
  for (const Gate& g : n.gates) {
    ++c.total;
    if (is_free(g.kind)) ++c.free; else ++c.nonfree;
  }
  return c;
}

GateCounts count_cone(const Netlist& n, std::span<const WireId> wires) {
  const std::uint32_t n_in = n.n_inputs();
  std::vector<std::uint32_t> driver(n.n_wires(), kNoGate);
  for (std::uint32_t k = 0; k < n.gates.size(); ++k) driver[n.gates[k].out] = k;
  std::vector<std::uint8_t> seen(n.gates.size(), 0);
  std::vector<WireId> stack(wires.begin(), wires.end());
  GateCounts c;
  while (!stack.empty()) {
    const WireId w = stack.back();
    stack.pop_back();
    if (w < n_in || w >= n.n_wires() || driver[w] == kNoGate) continue;
    const std::uint32_t k = driver[w];
    if (seen[k]) continue;
    seen[k] = 1;
    const Gate& g = n.gates[k];
    ++c.total;
    if (is_free(g.kind)) ++c.free; else ++c.nonfree;
    stack.push_back(g.in0);
    if (g.in1 != kNoWire) stack.push_back(g.in1);
  }
  return c;
}

void append_word_bits(Bits& out, std::uint32_t word, unsigned width) {
  for (unsigned i = 0; i < width; ++i) out.push_back(static_cast<std::uint8_t>((word >> i) & 1u));
}

std::uint32_t word_from_bits(std::span<const std::uint8_t> bits, unsigned width) {
  std::uint32_t w = 0;
  for (unsigned i = 0; i < width && i < bits.size(); ++i) w |= std::uint32_t{bits[i] & 1u} << i;
  return w;
}

}  // namespace hwgn2::circuit
