#include "hwgn2/circuit_builder.hpp"

#include <algorithm>
#include <utility>

#include "hwgn2/error.hpp"

namespace hwgn2::circuit {

namespace {
std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (std::uint64_t{a} << 32) | b;
}
}  // namespace

CircuitBuilder::CircuitBuilder(std::uint32_t n_garbler_inputs, std::uint32_t n_evaluator_inputs)
    : n_garbler_(n_garbler_inputs), n_inputs_(n_garbler_inputs + n_evaluator_inputs) {}

Signal CircuitBuilder::input(std::uint32_t index) const {
  if (index >= n_inputs_) throw Error("builder: input index " + std::to_string(index) + " out of range");
  return {index};
}

Signal CircuitBuilder::emit(GateKind kind, std::uint32_t a, std::uint32_t b) {
  gates_.push_back({kind, a, b});
  return {n_inputs_ + static_cast<std::uint32_t>(gates_.size() - 1)};
}

bool CircuitBuilder::is_not_of(std::uint32_t x, std::uint32_t y) const {
  if (x >= n_inputs_ && x < kConst1) {
    const Node& n = gates_[x - n_inputs_];
    if (n.kind == GateKind::Not && n.a == y) return true;
  }
  if (y >= n_inputs_ && y < kConst1) {
    const Node& n = gates_[y - n_inputs_];
    if (n.kind == GateKind::Not && n.a == x) return true;
  }
  return false;
}

Signal CircuitBuilder::lnot(Signal a) {
  if (is_constant(a)) return constant(!constant_value(a));
  if (a.ref >= n_inputs_) {
    const Node& n = gates_[a.ref - n_inputs_];
    if (n.kind == GateKind::Not) return {n.a};
  }
  if (auto it = not_cache_.find(a.ref); it != not_cache_.end()) return {it->second};
  Signal s = emit(GateKind::Not, a.ref, kNoWire);
  not_cache_.emplace(a.ref, s.ref);
  return s;
}

Signal CircuitBuilder::lxor(Signal a, Signal b) {
  if (is_constant(a)) std::swap(a, b);
  if (is_constant(b)) return constant_value(b) ? lnot(a) : a;
  if (a == b) return zero();
  if (is_not_of(a.ref, b.ref)) return one();
  const std::uint64_t key = pair_key(a.ref, b.ref);
  if (auto it = xor_cache_.find(key); it != xor_cache_.end()) return {it->second};
  Signal s = emit(GateKind::Xor, a.ref, b.ref);
  xor_cache_.emplace(key, s.ref);
  return s;
}

Signal CircuitBuilder::land(Signal a, Signal b) {
  if (is_constant(a)) std::swap(a, b);
  if (is_constant(b)) return constant_value(b) ? a : zero();
  if (a == b) return a;
  if (is_not_of(a.ref, b.ref)) return zero();
  const std::uint64_t key = pair_key(a.ref, b.ref);
  if (auto it = and_cache_.find(key); it != and_cache_.end()) return {it->second};
  Signal s = emit(GateKind::And, a.ref, b.ref);
  and_cache_.emplace(key, s.ref);
  return s;
}

Signal CircuitBuilder::lor(Signal a, Signal b) {
  if (is_constant(a)) std::swap(a, b);
  if (is_constant(b)) return constant_value(b) ? one() : a;
  if (a == b) return a;
  if (is_not_of(a.ref, b.ref)) return one();
  const std::uint64_t key = pair_key(a.ref, b.ref);
  if (auto it = or_cache_.find(key); it != or_cache_.end()) return {it->second};
  Signal s = emit(GateKind::Or, a.ref, b.ref);
  or_cache_.emplace(key, s.ref);
  return s;
}

Netlist CircuitBuilder::finish(std::span<const Signal> outputs) const {
  const std::uint32_t n_gates = static_cast<std::uint32_t>(gates_.size());
  std::vector<std::uint8_t> live(n_gates, 0);
  std::vector<std::uint32_t> stack;
  bool need_const0 = false;
  bool need_const1 = false;
  for (Signal s : outputs) {
    if (s.ref == kConst0) need_const0 = true;
    else if (s.ref == kConst1) need_const1 = true;
    else if (s.ref >= n_inputs_) stack.push_back(s.ref - n_inputs_);
  }
  while (!stack.empty()) {
    const std::uint32_t k = stack.back();
    stack.pop_back();
    if (live[k]) continue;
    live[k] = 1;
    const Node& n = gates_[k];
    if (n.a >= n_inputs_) stack.push_back(n.a - n_inputs_);
    if (n.b != kNoWire && n.b >= n_inputs_) stack.push_back(n.b - n_inputs_);
  }

  Netlist net;
  net.n_garbler_inputs = n_garbler_;
  net.n_evaluator_inputs = n_inputs_ - n_garbler_;
  std::vector<WireId> remap(n_gates, kNoWire);
  auto wire_of = [&](std::uint32_t ref) { return ref < n_inputs_ ? ref : remap[ref - n_inputs_]; };
  for (std::uint32_t k = 0; k < n_gates; ++k) {
    if (!live[k]) continue;
    const Node& n = gates_[k];
    const WireId out = n_inputs_ + static_cast<WireId>(net.gates.size());
    remap[k] = out;
    net.gates.push_back({out, n.kind, wire_of(n.a), n.b == kNoWire ? kNoWire : wire_of(n.b), out});
  }
  WireId const0 = kNoWire;
  WireId const1 = kNoWire;
  if (need_const0 || need_const1) {
    if (n_inputs_ == 0) throw Error("builder: constant output requires at least one input");
    if (need_const0) {
      const0 = n_inputs_ + static_cast<WireId>(net.gates.size());
      net.gates.push_back({const0, GateKind::Xor, 0, 0, const0});
    }
    if (need_const1) {
      const1 = n_inputs_ + static_cast<WireId>(net.gates.size());
      net.gates.push_back({const1, GateKind::Xnor, 0, 0, const1});
    }
  }
  net.output_wires.reserve(outputs.size());
  for (Signal s : outputs) {
    if (s.ref == kConst0) net.output_wires.push_back(const0);
    else if (s.ref == kConst1) net.output_wires.push_back(const1);
    else net.output_wires.push_back(wire_of(s.ref));
  }
  return net;
}

}  // namespace hwgn2::circuit
