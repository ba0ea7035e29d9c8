#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "hwgn2/circuit.hpp"

namespace hwgn2::circuit {

/// Handle to a value while a netlist is being built. Constants are folded
/// away; only `finish` decides final wire ids.
struct Signal {
  std::uint32_t ref = 0;
  friend bool operator==(Signal, Signal) = default;
};

/// Builds a netlist with constant propagation, structural hashing, and dead
/// gate elimination. Gates are emitted in creation order, which is
/// topological by construction.
class CircuitBuilder {
 public:
  CircuitBuilder(std::uint32_t n_garbler_inputs, std::uint32_t n_evaluator_inputs);

  static constexpr Signal zero() { return {kConst0}; }
  static constexpr Signal one() { return {kConst1}; }
  static constexpr Signal constant(bool b) { return b ? one() : zero(); }
  static constexpr bool is_constant(Signal s) { return s.ref >= kConst1; }
  static constexpr bool constant_value(Signal s) { return s.ref == kConst1; }

  Signal input(std::uint32_t index) const;
  Signal garbler_input(std::uint32_t i) const { return input(i); }
  Signal evaluator_input(std::uint32_t i) const { return input(n_garbler_ + i); }

  Signal land(Signal a, Signal b);
  Signal lor(Signal a, Signal b);
  Signal lxor(Signal a, Signal b);
  Signal lxnor(Signal a, Signal b) { return lnot(lxor(a, b)); }
  Signal lnot(Signal a);
  /// sel ? if1 : if0, one AND gate.
  Signal mux(Signal sel, Signal if0, Signal if1) { return lxor(if0, land(sel, lxor(if0, if1))); }

  std::size_t gate_count() const { return gates_.size(); }

  /// Emits the netlist. Outputs that fold to constants are driven by
  /// XOR/XNOR of input 0 with itself, so at least one input is required in
  /// that case.
  Netlist finish(std::span<const Signal> outputs) const;

 private:
  static constexpr std::uint32_t kConst0 = 0xfffffffeu;
  static constexpr std::uint32_t kConst1 = 0xfffffffdu;

  struct Node {
    GateKind kind;
    std::uint32_t a;
    std::uint32_t b;
  };

  Signal emit(GateKind kind, std::uint32_t a, std::uint32_t b);
  bool is_not_of(std::uint32_t x, std::uint32_t y) const;

  std::uint32_t n_garbler_;
  std::uint32_t n_inputs_;
  std::vector<Node> gates_;  // signal ref = n_inputs_ + index
  std::unordered_map<std::uint64_t, std::uint32_t> xor_cache_;
  std::unordered_map<std::uint64_t, std::uint32_t> and_cache_;
  std::unordered_map<std::uint64_t, std::uint32_t> or_cache_;
  std::unordered_map<std::uint32_t, std::uint32_t> not_cache_;
};

}  // namespace hwgn2::circuit
