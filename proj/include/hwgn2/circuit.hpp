#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hwgn2::circuit {

enum class GateKind : std::uint8_t { And, Or, Xor, Xnor, Nand, Nor, Not, Buf };

inline constexpr bool is_unary(GateKind k) { return k == GateKind::Not || k == GateKind::Buf; }

/// Free under Free-XOR garbling: no table is transmitted.
inline constexpr bool is_free(GateKind k) {
  return k == GateKind::Xor || k == GateKind::Xnor || k == GateKind::Not || k == GateKind::Buf;
}

std::string_view to_string(GateKind k);
std::optional<GateKind> gate_kind_from_string(std::string_view s);

/// Truth table of a binary gate; unary gates ignore `b`.
inline constexpr bool apply(GateKind k, bool a, bool b) {
  switch (k) {
    case GateKind::And: return a && b;
    case GateKind::Or: return a || b;
    case GateKind::Xor: return a != b;
    case GateKind::Xnor: return a == b;
    case GateKind::Nand: return !(a && b);
    case GateKind::Nor: return !(a || b);
    case GateKind::Not: return !a;
    case GateKind::Buf: return a;
  }
  return false;
}

using WireId = std::uint32_t;
inline constexpr WireId kNoWire = 0xffffffffu;

/// Gate ids share the wire-id space: a gate's id is the wire it drives.
struct Gate {
  std::uint32_t id = 0;
  GateKind kind = GateKind::Buf;
  WireId in0 = kNoWire;
  WireId in1 = kNoWire;  // kNoWire for NOT/BUF
  WireId out = kNoWire;

  friend bool operator==(const Gate&, const Gate&) = default;
};

/// Wires 0..n_inputs()-1 are inputs (garbler block first, then evaluator
/// block); gate k drives wire n_inputs() + k.
struct Netlist {
  std::uint32_t n_garbler_inputs = 0;
  std::uint32_t n_evaluator_inputs = 0;
  std::vector<Gate> gates;
  std::vector<WireId> output_wires;

  std::uint32_t n_inputs() const { return n_garbler_inputs + n_evaluator_inputs; }
  std::uint32_t n_outputs() const { return static_cast<std::uint32_t>(output_wires.size()); }
  std::uint32_t n_wires() const { return n_inputs() + static_cast<std::uint32_t>(gates.size()); }

  friend bool operator==(const Netlist&, const Netlist&) = default;
};

enum class ViolationKind : std::uint8_t {
  TopologicalOrder,  // a gate reads a wire that is not yet driven
  UnassignedWire,    // reference to a wire that nothing drives
  ArityMismatch,
  OutOfRangeId,
  MultipleDrivers,
  DanglingWire,  // gate output neither consumed nor a circuit output
};

std::string_view to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::uint32_t gate_index;  // position in the gate list, or kNoWire for output-list issues
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(ViolationKind k) const;
  std::string summary() const;
};

ValidationReport validate(const Netlist& netlist);

/// Throws ValidationError with the report summary unless the netlist is valid.
void require_valid(const Netlist& netlist);

using Bits = std::vector<std::uint8_t>;  // one 0/1 value per element

/// Plain (unprotected) evaluation. Throws hwgn2::Error on input length mismatch.
Bits eval_plain(const Netlist& netlist, std::span<const std::uint8_t> x_garbler,
                std::span<const std::uint8_t> x_evaluator);

/// Evaluates 64 input vectors at once; bit j of every word belongs to vector j.
std::vector<std::uint64_t> eval_plain_sliced(const Netlist& netlist, std::span<const std::uint64_t> inputs);

struct SubNetlist {
  std::uint32_t index = 0;
  std::uint32_t first_gate = 0;   // position of gates.front() in the parent list
  std::span<const Gate> gates;    // view into the parent netlist
  std::vector<WireId> boundary_in;   // wires read here but driven elsewhere (sorted)
  std::vector<WireId> boundary_out;  // wires driven here and read later or output (sorted)
};

/// Positional split into ceil(N / gates_per_batch) contiguous pieces. The
/// returned views alias `netlist`, which must outlive them.
std::vector<SubNetlist> partition(const Netlist& netlist, std::uint32_t gates_per_batch);

struct GateCounts {
  std::uint64_t total = 0;
  std::uint64_t free = 0;
  std::uint64_t nonfree = 0;
  friend bool operator==(const GateCounts&, const GateCounts&) = default;
};

GateCounts count_gates(const Netlist& netlist);

/// Counts gates in the transitive fan-in of `wires`.
GateCounts count_cone(const Netlist& netlist, std::span<const WireId> wires);

/// Little-endian bit expansion helpers for word-oriented callers.
void append_word_bits(Bits& out, std::uint32_t word, unsigned width = 32);
std::uint32_t word_from_bits(std::span<const std::uint8_t> bits, unsigned width = 32);

}  // namespace hwgn2::circuit
