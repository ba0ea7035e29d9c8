#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "hwgn2/aes.hpp"
#include "hwgn2/block.hpp"
#include "hwgn2/circuit.hpp"

namespace hwgn2::garble {

using circuit::Bits;
using circuit::Netlist;
using Label = Block;

/// Three GRR3 rows for logical permute indices 1, 2, 3 (index = 2*i + j for
/// permute bits i of in0 and j of in1; index 0 is the implicit zero row).
struct GarbledTable {
  std::uint32_t gate_id = 0;
  std::array<Block, 3> rows{};
  friend bool operator==(const GarbledTable&, const GarbledTable&) = default;
};

inline constexpr std::size_t kRowsPerTable = 3;
inline constexpr std::size_t kTableBytes = 48;

/// Input encoding e. The 1-label of input i is zero_labels[i] ^ offset.
struct Encoding {
  std::vector<Label> zero_labels;
  Block offset{};

  std::size_t size() const { return zero_labels.size(); }
  std::array<Label, 2> pair(std::size_t i) const { return {zero_labels[i], zero_labels[i] ^ offset}; }
};

/// Output decoding d: permute bit of each output wire's 0-label.
struct Decoding {
  Bits bits;
  std::size_t size() const { return bits.size(); }
};

struct GarbledCircuit {
  const Netlist* netlist = nullptr;
  std::vector<GarbledTable> tables;  // one per nonfree gate, in gate order
  std::uint64_t tweak_base = 0;
};

struct Garbling {
  GarbledCircuit F;
  Encoding e;
  Decoding d;
};

/// H(A, B, T) = P(K) ^ K with K = 2A ^ 4B ^ T.
Block gate_hash(Label a, Label b, std::uint64_t tweak, const BlockPermutation& p = default_permutation());

/// Gb. Deterministic in (netlist, seed). The netlist must outlive the result.
Garbling gb(const Netlist& netlist, const Seed& seed, const BlockPermutation& p = default_permutation());

/// En: X_i = e_i[x_i].
std::vector<Label> en(const Encoding& e, std::span<const std::uint8_t> x);

/// Ev. Returns one label per output wire.
std::vector<Label> ev_garbled(const GarbledCircuit& F, std::span<const Label> X,
                              const BlockPermutation& p = default_permutation());

/// De: y_j = lsb(Y_j) ^ d_j.
Bits de(const Decoding& d, std::span<const Label> Y);

/// Receives one callback per evaluated gate. `row_hw` is the Hamming weight
/// of the table row the evaluator fetched (0 for the implicit row) or -1 for
/// free gates.
class EvalObserver {
 public:
  virtual ~EvalObserver() = default;
  virtual void on_gate(std::uint32_t gate_index, Label out, int row_hw) = 0;
};

// Low-level engines. `wires` has netlist.n_wires() entries whose first
// n_inputs() hold the input labels on entry; the rest is filled in. Tables
// are read or written as 3 consecutive rows per nonfree gate. The tweak of
// gate k is tweak_base + k.

/// Garbles with global offset R (lsb(R) must be 1); wires hold 0-labels.
/// Returns the number of rows written.
std::size_t garble_wires(const Netlist& netlist, Block R, std::uint64_t tweak_base, std::span<Label> wires,
                         Block* rows, const BlockPermutation& p = default_permutation());

/// Evaluates; returns the number of rows consumed.
std::size_t evaluate_wires(const Netlist& netlist, std::uint64_t tweak_base, std::span<Label> wires,
                           const Block* rows, const BlockPermutation& p = default_permutation(),
                           EvalObserver* observer = nullptr);

/// Samples R with lsb 1.
Block sample_offset(Block random);

}  // namespace hwgn2::garble
