#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hwgn2/bytes.hpp"
#include "hwgn2/digest.hpp"
#include "hwgn2/protocol.hpp"
#include "hwgn2/step_circuit.hpp"

namespace hwgn2::protocol::detail {

struct PhiMeta {
  Mode mode;
  Security security;
  bool hiding = false;
  ot::Profile profile = ot::Profile::Secure;
  std::uint64_t steps = 0;
  std::uint32_t dmem_words = 0;
  mips::Region input;
  mips::Region output;
  std::uint32_t net_inputs = 0;
  std::uint32_t net_outputs = 0;
  std::uint32_t net_gates = 0;
  std::uint32_t net_nonfree = 0;
  std::vector<Digest> commitments;

  Bytes serialize() const;
  static PhiMeta parse(std::span<const std::uint8_t> payload);
  SideInfo side_info() const;
};

inline constexpr std::size_t kPhiMetaFixedBytes = 60;
inline constexpr std::size_t kEntryBytes = 17;  // d bit + two 8-byte label tags
inline constexpr std::size_t kYbackBytes = 44;
inline constexpr std::size_t kOpeningBytes = 36;

/// Sizes derived from (W, regions, hiding).
struct Geometry {
  std::uint32_t width = 0;        // state bits
  std::uint32_t input_bits = 0;   // delivered by OT
  std::uint32_t output_bits = 0;
  std::uint32_t hide_garbler_bits = 0;
  std::uint32_t hide_output_bits = 0;
  std::uint64_t step_gates = 0;
  std::uint64_t step_tables = 0;
  std::uint64_t hide_tables = 0;

  std::uint32_t garbler_state_bits() const { return width - input_bits; }
};

Geometry geometry(std::uint32_t dmem_words, std::uint32_t input_words, std::uint32_t output_words, bool hiding);

std::size_t batch_payload_bytes(std::size_t state_labels, std::size_t instr_labels, std::size_t tables);
std::size_t decode_payload_bytes(const Geometry& g, bool hiding);

/// State bit positions of a dmem region, word-major, bit 0 first.
std::vector<std::uint32_t> region_bits(std::uint32_t dmem_words, mips::Region r);

/// Cached hiding netlist for n output words.
const circuit::Netlist& hiding_netlist(std::uint32_t n_words);

/// One garbled copy, driven step by step from its seed. Draw order from the
/// copy PRG: R, the initial state's zero labels, then 32 instruction labels
/// per step, then the hiding circuit's garbler labels.
class CopyGarbler {
 public:
  CopyGarbler(const circuit::Netlist& step, const Seed& seed);

  Block offset() const { return R_; }
  const std::vector<Block>& state() const { return state_; }
  std::uint64_t steps_done() const { return steps_; }

  /// Garbles the next step: 32 instruction zero labels and 3 rows per
  /// nonfree gate.
  void next_step(Block* instr_zero, Block* rows);
  /// Garbles the hiding circuit on the current labels at `y_positions`.
  /// Returns the hiding outputs' zero labels.
  std::vector<Block> hiding(const circuit::Netlist& h, std::span<const std::uint32_t> y_positions,
                            std::vector<Block>& garbler_zero, std::vector<Block>& rows);

 private:
  const circuit::Netlist& step_;
  Prg prg_;
  Block R_;
  std::vector<Block> state_;
  std::vector<Block> wires_;
  std::uint64_t steps_ = 0;
};

/// First 8 bytes of SHA-256("hwgn2-out" || label).
std::uint64_t label_tag(Block label);
/// Decode entries for wires with the given zero labels.
void write_entries(ByteWriter& w, std::span<const Block> zero_labels, Block R, bool flip);
void store_rows(ByteWriter& w, const Block* rows, std::size_t n_rows);
Block tamper_mask();

struct CopyDigests {
  Digest tables{};
  Digest decode{};
};

Digest commitment(std::uint32_t copy, const CopyDigests& d);

/// Garbles a whole copy without sending it and hashes its tables and decode
/// entries the way the evaluator will see them.
CopyDigests digest_copy(const Seed& seed, const PhiMeta& meta, Corruption corruption);

Seed copy_seed(const Seed& master, std::uint32_t copy);

}  // namespace hwgn2::protocol::detail
