#include "protocol_detail.hpp"

#include <map>
#include <memory>
#include <mutex>

#include "hwgn2/error.hpp"
#include "hwgn2/output_hiding.hpp"

namespace hwgn2::protocol {

const circuit::Netlist& step_netlist(std::uint32_t dmem_words) {
  static std::mutex mu;
  static std::map<std::uint32_t, std::unique_ptr<const circuit::Netlist>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[dmem_words];
  if (!slot) {
    mips::CpuStepConfig cfg{dmem_words, true, false};
    cfg.validate();
    slot = std::make_unique<const circuit::Netlist>(mips::build_step_netlist(cfg));
  }
  return *slot;
}

namespace detail {

namespace {

struct NetCounts {
  std::uint64_t gates = 0;
  std::uint64_t nonfree = 0;
};

NetCounts counts_of(const circuit::Netlist& n) {
  static std::mutex mu;
  static std::map<const circuit::Netlist*, NetCounts> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(&n);
  if (it == cache.end()) {
    const auto c = circuit::count_gates(n);
    it = cache.emplace(&n, NetCounts{c.total, c.nonfree}).first;
  }
  return it->second;
}

}  // namespace

Bytes PhiMeta::serialize() const {
  ByteWriter w(kPhiMetaFixedBytes + 32 * commitments.size());
  w.u8(static_cast<std::uint8_t>(mode.kind));
  w.u32(mode.instructions_per_round);
  w.u8(static_cast<std::uint8_t>(security.kind));
  w.u32(security.copies);
  w.u8(hiding ? 1 : 0);
  w.u8(static_cast<std::uint8_t>(profile));
  w.u64(steps);
  w.u32(dmem_words);
  w.u32(input.base);
  w.u32(input.count);
  w.u32(output.base);
  w.u32(output.count);
  w.u32(net_inputs);
  w.u32(net_outputs);
  w.u32(net_gates);
  w.u32(net_nonfree);
  w.u32(static_cast<std::uint32_t>(commitments.size()));
  for (const auto& c : commitments) w.raw(c);
  return w.take();
}

PhiMeta PhiMeta::parse(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  PhiMeta m;
  const std::uint8_t mk = r.u8();
  m.mode.instructions_per_round = r.u32();
  const std::uint8_t sk = r.u8();
  m.security.copies = r.u32();
  const std::uint8_t hid = r.u8();
  const std::uint8_t prof = r.u8();
  if (mk > 1 || sk > 1 || hid > 1 || prof > 1) throw Error("PHI_META: bad enum value");
  m.mode.kind = static_cast<Mode::Kind>(mk);
  m.security.kind = static_cast<Security::Kind>(sk);
  m.hiding = hid != 0;
  m.profile = static_cast<ot::Profile>(prof);
  m.steps = r.u64();
  m.dmem_words = r.u32();
  m.input = {r.u32(), r.u32()};
  m.output = {r.u32(), r.u32()};
  m.net_inputs = r.u32();
  m.net_outputs = r.u32();
  m.net_gates = r.u32();
  m.net_nonfree = r.u32();
  const std::uint32_t n = r.u32();
  if (n > 4096) throw Error("PHI_META: too many commitments");
  for (std::uint32_t i = 0; i < n; ++i) {
    Digest d;
    const auto s = r.raw(32);
    std::copy(s.begin(), s.end(), d.begin());
    m.commitments.push_back(d);
  }
  r.expect_end();
  if (m.mode.instructions_per_round == 0 || m.security.copies == 0) throw Error("PHI_META: zero batch size or copies");
  mips::CpuStepConfig{m.dmem_words, true, false}.validate();
  const auto in_range = [&](mips::Region g) { return std::uint64_t{g.base} + g.count <= m.dmem_words; };
  if (!in_range(m.input) || !in_range(m.output)) throw Error("PHI_META: region outside data memory");
  if (m.commitments.size() != (m.security.malicious() ? m.security.copies : 0))
    throw Error("PHI_META: commitment count does not match the copy count");
  return m;
}

SideInfo PhiMeta::side_info() const {
  SideInfo s;
  s.step_count = steps;
  s.netlist_inputs = net_inputs;
  s.netlist_outputs = net_outputs;
  s.netlist_gates = net_gates;
  s.netlist_nonfree_gates = net_nonfree;
  s.input_words = input.count;
  s.output_words = output.count;
  return s;
}

const circuit::Netlist& hiding_netlist(std::uint32_t n_words) {
  static std::mutex mu;
  static std::map<std::uint32_t, std::unique_ptr<const circuit::Netlist>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n_words];
  if (!slot) slot = std::make_unique<const circuit::Netlist>(hiding::build_hiding_netlist(n_words));
  return *slot;
}

Geometry geometry(std::uint32_t dmem_words, std::uint32_t input_words, std::uint32_t output_words, bool hiding) {
  Geometry g;
  g.width = mips::StateLayout{dmem_words}.width();
  g.input_bits = 32 * input_words;
  g.output_bits = 32 * output_words;
  const auto sc = counts_of(step_netlist(dmem_words));
  g.step_gates = sc.gates;
  g.step_tables = sc.nonfree;
  if (hiding) {
    const auto& h = hiding_netlist(output_words);
    g.hide_garbler_bits = h.n_garbler_inputs;
    g.hide_output_bits = h.n_outputs();
    g.hide_tables = counts_of(h).nonfree;
  }
  return g;
}

std::size_t batch_payload_bytes(std::size_t state_labels, std::size_t instr_labels, std::size_t tables) {
  return 4 + 8 + (4 + 16 * state_labels) + (4 + 16 * instr_labels) + 4 + garble::kTableBytes * tables;
}

std::size_t decode_payload_bytes(const Geometry& g, bool hiding) {
  std::size_t n = 4 + 4 + kEntryBytes * g.output_bits + 1;
  if (hiding)
    n += (4 + 16 * std::size_t{g.hide_garbler_bits}) + 4 + garble::kTableBytes * g.hide_tables + 4 +
         kEntryBytes * g.hide_output_bits;
  return n;
}

std::vector<std::uint32_t> region_bits(std::uint32_t dmem_words, mips::Region r) {
  const mips::StateLayout layout{dmem_words};
  std::vector<std::uint32_t> out;
  out.reserve(32 * std::size_t{r.count});
  for (std::uint32_t i = 0; i < r.count; ++i)
    for (std::uint32_t j = 0; j < 32; ++j) out.push_back(layout.mem(r.base + i) + j);
  return out;
}

CopyGarbler::CopyGarbler(const circuit::Netlist& step, const Seed& seed)
    : step_(step), prg_(seed), R_(garble::sample_offset(prg_.next_block())) {
  state_.resize(step.n_evaluator_inputs);
  prg_.fill(state_);
  wires_.resize(step.n_wires());
}

void CopyGarbler::next_step(Block* instr_zero, Block* rows) {
  prg_.fill({instr_zero, mips::kInstructionBits});
  std::copy(instr_zero, instr_zero + mips::kInstructionBits, wires_.begin());
  std::copy(state_.begin(), state_.end(), wires_.begin() + mips::kInstructionBits);
  garble::garble_wires(step_, R_, steps_ * step_.gates.size(), wires_, rows);
  for (std::size_t i = 0; i < state_.size(); ++i) state_[i] = wires_[step_.output_wires[i]];
  ++steps_;
}

std::vector<Block> CopyGarbler::hiding(const circuit::Netlist& h, std::span<const std::uint32_t> y_positions,
                                       std::vector<Block>& garbler_zero, std::vector<Block>& rows) {
  garbler_zero.resize(h.n_garbler_inputs);
  prg_.fill(garbler_zero);
  std::vector<Block> wires(h.n_wires());
  std::copy(garbler_zero.begin(), garbler_zero.end(), wires.begin());
  for (std::size_t i = 0; i < y_positions.size(); ++i) wires[h.n_garbler_inputs + i] = state_[y_positions[i]];
  rows.resize(garble::kRowsPerTable * counts_of(h).nonfree);
  garble::garble_wires(h, R_, steps_ * step_.gates.size(), wires, rows.data());
  std::vector<Block> out;
  out.reserve(h.n_outputs());
  for (auto w : h.output_wires) out.push_back(wires[w]);
  return out;
}

std::uint64_t label_tag(Block label) {
  const Digest d = Sha256().update(std::string_view("hwgn2-out")).update(label).finish();
  std::uint64_t t = 0;
  for (int i = 0; i < 8; ++i) t |= std::uint64_t{d[i]} << (8 * i);
  return t;
}

void write_entries(ByteWriter& w, std::span<const Block> zero_labels, Block R, bool flip) {
  for (Block z : zero_labels) {
    const bool d = z.lsb();
    std::uint64_t tag[2];
    tag[d] = label_tag(z);
    tag[!d] = label_tag(z ^ R);
    w.u8(static_cast<std::uint8_t>(d ^ flip));
    w.u64(tag[0]);
    w.u64(tag[1]);
  }
}

void store_rows(ByteWriter& w, const Block* rows, std::size_t n_rows) {
  w.raw({reinterpret_cast<const std::uint8_t*>(rows), 16 * n_rows});
}

Block tamper_mask() { return {0x5a5a5a5a5a5a5a5aull, 0xc3c3c3c3c3c3c3c3ull}; }

Digest commitment(std::uint32_t copy, const CopyDigests& d) {
  return Sha256().update(std::string_view("hwgn2-commit")).update_u64(copy).update(d.tables).update(d.decode).finish();
}

CopyDigests digest_copy(const Seed& seed, const PhiMeta& meta, Corruption corruption) {
  const circuit::Netlist& net = step_netlist(meta.dmem_words);
  const std::size_t n_rows = garble::kRowsPerTable * counts_of(net).nonfree;
  CopyGarbler g(net, seed);
  std::vector<Block> rows(n_rows);
  Block instr[mips::kInstructionBits];
  Sha256 tables;
  for (std::uint64_t t = 0; t < meta.steps; ++t) {
    g.next_step(instr, rows.data());
    if (t == 0 && corruption == Corruption::TamperTable)
      for (auto& r : rows) r ^= tamper_mask();
    tables.update({reinterpret_cast<const std::uint8_t*>(rows.data()), 16 * n_rows});
  }
  const auto out_pos = region_bits(meta.dmem_words, meta.output);
  std::vector<Block> out_zero;
  for (auto p : out_pos) out_zero.push_back(g.state()[p]);
  ByteWriter entries;
  write_entries(entries, out_zero, g.offset(), corruption == Corruption::FlipOutput);
  if (meta.hiding) {
    std::vector<Block> gz, hrows;
    const auto hz = g.hiding(hiding_netlist(meta.output.count), out_pos, gz, hrows);
    tables.update({reinterpret_cast<const std::uint8_t*>(hrows.data()), 16 * hrows.size()});
    write_entries(entries, hz, g.offset(), false);
  }
  CopyDigests d;
  d.tables = tables.finish();
  d.decode = sha256(entries.buffer());
  return d;
}

Seed copy_seed(const Seed& master, std::uint32_t copy) { return derive_seed(master, "copy", copy); }

}  // namespace detail
}  // namespace hwgn2::protocol
