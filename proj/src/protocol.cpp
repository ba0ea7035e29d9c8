#include "hwgn2/protocol.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <exception>
#include <map>
#include <thread>

#include "hwgn2/error.hpp"
#include "hwgn2/ot.hpp"
#include "hwgn2/output_hiding.hpp"
#include "protocol_detail.hpp"

namespace hwgn2::protocol {

using namespace detail;

namespace {

std::uint32_t parse_count(std::string_view text, std::string_view what) {
  std::uint32_t v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size() || v == 0)
    throw Error(std::string(what) + " needs a positive integer, got '" + std::string(text) + "'");
  return v;
}

}  // namespace

std::string Mode::to_string() const {
  return streaming() ? "stream:" + std::to_string(instructions_per_round) : "full";
}

Mode Mode::parse(std::string_view text) {
  if (text == "full") return full();
  if (text.starts_with("stream:")) return stream(parse_count(text.substr(7), "stream"));
  throw Error("mode must be 'full' or 'stream:K', got '" + std::string(text) + "'");
}

std::string Security::to_string() const {
  return malicious() ? "malicious:" + std::to_string(copies) : "hbc";
}

Security Security::parse(std::string_view text) {
  if (text == "hbc") return hbc();
  if (text.starts_with("malicious:")) return malicious(parse_count(text.substr(10), "malicious"));
  throw Error("security must be 'hbc' or 'malicious:S', got '" + std::string(text) + "'");
}

void SessionConfig::validate() const {
  if (mode.instructions_per_round == 0) throw Error("instructions per round must be at least 1");
  if (security.copies == 0) throw Error("copy count must be at least 1");
  if (!security.malicious() && security.copies != 1) throw Error("HbC sessions use exactly one copy");
  if (security.copies > 4096) throw Error("too many copies");
  if (cpu) cpu->validate();
  ot::require_allowed(profile, networked);
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Ok: return "OK";
    case Verdict::Cheat: return "CHEAT";
    case Verdict::Abort: return "ABORT";
    case Verdict::IntegrityFailure: return "INTEGRITY_FAILURE";
  }
  return "?";
}

namespace {

constexpr std::uint32_t kNoCopy = 0xffffffffu;

template <class F>
auto guarded(net::Channel& ch, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    ch.send_error(e.what());
    throw;
  }
}

// Payload decoding errors become protocol violations at the last frame.
template <class F>
auto parsing(net::Channel& ch, net::Tag tag, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ProtocolError&) {
    throw;
  } catch (const Error& e) {
    throw ProtocolError(std::string(net::to_string(tag)) + ": " + e.what(), ch.frames_received() - 1);
  }
}

Bytes hello(std::uint8_t role) { return {kWireVersion, role}; }

void check_hello(net::Channel& ch, std::uint8_t role) {
  const auto f = ch.expect(net::Tag::Hello);
  parsing(ch, net::Tag::Hello, [&] {
    ByteReader r(f.payload);
    const auto v = r.u8();
    const auto got_role = r.u8();
    r.expect_end();
    if (v != kWireVersion) throw Error("unsupported wire version " + std::to_string(v));
    if (got_role != role) throw Error("peer has the wrong role");
  });
}

std::vector<std::uint32_t> copies_except(std::uint32_t s, const std::vector<std::uint8_t>& checked) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t c = 0; c < s; ++c)
    if (!checked[c]) out.push_back(c);
  return out;
}

bool corrupts(const CheatPlan& plan, Corruption kind, std::uint32_t copy) {
  return plan.kind == kind && std::find(plan.copies.begin(), plan.copies.end(), copy) != plan.copies.end();
}

Corruption corruption_of(const CheatPlan& plan, std::uint32_t copy) {
  return corrupts(plan, plan.kind, copy) ? plan.kind : Corruption::None;
}

Block active(Block zero, bool bit, Block R) { return bit ? zero ^ R : zero; }

// ---------------------------------------------------------------- garbler

GarblerResult garbler_session(const SessionConfig& cfg, const mips::MipsProgram& program, net::Channel& ch) {
  cfg.validate();
  program.validate();
  ot::require_allowed(cfg.profile, cfg.networked);
  if (cfg.cpu && cfg.cpu->dmem_words != program.dmem_words)
    throw Error("program uses W = " + std::to_string(program.dmem_words) + " but the session is configured for W = " +
                std::to_string(cfg.cpu->dmem_words));
  ch.enable_transcript(true, cfg.transcript_digests);

  const std::uint32_t W = program.dmem_words;
  const std::vector<std::uint32_t> zeros(program.evaluator_input_region.count, 0);
  const auto dry = mips::run_plain(program, zeros, cfg.step_limit);
  const std::uint64_t T = dry.step_count;
  const circuit::Netlist& net = step_netlist(W);
  const Security sec = cfg.security;

  PhiMeta meta;
  meta.mode = cfg.mode;
  meta.security = sec;
  meta.hiding = cfg.output_hiding;
  meta.profile = cfg.profile;
  meta.steps = T;
  meta.dmem_words = W;
  meta.input = program.evaluator_input_region;
  meta.output = program.output_region;
  const Geometry geo = geometry(W, meta.input.count, meta.output.count, meta.hiding);
  meta.net_inputs = net.n_inputs();
  meta.net_outputs = net.n_outputs();
  meta.net_gates = static_cast<std::uint32_t>(geo.step_gates);
  meta.net_nonfree = static_cast<std::uint32_t>(geo.step_tables);
  if (sec.malicious())
    for (std::uint32_t c = 0; c < sec.copies; ++c)
      meta.commitments.push_back(
          commitment(c, digest_copy(copy_seed(cfg.fresh_seed, c), meta, corruption_of(cfg.cheat, c))));

  const auto in_pos = region_bits(W, meta.input);
  const auto out_pos = region_bits(W, meta.output);
  std::vector<std::uint8_t> is_input(geo.width, 0);
  for (auto p : in_pos) is_input[p] = 1;
  const circuit::Bits init = mips::encode_state(mips::initial_state(program, zeros));

  std::optional<hiding::HidingKey> key;
  circuit::Bits hbits;
  if (meta.hiding) {
    Prg hp(derive_seed(cfg.fresh_seed, "hiding", 0));
    key = hiding::HidingKey::random(hp, meta.output.count);
    hbits = hiding::hiding_garbler_bits(*key);
  }

  GarblerResult res;
  res.phi = meta.side_info();
  std::uint64_t rounds = 0;

  // Flight 1.
  ch.send(net::Tag::Hello, hello(0));
  ch.send(net::Tag::PhiMeta, meta.serialize());
  const bool use_ot = !in_pos.empty();
  Prg ot_prg(derive_seed(cfg.fresh_seed, "garbler-ot", 0));
  std::optional<ot::OtSender> sender;
  if (use_ot) {
    sender.emplace(ot::group_for(cfg.profile), ot_prg);
    ch.send(net::Tag::Ot1, sender->first_message());
  }

  check_hello(ch, 1);
  std::vector<std::uint8_t> checked(sec.copies, 0);
  if (sec.malicious()) {
    const auto f = ch.expect(net::Tag::OpenSeed);
    parsing(ch, net::Tag::OpenSeed, [&] {
      ByteReader r(f.payload);
      if (r.u32() != sec.copies) throw Error("check bitmap has the wrong length");
      const auto bits = r.raw(sec.copies);
      r.expect_end();
      std::uint32_t n = 0;
      for (std::uint32_t c = 0; c < sec.copies; ++c) {
        if (bits[c] > 1) throw Error("check bitmap entry is not 0 or 1");
        checked[c] = bits[c];
        n += bits[c];
      }
      if (n != sec.check_count()) throw Error("check set has " + std::to_string(n) + " copies, expected " +
                                              std::to_string(sec.check_count()));
    });
  }
  Bytes ot2;
  if (use_ot) ot2 = ch.expect(net::Tag::Ot2).payload;
  ++rounds;

  const auto eval = copies_except(sec.copies, checked);
  std::vector<CopyGarbler> copies;
  copies.reserve(eval.size());
  for (auto c : eval) copies.emplace_back(net, copy_seed(cfg.fresh_seed, c));

  auto send_prefix = [&] {
    if (sec.malicious()) {
      ByteWriter w;
      w.u32(sec.check_count());
      for (std::uint32_t c = 0; c < sec.copies; ++c)
        if (checked[c]) {
          w.u32(c);
          w.raw(copy_seed(cfg.fresh_seed, c));
        }
      ch.send(net::Tag::OpenSeed, w.take());
    }
    if (use_ot) {
      std::vector<ot::MessagePair> pairs;
      pairs.reserve(copies.size() * in_pos.size());
      for (const auto& cg : copies)
        for (auto p : in_pos) pairs.emplace_back(cg.state()[p], cg.state()[p] ^ cg.offset());
      sender->set_pairs(std::move(pairs));
      ch.send(net::Tag::Ot3, sender->third_message(ot2));
    }
  };

  std::vector<Block> rows(garble::kRowsPerTable * geo.step_tables);
  Block instr[mips::kInstructionBits];
  auto initial_labels = [&](const CopyGarbler& cg) {
    std::vector<Block> labels;
    labels.reserve(geo.garbler_state_bits());
    for (std::uint32_t i = 0; i < geo.width; ++i)
      if (!is_input[i]) labels.push_back(active(cg.state()[i], init[i], cg.offset()));
    return labels;
  };
  auto send_step = [&](std::size_t ci, std::uint64_t t) {
    CopyGarbler& cg = copies[ci];
    std::vector<Block> state_labels;
    if (t == 0) state_labels = initial_labels(cg);
    cg.next_step(instr, rows.data());
    if (t == 0 && corrupts(cfg.cheat, Corruption::TamperTable, eval[ci]))
      for (auto& r : rows) r ^= tamper_mask();
    const std::uint32_t word = program.instructions[dry.fetch_trace[t]].word;
    Block instr_active[mips::kInstructionBits];
    for (unsigned b = 0; b < mips::kInstructionBits; ++b)
      instr_active[b] = active(instr[b], (word >> b) & 1u, cg.offset());
    ByteWriter w(batch_payload_bytes(state_labels.size(), mips::kInstructionBits, geo.step_tables));
    w.u32(eval[ci]);
    w.u64(t);
    w.blocks(state_labels);
    w.blocks(instr_active);
    w.u32(static_cast<std::uint32_t>(geo.step_tables));
    store_rows(w, rows.data(), rows.size());
    ch.send(net::Tag::Batch, w.take());
  };
  auto send_initial_only = [&](std::size_t ci) {
    const auto labels = initial_labels(copies[ci]);
    ByteWriter w(batch_payload_bytes(labels.size(), 0, 0));
    w.u32(eval[ci]);
    w.u64(0);
    w.blocks(labels);
    w.blocks({});
    w.u32(0);
    ch.send(net::Tag::Batch, w.take());
  };
  auto send_decode = [&](std::size_t ci) {
    CopyGarbler& cg = copies[ci];
    ByteWriter w(decode_payload_bytes(geo, meta.hiding));
    w.u32(eval[ci]);
    w.u32(geo.output_bits);
    std::vector<Block> out_zero;
    for (auto p : out_pos) out_zero.push_back(cg.state()[p]);
    write_entries(w, out_zero, cg.offset(), corrupts(cfg.cheat, Corruption::FlipOutput, eval[ci]));
    w.u8(meta.hiding ? 1 : 0);
    if (meta.hiding) {
      std::vector<Block> gz, hrows;
      const auto hz = cg.hiding(hiding_netlist(meta.output.count), out_pos, gz, hrows);
      for (std::size_t i = 0; i < gz.size(); ++i) gz[i] = active(gz[i], hbits[i], cg.offset());
      w.blocks(gz);
      w.u32(static_cast<std::uint32_t>(hrows.size() / garble::kRowsPerTable));
      store_rows(w, hrows.data(), hrows.size());
      w.u32(static_cast<std::uint32_t>(hz.size()));
      write_entries(w, hz, cg.offset(), false);
    }
    ch.send(net::Tag::Decode, w.take());
  };
  auto expect_yback = [&](std::uint32_t round) {
    const auto f = ch.expect(net::Tag::Yback);
    parsing(ch, net::Tag::Yback, [&] {
      ByteReader r(f.payload);
      if (r.u32() != round) throw Error("boundary labels for the wrong round");
      r.u64();
      r.raw(32);
      r.expect_end();
    });
  };

  if (T == 0) {
    send_prefix();
    for (std::size_t ci = 0; ci < copies.size(); ++ci) send_initial_only(ci);
    for (std::size_t ci = 0; ci < copies.size(); ++ci) send_decode(ci);
    if (!cfg.mode.streaming()) expect_yback(0);
  } else if (cfg.mode.streaming()) {
    const std::uint64_t k = cfg.mode.instructions_per_round;
    for (std::uint64_t t0 = 0, b = 0; t0 < T; t0 += k, ++b) {
      if (b == 0) send_prefix();
      for (std::uint64_t t = t0; t < std::min(T, t0 + k); ++t)
        for (std::size_t ci = 0; ci < copies.size(); ++ci) send_step(ci, t);
      expect_yback(static_cast<std::uint32_t>(b));
      ++rounds;
    }
    for (std::size_t ci = 0; ci < copies.size(); ++ci) send_decode(ci);
  } else {
    send_prefix();
    for (std::uint64_t t = 0; t < T; ++t)
      for (std::size_t ci = 0; ci < copies.size(); ++ci) send_step(ci, t);
    for (std::size_t ci = 0; ci < copies.size(); ++ci) send_decode(ci);
    expect_yback(0);
  }

  if (sec.malicious()) {
    const auto f = ch.expect(net::Tag::Verdict);
    parsing(ch, net::Tag::Verdict, [&] {
      ByteReader r(f.payload);
      const auto v = r.u8();
      const auto c = r.u32();
      r.expect_end();
      if (v > 3) throw Error("unknown verdict");
      res.verdict = static_cast<Verdict>(v);
      if (c != kNoCopy) res.flagged_copy = c;
    });
  }
  const auto f = ch.expect(net::Tag::Output);
  std::vector<std::uint32_t> hidden;
  std::uint8_t status = 0;
  parsing(ch, net::Tag::Output, [&] {
    ByteReader r(f.payload);
    status = r.u8();
    const std::uint32_t n = r.u32();
    if (n > geo.output_bits / 32 + 1) throw Error("output too long");
    for (std::uint32_t i = 0; i < n; ++i) hidden.push_back(r.u32());
    r.expect_end();
  });
  ++rounds;
  if (status != 0 && res.verdict == Verdict::Ok) res.verdict = Verdict::IntegrityFailure;
  if (status == 0 && meta.hiding) {
    try {
      res.revealed_output = hiding::unhide_output(hidden, *key);
    } catch (const Error&) {
      res.verdict = Verdict::IntegrityFailure;
    }
  }

  res.stats.ot_rounds = rounds;
  res.stats.bytes_garbler_to_evaluator = ch.bytes_sent();
  res.stats.bytes_evaluator_to_garbler = ch.bytes_received();
  res.transcript = ch.transcript();
  return res;
}

// -------------------------------------------------------------- evaluator

struct EvalCopy {
  std::uint32_t index = 0;
  std::vector<Block> state;
  Sha256 tables;
  bool intact = true;
  std::vector<std::uint32_t> y;
  std::vector<std::uint32_t> hidden;
  Digest decode_digest{};
};

struct PendingStep {
  std::size_t copy = 0;
  std::uint64_t step = 0;
  std::vector<Block> state_labels;
  std::vector<Block> instr;
  Bytes payload;
  std::size_t table_offset = 0;
  std::uint32_t tables = 0;
};

// Decodes bit j of an entry list against label Y; nullopt if Y matches
// neither tag.
std::optional<bool> decode_bit(std::span<const std::uint8_t> entries, std::size_t j, Block Y) {
  ByteReader r(entries.subspan(j * kEntryBytes, kEntryBytes));
  const bool d = r.u8() & 1u;
  const std::uint64_t tag[2] = {r.u64(), r.u64()};
  if (label_tag(Y) != tag[Y.lsb()]) return std::nullopt;
  return Y.lsb() ^ d;
}

std::vector<std::uint32_t> decode_words(std::span<const std::uint8_t> entries, std::span<const Block> labels,
                                        bool& intact) {
  std::vector<std::uint32_t> words(labels.size() / 32, 0);
  for (std::size_t j = 0; j < labels.size(); ++j) {
    const auto b = decode_bit(entries, j, labels[j]);
    if (!b) {
      intact = false;
      return {};
    }
    words[j / 32] |= std::uint32_t{*b} << (j % 32);
  }
  return words;
}

EvaluatorResult evaluator_session(const SessionConfig& cfg, std::span<const std::uint32_t> x, net::Channel& ch) {
  cfg.validate();
  ot::require_allowed(cfg.profile, cfg.networked);
  ch.enable_transcript(true, cfg.transcript_digests);

  check_hello(ch, 0);
  const auto fm = ch.expect(net::Tag::PhiMeta);
  const PhiMeta meta = parsing(ch, net::Tag::PhiMeta, [&] { return PhiMeta::parse(fm.payload); });
  const std::size_t meta_frame = ch.frames_received() - 1;
  if (meta.mode != cfg.mode || meta.security != cfg.security || meta.hiding != cfg.output_hiding ||
      meta.profile != cfg.profile)
    throw ProtocolError("session parameters differ: garbler wants mode " + meta.mode.to_string() + ", security " +
                            meta.security.to_string() + (meta.hiding ? ", output hiding" : ""),
                        meta_frame);
  if (cfg.cpu && cfg.cpu->dmem_words != meta.dmem_words)
    throw ProtocolError("garbler announced W = " + std::to_string(meta.dmem_words), meta_frame);
  const circuit::Netlist& net = step_netlist(meta.dmem_words);
  const Geometry geo = geometry(meta.dmem_words, meta.input.count, meta.output.count, meta.hiding);
  if (meta.net_inputs != net.n_inputs() || meta.net_outputs != net.n_outputs() || meta.net_gates != geo.step_gates ||
      meta.net_nonfree != geo.step_tables)
    throw ProtocolError("announced step netlist shape does not match", meta_frame);
  if (x.size() != meta.input.count)
    throw Error("evaluator input has " + std::to_string(x.size()) + " words, the program expects " +
                std::to_string(meta.input.count));

  const Security sec = meta.security;
  const auto in_pos = region_bits(meta.dmem_words, meta.input);
  const auto out_pos = region_bits(meta.dmem_words, meta.output);
  std::vector<std::uint8_t> is_input(geo.width, 0);
  for (auto p : in_pos) is_input[p] = 1;
  const bool use_ot = !in_pos.empty();
  const std::uint64_t T = meta.steps;

  EvaluatorResult res;
  res.phi = meta.side_info();
  std::uint64_t rounds = 0;

  Bytes ot1;
  if (use_ot) ot1 = ch.expect(net::Tag::Ot1).payload;

  // Flight 1.
  ch.send(net::Tag::Hello, hello(1));
  std::vector<std::uint8_t> checked(sec.copies, 0);
  if (sec.malicious()) {
    Prg cp(derive_seed(cfg.fresh_seed, "check", 0));
    std::vector<std::uint32_t> order(sec.copies);
    for (std::uint32_t c = 0; c < sec.copies; ++c) order[c] = c;
    for (std::uint32_t i = 0; i < sec.check_count(); ++i) {
      std::swap(order[i], order[i + cp.uniform(sec.copies - i)]);
      checked[order[i]] = 1;
    }
    ByteWriter w;
    w.u32(sec.copies);
    w.raw(checked);
    ch.send(net::Tag::OpenSeed, w.take());
  }
  const auto eval = copies_except(sec.copies, checked);
  for (std::uint32_t c = 0; c < sec.copies; ++c)
    if (checked[c]) res.checked_copies.push_back(c);

  Prg ot_prg(derive_seed(cfg.fresh_seed, "evaluator-ot", 0));
  std::optional<ot::OtReceiver> receiver;
  if (use_ot) {
    std::vector<std::uint8_t> choices;
    choices.reserve(eval.size() * in_pos.size());
    for (std::size_t ci = 0; ci < eval.size(); ++ci)
      for (std::size_t j = 0; j < in_pos.size(); ++j) choices.push_back((x[j / 32] >> (j % 32)) & 1u);
    receiver.emplace(ot::group_for(meta.profile), std::move(choices), ot_prg);
    ch.send(net::Tag::Ot2, parsing(ch, net::Tag::Ot1, [&] { return receiver->second_message(ot1); }));
  }
  ++rounds;

  std::vector<EvalCopy> copies(eval.size());
  for (std::size_t ci = 0; ci < eval.size(); ++ci) {
    copies[ci].index = eval[ci];
    copies[ci].state.assign(geo.width, Block{});
  }
  std::map<std::uint32_t, Seed> opened;
  std::uint64_t held_state_labels = 0;

  auto receive_prefix = [&] {
    if (sec.malicious()) {
      const auto f = ch.expect(net::Tag::OpenSeed);
      parsing(ch, net::Tag::OpenSeed, [&] {
        ByteReader r(f.payload);
        if (r.u32() != sec.check_count()) throw Error("wrong number of opened seeds");
        for (std::uint32_t i = 0; i < sec.check_count(); ++i) {
          const std::uint32_t c = r.u32();
          if (c >= sec.copies || !checked[c] || opened.count(c)) throw Error("opened a copy that was not requested");
          Seed s;
          const auto raw = r.raw(32);
          std::copy(raw.begin(), raw.end(), s.begin());
          opened[c] = s;
        }
        r.expect_end();
      });
    }
    if (use_ot) {
      const auto f = ch.expect(net::Tag::Ot3);
      const auto labels = parsing(ch, net::Tag::Ot3, [&] { return receiver->finish(f.payload); });
      for (std::size_t ci = 0; ci < copies.size(); ++ci)
        for (std::size_t j = 0; j < in_pos.size(); ++j) copies[ci].state[in_pos[j]] = labels[ci * in_pos.size() + j];
    }
    held_state_labels = copies.size() * in_pos.size();
  };

  auto note_peak = [&](std::uint64_t tables, std::uint64_t labels) {
    res.stats.peak_resident_tables = std::max(res.stats.peak_resident_tables, tables);
    res.stats.peak_resident_labels = std::max(res.stats.peak_resident_labels, labels);
  };

  std::vector<Block> wires(net.n_wires());
  std::vector<Block> rows(garble::kRowsPerTable * geo.step_tables);

  // Receives the frames of steps [t0, t1) (or the initial-labels-only frames
  // when T = 0), then evaluates them and releases them.
  auto run_batch = [&](std::uint64_t t0, std::uint64_t t1) {
    const bool init_only = T == 0;
    const std::uint64_t n_steps = init_only ? 1 : t1 - t0;
    std::vector<PendingStep> pending;
    pending.reserve(n_steps * copies.size());
    std::uint64_t tables = 0, labels = held_state_labels;
    for (std::uint64_t t = t0; t < t0 + n_steps; ++t)
      for (std::size_t ci = 0; ci < copies.size(); ++ci) {
        auto f = ch.expect(net::Tag::Batch);
        PendingStep p;
        parsing(ch, net::Tag::Batch, [&] {
          ByteReader r(f.payload);
          if (r.u32() != copies[ci].index) throw Error("batch frame for an unexpected copy");
          p.copy = ci;
          p.step = r.u64();
          if (p.step != t) throw Error("batch frame for step " + std::to_string(p.step) + ", expected " +
                                       std::to_string(t));
          p.state_labels = r.blocks(geo.width);
          const std::size_t want_state = t == 0 ? geo.garbler_state_bits() : 0;
          if (p.state_labels.size() != want_state) throw Error("wrong number of initial state labels");
          p.instr = r.blocks(mips::kInstructionBits);
          if (p.instr.size() != (init_only ? 0 : mips::kInstructionBits))
            throw Error("wrong number of instruction labels");
          p.tables = r.u32();
          if (p.tables != (init_only ? 0 : geo.step_tables)) throw Error("wrong number of garbled tables");
          p.table_offset = r.position();
          r.raw(garble::kTableBytes * std::size_t{p.tables});
          r.expect_end();
        });
        p.payload = std::move(f.payload);
        tables += p.tables;
        labels += p.state_labels.size() + p.instr.size();
        pending.push_back(std::move(p));
      }
    note_peak(tables, labels);

    for (auto& p : pending) {
      EvalCopy& ec = copies[p.copy];
      if (!p.state_labels.empty()) {
        std::size_t k = 0;
        for (std::uint32_t i = 0; i < geo.width; ++i)
          if (!is_input[i]) ec.state[i] = p.state_labels[k++];
      }
      if (!init_only) {
        const std::uint8_t* tb = p.payload.data() + p.table_offset;
        const std::size_t nbytes = garble::kTableBytes * std::size_t{p.tables};
        if (sec.malicious()) ec.tables.update({tb, nbytes});
        std::memcpy(rows.data(), tb, nbytes);
        std::copy(p.instr.begin(), p.instr.end(), wires.begin());
        std::copy(ec.state.begin(), ec.state.end(), wires.begin() + mips::kInstructionBits);
        garble::evaluate_wires(net, p.step * net.gates.size(), wires, rows.data(), default_permutation(),
                               p.copy == 0 ? cfg.observer : nullptr);
        for (std::size_t i = 0; i < ec.state.size(); ++i) ec.state[i] = wires[net.output_wires[i]];
      }
      p = PendingStep{};  // erase the batch's tables and consumed labels
    }
    held_state_labels = copies.size() * std::uint64_t{geo.width};
  };

  auto send_yback = [&](std::uint32_t round, std::uint64_t last_step) {
    Sha256 h;
    h.update(derive_seed(cfg.fresh_seed, "yback", round));
    for (const auto& ec : copies)
      h.update({reinterpret_cast<const std::uint8_t*>(ec.state.data()), 16 * ec.state.size()});
    ByteWriter w(kYbackBytes);
    w.u32(round);
    w.u64(last_step);
    w.raw(h.finish());
    ch.send(net::Tag::Yback, w.take());
  };

  if (T == 0) {
    receive_prefix();
    run_batch(0, 0);
  } else if (meta.mode.streaming()) {
    const std::uint64_t k = meta.mode.instructions_per_round;
    for (std::uint64_t t0 = 0, b = 0; t0 < T; t0 += k, ++b) {
      if (b == 0) receive_prefix();
      const std::uint64_t t1 = std::min(T, t0 + k);
      run_batch(t0, t1);
      send_yback(static_cast<std::uint32_t>(b), t1 - 1);
      ++rounds;
    }
  } else {
    receive_prefix();
    run_batch(0, T);
  }

  // Decode info, one frame per evaluated copy.
  {
    std::vector<net::Frame> frames;
    std::uint64_t tables = 0;
    for (std::size_t ci = 0; ci < copies.size(); ++ci) {
      frames.push_back(ch.expect(net::Tag::Decode));
      tables += geo.hide_tables;
    }
    note_peak(tables, held_state_labels + copies.size() * std::uint64_t{geo.hide_garbler_bits});
    const circuit::Netlist* hnet = meta.hiding ? &hiding_netlist(meta.output.count) : nullptr;
    for (std::size_t ci = 0; ci < copies.size(); ++ci) {
      EvalCopy& ec = copies[ci];
      parsing(ch, net::Tag::Decode, [&] {
        ByteReader r(frames[ci].payload);
        if (r.u32() != ec.index) throw Error("decode frame for an unexpected copy");
        if (r.u32() != geo.output_bits) throw Error("wrong number of decode entries");
        const auto entries = r.raw(kEntryBytes * geo.output_bits);
        const bool has_hiding = r.u8() != 0;
        if (has_hiding != meta.hiding) throw Error("output hiding flag mismatch");
        std::vector<Block> out_labels;
        for (auto p : out_pos) out_labels.push_back(ec.state[p]);
        ec.y = decode_words(entries, out_labels, ec.intact);
        Sha256 dd;
        dd.update(entries);
        if (meta.hiding) {
          const auto gl = r.blocks(geo.hide_garbler_bits);
          if (gl.size() != geo.hide_garbler_bits) throw Error("wrong number of hiding input labels");
          if (r.u32() != geo.hide_tables) throw Error("wrong number of hiding tables");
          const auto tb = r.raw(garble::kTableBytes * geo.hide_tables);
          if (r.u32() != geo.hide_output_bits) throw Error("wrong number of hidden decode entries");
          const auto hentries = r.raw(kEntryBytes * geo.hide_output_bits);
          if (sec.malicious()) ec.tables.update(tb);
          dd.update(hentries);
          std::vector<Block> hw(hnet->n_wires());
          std::copy(gl.begin(), gl.end(), hw.begin());
          std::copy(out_labels.begin(), out_labels.end(), hw.begin() + hnet->n_garbler_inputs);
          std::vector<Block> hrows(garble::kRowsPerTable * geo.hide_tables);
          std::memcpy(hrows.data(), tb.data(), tb.size());
          garble::evaluate_wires(*hnet, T * net.gates.size(), hw, hrows.data());
          std::vector<Block> hout;
          for (auto w : hnet->output_wires) hout.push_back(hw[w]);
          if (ec.intact) ec.hidden = decode_words(hentries, hout, ec.intact);
        }
        r.expect_end();
        ec.decode_digest = dd.finish();
      });
      frames[ci] = net::Frame{};
    }
  }

  // Verdict.
  std::vector<std::uint32_t> hidden;
  if (!sec.malicious()) {
    if (copies[0].intact) {
      res.y = copies[0].y;
      hidden = copies[0].hidden;
    } else {
      res.verdict = Verdict::IntegrityFailure;
    }
  } else {
    for (const auto& [c, seed] : opened) {
      if (commitment(c, digest_copy(seed, meta, Corruption::None)) != meta.commitments[c]) {
        res.verdict = Verdict::Cheat;
        res.flagged_copy = c;
        break;
      }
    }
    if (res.verdict == Verdict::Ok)
      for (auto& ec : copies) {
        const CopyDigests d{ec.tables.finish(), ec.decode_digest};
        if (commitment(ec.index, d) != meta.commitments[ec.index] || !ec.intact) {
          res.verdict = Verdict::Cheat;
          res.flagged_copy = ec.index;
          break;
        }
      }
    if (res.verdict == Verdict::Ok) {
      std::map<std::vector<std::uint32_t>, std::pair<std::uint32_t, std::size_t>> votes;  // y -> (count, first copy)
      for (std::size_t ci = 0; ci < copies.size(); ++ci) {
        auto [it, fresh] = votes.try_emplace(copies[ci].y, 0u, ci);
        ++it->second.first;
      }
      std::uint32_t best = 0, ties = 0;
      std::size_t best_ci = 0;
      for (const auto& [y, v] : votes) {
        if (v.first > best) {
          best = v.first;
          ties = 1;
          best_ci = v.second;
        } else if (v.first == best) {
          ++ties;
        }
      }
      if (ties > 1) {
        res.verdict = Verdict::Abort;
      } else {
        res.y = copies[best_ci].y;
        hidden = copies[best_ci].hidden;
      }
    }
  }

  if (!meta.mode.streaming()) send_yback(0, T == 0 ? 0 : T - 1);
  if (sec.malicious()) {
    ByteWriter w(5);
    w.u8(static_cast<std::uint8_t>(res.verdict));
    w.u32(res.flagged_copy.value_or(kNoCopy));
    ch.send(net::Tag::Verdict, w.take());
  }
  {
    const bool ok = res.verdict == Verdict::Ok;
    ByteWriter w;
    w.u8(ok ? 0 : 1);
    const std::vector<std::uint32_t> words = ok && meta.hiding ? hidden : std::vector<std::uint32_t>{};
    w.u32(static_cast<std::uint32_t>(words.size()));
    for (auto v : words) w.u32(v);
    ch.send(net::Tag::Output, w.take());
  }
  ++rounds;

  res.stats.ot_rounds = rounds;
  res.stats.bytes_garbler_to_evaluator = ch.bytes_received();
  res.stats.bytes_evaluator_to_garbler = ch.bytes_sent();
  res.transcript = ch.transcript();
  return res;
}

}  // namespace

GarblerResult run_garbler(const SessionConfig& cfg, const mips::MipsProgram& program, net::Channel& channel) {
  return guarded(channel, [&] { return garbler_session(cfg, program, channel); });
}

EvaluatorResult run_evaluator(const SessionConfig& cfg, std::span<const std::uint32_t> x, net::Channel& channel) {
  return guarded(channel, [&] { return evaluator_session(cfg, x, channel); });
}

SessionResult run_loopback(const SessionConfig& garbler_cfg, const SessionConfig& evaluator_cfg,
                           const mips::MipsProgram& program, std::span<const std::uint32_t> x) {
  auto [gch, ech] = net::make_loopback_pair();
  SessionResult out;
  std::exception_ptr garbler_error;
  std::thread garbler([&, ch = gch.get()] {
    try {
      out.garbler = run_garbler(garbler_cfg, program, *ch);
    } catch (...) {
      garbler_error = std::current_exception();
    }
  });
  std::exception_ptr evaluator_error;
  try {
    out.evaluator = run_evaluator(evaluator_cfg, x, *ech);
  } catch (...) {
    evaluator_error = std::current_exception();
  }
  garbler.join();
  if (garbler_error && evaluator_error) {
    // The side that failed first is the one whose error is not a relayed ERR.
    try {
      std::rethrow_exception(evaluator_error);
    } catch (const ProtocolError&) {
      std::rethrow_exception(garbler_error);
    } catch (...) {
      throw;
    }
  }
  if (evaluator_error) std::rethrow_exception(evaluator_error);
  if (garbler_error) std::rethrow_exception(garbler_error);
  return out;
}

}  // namespace hwgn2::protocol
