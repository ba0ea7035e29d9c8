#include <algorithm>
#include <bit>
#include <cmath>

#include "hwgn2/error.hpp"
#include "hwgn2/ot.hpp"
#include "hwgn2/protocol.hpp"
#include "protocol_detail.hpp"

namespace hwgn2::protocol {

using namespace detail;

SessionShape shape_of(const mips::MipsProgram& program, std::uint64_t step_limit) {
  program.validate();
  const std::vector<std::uint32_t> zeros(program.evaluator_input_region.count, 0);
  SessionShape s;
  s.steps = mips::run_plain(program, zeros, step_limit).step_count;
  s.dmem_words = program.dmem_words;
  s.input_words = program.evaluator_input_region.count;
  s.output_words = program.output_region.count;
  return s;
}

std::uint64_t rounds_for(const Mode& mode, std::uint64_t steps) {
  if (!mode.streaming()) return 2;
  const std::uint64_t k = mode.instructions_per_round;
  return (steps + k - 1) / k + 2;
}

CommStats account(const SessionConfig& cfg, const SessionShape& shape) {
  cfg.validate();
  const Geometry geo = geometry(shape.dmem_words, shape.input_words, shape.output_words, cfg.output_hiding);
  const Security sec = cfg.security;
  const std::uint64_t n_eval = sec.evaluated_count();
  const std::uint64_t n_ot = n_eval * geo.input_bits;
  const std::uint64_t T = shape.steps;
  const bool mal = sec.malicious();
  auto frame = [](std::uint64_t payload) { return net::kFrameHeaderBytes + payload; };

  CommStats s;
  std::uint64_t& g2e = s.bytes_garbler_to_evaluator;
  std::uint64_t& e2g = s.bytes_evaluator_to_garbler;
  g2e += frame(2) + frame(kPhiMetaFixedBytes + 32 * (mal ? sec.copies : 0));
  e2g += frame(2);
  if (mal) {
    e2g += frame(4 + sec.copies);
    g2e += frame(4 + kOpeningBytes * sec.check_count());
  }
  if (n_ot) {
    g2e += frame(32) + frame(4 + 2 * ot::kCiphertextBytes * n_ot);
    e2g += frame(4 + 32 * n_ot);
  }
  if (T == 0) {
    g2e += n_eval * frame(batch_payload_bytes(geo.garbler_state_bits(), 0, 0));
  } else {
    g2e += n_eval * (T * frame(batch_payload_bytes(0, mips::kInstructionBits, geo.step_tables)) +
                     16 * std::uint64_t{geo.garbler_state_bits()});
  }
  g2e += n_eval * frame(decode_payload_bytes(geo, cfg.output_hiding));

  const std::uint64_t ybacks = cfg.mode.streaming() ? rounds_for(cfg.mode, T) - 2 : 1;
  e2g += ybacks * frame(kYbackBytes);
  if (mal) e2g += frame(5);
  e2g += frame(5 + (cfg.output_hiding ? geo.hide_output_bits / 8 : 0));
  s.ot_rounds = rounds_for(cfg.mode, T);

  const std::uint64_t batch_steps =
      T == 0 ? 0 : (cfg.mode.streaming() ? std::min<std::uint64_t>(cfg.mode.instructions_per_round, T) : T);
  s.peak_resident_tables = n_eval * std::max(geo.step_tables * batch_steps, geo.hide_tables);
  s.peak_resident_labels = n_eval * (geo.width + std::max<std::uint64_t>(32 * batch_steps, geo.hide_garbler_bits));
  return s;
}

CommStats account(const SessionConfig& cfg, const mips::MipsProgram& program) {
  return account(cfg, shape_of(program, cfg.step_limit));
}

CutAndChooseResult cut_and_choose(const SessionConfig& garbler_cfg, const SessionConfig& evaluator_cfg,
                                  const mips::MipsProgram& program, std::span<const std::uint32_t> x) {
  if (!garbler_cfg.security.malicious() || !evaluator_cfg.security.malicious())
    throw Error("cut-and-choose needs a malicious security setting");
  const auto r = run_loopback(garbler_cfg, evaluator_cfg, program, x);
  CutAndChooseResult out;
  out.verdict = r.evaluator.verdict;
  out.flagged_copy = r.evaluator.flagged_copy;
  out.y = r.evaluator.y;
  out.checked_copies = r.evaluator.checked_copies;
  return out;
}

namespace {

double binomial(std::uint32_t n, std::uint32_t k) {
  if (k > n) return 0.0;
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

}  // namespace

double undetected_wrong_output_probability(std::uint32_t s, std::uint32_t corrupted) {
  if (s == 0 || corrupted == 0 || corrupted > s) return 0.0;
  const std::uint32_t chk = s / 2, ev = s - chk;
  if (corrupted > ev || 2 * corrupted <= ev) return 0.0;
  return binomial(s - corrupted, chk) / binomial(s, chk);
}

double optimal_cheat_probability(std::uint32_t s) {
  double best = 0.0;
  for (std::uint32_t c = 1; c <= s; ++c) best = std::max(best, undetected_wrong_output_probability(s, c));
  return best;
}

std::uint32_t copies_for_multi_execution(std::uint32_t s, std::uint64_t t) {
  if (t == 0) throw Error("execution count must be at least 1");
  return s + static_cast<std::uint32_t>(std::bit_width(t - 1));
}

}  // namespace hwgn2::protocol
