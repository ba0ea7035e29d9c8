#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hwgn2/block.hpp"
#include "hwgn2/channel.hpp"
#include "hwgn2/emulator.hpp"
#include "hwgn2/garble.hpp"
#include "hwgn2/group.hpp"

namespace hwgn2::protocol {

inline constexpr std::uint8_t kWireVersion = 1;

struct Mode {
  enum class Kind : std::uint8_t { Stream, Full };
  Kind kind = Kind::Full;
  std::uint32_t instructions_per_round = 1;

  static Mode full() { return {}; }
  static Mode stream(std::uint32_t k) { return {Kind::Stream, k}; }
  bool streaming() const { return kind == Kind::Stream; }
  /// "full" or "stream:K".
  std::string to_string() const;
  static Mode parse(std::string_view text);
  friend bool operator==(const Mode&, const Mode&) = default;
};

struct Security {
  enum class Kind : std::uint8_t { HbC, Malicious };
  Kind kind = Kind::HbC;
  std::uint32_t copies = 1;

  static Security hbc() { return {}; }
  static Security malicious(std::uint32_t s) { return {Kind::Malicious, s}; }
  bool malicious() const { return kind == Kind::Malicious; }
  std::uint32_t check_count() const { return malicious() ? copies / 2 : 0; }
  std::uint32_t evaluated_count() const { return copies - check_count(); }
  /// "hbc" or "malicious:S".
  std::string to_string() const;
  static Security parse(std::string_view text);
  friend bool operator==(const Security&, const Security&) = default;
};

/// Deliberate garbler misbehaviour, for tests of the malicious mode.
enum class Corruption : std::uint8_t {
  None,
  FlipOutput,   // inverts the decode bits of the output region
  TamperTable,  // XORs garbage into every table row of the first step
};

struct CheatPlan {
  Corruption kind = Corruption::None;
  std::vector<std::uint32_t> copies;
};

struct SessionConfig {
  Mode mode;
  Security security;
  Seed fresh_seed{};
  std::uint64_t step_limit = 10'000'000;
  /// When set, the peer's step configuration must match it.
  std::optional<mips::CpuStepConfig> cpu;
  bool output_hiding = false;
  ot::Profile profile = ot::Profile::Secure;
  bool networked = false;
  /// Frame digests in the transcript; tags and lengths are always logged.
  bool transcript_digests = false;

  // Garbler only.
  CheatPlan cheat;
  // Evaluator only: sees every gate of every evaluated step of copy 0.
  garble::EvalObserver* observer = nullptr;

  void validate() const;
};

struct CommStats {
  std::uint64_t ot_rounds = 0;
  std::uint64_t bytes_garbler_to_evaluator = 0;
  std::uint64_t bytes_evaluator_to_garbler = 0;
  std::uint64_t peak_resident_tables = 0;
  std::uint64_t peak_resident_labels = 0;
  friend bool operator==(const CommStats&, const CommStats&) = default;
};

/// Everything the evaluator learns about the function.
struct SideInfo {
  std::uint64_t step_count = 0;
  std::uint32_t netlist_inputs = 0;
  std::uint32_t netlist_outputs = 0;
  std::uint64_t netlist_gates = 0;
  std::uint64_t netlist_nonfree_gates = 0;
  std::uint32_t input_words = 0;
  std::uint32_t output_words = 0;
  bool nothing_else = true;
  friend bool operator==(const SideInfo&, const SideInfo&) = default;
};

enum class Verdict : std::uint8_t { Ok, Cheat, Abort, IntegrityFailure };
std::string_view to_string(Verdict v);

struct GarblerResult {
  CommStats stats;
  SideInfo phi;
  Verdict verdict = Verdict::Ok;
  std::optional<std::uint32_t> flagged_copy;
  /// With output hiding: y recovered from the hidden output, MAC-checked.
  std::optional<std::vector<std::uint32_t>> revealed_output;
  net::Transcript transcript;
};

struct EvaluatorResult {
  std::vector<std::uint32_t> y;
  CommStats stats;
  SideInfo phi;
  Verdict verdict = Verdict::Ok;
  std::optional<std::uint32_t> flagged_copy;
  std::vector<std::uint32_t> checked_copies;
  net::Transcript transcript;
};

GarblerResult run_garbler(const SessionConfig& cfg, const mips::MipsProgram& program, net::Channel& channel);
EvaluatorResult run_evaluator(const SessionConfig& cfg, std::span<const std::uint32_t> x, net::Channel& channel);

struct SessionResult {
  GarblerResult garbler;
  EvaluatorResult evaluator;
};

/// Both roles in one process, garbler on a second thread.
SessionResult run_loopback(const SessionConfig& garbler_cfg, const SessionConfig& evaluator_cfg,
                           const mips::MipsProgram& program, std::span<const std::uint32_t> x);

// Accounting.

struct SessionShape {
  std::uint64_t steps = 0;
  std::uint32_t dmem_words = 256;
  std::uint32_t input_words = 0;
  std::uint32_t output_words = 0;
};

/// Dry-runs the program to find T.
SessionShape shape_of(const mips::MipsProgram& program, std::uint64_t step_limit = 10'000'000);
std::uint64_t rounds_for(const Mode& mode, std::uint64_t steps);
/// Exact prediction for an honest session.
CommStats account(const SessionConfig& cfg, const SessionShape& shape);
CommStats account(const SessionConfig& cfg, const mips::MipsProgram& program);

// Cut-and-choose.

struct CutAndChooseResult {
  Verdict verdict = Verdict::Ok;
  std::optional<std::uint32_t> flagged_copy;
  std::vector<std::uint32_t> y;
  std::vector<std::uint32_t> checked_copies;
};

/// One malicious-mode session over loopback; s = cfg.security.copies.
CutAndChooseResult cut_and_choose(const SessionConfig& garbler_cfg, const SessionConfig& evaluator_cfg,
                                  const mips::MipsProgram& program, std::span<const std::uint32_t> x);

/// Probability that corrupting `corrupted` of s copies (all the same way)
/// yields a wrong output with verdict OK, over the evaluator's random check
/// set of floor(s/2) copies.
double undetected_wrong_output_probability(std::uint32_t s, std::uint32_t corrupted);
/// Maximum of the above over the number of corrupted copies.
double optimal_cheat_probability(std::uint32_t s);

/// Copies needed for t executions at statistical parameter s: s + ceil(log2 t).
std::uint32_t copies_for_multi_execution(std::uint32_t s, std::uint64_t t);

/// Step netlist for W data words, built once per W.
const circuit::Netlist& step_netlist(std::uint32_t dmem_words);

}  // namespace hwgn2::protocol
