#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hwgn2/block.hpp"
#include "hwgn2/emulator.hpp"
#include "hwgn2/prg.hpp"

namespace hwgn2::leakage {

struct LeakageModel {
  double noise_sigma = 1.0;
  /// Unprotected: samples per write event. Garbled: label bins per step (the
  /// same number of row bins follows them).
  std::uint32_t samples_per_step = 1;

  void validate() const;
};

enum class Population : std::uint8_t { Fixed = 0, Random = 1 };
std::string_view to_string(Population p);

struct TraceSet {
  Population population = Population::Fixed;
  std::uint32_t n_traces = 0;
  std::uint32_t n_samples = 0;
  std::vector<float> values;  // row-major

  TraceSet() = default;
  TraceSet(Population p, std::uint32_t traces, std::uint32_t samples)
      : population(p), n_traces(traces), n_samples(samples), values(std::size_t{traces} * samples, 0.0f) {}

  float& at(std::uint32_t trace, std::uint32_t sample) { return values[std::size_t{trace} * n_samples + sample]; }
  float at(std::uint32_t trace, std::uint32_t sample) const {
    return values[std::size_t{trace} * n_samples + sample];
  }
  std::span<const float> row(std::uint32_t trace) const {
    return {values.data() + std::size_t{trace} * n_samples, n_samples};
  }
  /// Rectangular and finite. Throws otherwise.
  void validate() const;
  friend bool operator==(const TraceSet&, const TraceSet&) = default;
};

using InputSampler = std::function<std::vector<std::uint32_t>(Prg&)>;

/// Uniform signed 16-bit values, sign-extended (the Q8.8 input range).
InputSampler int16_inputs(std::uint32_t words);
/// Uniform 32-bit words.
InputSampler word_inputs(std::uint32_t words);

struct InputPolicy {
  Population population = Population::Fixed;
  std::vector<std::uint32_t> fixed_x;
  InputSampler sampler;

  static InputPolicy fixed(std::vector<std::uint32_t> x) { return {Population::Fixed, std::move(x), {}}; }
  static InputPolicy random(InputSampler s) { return {Population::Random, {}, std::move(s)}; }
  std::vector<std::uint32_t> input_for(const Seed& campaign, std::uint32_t trace) const;
};

TraceSet simulate_unprotected(const mips::MipsProgram& program, const InputPolicy& policy, std::uint32_t n_traces,
                              const LeakageModel& model, const Seed& seed);

/// Steps of the program that the garbled simulation covers.
struct GarbledWindow {
  std::uint64_t first_step = 0;
  std::uint32_t steps = 4;
};

/// First step that loads a word from the evaluator's input region, or 0.
GarbledWindow default_window(const mips::MipsProgram& program);

/// Per trace: fresh step garblings for the window, starting from the
/// plaintext state before `first_step`, evaluated with an observer. Each step
/// contributes `samples_per_step` bins of mean label Hamming weight followed
/// by as many bins of mean fetched-row Hamming weight over nonfree gates.
/// With `reuse_seed` every trace uses the campaign seed itself.
TraceSet simulate_garbled(const mips::MipsProgram& program, const InputPolicy& policy, std::uint32_t n_traces,
                          const LeakageModel& model, const Seed& seed, const GarbledWindow& window,
                          bool reuse_seed = false);

/// Adds N(0, sigma) to every sample; per-trace streams derived from `seed`.
void add_noise(TraceSet& set, double sigma, const Seed& seed);

// Statistics.

inline constexpr double kTvlaThreshold = 4.5;

enum class WelchVariant : std::uint8_t {
  Standard,       // s^2 / n
  SquaredCounts,  // s^2 / n^2, for comparison only
};

struct TScoreSeries {
  std::vector<double> t;
  std::uint32_t n1 = 0;
  std::uint32_t n2 = 0;
  double threshold = kTvlaThreshold;
};

TScoreSeries welch_t(const TraceSet& a, const TraceSet& b, WelchVariant variant = WelchVariant::Standard);

struct TvlaVerdict {
  bool pass = true;
  double max_abs_t = 0.0;
  std::uint32_t max_index = 0;
  std::vector<std::uint32_t> offending;
};

TvlaVerdict tvla_verdict(const TScoreSeries& series);

// Fixed-vs-random campaigns.

enum class Target : std::uint8_t { Unprotected, Garbled, GarbledReusedSeed };
std::string_view to_string(Target t);
/// "unprotected", "garbled" or "garbled-reused-seed".
Target parse_target(std::string_view text);

struct CampaignConfig {
  Target target = Target::Unprotected;
  std::uint32_t traces = 10'000;  // split evenly between the populations
  LeakageModel model;
  Seed seed{};
  std::vector<std::uint32_t> fixed_x;
  InputSampler sampler;
  std::optional<GarbledWindow> window;  // default_window() when unset
};

struct CampaignResult {
  TraceSet fixed;
  TraceSet random;
  TScoreSeries series;
  TvlaVerdict verdict;
  GarbledWindow window;
};

CampaignResult run_campaign(const mips::MipsProgram& program, const CampaignConfig& cfg);
/// The same campaign at another noise level, from its noiseless run.
CampaignResult with_noise(const CampaignResult& noiseless, double sigma, const Seed& seed);

// Trace files.

void export_traces(const TraceSet& set, const std::filesystem::path& path);
TraceSet import_traces(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_traces(const TraceSet& set);
TraceSet decode_traces(std::span<const std::uint8_t> bytes);

void write_t_csv(const TScoreSeries& series, const std::filesystem::path& path);

}  // namespace hwgn2::leakage
