#include "hwgn2/leakage.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>

#include "hwgn2/bytes.hpp"
#include "hwgn2/error.hpp"
#include "hwgn2/garble.hpp"
#include "hwgn2/isa.hpp"
#include "hwgn2/protocol.hpp"
#include "hwgn2/step_circuit.hpp"

namespace hwgn2::leakage {

namespace {

constexpr char kMagic[8] = {'H', 'W', 'G', 'N', '2', 'T', 'R', 'C'};
constexpr std::uint8_t kTraceVersion = 1;
constexpr std::size_t kHeaderBytes = 8 + 1 + 4 + 4 + 1;

std::uint64_t seed_word(const Seed& s) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{s[i]} << (8 * i);
  return v;
}

void check_sizes(std::uint32_t n_traces) {
  if (n_traces == 0) throw Error("campaign needs at least one trace");
}

mips::MipsInstructionWord fetch(const mips::MipsProgram& p, const mips::CpuState& s) {
  return s.pc < p.instructions.size() ? p.instructions[s.pc] : mips::MipsInstructionWord{mips::kHaltWord};
}

class BinObserver : public garble::EvalObserver {
 public:
  BinObserver(std::size_t n_gates, std::uint32_t bins)
      : n_gates_(n_gates), bins_(bins), label_sum_(bins), label_n_(bins), row_sum_(bins), row_n_(bins) {}

  void reset() {
    std::fill(label_sum_.begin(), label_sum_.end(), 0);
    std::fill(label_n_.begin(), label_n_.end(), 0);
    std::fill(row_sum_.begin(), row_sum_.end(), 0);
    std::fill(row_n_.begin(), row_n_.end(), 0);
  }

  void on_gate(std::uint32_t gate_index, garble::Label out, int row_hw) override {
    const std::size_t b = std::size_t{gate_index} * bins_ / n_gates_;
    label_sum_[b] += static_cast<std::uint64_t>(hamming_weight(out));
    ++label_n_[b];
    if (row_hw >= 0) {
      row_sum_[b] += static_cast<std::uint64_t>(row_hw);
      ++row_n_[b];
    }
  }

  /// label means then row means; empty bins read 0.
  void write(float* out) const {
    for (std::uint32_t b = 0; b < bins_; ++b) {
      out[b] = label_n_[b] ? static_cast<float>(double(label_sum_[b]) / double(label_n_[b])) : 0.0f;
      out[bins_ + b] = row_n_[b] ? static_cast<float>(double(row_sum_[b]) / double(row_n_[b])) : 0.0f;
    }
  }

 private:
  std::size_t n_gates_;
  std::uint32_t bins_;
  std::vector<std::uint64_t> label_sum_, label_n_, row_sum_, row_n_;
};

}  // namespace

void LeakageModel::validate() const {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ValidationError("noise sigma must be >= 0");
  if (samples_per_step == 0) throw ValidationError("samples_per_step must be >= 1");
}

std::string_view to_string(Population p) { return p == Population::Fixed ? "fixed" : "random"; }

void TraceSet::validate() const {
  if (values.size() != std::size_t{n_traces} * n_samples) throw ValidationError("trace set is not rectangular");
  for (float v : values)
    if (!std::isfinite(v)) throw ValidationError("trace set holds a non-finite value");
}

InputSampler int16_inputs(std::uint32_t words) {
  return [words](Prg& prg) {
    std::vector<std::uint32_t> x(words);
    for (auto& w : x) w = static_cast<std::uint32_t>(static_cast<std::int32_t>(static_cast<std::int16_t>(prg.next_u32())));
    return x;
  };
}

InputSampler word_inputs(std::uint32_t words) {
  return [words](Prg& prg) {
    std::vector<std::uint32_t> x(words);
    for (auto& w : x) w = prg.next_u32();
    return x;
  };
}

std::vector<std::uint32_t> InputPolicy::input_for(const Seed& campaign, std::uint32_t trace) const {
  if (population == Population::Fixed) return fixed_x;
  if (!sampler) throw ValidationError("random input policy without a sampler");
  Prg prg(derive_seed(campaign, "input", trace));
  return sampler(prg);
}

void add_noise(TraceSet& set, double sigma, const Seed& seed) {
  if (sigma == 0.0) return;
  for (std::uint32_t i = 0; i < set.n_traces; ++i) {
    std::mt19937_64 gen(seed_word(derive_seed(seed, "noise", i)));
    std::normal_distribution<double> noise(0.0, sigma);
    for (std::uint32_t j = 0; j < set.n_samples; ++j) set.at(i, j) = static_cast<float>(set.at(i, j) + noise(gen));
  }
}

TraceSet simulate_unprotected(const mips::MipsProgram& program, const InputPolicy& policy, std::uint32_t n_traces,
                              const LeakageModel& model, const Seed& seed) {
  model.validate();
  program.validate();
  check_sizes(n_traces);
  const std::uint32_t k = model.samples_per_step;
  std::vector<std::vector<float>> rows(n_traces);
  std::size_t width = 0;
  for (std::uint32_t i = 0; i < n_traces; ++i) {
    const auto x = policy.input_for(seed, i);
    const auto run = mips::run_plain(program, x, 10'000'000, true);
    auto& row = rows[i];
    row.reserve(run.events.size() * k);
    for (const auto& e : run.events)
      row.insert(row.end(), k, static_cast<float>(std::popcount(e.value)));
    width = std::max(width, row.size());
  }
  if (width > std::numeric_limits<std::uint32_t>::max()) throw Error("too many samples per trace");
  TraceSet set(policy.population, n_traces, static_cast<std::uint32_t>(width));
  for (std::uint32_t i = 0; i < n_traces; ++i) std::copy(rows[i].begin(), rows[i].end(), &set.at(i, 0));
  add_noise(set, model.noise_sigma, seed);
  return set;
}

GarbledWindow default_window(const mips::MipsProgram& program) {
  const auto in = program.evaluator_input_region;
  GarbledWindow w;
  for (std::size_t t = 0; t < program.instructions.size(); ++t) {
    const std::uint32_t word = program.instructions[t].word;
    if (mips::classify(word) != mips::Op::Lw) continue;
    const auto f = mips::fields(word);
    if (f.rs == 0 && f.imm >= in.base && f.imm < in.base + in.count) {
      w.first_step = t;
      break;
    }
  }
  return w;
}

TraceSet simulate_garbled(const mips::MipsProgram& program, const InputPolicy& policy, std::uint32_t n_traces,
                          const LeakageModel& model, const Seed& seed, const GarbledWindow& window,
                          bool reuse_seed) {
  model.validate();
  program.validate();
  check_sizes(n_traces);
  if (window.steps == 0) throw ValidationError("garbled window needs at least one step");
  const mips::CpuStepConfig cfg = program.step_config();
  const circuit::Netlist& net = protocol::step_netlist(program.dmem_words);
  const std::size_t n_state = net.n_evaluator_inputs;
  const std::size_t n_gates = net.gates.size();
  const std::uint32_t bins = model.samples_per_step;
  const std::uint64_t per_step = 2ull * bins;
  if (per_step * window.steps > std::numeric_limits<std::uint32_t>::max()) throw Error("too many samples per trace");

  TraceSet set(policy.population, n_traces, static_cast<std::uint32_t>(per_step * window.steps));
  BinObserver obs(n_gates, bins);
  std::vector<Block> zero(net.n_wires()), active(net.n_wires());
  std::vector<Block> rows(garble::kRowsPerTable * circuit::count_gates(net).nonfree);
  std::vector<Block> state_zero(n_state), state_active(n_state);

  for (std::uint32_t i = 0; i < n_traces; ++i) {
    mips::CpuState s = mips::initial_state(program, policy.input_for(seed, i));
    for (std::uint64_t t = 0; t < window.first_step && !s.halted; ++t) mips::step_in_place(s, fetch(program, s), cfg);

    Prg prg(reuse_seed ? seed : derive_seed(seed, "trace", i));
    const Block R = garble::sample_offset(prg.next_block());
    prg.fill(state_zero);
    const circuit::Bits bits = mips::encode_state(s);
    for (std::size_t b = 0; b < n_state; ++b) state_active[b] = bits[b] ? state_zero[b] ^ R : state_zero[b];

    for (std::uint32_t w = 0; w < window.steps; ++w) {
      const std::uint32_t instr = fetch(program, s).word;
      prg.fill({zero.data(), mips::kInstructionBits});
      for (unsigned b = 0; b < mips::kInstructionBits; ++b)
        active[b] = (instr >> b) & 1u ? zero[b] ^ R : zero[b];
      std::copy(state_zero.begin(), state_zero.end(), zero.begin() + mips::kInstructionBits);
      std::copy(state_active.begin(), state_active.end(), active.begin() + mips::kInstructionBits);

      const std::uint64_t tweak = std::uint64_t{w} * n_gates;
      garble::garble_wires(net, R, tweak, zero, rows.data());
      obs.reset();
      garble::evaluate_wires(net, tweak, active, rows.data(), default_permutation(), &obs);
      obs.write(&set.at(i, static_cast<std::uint32_t>(w * per_step)));

      for (std::size_t b = 0; b < n_state; ++b) {
        state_zero[b] = zero[net.output_wires[b]];
        state_active[b] = active[net.output_wires[b]];
      }
      if (!s.halted) mips::step_in_place(s, fetch(program, s), cfg);
    }
  }
  add_noise(set, model.noise_sigma, seed);
  return set;
}

TScoreSeries welch_t(const TraceSet& a, const TraceSet& b, WelchVariant variant) {
  if (a.n_samples != b.n_samples) throw ValidationError("populations differ in sample count");
  if (a.n_traces < 2 || b.n_traces < 2) throw ValidationError("each population needs at least two traces");
  const std::uint32_t m = a.n_samples;

  struct Moments {
    std::vector<double> mean, m2;
  };
  const auto moments = [m](const TraceSet& set) {
    Moments r{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
    for (std::uint32_t i = 0; i < set.n_traces; ++i) {
      const auto row = set.row(i);
      const double n = i + 1.0;
      for (std::uint32_t j = 0; j < m; ++j) {
        const double d = row[j] - r.mean[j];
        r.mean[j] += d / n;
        r.m2[j] += d * (row[j] - r.mean[j]);
      }
    }
    return r;
  };
  const Moments ma = moments(a), mb = moments(b);

  TScoreSeries out;
  out.n1 = a.n_traces;
  out.n2 = b.n_traces;
  out.t.resize(m);
  const double n1 = a.n_traces, n2 = b.n_traces;
  const double d1 = variant == WelchVariant::Standard ? n1 : n1 * n1;
  const double d2 = variant == WelchVariant::Standard ? n2 : n2 * n2;
  for (std::uint32_t j = 0; j < m; ++j) {
    const double diff = ma.mean[j] - mb.mean[j];
    const double denom = (ma.m2[j] / (n1 - 1)) / d1 + (mb.m2[j] / (n2 - 1)) / d2;
    if (denom == 0.0)
      out.t[j] = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    else
      out.t[j] = diff / std::sqrt(denom);
  }
  return out;
}

TvlaVerdict tvla_verdict(const TScoreSeries& series) {
  TvlaVerdict v;
  for (std::uint32_t j = 0; j < series.t.size(); ++j) {
    const double a = std::fabs(series.t[j]);
    if (a > v.max_abs_t) {
      v.max_abs_t = a;
      v.max_index = j;
    }
    if (a > series.threshold) v.offending.push_back(j);
  }
  v.pass = v.offending.empty();
  return v;
}

std::string_view to_string(Target t) {
  switch (t) {
    case Target::Unprotected: return "unprotected";
    case Target::Garbled: return "garbled";
    case Target::GarbledReusedSeed: return "garbled-reused-seed";
  }
  return "?";
}

Target parse_target(std::string_view text) {
  for (Target t : {Target::Unprotected, Target::Garbled, Target::GarbledReusedSeed})
    if (text == to_string(t)) return t;
  throw ValidationError("unknown leakage target '" + std::string(text) + "'");
}

namespace {

Seed population_seed(const Seed& campaign, Population p) { return derive_seed(campaign, to_string(p), 0); }

void pad_samples(TraceSet& set, std::uint32_t width) {
  if (set.n_samples == width) return;
  TraceSet wide(set.population, set.n_traces, width);
  for (std::uint32_t i = 0; i < set.n_traces; ++i) std::copy_n(&set.at(i, 0), set.n_samples, &wide.at(i, 0));
  set = std::move(wide);
}

void score(CampaignResult& r) {
  r.series = welch_t(r.fixed, r.random);
  r.verdict = tvla_verdict(r.series);
}

}  // namespace

CampaignResult run_campaign(const mips::MipsProgram& program, const CampaignConfig& cfg) {
  cfg.model.validate();
  if (cfg.traces < 4) throw ValidationError("a campaign needs at least four traces");
  if (cfg.fixed_x.size() != program.evaluator_input_region.count)
    throw ValidationError("fixed input has " + std::to_string(cfg.fixed_x.size()) + " words, program expects " +
                          std::to_string(program.evaluator_input_region.count));
  const InputPolicy fixed = InputPolicy::fixed(cfg.fixed_x);
  const InputPolicy random = InputPolicy::random(cfg.sampler ? cfg.sampler : int16_inputs(program.evaluator_input_region.count));
  const std::uint32_t n_fixed = cfg.traces / 2, n_random = cfg.traces - n_fixed;
  LeakageModel silent = cfg.model;
  silent.noise_sigma = 0.0;

  CampaignResult r;
  r.window = cfg.window.value_or(default_window(program));
  const Seed fs = population_seed(cfg.seed, Population::Fixed), rs = population_seed(cfg.seed, Population::Random);
  switch (cfg.target) {
    case Target::Unprotected:
      r.fixed = simulate_unprotected(program, fixed, n_fixed, silent, fs);
      r.random = simulate_unprotected(program, random, n_random, silent, rs);
      break;
    case Target::Garbled:
      r.fixed = simulate_garbled(program, fixed, n_fixed, silent, fs, r.window);
      r.random = simulate_garbled(program, random, n_random, silent, rs, r.window);
      break;
    case Target::GarbledReusedSeed:
      r.fixed = simulate_garbled(program, fixed, n_fixed, silent, cfg.seed, r.window, true);
      r.random = simulate_garbled(program, random, n_random, silent, cfg.seed, r.window, true);
      break;
  }
  const std::uint32_t width = std::max(r.fixed.n_samples, r.random.n_samples);
  pad_samples(r.fixed, width);
  pad_samples(r.random, width);
  add_noise(r.fixed, cfg.model.noise_sigma, fs);
  add_noise(r.random, cfg.model.noise_sigma, rs);
  score(r);
  return r;
}

CampaignResult with_noise(const CampaignResult& noiseless, double sigma, const Seed& seed) {
  LeakageModel{sigma, 1}.validate();
  CampaignResult r = noiseless;
  add_noise(r.fixed, sigma, population_seed(seed, Population::Fixed));
  add_noise(r.random, sigma, population_seed(seed, Population::Random));
  score(r);
  return r;
}

std::vector<std::uint8_t> encode_traces(const TraceSet& set) {
  set.validate();
  ByteWriter w(kHeaderBytes + 4 * set.values.size());
  w.raw({reinterpret_cast<const std::uint8_t*>(kMagic), sizeof kMagic});
  w.u8(kTraceVersion);
  w.u32(set.n_traces);
  w.u32(set.n_samples);
  w.u8(static_cast<std::uint8_t>(set.population));
  for (float v : set.values) w.u32(std::bit_cast<std::uint32_t>(v));
  return w.take();
}

TraceSet decode_traces(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.raw(sizeof kMagic);
  if (!std::equal(magic.begin(), magic.end(), reinterpret_cast<const std::uint8_t*>(kMagic)))
    throw Error("trace file: bad magic at offset 0");
  const std::uint8_t version = r.u8();
  if (version != kTraceVersion) throw Error("trace file: unsupported version " + std::to_string(version));
  TraceSet set;
  set.n_traces = r.u32();
  set.n_samples = r.u32();
  const std::uint8_t pop = r.u8();
  if (pop > 1) throw Error("trace file: bad population tag at offset " + std::to_string(kHeaderBytes - 1));
  set.population = static_cast<Population>(pop);
  const std::size_t n = std::size_t{set.n_traces} * set.n_samples;
  if (r.remaining() / 4 < n)
    throw Error("trace file: truncated at offset " + std::to_string(bytes.size()) + ", expected " +
                std::to_string(kHeaderBytes + 4 * n) + " bytes");
  set.values.resize(n);
  for (auto& v : set.values) v = std::bit_cast<float>(r.u32());
  r.expect_end();
  set.validate();
  return set;
}

void export_traces(const TraceSet& set, const std::filesystem::path& path) {
  const auto bytes = encode_traces(set);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("write failed: " + path.string());
}

TraceSet import_traces(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_traces(bytes);
}

void write_t_csv(const TScoreSeries& series, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << "sample,t\n";
  char buf[64];
  for (std::size_t j = 0; j < series.t.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", j, series.t[j]);
    f << buf;
  }
  if (!f) throw Error("write failed: " + path.string());
}

}  // namespace hwgn2::leakage
