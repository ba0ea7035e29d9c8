#include <gtest/gtest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "hwgn2/error.hpp"
#include "hwgn2/isa.hpp"
#include "hwgn2/leakage.hpp"
#include "programs.hpp"

using namespace hwgn2;
using namespace hwgn2::leakage;

namespace {

// Independent reference: two-pass mean and unbiased variance.
std::vector<double> two_pass_t(const TraceSet& a, const TraceSet& b) {
  std::vector<double> t(a.n_samples);
  for (std::uint32_t j = 0; j < a.n_samples; ++j) {
    const auto stats = [j](const TraceSet& s) {
      long double sum = 0;
      for (std::uint32_t i = 0; i < s.n_traces; ++i) sum += s.at(i, j);
      const long double mean = sum / s.n_traces;
      long double ss = 0;
      for (std::uint32_t i = 0; i < s.n_traces; ++i) ss += (s.at(i, j) - mean) * (s.at(i, j) - mean);
      return std::pair<long double, long double>{mean, ss / (s.n_traces - 1)};
    };
    const auto [m1, v1] = stats(a);
    const auto [m2, v2] = stats(b);
    t[j] = static_cast<double>((m1 - m2) / std::sqrt(v1 / a.n_traces + v2 / b.n_traces));
  }
  return t;
}

TraceSet gaussian_set(Population p, std::uint32_t n, std::uint32_t m, double mean, std::uint64_t seed) {
  TraceSet s(p, n, m);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(mean, 1.0);
  for (auto& v : s.values) v = static_cast<float>(d(gen));
  return s;
}

mips::MipsProgram all_ones_program() {
  mips::MipsProgram p;
  p.dmem_words = 16;
  p.evaluator_input_region = {0, 1};
  p.output_region = {1, 1};
  p.instructions = {{mips::encode_i(mips::opcode::Lui, 0, 1, 0xffff)},
                    {mips::encode_i(mips::opcode::Ori, 1, 1, 0xffff)},
                    {mips::encode_i(mips::opcode::Sw, 0, 1, 1)},
                    {mips::kHaltWord}};
  return p;
}

std::filesystem::path temp_path(const char* name) {
  return std::filesystem::temp_directory_path() / (std::string(name) + "." + std::to_string(::getpid()));
}

}  // namespace

TEST(Leakage, UnprotectedNoiselessFixedTracesAreIdentical) {
  Prg prg(seed_from_u64(1));
  const auto p = oracle::random_program(prg, 20);
  const auto set = simulate_unprotected(p, InputPolicy::fixed({5, 7}), 20, {0.0, 2}, seed_from_u64(2));
  ASSERT_GT(set.n_samples, 0u);
  for (std::uint32_t i = 1; i < set.n_traces; ++i)
    EXPECT_TRUE(std::equal(set.row(0).begin(), set.row(0).end(), set.row(i).begin()));
}

TEST(Leakage, UnprotectedSampleIsHammingWeight) {
  const auto p = all_ones_program();
  const auto exact = simulate_unprotected(p, InputPolicy::fixed({0}), 3, {0.0, 1}, seed_from_u64(3));
  ASSERT_EQ(exact.n_samples, 3u);
  EXPECT_EQ(exact.at(0, 0), 16.0f);
  EXPECT_EQ(exact.at(0, 1), 32.0f);
  EXPECT_EQ(exact.at(0, 2), 32.0f);

  const auto noisy = simulate_unprotected(p, InputPolicy::fixed({0}), 4000, {1.0, 1}, seed_from_u64(4));
  double mean = 0;
  for (std::uint32_t i = 0; i < noisy.n_traces; ++i) mean += noisy.at(i, 1);
  EXPECT_NEAR(mean / noisy.n_traces, 32.0, 0.1);
}

TEST(Leakage, GarbledTracesDifferForTheSameInput) {
  Prg prg(seed_from_u64(5));
  const auto p = oracle::random_program(prg, 10);
  const auto set = simulate_garbled(p, InputPolicy::fixed({1, 2}), 2, {0.0, 4}, seed_from_u64(6), {0, 2});
  EXPECT_EQ(set.n_samples, 16u);
  EXPECT_FALSE(std::equal(set.row(0).begin(), set.row(0).end(), set.row(1).begin()));

  const auto reused =
      simulate_garbled(p, InputPolicy::fixed({1, 2}), 2, {0.0, 4}, seed_from_u64(6), {0, 2}, true);
  EXPECT_TRUE(std::equal(reused.row(0).begin(), reused.row(0).end(), reused.row(1).begin()));
}

TEST(Leakage, GarbledLabelWeightsAreBalanced) {
  Prg prg(seed_from_u64(7));
  const auto p = oracle::random_program(prg, 10);
  const LeakageModel m{0.0, 2};
  for (const auto& policy : {InputPolicy::fixed({9, 9}), InputPolicy::random(word_inputs(2))}) {
    const auto set = simulate_garbled(p, policy, 200, m, seed_from_u64(8), {2, 2});
    for (std::uint32_t j = 0; j < set.n_samples; ++j) {
      double mean = 0;
      for (std::uint32_t i = 0; i < set.n_traces; ++i) mean += set.at(i, j);
      mean /= set.n_traces;
      const bool label_bin = (j % 4) < 2;
      // Fetched rows are uniform except the implicit zero row, taken a quarter of the time.
      EXPECT_NEAR(mean, label_bin ? 64.0 : 48.0, 0.5) << to_string(policy.population) << " sample " << j;
    }
  }
}

TEST(Leakage, GarbledCampaignPassesAndReusedSeedFails) {
  Prg prg(seed_from_u64(9));
  const auto p = oracle::random_program(prg, 12);
  CampaignConfig cfg;
  cfg.target = Target::Garbled;
  cfg.traces = 2000;
  cfg.model = {0.0, 8};
  cfg.seed = seed_from_u64(10);
  cfg.fixed_x = {0x1234, 0xffff};
  cfg.sampler = word_inputs(2);
  cfg.window = GarbledWindow{0, 3};
  const auto fresh = run_campaign(p, cfg);
  EXPECT_TRUE(fresh.verdict.pass) << fresh.verdict.max_abs_t;
  EXPECT_TRUE(with_noise(fresh, 1.0, cfg.seed).verdict.pass);

  cfg.target = Target::GarbledReusedSeed;
  cfg.traces = 200;
  const auto reused = run_campaign(p, cfg);
  EXPECT_FALSE(reused.verdict.pass);
}

TEST(Leakage, UnprotectedCampaignFails) {
  Prg prg(seed_from_u64(11));
  const auto p = oracle::random_program(prg, 12);
  CampaignConfig cfg;
  cfg.traces = 1000;
  cfg.model = {1.0, 1};
  cfg.seed = seed_from_u64(12);
  cfg.fixed_x = {3, 4};
  cfg.sampler = word_inputs(2);
  const auto r = run_campaign(p, cfg);
  EXPECT_FALSE(r.verdict.pass);
  EXPECT_GT(r.verdict.max_abs_t, kTvlaThreshold);
}

TEST(Leakage, NoiseCanBeAddedAfterTheFact) {
  Prg prg(seed_from_u64(13));
  const auto p = oracle::random_program(prg, 8);
  CampaignConfig cfg;
  cfg.traces = 40;
  cfg.model = {0.0, 1};
  cfg.seed = seed_from_u64(14);
  cfg.fixed_x = {1, 1};
  cfg.sampler = word_inputs(2);
  const auto silent = run_campaign(p, cfg);
  cfg.model.noise_sigma = 1.0;
  const auto direct = run_campaign(p, cfg);
  const auto derived = with_noise(silent, 1.0, cfg.seed);
  EXPECT_EQ(direct.fixed, derived.fixed);
  EXPECT_EQ(direct.random, derived.random);
  EXPECT_EQ(direct.series.t, derived.series.t);
}

TEST(Leakage, CampaignChecksInputSize) {
  Prg prg(seed_from_u64(15));
  const auto p = oracle::random_program(prg, 4);
  CampaignConfig cfg;
  cfg.fixed_x = {1};
  EXPECT_THROW(run_campaign(p, cfg), ValidationError);
}

TEST(Leakage, DefaultWindowStartsAtFirstInputLoad) {
  Prg prg(seed_from_u64(16));
  const auto p = oracle::random_program(prg, 4);
  EXPECT_EQ(default_window(p).first_step, 0u);  // LW r1, 0(r0) comes first
  auto q = all_ones_program();
  EXPECT_EQ(default_window(q).first_step, 0u);
  q.instructions.insert(q.instructions.begin() + 2, {mips::encode_i(mips::opcode::Lw, 0, 2, 0)});
  EXPECT_EQ(default_window(q).first_step, 2u);
}

TEST(Welch, ConstantPopulationsGiveZero) {
  TraceSet a(Population::Fixed, 5, 3), b(Population::Random, 7, 3);
  std::fill(a.values.begin(), a.values.end(), 2.5f);
  std::fill(b.values.begin(), b.values.end(), 2.5f);
  for (double t : welch_t(a, b).t) EXPECT_EQ(t, 0.0);
  std::fill(b.values.begin(), b.values.end(), 3.0f);
  for (double t : welch_t(a, b).t) EXPECT_TRUE(std::isinf(t) && t < 0);
}

TEST(Welch, ClosedFormShift) {
  const auto a = gaussian_set(Population::Fixed, 10'000, 20, 0.0, 17);
  const auto b = gaussian_set(Population::Random, 10'000, 20, 1.0, 18);
  const double expected = 1.0 / std::sqrt(2.0 / 1e4);
  for (double t : welch_t(a, b).t) EXPECT_NEAR(-t, expected, 0.05 * expected);
}

TEST(Welch, MatchesTwoPassReference) {
  for (std::uint64_t seed : {19, 20, 21}) {
    const auto a = gaussian_set(Population::Fixed, 300 + seed, 50, 10.0, seed);
    const auto b = gaussian_set(Population::Random, 500 - seed, 50, 10.2, seed + 100);
    const auto t = welch_t(a, b).t;
    const auto ref = two_pass_t(a, b);
    for (std::size_t j = 0; j < t.size(); ++j) EXPECT_NEAR(t[j], ref[j], 1e-9 * std::fabs(ref[j]));
  }
}

TEST(Welch, SameDistributionStaysBelowThreshold) {
  const auto a = gaussian_set(Population::Fixed, 10'000, 1000, 5.0, 22);
  const auto b = gaussian_set(Population::Random, 10'000, 1000, 5.0, 23);
  const auto v = tvla_verdict(welch_t(a, b));
  EXPECT_LE(v.offending.size(), 0u);
  EXPECT_LT(v.max_abs_t, kTvlaThreshold);
}

TEST(Welch, SquaredCountVariantScalesBySqrtN) {
  const auto a = gaussian_set(Population::Fixed, 400, 5, 0.0, 24);
  const auto b = gaussian_set(Population::Random, 400, 5, 0.3, 25);
  const auto t = welch_t(a, b).t;
  const auto tsq = welch_t(a, b, WelchVariant::SquaredCounts).t;
  for (std::size_t j = 0; j < t.size(); ++j) EXPECT_NEAR(tsq[j], t[j] * 20.0, 1e-9 * std::fabs(tsq[j]));
}

TEST(Welch, RejectsTinyOrMismatchedSets) {
  TraceSet a(Population::Fixed, 1, 2), b(Population::Random, 5, 2), c(Population::Random, 5, 3);
  EXPECT_THROW(welch_t(a, b), ValidationError);
  EXPECT_THROW(welch_t(b, c), ValidationError);
}

TEST(Tvla, Verdict) {
  TScoreSeries s;
  s.t = {0.1, -4.4, 4.4, 2.0};
  auto v = tvla_verdict(s);
  EXPECT_TRUE(v.pass);
  EXPECT_DOUBLE_EQ(v.max_abs_t, 4.4);

  s.t[3] = 9.0;
  v = tvla_verdict(s);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.offending, std::vector<std::uint32_t>{3});
  EXPECT_EQ(v.max_index, 3u);

  s.t[0] = -4.6;
  EXPECT_EQ(tvla_verdict(s).offending, (std::vector<std::uint32_t>{0, 3}));
}

TEST(TraceFile, HeaderOnlyRoundTrips) {
  TraceSet s(Population::Random, 0, 100);
  const auto bytes = encode_traces(s);
  EXPECT_EQ(bytes.size(), 18u);
  EXPECT_EQ(decode_traces(bytes), s);
}

TEST(TraceFile, RandomSetRoundTripsBitExact) {
  const auto s = gaussian_set(Population::Fixed, 10, 100, 3.0, 26);
  const auto path = temp_path("hwgn2_traces");
  export_traces(s, path);
  EXPECT_EQ(std::filesystem::file_size(path), 18u + 4000u);
  EXPECT_EQ(import_traces(path), s);
  std::filesystem::remove(path);
}

TEST(TraceFile, LayoutIsLittleEndian) {
  TraceSet s(Population::Random, 1, 1);
  s.values[0] = 1.0f;  // 0x3f800000
  const auto b = encode_traces(s);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 8), "HWGN2TRC");
  EXPECT_EQ(b[8], 1);
  EXPECT_EQ(b[9], 1);
  EXPECT_EQ(b[13], 1);
  EXPECT_EQ(b[17], 1);
  EXPECT_EQ(std::vector<std::uint8_t>(b.begin() + 18, b.end()), (std::vector<std::uint8_t>{0, 0, 0x80, 0x3f}));
}

TEST(TraceFile, TruncationReportsOffset) {
  const auto s = gaussian_set(Population::Fixed, 3, 4, 0.0, 27);
  auto bytes = encode_traces(s);
  bytes.resize(bytes.size() - 3);
  try {
    decode_traces(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("offset 63"), std::string::npos) << e.what();
  }
  bytes.resize(11);
  try {
    decode_traces(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("offset 9"), std::string::npos) << e.what();
  }
}

TEST(TraceFile, HeaderMismatch) {
  auto bytes = encode_traces(TraceSet(Population::Fixed, 1, 1));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_traces(bad), Error);
  bad = bytes;
  bad[8] = 2;
  EXPECT_THROW(decode_traces(bad), Error);
  bad = bytes;
  bad[17] = 7;
  EXPECT_THROW(decode_traces(bad), Error);
  bytes.push_back(0);
  EXPECT_THROW(decode_traces(bytes), Error);
  EXPECT_THROW(import_traces("/nonexistent/hwgn2.trc"), Error);
}

TEST(TraceFile, NonFiniteValuesRejected) {
  TraceSet s(Population::Fixed, 1, 2);
  s.values[1] = std::nanf("");
  EXPECT_THROW(encode_traces(s), ValidationError);
}
