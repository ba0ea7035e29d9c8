#include <gtest/gtest.h>

#include "hwgn2/assembler.hpp"
#include "hwgn2/emulator.hpp"
#include "hwgn2/error.hpp"
#include "hwgn2/model_io.hpp"
#include "hwgn2/nncompile.hpp"
#include "models.hpp"

using namespace hwgn2;
using namespace hwgn2::nn;

namespace {

std::vector<std::int64_t> widen(const std::vector<std::int32_t>& v) { return {v.begin(), v.end()}; }

std::vector<std::int32_t> run_mlp(const mips::MipsProgram& p, const std::vector<Fixed>& x) {
  return logits_from_words(mips::run_plain(p, mlp_input_words(x)).output_words);
}

std::vector<std::int32_t> run_bnn(const mips::MipsProgram& p, const std::vector<std::uint8_t>& x) {
  return logits_from_words(mips::run_plain(p, bnn_input_words(x)).output_words);
}

DenseLayer dense(std::uint32_t n_in, std::uint32_t n_out, std::vector<Fixed> w, std::vector<Fixed> b, Activation a) {
  return {n_in, n_out, std::move(w), std::move(b), a};
}

std::vector<std::uint32_t> random_sizes(Prg& prg) {
  std::vector<std::uint32_t> s{static_cast<std::uint32_t>(1 + prg.uniform(12))};
  const auto layers = 1 + prg.uniform(3);
  for (std::uint64_t l = 0; l < layers; ++l) s.push_back(static_cast<std::uint32_t>(1 + prg.uniform(6)));
  return s;
}

}  // namespace

TEST(FixedPoint, ParseExamples) {
  EXPECT_EQ(parse_fixed("1"), 256);
  EXPECT_EQ(parse_fixed("-1.25"), -320);
  EXPECT_EQ(parse_fixed("+0.5"), 128);
  EXPECT_EQ(parse_fixed("0.00390625"), 1);
  EXPECT_EQ(parse_fixed("0.001953125"), 1);
  EXPECT_EQ(parse_fixed("-0.001953125"), -1);
  EXPECT_EQ(parse_fixed("0.0019531"), 0);
  EXPECT_EQ(parse_fixed("127.99609375"), 32767);
  EXPECT_EQ(parse_fixed("-128"), -32768);
  EXPECT_THROW(parse_fixed("128"), Error);
  EXPECT_THROW(parse_fixed("1e3"), Error);
  EXPECT_THROW(parse_fixed(""), Error);
  EXPECT_THROW(parse_fixed("."), Error);
}

TEST(FixedPoint, FormatRoundTripsEveryValue) {
  for (std::int32_t v = kFixedMin; v <= kFixedMax; ++v) ASSERT_EQ(parse_fixed(format_fixed(v)), v) << v;
  EXPECT_EQ(format_fixed(-320), "-1.25");
  EXPECT_EQ(format_fixed(1), "0.00390625");
}

TEST(FixedPoint, Saturate) {
  EXPECT_EQ(saturate(40000), kFixedMax);
  EXPECT_EQ(saturate(-40000), kFixedMin);
  EXPECT_EQ(saturate(-5), -5);
}

TEST(InferPlain, IdentityLayerReturnsInput) {
  MlpModel m;
  m.layer_sizes = {4, 4};
  std::vector<Fixed> w(16, 0);
  for (int i = 0; i < 4; ++i) w[i * 4 + i] = kFixedOne;
  m.layers.push_back(dense(4, 4, w, {0, 0, 0, 0}, Activation::None));
  const std::vector<Fixed> x{-32768, -1, 77, 32767};
  EXPECT_EQ(infer_plain(m, x), x);
}

TEST(InferPlain, HandWorkedTwoTwoOne) {
  // h1 = 1.5*2 - 0.5*1 + 0.5 = 3, h2 = 0.25*2 + 2*1 - 1 = 1.5, y = h1 - h2 + 0.125 = 1.625
  MlpModel m;
  m.layer_sizes = {2, 2, 1};
  m.layers.push_back(dense(2, 2, {parse_fixed("1.5"), parse_fixed("-0.5"), parse_fixed("0.25"), parse_fixed("2")},
                           {parse_fixed("0.5"), parse_fixed("-1")}, Activation::Relu));
  m.layers.push_back(dense(2, 1, {kFixedOne, -kFixedOne}, {parse_fixed("0.125")}, Activation::None));
  const auto y = infer_plain(m, std::vector<Fixed>{parse_fixed("2"), parse_fixed("1")});
  ASSERT_EQ(y.size(), 1u);
  EXPECT_EQ(y[0], parse_fixed("1.625"));
  EXPECT_EQ(run_mlp(compile_mlp(m), {512, 256}), y);
}

TEST(InferPlain, MatchesInt64Reference) {
  Prg prg(seed_from_u64(11));
  for (int t = 0; t < 200; ++t) {
    const auto sizes = random_sizes(prg);
    // Large weights force saturation on a good fraction of neurons.
    const auto m = oracle::random_mlp(prg, sizes, t % 2 ? 512 : 32767);
    const auto x = oracle::random_input(prg, sizes[0], t % 3 ? 1024 : 32767);
    ASSERT_EQ(widen(infer_plain(m, x)), oracle::reference_mlp(m, x)) << t;
  }
}

TEST(InferPlain, SaturatesInsteadOfWrapping) {
  MlpModel m;
  m.layer_sizes = {2, 1};
  m.layers.push_back(dense(2, 1, {kFixedMax, kFixedMax}, {kFixedMax}, Activation::None));
  EXPECT_EQ(infer_plain(m, std::vector<Fixed>{kFixedMax, kFixedMax}), std::vector<Fixed>{kFixedMax});
  m.layers[0].weights = {kFixedMin, kFixedMin};
  m.layers[0].bias = {kFixedMin};
  EXPECT_EQ(infer_plain(m, std::vector<Fixed>{kFixedMax, kFixedMax}), std::vector<Fixed>{kFixedMin});
  const auto p = compile_mlp(m);
  EXPECT_EQ(run_mlp(p, {kFixedMax, kFixedMax}), std::vector<Fixed>{kFixedMin});
}

TEST(InferPlain, ActivationShapes) {
  MlpModel m;
  m.layer_sizes = {1, 1, 1};
  m.layers.push_back(dense(1, 1, {kFixedOne}, {0}, Activation::HardSigmoid));
  m.layers.push_back(dense(1, 1, {kFixedOne}, {0}, Activation::None));
  auto at = [&](Fixed v) { return infer_plain(m, std::vector<Fixed>{v})[0]; };
  EXPECT_EQ(at(0), 128);
  EXPECT_EQ(at(1024), 256);
  EXPECT_EQ(at(-1024), 0);
  EXPECT_EQ(at(256), 192);
  m.layers[0].activation = Activation::Relu;
  EXPECT_EQ(at(-5), 0);
  EXPECT_EQ(at(5), 5);
}

TEST(InferPlain, DimensionErrors) {
  Prg prg(seed_from_u64(3));
  const auto m = oracle::random_mlp(prg, {3, 2});
  EXPECT_THROW(infer_plain(m, std::vector<Fixed>{1, 2}), Error);
  auto bad = m;
  bad.layers[0].weights.pop_back();
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = m;
  bad.layer_sizes = {3, 2, 2};
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = m;
  bad.layers[0].activation = Activation::Relu;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(InferPlain, AccumulatorGuardRejectsOverflowableModels) {
  MlpModel m;
  m.layer_sizes = {600, 1};
  m.layers.push_back(dense(600, 1, std::vector<Fixed>(600, kFixedMax), {0}, Activation::None));
  EXPECT_THROW(m.validate(), ValidationError);
  m.layers[0].weights.assign(600, 1000);
  EXPECT_NO_THROW(m.validate());
}

TEST(InferBnn, XnorPopcountExamples) {
  BnnModel m;
  m.layer_sizes = {8, 1};
  BnnLayer L{8, 1, {0xA5u}, {0}};
  m.layers.push_back(L);
  std::vector<std::uint8_t> x(8);
  for (int i = 0; i < 8; ++i) x[i] = (0xA5 >> i) & 1;
  EXPECT_EQ(infer_plain_bnn(m, x), std::vector<std::int32_t>{8});
  for (auto& b : x) b ^= 1;
  EXPECT_EQ(infer_plain_bnn(m, x), std::vector<std::int32_t>{-8});
}

TEST(InferBnn, MatchesPlusMinusOneDotProducts) {
  Prg prg(seed_from_u64(12));
  for (int t = 0; t < 200; ++t) {
    std::vector<std::uint32_t> sizes{16};
    if (t % 2) sizes = random_sizes(prg), sizes[0] += static_cast<std::uint32_t>(prg.uniform(70));
    else sizes.push_back(1 + static_cast<std::uint32_t>(prg.uniform(4)));
    const auto m = oracle::random_bnn(prg, sizes);
    const auto x = oracle::random_bits(prg, sizes[0]);
    ASSERT_EQ(widen(infer_plain_bnn(m, x)), oracle::reference_bnn(m, x)) << t;
  }
}

TEST(Binarize, SignRuleAndTies) {
  MlpModel m;
  m.layer_sizes = {3, 1};
  m.layers.push_back(dense(3, 1, {5, 0, 7}, {0}, Activation::None));
  auto b = binarize(m);
  EXPECT_EQ(b.layers[0].weight_bits[0], 0b111u);
  m.layers[0].weights = {-5, 0, 7};
  b = binarize(m);
  EXPECT_EQ(b.layers[0].weight_bits[0], 0b110u);
  EXPECT_EQ(b.layers[0].thresholds[0], 0);
  m.layers[0].bias = {-8};  // alpha = 4, t = 2
  EXPECT_EQ(binarize(m).layers[0].thresholds[0], 2);
  m.layers[0].bias = {-6};  // t = ceil(1.5)
  EXPECT_EQ(binarize(m).layers[0].thresholds[0], 2);
  EXPECT_EQ(binarize(m), binarize(m));
}

TEST(Binarize, SyntheticTaskAccuracyWithinSmokeBound) {
  // Teacher: a real-valued network with per-row constant weight magnitude
  // and mostly saturating hidden units; labels are its argmax. The
  // fixed-point copy and its binarization are scored against those labels.
  Prg prg(seed_from_u64(99));
  const std::vector<std::uint32_t> sizes{8, 5, 5, 10};
  std::vector<std::vector<double>> W[3], B(3);
  MlpModel m;
  m.layer_sizes = sizes;
  for (int l = 0; l < 3; ++l) {
    DenseLayer L;
    L.n_in = sizes[l];
    L.n_out = sizes[l + 1];
    L.activation = l == 2 ? Activation::None : Activation::HardSigmoid;
    for (std::uint32_t j = 0; j < L.n_out; ++j) {
      const double alpha = l == 2 ? 4.0 : 3.0 + static_cast<double>(prg.uniform(3));
      std::vector<double> row;
      for (std::uint32_t i = 0; i < L.n_in; ++i) row.push_back(prg.next_bit() ? alpha : -alpha);
      const double bias = (static_cast<double>(prg.uniform(4)) - 1.5) * alpha;
      for (double w : row) L.weights.push_back(fixed_from_double(w));
      L.bias.push_back(fixed_from_double(bias));
      W[l].push_back(row);
      B[l].push_back(bias);
    }
    m.layers.push_back(L);
  }
  const BnnModel bnn = binarize(m);
  int fixed_ok = 0, bnn_ok = 0;
  const int n = 200;
  for (int s = 0; s < n; ++s) {
    std::vector<double> cur;
    std::vector<Fixed> xf;
    for (std::uint32_t i = 0; i < 8; ++i) {
      cur.push_back(prg.next_bit() ? 1.0 : -1.0);
      xf.push_back(fixed_from_double(cur.back()));
    }
    for (int l = 0; l < 3; ++l) {
      std::vector<double> next;
      for (std::size_t j = 0; j < W[l].size(); ++j) {
        double v = B[l][j];
        for (std::size_t i = 0; i < cur.size(); ++i) v += W[l][j][i] * cur[i];
        next.push_back(l == 2 ? v : std::clamp(v / 4 + 0.5, 0.0, 1.0));
      }
      cur = next;
    }
    const auto label = static_cast<std::size_t>(std::max_element(cur.begin(), cur.end()) - cur.begin());
    fixed_ok += argmax(infer_plain(m, xf)) == label;
    bnn_ok += argmax(infer_plain_bnn(bnn, binarize_input(xf))) == label;
  }
  const double fixed_acc = 100.0 * fixed_ok / n, bnn_acc = 100.0 * bnn_ok / n;
  RecordProperty("fixed_accuracy", std::to_string(fixed_acc));
  RecordProperty("binarized_accuracy", std::to_string(bnn_acc));
  EXPECT_GE(fixed_acc, 90.0);
  EXPECT_LE(fixed_acc - bnn_acc, 15.0) << "fixed " << fixed_acc << " binarized " << bnn_acc;
}

TEST(Compile, RunPlainMatchesInferPlainForBothFamilies) {
  Prg prg(seed_from_u64(13));
  for (int t = 0; t < 100; ++t) {
    const auto sizes = random_sizes(prg);
    const auto m = oracle::random_mlp(prg, sizes, t % 4 == 0 ? 32767 : 512);
    const auto p = compile_mlp(m);
    EXPECT_EQ(mips::run_plain(p, mlp_input_words(oracle::random_input(prg, sizes[0]))).step_count,
              p.instructions.size());
    auto bsizes = sizes;
    bsizes[0] += static_cast<std::uint32_t>(prg.uniform(60));
    const auto b = oracle::random_bnn(prg, bsizes);
    const auto pb = compile_bnn(b);
    for (int k = 0; k < 10; ++k) {
      const auto x = oracle::random_input(prg, sizes[0], k % 3 ? 1024 : 32767);
      ASSERT_EQ(run_mlp(p, x), infer_plain(m, x)) << t << "/" << k;
      const auto xb = oracle::random_bits(prg, bsizes[0]);
      ASSERT_EQ(run_bnn(pb, xb), infer_plain_bnn(b, xb)) << t << "/" << k;
    }
  }
}

TEST(Compile, FullSizeBm2ShapeMatchesInferPlain) {
  Prg prg(seed_from_u64(14));
  const auto m = oracle::random_mlp(prg, {784, 5, 5, 10});
  const auto p = compile_mlp(m);
  EXPECT_EQ(p.dmem_words, 4096u);
  for (int k = 0; k < 100; ++k) {
    const auto x = oracle::random_input(prg, 784);
    ASSERT_EQ(run_mlp(p, x), infer_plain(m, x)) << k;
  }
  const auto pb = compile_bnn(binarize(m));
  EXPECT_LT(pb.instructions.size(), p.instructions.size());
  RecordProperty("mlp_instructions", static_cast<int>(p.instructions.size()));
  RecordProperty("bnn_instructions", static_cast<int>(pb.instructions.size()));
}

TEST(Compile, BnnIsShorterForDeskShapes) {
  Prg prg(seed_from_u64(15));
  for (const auto& sizes : std::vector<std::vector<std::uint32_t>>{{8, 5, 5, 10}, {16, 6, 5, 5, 10}, {64, 32, 10}}) {
    const auto m = oracle::random_mlp(prg, sizes);
    EXPECT_LT(compile_bnn(binarize(m)).instructions.size(), compile_mlp(m).instructions.size());
  }
}

TEST(Compile, ProgramShape) {
  Prg prg(seed_from_u64(16));
  const auto one = oracle::random_mlp(prg, {1, 1});
  const auto p1 = compile_mlp(one);
  EXPECT_LT(p1.instructions.size(), 64u);
  EXPECT_EQ(p1.dmem_words, 16u);

  const auto m = oracle::random_mlp(prg, {8, 5, 5, 10});
  const auto p = compile_mlp(m);
  EXPECT_EQ(p.evaluator_input_region, (mips::Region{0, 8}));
  EXPECT_EQ(p.output_region.count, 10u);
  EXPECT_EQ(p.dmem_words, 128u);
  EXPECT_EQ(mlp_data_words(m), 113u);
  // Parameters are garbler data, branches never appear.
  EXPECT_EQ(p.dmem_init_garbler.size(), 85u);
  for (auto w : p.instructions) {
    const auto op = w.op();
    EXPECT_TRUE(op != mips::Op::Beq && op != mips::Op::Bne && op != mips::Op::J && op != mips::Op::Jal &&
                op != mips::Op::Jr && op != mips::Op::Halt);
  }
  EXPECT_EQ(mips::assemble(mips::disassemble(p)), p);
}

TEST(Compile, DmemOverflowNamesRequiredSize) {
  Prg prg(seed_from_u64(17));
  const auto m = oracle::random_mlp(prg, {8, 5, 5, 10});
  try {
    compile_mlp(m, 64);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("requires W >= 128"), std::string::npos) << e.what();
  }
  EXPECT_EQ(compile_mlp(m, 256).dmem_words, 256u);
  const auto huge = oracle::random_mlp(prg, {3000, 4, 2});
  EXPECT_THROW(compile_mlp(huge), Error);
}

TEST(ModelIo, JsonRoundTrip) {
  Prg prg(seed_from_u64(18));
  const auto m = oracle::random_mlp(prg, {5, 3, 2});
  const auto text = to_json(m);
  EXPECT_EQ(std::get<MlpModel>(model_from_json(text)), m);
  EXPECT_EQ(to_json(std::get<MlpModel>(model_from_json(text))), text);
  const auto b = oracle::random_bnn(prg, {40, 3, 2});
  EXPECT_EQ(std::get<BnnModel>(model_from_json(to_json(b))), b);
}

TEST(ModelIo, ErrorsCarryLineNumbers) {
  const std::string good = R"({
  "kind": "mlp",
  "layer_sizes": [2, 1],
  "layers": [
    {
      "activation": "none",
      "weights": [["1", "0.5"]],
      "bias": ["0"]
    }
  ]
})";
  EXPECT_NO_THROW(model_from_json(good));
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      model_from_json(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  auto replace = [&](std::string from, std::string to) {
    std::string t = good;
    t.replace(t.find(from), from.size(), to);
    return t;
  };
  EXPECT_EQ(line_of(replace("\"0.5\"", "\"zz\"")), 7u);
  EXPECT_EQ(line_of(replace("[[\"1\", \"0.5\"]]", "[[\"1\"]]")), 7u);
  EXPECT_EQ(line_of(replace("\"none\"", "\"tanh\"")), 6u);
  EXPECT_EQ(line_of(replace("\"bias\": [\"0\"]", "\"bias\": [\"0\", \"1\"]")), 8u);
  EXPECT_EQ(line_of(replace("\"mlp\"", "\"cnn\"")), 2u);
  EXPECT_EQ(line_of(replace("\"bias\"", "\"bais\"")), 5u);
  EXPECT_EQ(line_of(replace("[2, 1]", "[2, 1,]")), 3u);
  EXPECT_EQ(line_of(replace("\"none\"", "\"relu\"")), 4u);
}
