#include "hwgn2/nncompile.hpp"

#include <bit>

#include "hwgn2/error.hpp"
#include "hwgn2/isa.hpp"

namespace hwgn2::nn {

namespace {

using namespace mips;

class Emitter {
 public:
  std::vector<MipsInstructionWord> code;

  void r(std::uint8_t fn, unsigned rd, unsigned rs, unsigned rt) { push(encode_r(fn, rs, rt, rd, 0)); }
  void shift(std::uint8_t fn, unsigned rd, unsigned rt, unsigned sa) { push(encode_r(fn, 0, rt, rd, sa)); }
  void imm(std::uint8_t op, unsigned rt, unsigned rs, std::int32_t v) {
    if (v < -32768 || v > 65535) throw Error("immediate out of range");
    push(encode_i(op, rs, rt, static_cast<std::uint16_t>(v)));
  }
  void lw(unsigned rt, std::uint32_t addr) { imm(opcode::Lw, rt, 0, static_cast<std::int32_t>(addr)); }
  void sw(unsigned rt, std::uint32_t addr) { imm(opcode::Sw, rt, 0, static_cast<std::int32_t>(addr)); }
  void mult(unsigned rs, unsigned rt) { push(encode_r(funct::Mult, rs, rt, 0, 0)); }
  void mflo(unsigned rd) { push(encode_r(funct::Mflo, 0, 0, rd, 0)); }
  void load_const(unsigned rt, std::uint32_t v) {
    imm(opcode::Lui, rt, 0, static_cast<std::int32_t>(v >> 16));
    imm(opcode::Ori, rt, rt, static_cast<std::int32_t>(v & 0xffff));
  }

  /// rd = (rd < bound) ? bound : rd, or with `upper` rd = (bound < rd) ? bound : rd.
  void clamp(unsigned rd, unsigned bound, bool upper, unsigned t0, unsigned t1) {
    if (upper)
      r(funct::Slt, t0, bound, rd);
    else
      r(funct::Slt, t0, rd, bound);
    r(funct::Sub, t0, 0, t0);
    r(funct::Xor, t1, rd, bound);
    r(funct::And, t1, t1, t0);
    r(funct::Xor, rd, rd, t1);
  }
  void relu(unsigned rd, unsigned t0) {
    shift(funct::Sra, t0, rd, 31);
    r(funct::Nor, t0, t0, 0);
    r(funct::And, rd, rd, t0);
  }

 private:
  void push(std::uint32_t w) { code.push_back({w}); }
};

std::uint32_t choose_w(std::uint32_t needed, std::uint32_t requested) {
  const std::uint32_t fit = std::max<std::uint32_t>(16, std::bit_ceil(needed));
  if (fit > 4096)
    throw Error("model needs " + std::to_string(needed) + " data words; requires W = " + std::to_string(fit) +
                ", above the 4096-word maximum");
  if (requested == 0) return fit;
  if (requested < needed)
    throw Error("model needs " + std::to_string(needed) + " data words; W = " + std::to_string(requested) +
                " is too small, requires W >= " + std::to_string(fit));
  return requested;
}

struct MlpLayout {
  std::uint32_t input = 0;
  std::vector<std::uint32_t> weights, bias, out;
  std::uint32_t total = 0;
};

MlpLayout mlp_layout(const MlpModel& m) {
  MlpLayout lay;
  std::uint32_t at = 0;
  lay.input = at;
  at += m.layer_sizes[0];
  for (const auto& L : m.layers) {
    lay.weights.push_back(at);
    at += L.n_out * ((L.n_in + 1) / 2);
    lay.bias.push_back(at);
    at += L.n_out;
  }
  for (const auto& L : m.layers) {
    lay.out.push_back(at);
    at += L.n_out;
  }
  lay.total = at;
  return lay;
}

struct BnnLayout {
  std::uint32_t input = 0;
  std::vector<std::uint32_t> weights, thresholds, out;
  std::uint32_t total = 0;
};

std::uint32_t packed_words(std::uint32_t bits) { return (bits + 31) / 32; }

BnnLayout bnn_layout(const BnnModel& m) {
  BnnLayout lay;
  std::uint32_t at = 0;
  at += packed_words(m.layer_sizes[0]);
  for (const auto& L : m.layers) {
    lay.weights.push_back(at);
    at += L.n_out * L.words_per_row();
    lay.thresholds.push_back(at);
    at += L.n_out;
  }
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    lay.out.push_back(at);
    const bool last = l + 1 == m.layers.size();
    at += last ? m.layers[l].n_out : packed_words(m.layers[l].n_out);
  }
  lay.total = at;
  return lay;
}

// MLP registers.
constexpr unsigned kAcc = 1, kPair = 2, kW = 3, kX = 4, kProd = 5, kT0 = 6, kLo = 7, kHi = 8, kOne = 9;
// BNN registers.
constexpr unsigned kW1 = 2, kX1 = 3, kV = 4, kTmp = 5, kM1 = 10, kM2 = 11, kM4 = 12, kPack = 13, kThr = 14;

}  // namespace

std::uint32_t mlp_data_words(const MlpModel& model) {
  model.validate();
  return mlp_layout(model).total;
}

std::uint32_t bnn_data_words(const BnnModel& model) {
  model.validate();
  return bnn_layout(model).total;
}

MipsProgram compile_mlp(const MlpModel& model, std::uint32_t dmem_words) {
  model.validate();
  const MlpLayout lay = mlp_layout(model);
  MipsProgram p;
  p.dmem_words = choose_w(lay.total, dmem_words);
  p.evaluator_input_region = {lay.input, model.layer_sizes[0]};
  p.output_region = {lay.out.back(), model.layers.back().n_out};

  Emitter e;
  e.imm(opcode::Addi, kLo, 0, kFixedMin);
  e.imm(opcode::Addi, kHi, 0, kFixedMax);
  bool any_sigmoid = false;
  for (const auto& L : model.layers) any_sigmoid |= L.activation == Activation::HardSigmoid;
  if (any_sigmoid) e.imm(opcode::Addi, kOne, 0, kFixedOne);

  std::uint32_t in_base = lay.input;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& L = model.layers[l];
    const std::uint32_t pairs = (L.n_in + 1) / 2;
    for (std::uint32_t j = 0; j < L.n_out; ++j) {
      p.dmem_init_garbler[lay.bias[l] + j] = static_cast<std::uint32_t>(L.bias[j]);
      e.lw(kAcc, lay.bias[l] + j);
      for (std::uint32_t k = 0; k < pairs; ++k) {
        const std::uint32_t addr = lay.weights[l] + j * pairs + k;
        const std::uint32_t i0 = 2 * k;
        const bool has_hi = i0 + 1 < L.n_in;
        const std::uint32_t lo = static_cast<std::uint16_t>(L.w(j, i0));
        const std::uint32_t hi = has_hi ? static_cast<std::uint16_t>(L.w(j, i0 + 1)) : 0;
        p.dmem_init_garbler[addr] = lo | (hi << 16);
        e.lw(kPair, addr);
        for (int half = 0; half < (has_hi ? 2 : 1); ++half) {
          if (half == 0) {
            e.shift(funct::Sll, kW, kPair, 16);
            e.shift(funct::Sra, kW, kW, 16);
          } else {
            e.shift(funct::Sra, kW, kPair, 16);
          }
          e.lw(kX, in_base + i0 + half);
          e.mult(kW, kX);
          e.mflo(kProd);
          e.shift(funct::Sra, kProd, kProd, kFracBits);
          e.r(funct::Addu, kAcc, kAcc, kProd);
        }
      }
      e.clamp(kAcc, kLo, false, kT0, kProd);
      e.clamp(kAcc, kHi, true, kT0, kProd);
      switch (L.activation) {
        case Activation::None: break;
        case Activation::Relu: e.relu(kAcc, kT0); break;
        case Activation::HardSigmoid:
          e.shift(funct::Sra, kAcc, kAcc, 2);
          e.imm(opcode::Addi, kAcc, kAcc, kFixedOne / 2);
          e.relu(kAcc, kT0);
          e.clamp(kAcc, kOne, true, kT0, kProd);
          break;
      }
      e.sw(kAcc, lay.out[l] + j);
    }
    in_base = lay.out[l];
  }
  p.instructions = std::move(e.code);
  p.validate();
  return p;
}

MipsProgram compile_bnn(const BnnModel& model, std::uint32_t dmem_words) {
  model.validate();
  const BnnLayout lay = bnn_layout(model);
  MipsProgram p;
  p.dmem_words = choose_w(lay.total, dmem_words);
  p.evaluator_input_region = {lay.input, packed_words(model.layer_sizes[0])};
  p.output_region = {lay.out.back(), model.layers.back().n_out};

  Emitter e;
  e.load_const(kM1, 0x55555555u);
  e.load_const(kM2, 0x33333333u);
  e.load_const(kM4, 0x0f0f0f0fu);

  std::uint32_t in_base = lay.input;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& L = model.layers[l];
    const bool last = l + 1 == model.layers.size();
    const std::uint32_t wpr = L.words_per_row();
    // Padding bits are zero in both operands, so their XNOR counts as agreement.
    const std::int32_t pad = static_cast<std::int32_t>(wpr * 32 - L.n_in);
    for (std::uint32_t j = 0; j < L.n_out; ++j) {
      for (std::uint32_t c = 0; c < wpr; ++c) {
        const std::uint32_t addr = lay.weights[l] + j * wpr + c;
        p.dmem_init_garbler[addr] = L.weight_bits[std::size_t{j} * wpr + c];
        e.lw(kW1, addr);
        e.lw(kX1, in_base + c);
        e.r(funct::Xor, kV, kW1, kX1);
        e.r(funct::Nor, kV, kV, 0);
        // Shift-add popcount tree.
        e.shift(funct::Srl, kTmp, kV, 1);
        e.r(funct::And, kTmp, kTmp, kM1);
        e.r(funct::Sub, kV, kV, kTmp);
        e.r(funct::And, kTmp, kV, kM2);
        e.shift(funct::Srl, kV, kV, 2);
        e.r(funct::And, kV, kV, kM2);
        e.r(funct::Addu, kV, kV, kTmp);
        e.shift(funct::Srl, kTmp, kV, 4);
        e.r(funct::Addu, kV, kV, kTmp);
        e.r(funct::And, kV, kV, kM4);
        e.shift(funct::Srl, kTmp, kV, 8);
        e.r(funct::Addu, kV, kV, kTmp);
        e.shift(funct::Srl, kTmp, kV, 16);
        e.r(funct::Addu, kV, kV, kTmp);
        e.imm(opcode::Andi, kV, kV, 0x3f);
        e.r(funct::Addu, kAcc, c == 0 ? 0 : kAcc, kV);
      }
      // acc = 2 * (popcount - pad) - n
      e.shift(funct::Sll, kAcc, kAcc, 1);
      e.imm(opcode::Addi, kAcc, kAcc, -(static_cast<std::int32_t>(L.n_in) + 2 * pad));
      p.dmem_init_garbler[lay.thresholds[l] + j] = static_cast<std::uint32_t>(L.thresholds[j]);
      e.lw(kThr, lay.thresholds[l] + j);
      if (last) {
        e.r(funct::Sub, kAcc, kAcc, kThr);
        e.sw(kAcc, lay.out[l] + j);
        continue;
      }
      const unsigned bit = j % 32;
      e.r(funct::Slt, kTmp, kAcc, kThr);
      e.imm(opcode::Xori, kTmp, kTmp, 1);
      if (bit == 0) {
        e.r(funct::Addu, kPack, 0, kTmp);
      } else {
        e.shift(funct::Sll, kTmp, kTmp, bit);
        e.r(funct::Or, kPack, kPack, kTmp);
      }
      if (bit == 31 || j + 1 == L.n_out) e.sw(kPack, lay.out[l] + j / 32);
    }
    in_base = lay.out[l];
  }
  p.instructions = std::move(e.code);
  p.validate();
  return p;
}

std::vector<std::uint32_t> mlp_input_words(std::span<const Fixed> x) {
  std::vector<std::uint32_t> out;
  out.reserve(x.size());
  for (auto v : x) {
    if (!representable(v)) throw Error("input value outside Q8.8");
    out.push_back(static_cast<std::uint32_t>(v));
  }
  return out;
}

std::vector<std::uint32_t> bnn_input_words(std::span<const std::uint8_t> bits) {
  std::vector<std::uint32_t> out(packed_words(static_cast<std::uint32_t>(bits.size())), 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out[i / 32] |= 1u << (i % 32);
  return out;
}

std::vector<std::int32_t> logits_from_words(std::span<const std::uint32_t> words) {
  std::vector<std::int32_t> out;
  out.reserve(words.size());
  for (auto w : words) out.push_back(static_cast<std::int32_t>(w));
  return out;
}

}  // namespace hwgn2::nn
