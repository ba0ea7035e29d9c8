#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hwgn2::nn {

/// Q8.8 two's complement held in a 32-bit word.
using Fixed = std::int32_t;

inline constexpr int kFracBits = 8;
inline constexpr Fixed kFixedOne = 1 << kFracBits;
inline constexpr Fixed kFixedMin = -32768;
inline constexpr Fixed kFixedMax = 32767;

Fixed saturate(std::int64_t v);
bool representable(std::int64_t v);
Fixed fixed_from_double(double v);  // round to nearest, saturating
double fixed_to_double(Fixed v);

/// Exact decimal string ("-1.25", "3", "0.0039") to Q8.8, rounding half away
/// from zero. Throws Error on malformed text or values outside Q8.8.
Fixed parse_fixed(std::string_view text);
/// Shortest decimal that parse_fixed maps back to v.
std::string format_fixed(Fixed v);

enum class Activation : std::uint8_t { None, Relu, HardSigmoid };

std::string_view to_string(Activation a);
/// Throws Error on an unknown name.
Activation activation_from_string(std::string_view name);

/// Layer semantics, per neuron j:
///   acc = bias[j] + sum_i ((w[j][i] * x[i]) >> 8)     (exact in 32 bits)
///   y   = act(saturate(acc))
/// relu(v) = max(v, 0); hard_sigmoid(v) = clamp((v >> 2) + 128, 0, 256).
struct DenseLayer {
  std::uint32_t n_in = 0;
  std::uint32_t n_out = 0;
  std::vector<Fixed> weights;  // row-major, n_out x n_in
  std::vector<Fixed> bias;
  Activation activation = Activation::None;

  Fixed w(std::uint32_t out, std::uint32_t in) const { return weights[std::size_t{out} * n_in + in]; }
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct MlpModel {
  std::vector<std::uint32_t> layer_sizes;
  std::vector<DenseLayer> layers;

  /// Dimensions, Q8.8 ranges, final activation None and the accumulator
  /// bound: |bias| + sum_i |w_i| * 128 must stay below 2^31 for every
  /// neuron, so 32-bit accumulation never wraps. Throws ValidationError.
  void validate() const;
  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

/// Weight bit 1 encodes +1, bit 0 encodes -1. Rows are packed LSB-first into
/// ceil(n_in / 32) words; padding bits are zero.
///   acc_j = 2 * popcount(XNOR(w_j, x)) - n_in
/// Hidden layers emit bit (acc_j >= threshold_j); the last layer emits the
/// integer logit acc_j - threshold_j.
struct BnnLayer {
  std::uint32_t n_in = 0;
  std::uint32_t n_out = 0;
  std::vector<std::uint32_t> weight_bits;  // n_out * words_per_row()
  std::vector<std::int32_t> thresholds;

  std::uint32_t words_per_row() const { return (n_in + 31) / 32; }
  bool weight(std::uint32_t out, std::uint32_t in) const {
    return ((weight_bits[std::size_t{out} * words_per_row() + in / 32] >> (in % 32)) & 1u) != 0;
  }
  friend bool operator==(const BnnLayer&, const BnnLayer&) = default;
};

struct BnnModel {
  std::vector<std::uint32_t> layer_sizes;
  std::vector<BnnLayer> layers;

  void validate() const;
  friend bool operator==(const BnnModel&, const BnnModel&) = default;
};

std::vector<Fixed> infer_plain(const MlpModel& model, std::span<const Fixed> x);
std::vector<std::int32_t> infer_plain_bnn(const BnnModel& model, std::span<const std::uint8_t> x_bits);

/// Sign binarization, w >= 0 maps to +1. With alpha_j = mean |w_j| and
/// s_j = sum of signs of row j:
///   first layer (signed inputs):         t_j = ceil(-b_j / alpha_j)
///   later layers (inputs >= 0 after act): t_j = ceil(-s_j - 2 b_j / alpha_j)
BnnModel binarize(const MlpModel& model);

/// Input bits for the binarized network: x_i >= 0.
std::vector<std::uint8_t> binarize_input(std::span<const Fixed> x);

std::size_t argmax(std::span<const Fixed> logits);

}  // namespace hwgn2::nn
