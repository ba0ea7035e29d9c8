#include "hwgn2/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>

#include "hwgn2/error.hpp"

namespace hwgn2::nn {

Fixed saturate(std::int64_t v) { return static_cast<Fixed>(std::clamp<std::int64_t>(v, kFixedMin, kFixedMax)); }

bool representable(std::int64_t v) { return v >= kFixedMin && v <= kFixedMax; }

Fixed fixed_from_double(double v) { return saturate(std::llround(v * kFixedOne)); }

double fixed_to_double(Fixed v) { return static_cast<double>(v) / kFixedOne; }

Fixed parse_fixed(std::string_view text) {
  const std::string original(text);
  auto fail = [&](const char* why) { return Error("bad fixed-point value '" + original + "': " + why); };
  bool negative = false;
  if (!text.empty() && (text[0] == '-' || text[0] == '+')) {
    negative = text[0] == '-';
    text.remove_prefix(1);
  }
  if (text.empty()) throw fail("empty");
  std::int64_t int_part = 0;
  std::size_t i = 0;
  bool any_digit = false;
  for (; i < text.size() && text[i] != '.'; ++i) {
    if (text[i] < '0' || text[i] > '9') throw fail("not a decimal number");
    int_part = int_part * 10 + (text[i] - '0');
    any_digit = true;
    if (int_part > 1'000'000) throw fail("out of Q8.8 range");
  }
  // Fraction as num / 10^k with k capped at 18 digits.
  std::int64_t num = 0;
  std::int64_t den = 1;
  if (i < text.size()) {
    ++i;
    for (; i < text.size(); ++i) {
      if (text[i] < '0' || text[i] > '9') throw fail("not a decimal number");
      any_digit = true;
      if (den < 1'000'000'000'000'000'000) {
        num = num * 10 + (text[i] - '0');
        den *= 10;
      }
    }
  }
  if (!any_digit) throw fail("no digits");
  // round(num * 256 / den), half away from zero, on the magnitude.
  const __int128 scaled = static_cast<__int128>(num) * kFixedOne;
  std::int64_t frac = static_cast<std::int64_t>(scaled / den);
  if ((scaled % den) * 2 >= den) ++frac;
  std::int64_t mag = int_part * kFixedOne + frac;
  const std::int64_t v = negative ? -mag : mag;
  if (!representable(v)) throw fail("out of Q8.8 range");
  return static_cast<Fixed>(v);
}

std::string format_fixed(Fixed v) {
  std::string out = v < 0 ? "-" : "";
  const std::int64_t mag = std::llabs(static_cast<std::int64_t>(v));
  out += std::to_string(mag >> kFracBits);
  std::int64_t frac = mag & (kFixedOne - 1);
  if (frac == 0) return out;
  // 1/256 has an exact 8-digit decimal expansion.
  std::int64_t digits = frac * 390625;  // frac / 256 * 10^8
  std::string s = std::to_string(digits);
  s.insert(0, 8 - s.size(), '0');
  while (s.back() == '0') s.pop_back();
  return out + "." + s;
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::None: return "none";
    case Activation::Relu: return "relu";
    case Activation::HardSigmoid: return "hard_sigmoid";
  }
  return "?";
}

Activation activation_from_string(std::string_view name) {
  if (name == "none") return Activation::None;
  if (name == "relu") return Activation::Relu;
  if (name == "hard_sigmoid") return Activation::HardSigmoid;
  throw Error("unknown activation '" + std::string(name) + "'");
}

namespace {

void check_sizes(const std::vector<std::uint32_t>& sizes, std::size_t n_layers) {
  if (sizes.size() < 2) throw ValidationError("layer_sizes needs at least an input and an output size");
  if (n_layers + 1 != sizes.size())
    throw ValidationError("layer_sizes lists " + std::to_string(sizes.size()) + " sizes but there are " +
                          std::to_string(n_layers) + " layers");
  for (auto s : sizes)
    if (s == 0) throw ValidationError("layer size 0");
}

Fixed activate(Activation a, Fixed v) {
  switch (a) {
    case Activation::None: return v;
    case Activation::Relu: return std::max(v, 0);
    case Activation::HardSigmoid: return std::clamp((v >> 2) + 128, 0, 256);
  }
  return v;
}

}  // namespace

void MlpModel::validate() const {
  check_sizes(layer_sizes, layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    const std::string where = "layer " + std::to_string(l) + ": ";
    if (L.n_in != layer_sizes[l] || L.n_out != layer_sizes[l + 1])
      throw ValidationError(where + "shape " + std::to_string(L.n_out) + "x" + std::to_string(L.n_in) +
                            " does not match layer_sizes");
    if (L.weights.size() != std::size_t{L.n_in} * L.n_out)
      throw ValidationError(where + "expected " + std::to_string(std::size_t{L.n_in} * L.n_out) + " weights, got " +
                            std::to_string(L.weights.size()));
    if (L.bias.size() != L.n_out)
      throw ValidationError(where + "expected " + std::to_string(L.n_out) + " biases, got " +
                            std::to_string(L.bias.size()));
    for (std::uint32_t j = 0; j < L.n_out; ++j) {
      if (!representable(L.bias[j])) throw ValidationError(where + "bias outside Q8.8");
      std::int64_t bound = std::llabs(static_cast<std::int64_t>(L.bias[j]));
      for (std::uint32_t i = 0; i < L.n_in; ++i) {
        const Fixed w = L.w(j, i);
        if (!representable(w)) throw ValidationError(where + "weight outside Q8.8");
        bound += std::llabs(static_cast<std::int64_t>(w)) * 128 + 1;
      }
      if (bound >= (std::int64_t{1} << 31))
        throw ValidationError(where + "neuron " + std::to_string(j) + " can overflow the 32-bit accumulator");
    }
  }
  if (layers.back().activation != Activation::None) throw ValidationError("output layer activation must be none");
}

void BnnModel::validate() const {
  check_sizes(layer_sizes, layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    const std::string where = "layer " + std::to_string(l) + ": ";
    if (L.n_in != layer_sizes[l] || L.n_out != layer_sizes[l + 1])
      throw ValidationError(where + "shape does not match layer_sizes");
    if (L.n_in > 16384) throw ValidationError(where + "fan-in above 16384");
    if (L.weight_bits.size() != std::size_t{L.n_out} * L.words_per_row())
      throw ValidationError(where + "wrong number of weight words");
    if (L.thresholds.size() != L.n_out) throw ValidationError(where + "wrong number of thresholds");
    if (L.n_in % 32 != 0) {
      const std::uint32_t pad = ~((1u << (L.n_in % 32)) - 1);
      for (std::uint32_t j = 0; j < L.n_out; ++j)
        if (L.weight_bits[std::size_t{j} * L.words_per_row() + L.words_per_row() - 1] & pad)
          throw ValidationError(where + "nonzero padding bits");
    }
    for (auto t : L.thresholds)
      if (t < -32768 || t > 32767) throw ValidationError(where + "threshold outside 16-bit range");
  }
}

std::vector<Fixed> infer_plain(const MlpModel& model, std::span<const Fixed> x) {
  if (x.size() != model.layer_sizes.at(0))
    throw Error("input has " + std::to_string(x.size()) + " values, model expects " +
                std::to_string(model.layer_sizes[0]));
  for (auto v : x)
    if (!representable(v)) throw Error("input value outside Q8.8");
  std::vector<Fixed> cur(x.begin(), x.end());
  for (const auto& L : model.layers) {
    std::vector<Fixed> next(L.n_out);
    for (std::uint32_t j = 0; j < L.n_out; ++j) {
      std::int32_t acc = L.bias[j];
      for (std::uint32_t i = 0; i < L.n_in; ++i) acc += (L.w(j, i) * cur[i]) >> kFracBits;
      next[j] = activate(L.activation, saturate(acc));
    }
    cur = std::move(next);
  }
  return cur;
}

std::vector<std::int32_t> infer_plain_bnn(const BnnModel& model, std::span<const std::uint8_t> x_bits) {
  if (x_bits.size() != model.layer_sizes.at(0))
    throw Error("input has " + std::to_string(x_bits.size()) + " bits, model expects " +
                std::to_string(model.layer_sizes[0]));
  std::vector<std::uint8_t> cur(x_bits.begin(), x_bits.end());
  std::vector<std::int32_t> logits;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& L = model.layers[l];
    const bool last = l + 1 == model.layers.size();
    std::vector<std::uint8_t> next(L.n_out);
    for (std::uint32_t j = 0; j < L.n_out; ++j) {
      int agree = 0;
      for (std::uint32_t i = 0; i < L.n_in; ++i) agree += (L.weight(j, i) == (cur[i] != 0)) ? 1 : 0;
      const std::int32_t acc = 2 * agree - static_cast<std::int32_t>(L.n_in);
      if (last)
        logits.push_back(acc - L.thresholds[j]);
      else
        next[j] = acc >= L.thresholds[j] ? 1 : 0;
    }
    cur = std::move(next);
  }
  return logits;
}

BnnModel binarize(const MlpModel& model) {
  model.validate();
  BnnModel out;
  out.layer_sizes = model.layer_sizes;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& L = model.layers[l];
    BnnLayer B;
    B.n_in = L.n_in;
    B.n_out = L.n_out;
    B.weight_bits.assign(std::size_t{L.n_out} * B.words_per_row(), 0);
    const bool nonnegative_inputs = l > 0 && model.layers[l - 1].activation != Activation::None;
    for (std::uint32_t j = 0; j < L.n_out; ++j) {
      double sum_abs = 0;
      int signs = 0;
      for (std::uint32_t i = 0; i < L.n_in; ++i) {
        const Fixed w = L.w(j, i);
        sum_abs += std::abs(w);
        if (w >= 0) {
          B.weight_bits[std::size_t{j} * B.words_per_row() + i / 32] |= 1u << (i % 32);
          ++signs;
        } else {
          --signs;
        }
      }
      const double alpha = sum_abs > 0 ? sum_abs / L.n_in : 1.0;
      const double b = L.bias[j];
      const double t = nonnegative_inputs ? -signs - 2.0 * b / alpha : -b / alpha;
      B.thresholds.push_back(static_cast<std::int32_t>(std::clamp<double>(std::ceil(t - 1e-9), -32768, 32767)));
    }
    out.layers.push_back(std::move(B));
  }
  return out;
}

std::vector<std::uint8_t> binarize_input(std::span<const Fixed> x) {
  std::vector<std::uint8_t> bits;
  bits.reserve(x.size());
  for (auto v : x) bits.push_back(v >= 0 ? 1 : 0);
  return bits;
}

std::size_t argmax(std::span<const Fixed> logits) {
  if (logits.empty()) throw Error("argmax of an empty vector");
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

}  // namespace hwgn2::nn
