#include "hwgn2/output_hiding.hpp"

#include <array>

#include "hwgn2/circuit_builder.hpp"
#include "hwgn2/error.hpp"

namespace hwgn2::hiding {

std::uint32_t gf_mul(std::uint32_t a, std::uint32_t b) {
  std::uint32_t r = 0;
  for (int i = 31; i >= 0; --i) {
    const std::uint32_t carry = r >> 31;
    r = (r << 1) ^ (carry * kModulusLow);
    if ((b >> i) & 1u) r ^= a;
  }
  return r;
}

std::uint32_t mac(std::uint32_t k, std::uint32_t b, std::span<const std::uint32_t> y) {
  std::uint32_t acc = 0;
  for (auto w : y) acc = gf_mul(acc ^ w, k);
  return acc ^ b;
}

HidingKey HidingKey::random(Prg& prg, std::size_t n_words) {
  HidingKey key;
  key.k = prg.next_u32();
  key.b = prg.next_u32();
  for (std::size_t i = 0; i <= n_words; ++i) key.mask.push_back(prg.next_u32());
  return key;
}

std::vector<std::uint32_t> hide_output(std::span<const std::uint32_t> y, const HidingKey& key) {
  if (key.mask.size() != y.size() + 1) throw Error("hiding mask has the wrong length");
  std::vector<std::uint32_t> out(y.begin(), y.end());
  out.push_back(mac(key.k, key.b, y));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] ^= key.mask[i];
  return out;
}

std::vector<std::uint32_t> unhide_output(std::span<const std::uint32_t> hidden, const HidingKey& key) {
  if (hidden.size() != key.mask.size()) throw Error("hidden output has the wrong length");
  std::vector<std::uint32_t> y;
  for (std::size_t i = 0; i + 1 < hidden.size(); ++i) y.push_back(hidden[i] ^ key.mask[i]);
  if ((hidden.back() ^ key.mask.back()) != mac(key.k, key.b, y)) throw Error("output MAC verification failed");
  return y;
}

namespace {

using circuit::CircuitBuilder;
using circuit::Signal;
using Word = std::array<Signal, 32>;

Word gf_mul_circuit(CircuitBuilder& c, const Word& a, const Word& b) {
  // Same shift-and-add order as gf_mul, bit by bit.
  Word r;
  r.fill(CircuitBuilder::zero());
  for (int i = 31; i >= 0; --i) {
    const Signal carry = r[31];
    Word s;
    s[0] = CircuitBuilder::zero();
    for (int j = 1; j < 32; ++j) s[j] = r[j - 1];
    for (int j = 0; j < 32; ++j)
      if ((kModulusLow >> j) & 1u) s[j] = c.lxor(s[j], carry);
    for (int j = 0; j < 32; ++j) s[j] = c.lxor(s[j], c.land(b[i], a[j]));
    r = s;
  }
  return r;
}

}  // namespace

circuit::Netlist build_hiding_netlist(std::uint32_t n_words) {
  const std::uint32_t n_garbler = 64 + 32 * (n_words + 1);
  CircuitBuilder c(n_garbler, 32 * n_words);
  auto gword = [&](std::uint32_t base) {
    Word w;
    for (int j = 0; j < 32; ++j) w[j] = c.garbler_input(base + j);
    return w;
  };
  const Word k = gword(0), b = gword(32);
  std::vector<Word> y(n_words);
  for (std::uint32_t i = 0; i < n_words; ++i)
    for (int j = 0; j < 32; ++j) y[i][j] = c.evaluator_input(32 * i + j);

  Word acc;
  acc.fill(CircuitBuilder::zero());
  for (std::uint32_t i = 0; i < n_words; ++i) {
    for (int j = 0; j < 32; ++j) acc[j] = c.lxor(acc[j], y[i][j]);
    acc = gf_mul_circuit(c, acc, k);
  }
  for (int j = 0; j < 32; ++j) acc[j] = c.lxor(acc[j], b[j]);

  std::vector<Signal> out;
  for (std::uint32_t i = 0; i <= n_words; ++i) {
    const Word m = gword(64 + 32 * i);
    const Word& v = i < n_words ? y[i] : acc;
    for (int j = 0; j < 32; ++j) out.push_back(c.lxor(v[j], m[j]));
  }
  return c.finish(out);
}

circuit::Bits hiding_garbler_bits(const HidingKey& key) {
  circuit::Bits bits;
  circuit::append_word_bits(bits, key.k);
  circuit::append_word_bits(bits, key.b);
  for (auto m : key.mask) circuit::append_word_bits(bits, m);
  return bits;
}

}  // namespace hwgn2::hiding
