#include "hwgn2/garble.hpp"

#if defined(__AES__) && defined(__SSE2__)
#include <wmmintrin.h>
#define HWGN2_AESNI 1
#endif

#include "hwgn2/error.hpp"
#include "hwgn2/prg.hpp"

namespace hwgn2::garble {

using circuit::Gate;
using circuit::GateKind;

namespace {

inline Block hash_key(Label a, Label b, std::uint64_t tweak) {
  return gf_double(a) ^ gf_double(gf_double(b)) ^ Block{tweak, 0};
}

inline Block mask_if(bool bit, Block v) { return select_mask(bit) & v; }

struct GenericHasher {
  const BlockPermutation& p;
  Block operator()(Block k) const {
    Block c = k;
    p.permute({&c, 1});
    return c ^ k;
  }
  void four(Block* k, Block* out) const {
    for (int i = 0; i < 4; ++i) out[i] = k[i];
    p.permute({out, 4});
    for (int i = 0; i < 4; ++i) out[i] ^= k[i];
  }
};

#if HWGN2_AESNI
struct AesNiHasher {
  __m128i rk[11];
  explicit AesNiHasher(const Aes128& aes) {
    for (int r = 0; r < 11; ++r) rk[r] = ld(aes.round_keys()[r]);
  }
  static __m128i ld(const Block& b) { return _mm_loadu_si128(reinterpret_cast<const __m128i*>(&b)); }
  static Block st(__m128i v) {
    Block b;
    _mm_storeu_si128(reinterpret_cast<__m128i*>(&b), v);
    return b;
  }
  Block operator()(Block k) const {
    const __m128i x = ld(k);
    __m128i s = _mm_xor_si128(x, rk[0]);
    for (int r = 1; r < 10; ++r) s = _mm_aesenc_si128(s, rk[r]);
    return st(_mm_xor_si128(_mm_aesenclast_si128(s, rk[10]), x));
  }
  void four(Block* k, Block* out) const {
    __m128i x[4], s[4];
    for (int i = 0; i < 4; ++i) {
      x[i] = ld(k[i]);
      s[i] = _mm_xor_si128(x[i], rk[0]);
    }
    for (int r = 1; r < 10; ++r)
      for (int i = 0; i < 4; ++i) s[i] = _mm_aesenc_si128(s[i], rk[r]);
    for (int i = 0; i < 4; ++i) out[i] = st(_mm_xor_si128(_mm_aesenclast_si128(s[i], rk[10]), x[i]));
  }
};
#endif

template <class H>
std::size_t garble_impl(const Netlist& n, Block R, std::uint64_t tweak_base, std::span<Label> w, Block* rows,
                        const H& hash) {
  std::size_t written = 0;
  const std::uint32_t base = n.n_inputs();
  for (std::uint32_t k = 0; k < n.gates.size(); ++k) {
    const Gate& g = n.gates[k];
    const Label a0 = w[g.in0];
    Label& out = w[base + k];
    switch (g.kind) {
      case GateKind::Xor: out = a0 ^ w[g.in1]; continue;
      case GateKind::Xnor: out = a0 ^ w[g.in1] ^ R; continue;
      case GateKind::Not: out = a0 ^ R; continue;
      case GateKind::Buf: out = a0; continue;
      default: break;
    }
    const Label b0 = w[g.in1];
    const bool pa = a0.lsb();
    const bool pb = b0.lsb();
    // Label with permute bit i on in0: a0 ^ ((i ^ pa) * R).
    const Label A[2] = {a0 ^ mask_if(pa, R), a0 ^ mask_if(!pa, R)};
    const Label B[2] = {b0 ^ mask_if(pb, R), b0 ^ mask_if(!pb, R)};
    const std::uint64_t tweak = tweak_base + k;
    Block keys[4];
    for (int idx = 0; idx < 4; ++idx) keys[idx] = hash_key(A[idx >> 1], B[idx & 1], tweak);
    Block h[4];
    hash.four(keys, h);
    // Row 0 decrypts to the label for value g(pa, pb).
    const Label c0 = h[0] ^ mask_if(circuit::apply(g.kind, pa, pb), R);
    out = c0;
    for (int idx = 1; idx < 4; ++idx) {
      const bool v = circuit::apply(g.kind, ((idx >> 1) != 0) != pa, ((idx & 1) != 0) != pb);
      rows[written++] = h[idx] ^ c0 ^ mask_if(v, R);
    }
  }
  return written;
}

template <bool kObserve, class H>
std::size_t evaluate_impl(const Netlist& n, std::uint64_t tweak_base, std::span<Label> w, const Block* rows,
                          const H& hash, EvalObserver* obs) {
  std::size_t consumed = 0;
  const std::uint32_t base = n.n_inputs();
  for (std::uint32_t k = 0; k < n.gates.size(); ++k) {
    const Gate& g = n.gates[k];
    const Label a = w[g.in0];
    Label& out = w[base + k];
    switch (g.kind) {
      case GateKind::Xor:
      case GateKind::Xnor: out = a ^ w[g.in1]; break;
      case GateKind::Not:
      case GateKind::Buf: out = a; break;
      default: {
        const Label b = w[g.in1];
        const unsigned idx = (a.lsb() ? 2u : 0u) | (b.lsb() ? 1u : 0u);
        Block h = hash(hash_key(a, b, tweak_base + k));
        int hw = 0;
        if (idx != 0) {
          const Block row = rows[consumed + idx - 1];
          h ^= row;
          if constexpr (kObserve) hw = hamming_weight(row);
        }
        consumed += kRowsPerTable;
        out = h;
        if constexpr (kObserve) obs->on_gate(k, out, hw);
        continue;
      }
    }
    if constexpr (kObserve) obs->on_gate(k, out, -1);
  }
  return consumed;
}

}  // namespace

Block gate_hash(Label a, Label b, std::uint64_t tweak, const BlockPermutation& p) {
  return GenericHasher{p}(hash_key(a, b, tweak));
}

Block sample_offset(Block random) {
  random.lo |= 1u;
  return random;
}

std::size_t garble_wires(const Netlist& n, Block R, std::uint64_t tweak_base, std::span<Label> w, Block* rows,
                         const BlockPermutation& p) {
  if (!R.lsb()) throw Error("global offset must have lsb 1");
  if (w.size() != n.n_wires()) throw Error("wire scratch has wrong size");
#if HWGN2_AESNI
  if (const Aes128* aes = p.as_aes()) return garble_impl(n, R, tweak_base, w, rows, AesNiHasher(*aes));
#endif
  return garble_impl(n, R, tweak_base, w, rows, GenericHasher{p});
}

std::size_t evaluate_wires(const Netlist& n, std::uint64_t tweak_base, std::span<Label> w, const Block* rows,
                           const BlockPermutation& p, EvalObserver* observer) {
  if (w.size() != n.n_wires()) throw Error("wire scratch has wrong size");
#if HWGN2_AESNI
  if (const Aes128* aes = p.as_aes()) {
    const AesNiHasher h(*aes);
    if (observer) return evaluate_impl<true>(n, tweak_base, w, rows, h, observer);
    return evaluate_impl<false>(n, tweak_base, w, rows, h, nullptr);
  }
#endif
  const GenericHasher h{p};
  if (observer) return evaluate_impl<true>(n, tweak_base, w, rows, h, observer);
  return evaluate_impl<false>(n, tweak_base, w, rows, h, nullptr);
}

Garbling gb(const Netlist& n, const Seed& seed, const BlockPermutation& p) {
  circuit::require_valid(n);
  Prg prg(seed);
  Garbling out;
  const Block R = sample_offset(prg.next_block());
  out.e.offset = R;
  out.e.zero_labels.resize(n.n_inputs());
  prg.fill(out.e.zero_labels);

  std::vector<Label> wires(n.n_wires());
  std::copy(out.e.zero_labels.begin(), out.e.zero_labels.end(), wires.begin());
  const auto counts = circuit::count_gates(n);
  std::vector<Block> rows(kRowsPerTable * counts.nonfree);
  garble_wires(n, R, 0, wires, rows.data(), p);

  out.F.netlist = &n;
  out.F.tweak_base = 0;
  out.F.tables.reserve(counts.nonfree);
  std::size_t r = 0;
  for (const auto& g : n.gates) {
    if (circuit::is_free(g.kind)) continue;
    GarbledTable t;
    t.gate_id = g.id;
    for (auto& row : t.rows) row = rows[r++];
    out.F.tables.push_back(t);
  }
  out.d.bits.reserve(n.n_outputs());
  for (auto wire : n.output_wires) out.d.bits.push_back(wires[wire].lsb() ? 1 : 0);
  return out;
}

std::vector<Label> en(const Encoding& e, std::span<const std::uint8_t> x) {
  if (x.size() != e.size())
    throw Error("en: input has " + std::to_string(x.size()) + " bits, encoding has " + std::to_string(e.size()));
  std::vector<Label> X(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) X[i] = e.zero_labels[i] ^ mask_if(x[i] != 0, e.offset);
  return X;
}

std::vector<Label> ev_garbled(const GarbledCircuit& F, std::span<const Label> X, const BlockPermutation& p) {
  if (!F.netlist) throw Error("ev_garbled: garbled circuit has no netlist");
  const Netlist& n = *F.netlist;
  if (X.size() != n.n_inputs())
    throw Error("ev_garbled: got " + std::to_string(X.size()) + " labels, netlist has " +
                std::to_string(n.n_inputs()) + " inputs");
  const auto counts = circuit::count_gates(n);
  if (F.tables.size() != counts.nonfree)
    throw Error("ev_garbled: " + std::to_string(F.tables.size()) + " tables for " + std::to_string(counts.nonfree) +
                " nonfree gates");
  std::vector<Block> rows;
  rows.reserve(kRowsPerTable * F.tables.size());
  for (const auto& t : F.tables) rows.insert(rows.end(), t.rows.begin(), t.rows.end());
  std::vector<Label> wires(n.n_wires());
  std::copy(X.begin(), X.end(), wires.begin());
  evaluate_wires(n, F.tweak_base, wires, rows.data(), p);
  std::vector<Label> Y;
  Y.reserve(n.n_outputs());
  for (auto wire : n.output_wires) Y.push_back(wires[wire]);
  return Y;
}

Bits de(const Decoding& d, std::span<const Label> Y) {
  if (Y.size() != d.size())
    throw Error("de: got " + std::to_string(Y.size()) + " labels, decoding has " + std::to_string(d.size()));
  Bits y(Y.size());
  for (std::size_t j = 0; j < Y.size(); ++j) y[j] = static_cast<std::uint8_t>((Y[j].lsb() ? 1 : 0) ^ d.bits[j]);
  return y;
}

}  // namespace hwgn2::garble
