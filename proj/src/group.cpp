#include "hwgn2/group.hpp"

#include <sodium.h>

#include <cstdlib>
#include <cstring>
#include <string>

#include "hwgn2/digest.hpp"
#include "hwgn2/error.hpp"

namespace hwgn2::ot {
namespace {

using u128 = unsigned __int128;

class SchnorrGroup final : public Group {
 public:
  static constexpr std::uint64_t kP = 4611686018427377339ull;  // 2q + 1
  static constexpr std::uint64_t kQ = 2305843009213688669ull;
  static constexpr std::uint64_t kG = 4;

  std::string_view name() const override { return "schnorr-p62-test"; }

  Scalar random_scalar(Prg& prg) const override { return enc(1 + prg.uniform(kQ - 1)); }
  Element generator_pow(const Scalar& s) const override { return enc(powmod(kG, dec_scalar(s))); }
  Element pow(const Element& x, const Scalar& s) const override { return enc(powmod(dec(x), dec_scalar(s))); }
  Element mul(const Element& x, const Element& y) const override { return enc(mulmod(dec(x), dec(y))); }
  Element div(const Element& x, const Element& y) const override {
    return enc(mulmod(dec(x), powmod(dec(y), kP - 2)));
  }
  void check(const Element& x) const override {
    for (std::size_t i = 8; i < x.size(); ++i)
      if (x[i] != 0) throw Error("group element: non-canonical encoding");
    const std::uint64_t v = dec(x);
    if (v <= 1 || v >= kP) throw Error("group element out of range");
    if (powmod(v, kQ) != 1) throw Error("group element not in the prime-order subgroup");
  }

 private:
  static std::uint64_t mulmod(std::uint64_t a, std::uint64_t b) { return static_cast<std::uint64_t>(u128{a} * b % kP); }
  static std::uint64_t powmod(std::uint64_t b, std::uint64_t e) {
    std::uint64_t r = 1;
    b %= kP;
    while (e) {
      if (e & 1) r = mulmod(r, b);
      b = mulmod(b, b);
      e >>= 1;
    }
    return r;
  }
  static std::array<std::uint8_t, 32> enc(std::uint64_t v) {
    std::array<std::uint8_t, 32> out{};
    std::memcpy(out.data(), &v, 8);
    return out;
  }
  static std::uint64_t dec(const Element& x) {
    std::uint64_t v;
    std::memcpy(&v, x.data(), 8);
    return v;
  }
  static std::uint64_t dec_scalar(const Scalar& s) { return dec(s) % kQ; }
};

class RistrettoGroup final : public Group {
 public:
  RistrettoGroup() { ensure_sodium(); }
  std::string_view name() const override { return "ristretto255"; }

  Scalar random_scalar(Prg& prg) const override {
    std::uint8_t wide[crypto_core_ristretto255_NONREDUCEDSCALARBYTES];
    for (std::size_t i = 0; i < sizeof wide; i += 16) prg.next_block().store(wide + i);
    Scalar s;
    crypto_core_ristretto255_scalar_reduce(s.data(), wide);
    sodium_memzero(wide, sizeof wide);
    return s;
  }
  Element generator_pow(const Scalar& s) const override {
    Element out;
    if (crypto_scalarmult_ristretto255_base(out.data(), s.data()) != 0) throw Error("ristretto255: zero scalar");
    return out;
  }
  Element pow(const Element& x, const Scalar& s) const override {
    Element out;
    if (crypto_scalarmult_ristretto255(out.data(), s.data(), x.data()) != 0)
      throw Error("ristretto255: result is the identity");
    return out;
  }
  Element mul(const Element& x, const Element& y) const override {
    Element out;
    if (crypto_core_ristretto255_add(out.data(), x.data(), y.data()) != 0) throw Error("ristretto255: invalid point");
    return out;
  }
  Element div(const Element& x, const Element& y) const override {
    Element out;
    if (crypto_core_ristretto255_sub(out.data(), x.data(), y.data()) != 0) throw Error("ristretto255: invalid point");
    return out;
  }
  void check(const Element& x) const override {
    if (crypto_core_ristretto255_is_valid_point(x.data()) != 1) throw Error("ristretto255: invalid point encoding");
  }
};

}  // namespace

std::string_view to_string(Profile p) { return p == Profile::Test ? "test" : "secure"; }

Profile profile_from_string(std::string_view s) {
  if (s == "test") return Profile::Test;
  if (s == "secure") return Profile::Secure;
  throw Error("unknown OT profile '" + std::string(s) + "' (expected test or secure)");
}

Profile profile_from_env() {
  const char* v = std::getenv("HWGN2_PROFILE");
  if (!v || !*v) return Profile::Secure;
  return profile_from_string(v);
}

const Group& group_for(Profile p) {
  static const SchnorrGroup schnorr;
  static const RistrettoGroup ristretto;
  if (p == Profile::Test) return schnorr;
  return ristretto;
}

void require_allowed(Profile p, bool networked) {
  if (p == Profile::Test && networked)
    throw Error("the test OT profile is insecure and refused for networked sessions; set HWGN2_PROFILE=secure");
}

}  // namespace hwgn2::ot
